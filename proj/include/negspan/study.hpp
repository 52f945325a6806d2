#ifndef NEGSPAN_STUDY_HPP
#define NEGSPAN_STUDY_HPP

#include <optional>
#include <string>
#include <vector>

#include "negspan/corpus.hpp"
#include "negspan/metrics.hpp"
#include "negspan/train.hpp"

namespace negspan {

// One (masking probability, regime, lambda, seed) training cell of the
// degradation sweep.
struct StudyCell {
  double p = 0.0;
  Regime regime = Regime::full;
  double lambda = 0.0;  // meaningful for the sampled regime only
  std::uint64_t seed = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct DegradationRow {
  double p = 0.0;
  // mean F1 over seeds; NaN when the regime was not part of the sweep
  double f_full = 0.0;
  double f_sampled = 0.0;
  double f_oracle = 0.0;
  double alpha = 0.0;         // erosion rate of the oracle-adjusted model
  double beta_full = 0.0;     // misguidance rate of the full-negative model
  double beta_sampled = 0.0;  // misguidance rate of the sampled model
};

struct StudyResult {
  std::vector<StudyCell> cells;
  std::vector<DegradationRow> degradation;
  double f0a = 0.0;        // adjusted-model baseline F1 at p = 0
  std::string f0a_source;  // which regime provided it
  // PCC of each rate series against its model's F1 series, over all p
  double pcc_alpha_vs_full = 0.0;
  double pcc_beta_full_vs_full = 0.0;
  double pcc_beta_sampled_vs_sampled = 0.0;
  bool all_ok = true;

  const StudyCell* find(double p, Regime regime, double lambda,
                        std::uint64_t seed) const;
  double mean_f1(double p, Regime regime,
                 std::optional<double> lambda = {}) const;
};

struct StudyConfig {
  std::vector<double> probs;
  std::vector<Regime> regimes;
  std::vector<std::uint64_t> seeds;
  std::vector<double> lambdas;  // sampled-regime sweep; empty = {train.lambda}
  TrainConfig train;            // per-cell template
  std::size_t jobs = 1;
  // At p = 0 the oracle regime is the full regime (no hidden spans), so the
  // duplicate cell is skipped and f0a falls back to full@0.
  bool skip_oracle_at_zero = true;
  std::optional<std::string> out_dir;  // cell artifacts written when set
};

// Masks the gold corpus per probability (one mask shared by all regimes at
// that p), trains every cell, evaluates on the test corpus, and assembles
// degradation rates and PCC summaries. Cell failures are recorded, not
// thrown.
StudyResult run_study(const Corpus& gold, const Corpus* dev,
                      const Corpus& test, const StudyConfig& cfg);

void write_study_summary(std::ostream& out, const StudyResult& result);
void write_degradation_report(std::ostream& out, const StudyResult& result,
                              const StudyConfig& cfg);

}  // namespace negspan

#endif  // NEGSPAN_STUDY_HPP
