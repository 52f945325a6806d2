#ifndef NEGSPAN_METRICS_HPP
#define NEGSPAN_METRICS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "negspan/corpus.hpp"

namespace negspan {

// Entity-level exact-match scores, conlleval semantics.
struct EvalReport {
  struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
  };

  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<std::string, Counts> per_label;
};

// Micro-averaged over aligned sentence lists; spans match on (i, j, label).
EvalReport entity_f1(const std::vector<SpanSet>& pred,
                     const std::vector<SpanSet>& gold);

void write_eval_report(std::ostream& out, const EvalReport& report);

// alpha_p = (f0a - fpa) / f0a, beta_p = (fpa - fp) / fpa.
// Zero denominators raise ArgumentError.
std::pair<double, double> degradation_rates(double f0a, double fpa, double fp);

// Sample Pearson correlation; requires length >= 2 and nonzero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Probability that one fixed candidate span avoids a uniform
// without-replacement draw of k = ceil(lambda*n) from the
// N = n(n+1)/2 - m negative candidates: 1 - k/N.
double bound_exact(int n, std::size_t m, double lambda);

// The 1 - 2/(n-3) guarantee the sampling argument gives for n >= 4.
double paper_bound(int n);

struct BoundReport {
  int n = 0;
  std::size_t m = 0;
  double lambda = 0.0;
  std::size_t k = 0;
  std::size_t candidates = 0;  // N
  double exact = 0.0;
  double bound = 0.0;      // 1 - 2/(n-3)
  double empirical = 0.0;  // Monte-Carlo non-selection frequency
  double stderr_ = 0.0;
  std::size_t trials = 0;

  std::string summary_line() const;  // `n m lambda k N exact bound empirical stderr`
};

// Runs `trials` draws through the production sampler against a sentence with
// m gold spans and one designated hidden candidate, counting how often the
// hidden span escapes the sample.
BoundReport bound_montecarlo(int n, std::size_t m, double lambda,
                             std::size_t trials, std::uint64_t seed);

// Beyond the proven single-entity case: frequency that none of `hidden_count`
// designated hidden spans is drawn.
double multi_hidden_noncollision(int n, std::size_t m, double lambda,
                                 std::size_t hidden_count, std::size_t trials,
                                 std::uint64_t seed);

}  // namespace negspan

#endif  // NEGSPAN_METRICS_HPP
