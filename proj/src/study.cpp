#include "negspan/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "negspan/errors.hpp"
#include "negspan/infer.hpp"
#include "negspan/model.hpp"

namespace negspan {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string cell_dir_name(const StudyCell& cell) {
  char buf[96];
  if (cell.regime == Regime::sampled) {
    std::snprintf(buf, sizeof buf, "%s_lam%.2f_seed%llu",
                  regime_name(cell.regime).c_str(), cell.lambda,
                  static_cast<unsigned long long>(cell.seed));
  } else {
    std::snprintf(buf, sizeof buf, "%s_seed%llu",
                  regime_name(cell.regime).c_str(),
                  static_cast<unsigned long long>(cell.seed));
  }
  return buf;
}

std::string prob_dir_name(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%.2f", p);
  return buf;
}

}  // namespace

const StudyCell* StudyResult::find(double p, Regime regime, double lambda,
                                   std::uint64_t seed) const {
  for (const auto& c : cells) {
    if (c.p == p && c.regime == regime && c.seed == seed &&
        (regime != Regime::sampled || c.lambda == lambda)) {
      return &c;
    }
  }
  return nullptr;
}

double StudyResult::mean_f1(double p, Regime regime,
                            std::optional<double> lambda) const {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& c : cells) {
    if (c.p != p || c.regime != regime || !c.ok()) continue;
    if (regime == Regime::sampled && lambda && c.lambda != *lambda) continue;
    total += c.f1;
    ++count;
  }
  return count ? total / static_cast<double>(count) : kNaN;
}

StudyResult run_study(const Corpus& gold, const Corpus* dev,
                      const Corpus& test, const StudyConfig& cfg) {
  if (cfg.probs.empty() || cfg.regimes.empty() || cfg.seeds.empty()) {
    throw ArgumentError("study needs at least one probability, regime, seed");
  }
  for (const auto& s : gold.sentences) {
    if (!s.hidden.empty()) {
      throw ArgumentError("study gold corpus must be fully annotated");
    }
  }
  std::vector<double> lambdas = cfg.lambdas;
  if (lambdas.empty()) lambdas.push_back(cfg.train.lambda);

  namespace fs = std::filesystem;
  if (cfg.out_dir) fs::create_directories(*cfg.out_dir);

  // One masked corpus per probability, shared by every regime and seed so
  // that comparisons see identical annotations.
  std::map<double, Corpus> masked;
  for (std::size_t pi = 0; pi < cfg.probs.size(); ++pi) {
    const double p = cfg.probs[pi];
    if (masked.count(p)) continue;
    Corpus m = mask_entities(gold, p, split_seed(cfg.seeds[0], 0x3a5c + pi));
    if (cfg.out_dir) {
      const fs::path dir = fs::path(*cfg.out_dir) / prob_dir_name(p);
      fs::create_directories(dir);
      write_conll_file(m, (dir / "masked.conll").string());
      write_sidecar_file(m, (dir / "hidden.tsv").string());
    }
    masked.emplace(p, std::move(m));
  }

  StudyResult result;
  for (const double p : cfg.probs) {
    for (const Regime regime : cfg.regimes) {
      if (regime == Regime::oracle && p == 0.0 && cfg.skip_oracle_at_zero) {
        continue;
      }
      const auto& cell_lambdas =
          regime == Regime::sampled ? lambdas : std::vector<double>{0.0};
      for (const double lambda : cell_lambdas) {
        for (const std::uint64_t seed : cfg.seeds) {
          StudyCell cell;
          cell.p = p;
          cell.regime = regime;
          cell.lambda = regime == Regime::sampled ? lambda : kNaN;
          cell.seed = seed;
          result.cells.push_back(cell);
        }
      }
    }
  }

  auto run_cell = [&](StudyCell& cell) {
    try {
      TrainConfig tc = cfg.train;
      tc.regime = cell.regime;
      if (cell.regime == Regime::sampled) tc.lambda = cell.lambda;
      tc.seed = cell.seed;
      const Corpus& data = masked.at(cell.p);
      const TrainResult trained = train_model(data, dev, tc);

      std::vector<SpanSet> pred, expected;
      pred.reserve(test.sentences.size());
      for (const auto& ts : test.sentences) {
        pred.push_back(predict(trained.model, ts.sentence, tc.max_span_len));
        expected.push_back(ts.gold);
      }
      const EvalReport report = entity_f1(pred, expected);
      cell.precision = report.precision;
      cell.recall = report.recall;
      cell.f1 = report.f1;

      if (cfg.out_dir) {
        const fs::path dir = fs::path(*cfg.out_dir) / prob_dir_name(cell.p) /
                             cell_dir_name(cell);
        fs::create_directories(dir);
        save_checkpoint(trained.model, (dir / "model.ckpt").string());
        write_loss_log(trained.log, (dir / "loss.tsv").string());
        std::ofstream eval_out(dir / "eval.tsv");
        write_eval_report(eval_out, report);
      }
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
  if (jobs == 1) {
    for (auto& cell : result.cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(jobs, result.cells.size()); ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t k = next.fetch_add(1);
          if (k >= result.cells.size()) return;
          run_cell(result.cells[k]);
        }
      });
    }
    for (auto& t : workers) t.join();
  }
  for (const auto& cell : result.cells) {
    if (!cell.ok()) result.all_ok = false;
  }

  // Degradation rates need an adjusted-model baseline at p = 0.
  const bool have_full =
      std::find(cfg.regimes.begin(), cfg.regimes.end(), Regime::full) !=
      cfg.regimes.end();
  const bool have_oracle =
      std::find(cfg.regimes.begin(), cfg.regimes.end(), Regime::oracle) !=
      cfg.regimes.end();
  const bool have_sampled =
      std::find(cfg.regimes.begin(), cfg.regimes.end(), Regime::sampled) !=
      cfg.regimes.end();
  const bool have_p0 =
      std::find(cfg.probs.begin(), cfg.probs.end(), 0.0) != cfg.probs.end();

  result.f0a = kNaN;
  if (have_p0) {
    if (have_oracle && !cfg.skip_oracle_at_zero) {
      result.f0a = result.mean_f1(0.0, Regime::oracle);
      result.f0a_source = "oracle@0";
    } else if (have_full) {
      // identical training problem: no hidden spans at p = 0
      result.f0a = result.mean_f1(0.0, Regime::full);
      result.f0a_source = "full@0";
    }
  }

  std::vector<double> ps = cfg.probs;
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());

  const double default_lambda = lambdas.front();
  for (const double p : ps) {
    DegradationRow row;
    row.p = p;
    row.f_full = have_full ? result.mean_f1(p, Regime::full) : kNaN;
    row.f_sampled = have_sampled
                        ? result.mean_f1(p, Regime::sampled, default_lambda)
                        : kNaN;
    row.f_oracle = have_oracle ? result.mean_f1(p, Regime::oracle) : kNaN;
    if (p == 0.0 && std::isnan(row.f_oracle) && !std::isnan(result.f0a)) {
      row.f_oracle = result.f0a;
    }
    row.alpha = kNaN;
    row.beta_full = kNaN;
    row.beta_sampled = kNaN;
    if (!std::isnan(result.f0a) && !std::isnan(row.f_oracle) &&
        result.f0a > 0.0 && row.f_oracle > 0.0) {
      row.alpha = (result.f0a - row.f_oracle) / result.f0a;
      if (!std::isnan(row.f_full)) {
        row.beta_full = (row.f_oracle - row.f_full) / row.f_oracle;
      }
      if (!std::isnan(row.f_sampled)) {
        row.beta_sampled = (row.f_oracle - row.f_sampled) / row.f_oracle;
      }
    }
    result.degradation.push_back(row);
  }

  auto pcc_or_nan = [](const std::vector<double>& xs,
                       const std::vector<double>& ys) {
    try {
      return pearson(xs, ys);
    } catch (const ArgumentError&) {
      return kNaN;
    }
  };
  std::vector<double> alphas, betas_full, betas_sampled, f_full, f_sampled;
  for (const auto& row : result.degradation) {
    if (!std::isnan(row.alpha) && !std::isnan(row.f_full)) {
      alphas.push_back(row.alpha);
      if (!std::isnan(row.beta_full)) betas_full.push_back(row.beta_full);
      f_full.push_back(row.f_full);
    }
    if (!std::isnan(row.beta_sampled) && !std::isnan(row.f_sampled)) {
      betas_sampled.push_back(row.beta_sampled);
      f_sampled.push_back(row.f_sampled);
    }
  }
  result.pcc_alpha_vs_full = alphas.size() == f_full.size()
                                 ? pcc_or_nan(alphas, f_full)
                                 : kNaN;
  result.pcc_beta_full_vs_full = betas_full.size() == f_full.size()
                                     ? pcc_or_nan(betas_full, f_full)
                                     : kNaN;
  result.pcc_beta_sampled_vs_sampled = pcc_or_nan(betas_sampled, f_sampled);

  if (cfg.out_dir) {
    std::ofstream summary(fs::path(*cfg.out_dir) / "summary.tsv");
    write_study_summary(summary, result);
    std::ofstream degradation(fs::path(*cfg.out_dir) / "degradation.tsv");
    write_degradation_report(degradation, result, cfg);
  }
  return result;
}

void write_study_summary(std::ostream& out, const StudyResult& result) {
  out << "# p\tregime\tlambda\tseed\tprecision\trecall\tf1\tstatus\n";
  char buf[64];
  for (const auto& c : result.cells) {
    out << c.p << '\t' << regime_name(c.regime) << '\t';
    if (c.regime == Regime::sampled) {
      std::snprintf(buf, sizeof buf, "%g", c.lambda);
      out << buf;
    } else {
      out << '-';
    }
    out << '\t' << c.seed << '\t';
    if (c.ok()) {
      std::snprintf(buf, sizeof buf, "%.4f\t%.4f\t%.4f\tok", c.precision,
                    c.recall, c.f1);
      out << buf << '\n';
    } else {
      out << "-\t-\t-\terror: " << c.error << '\n';
    }
  }
}

void write_degradation_report(std::ostream& out, const StudyResult& result,
                              const StudyConfig& cfg) {
  out << "# degradation rates; f0a = " << result.f0a << " (" <<
      (result.f0a_source.empty() ? "unavailable" : result.f0a_source)
      << "); all probabilities included in the PCC series\n";
  out << "# p\tf_full\tf_sampled\tf_oracle\talpha\tbeta_full\tbeta_sampled\n";
  auto field = [&](double v) {
    if (std::isnan(v)) {
      out << "-";
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", v);
      out << buf;
    }
  };
  for (const auto& row : result.degradation) {
    out << row.p << '\t';
    field(row.f_full);
    out << '\t';
    field(row.f_sampled);
    out << '\t';
    field(row.f_oracle);
    out << '\t';
    field(row.alpha);
    out << '\t';
    field(row.beta_full);
    out << '\t';
    field(row.beta_sampled);
    out << '\n';
  }
  out << "# pcc\talpha_vs_f_full\t";
  field(result.pcc_alpha_vs_full);
  out << "\tbeta_full_vs_f_full\t";
  field(result.pcc_beta_full_vs_full);
  out << "\tbeta_sampled_vs_f_sampled\t";
  field(result.pcc_beta_sampled_vs_sampled);
  out << '\n';
  (void)cfg;
}

}  // namespace negspan
