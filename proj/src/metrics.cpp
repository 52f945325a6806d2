#include "negspan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "negspan/errors.hpp"
#include "negspan/train.hpp"

namespace negspan {

namespace {

void finish(EvalReport::Counts& c) {
  c.precision = c.tp + c.fp ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  c.recall = c.tp + c.fn ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  c.f1 = c.precision + c.recall > 0.0
             ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
             : 0.0;
}

}  // namespace

EvalReport entity_f1(const std::vector<SpanSet>& pred,
                     const std::vector<SpanSet>& gold) {
  if (pred.size() != gold.size()) {
    throw ArgumentError("prediction/gold sentence counts differ: " +
                        std::to_string(pred.size()) + " vs " +
                        std::to_string(gold.size()));
  }
  EvalReport report;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (const auto& span : pred[s]) {
      auto& c = report.per_label[span.label];
      if (gold[s].count(span)) {
        ++report.tp;
        ++c.tp;
      } else {
        ++report.fp;
        ++c.fp;
      }
    }
    for (const auto& span : gold[s]) {
      if (!pred[s].count(span)) {
        ++report.fn;
        ++report.per_label[span.label].fn;
      }
    }
  }
  EvalReport::Counts total{report.tp, report.fp, report.fn, 0, 0, 0};
  finish(total);
  report.precision = total.precision;
  report.recall = total.recall;
  report.f1 = total.f1;
  for (auto& [label, counts] : report.per_label) finish(counts);
  return report;
}

void write_eval_report(std::ostream& out, const EvalReport& report) {
  out << "# label\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  char line[160];
  auto row = [&](const std::string& label, const EvalReport::Counts& c) {
    std::snprintf(line, sizeof line, "%s\t%zu\t%zu\t%zu\t%.4f\t%.4f\t%.4f\n",
                  label.c_str(), c.tp, c.fp, c.fn, c.precision, c.recall,
                  c.f1);
    out << line;
  };
  for (const auto& [label, counts] : report.per_label) row(label, counts);
  row("ALL", {report.tp, report.fp, report.fn, report.precision, report.recall,
              report.f1});
}

std::pair<double, double> degradation_rates(double f0a, double fpa,
                                            double fp) {
  if (f0a <= 0.0 || fpa <= 0.0) {
    throw ArgumentError("degradation rates undefined for zero baselines");
  }
  return {(f0a - fpa) / f0a, (fpa - fp) / fpa};
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw ArgumentError("pearson needs two equally long series, length >= 2");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double dx = xs[k] - mx;
    const double dy = ys[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ArgumentError("pearson undefined for a zero-variance series");
  }
  return sxy / std::sqrt(sxx * syy);
}

double paper_bound(int n) {
  if (n <= 3) return -std::numeric_limits<double>::infinity();
  return 1.0 - 2.0 / (n - 3);
}

double bound_exact(int n, std::size_t m, double lambda) {
  if (n < 1) throw ArgumentError("n must be at least 1");
  const std::size_t all = static_cast<std::size_t>(n) * (n + 1) / 2;
  if (m > all) throw ArgumentError("m exceeds the span count n(n+1)/2");
  const std::size_t candidates = all - m;
  const std::size_t k = negative_sample_size(lambda, n);
  if (k > candidates) {
    throw ArgumentError("sample size " + std::to_string(k) +
                        " exceeds candidate count " +
                        std::to_string(candidates));
  }
  return 1.0 - static_cast<double>(k) / static_cast<double>(candidates);
}

std::string BoundReport::summary_line() const {
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%d\t%zu\t%g\t%zu\t%zu\t%.6f\t%.6f\t%.6f\t%.6f", n, m, lambda,
                k, candidates, exact, bound, empirical, stderr_);
  return buf;
}

namespace {

// n dummy tokens with the first m enumerated spans annotated; the designated
// hidden entity is the first remaining candidate.
AnnotatedSentence bound_sentence(int n, std::size_t m) {
  AnnotatedSentence s;
  for (int i = 0; i < n; ++i) s.sentence.tokens.push_back("w");
  std::size_t taken = 0;
  for (int i = 1; i <= n && taken < m; ++i) {
    for (int j = i; j <= n && taken < m; ++j) {
      s.gold.insert({i, j, "X"});
      ++taken;
    }
  }
  return s;
}

}  // namespace

BoundReport bound_montecarlo(int n, std::size_t m, double lambda,
                             std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw ArgumentError("trials must be at least 1");
  BoundReport report;
  report.n = n;
  report.m = m;
  report.lambda = lambda;
  report.exact = bound_exact(n, m, lambda);  // validates n, m, k
  report.bound = paper_bound(n);
  report.trials = trials;
  report.k = negative_sample_size(lambda, n);

  const AnnotatedSentence s = bound_sentence(n, m);
  const auto candidates = negative_candidates(s);
  report.candidates = candidates.size();
  if (candidates.empty()) {
    throw ArgumentError("no negative candidates left for the hidden span");
  }
  const std::pair<int, int> hidden = candidates.front();

  Rng rng(split_seed(seed, 0xb0));
  std::size_t escaped = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto sample = sample_negatives(candidates, n, lambda, rng);
    if (!std::binary_search(sample.spans.begin(), sample.spans.end(),
                            hidden)) {
      ++escaped;
    }
  }
  report.empirical =
      static_cast<double>(escaped) / static_cast<double>(trials);
  report.stderr_ = std::sqrt(report.empirical * (1.0 - report.empirical) /
                             static_cast<double>(trials));
  return report;
}

double multi_hidden_noncollision(int n, std::size_t m, double lambda,
                                 std::size_t hidden_count, std::size_t trials,
                                 std::uint64_t seed) {
  if (trials < 1) throw ArgumentError("trials must be at least 1");
  const AnnotatedSentence s = bound_sentence(n, m);
  const auto candidates = negative_candidates(s);
  if (candidates.size() < hidden_count) {
    throw ArgumentError("fewer candidates than hidden spans");
  }
  std::vector<std::pair<int, int>> hidden(candidates.begin(),
                                          candidates.begin() + hidden_count);
  Rng rng(split_seed(seed, 0xb1));
  std::size_t clean = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto sample = sample_negatives(candidates, n, lambda, rng);
    const bool hit = std::any_of(
        hidden.begin(), hidden.end(), [&](const std::pair<int, int>& h) {
          return std::binary_search(sample.spans.begin(), sample.spans.end(),
                                    h);
        });
    if (!hit) ++clean;
  }
  return static_cast<double>(clean) / static_cast<double>(trials);
}

}  // namespace negspan
