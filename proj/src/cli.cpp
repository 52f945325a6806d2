#include "negspan/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "negspan/corpus.hpp"
#include "negspan/errors.hpp"
#include "negspan/infer.hpp"
#include "negspan/metrics.hpp"
#include "negspan/model.hpp"
#include "negspan/study.hpp"
#include "negspan/train.hpp"

namespace negspan::cli {

namespace {

constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kDataError = 2;
constexpr int kNumericError = 3;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + what + " value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw ConfigError("bad seed value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

// `key=value` per line, `#` comments. Entries fill in options the command
// line did not set; unknown keys are rejected.
void merge_config_file(CLI::App* cmd, const std::string& path,
                       std::vector<std::string>& args) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
      line.pop_back();
    }
    std::size_t begin = 0;
    while (begin < line.size() &&
           std::isspace(static_cast<unsigned char>(line[begin]))) {
      ++begin;
    }
    line.erase(0, begin);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    const std::string flag = "--" + key;
    if (!cmd->get_option_no_throw(flag)) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
    }
    // flags given on the command line win
    bool already = false;
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        already = true;
        break;
      }
    }
    if (!already) args.push_back(flag + "=" + value);
  }
}

void echo_effective_config(const CLI::App* cmd) {
  std::ostringstream line;
  line << "# config: command=" << cmd->get_name();
  for (const auto* opt : cmd->get_options()) {
    if (opt->count() == 0) continue;
    std::string name = opt->get_name();
    if (name.rfind("--", 0) == 0) name.erase(0, 2);
    const auto& results = opt->results();
    line << ' ' << name << '=';
    if (results.empty()) {
      line << "true";
    } else {
      for (std::size_t k = 0; k < results.size(); ++k) {
        if (k) line << ',';
        line << results[k];
      }
    }
  }
  std::cerr << line.str() << '\n';
}

Corpus load_corpus(const std::string& path,
                   const std::string& sidecar = std::string()) {
  Corpus corpus = parse_conll_file(path);
  if (!sidecar.empty()) apply_sidecar_file(corpus, sidecar);
  return corpus;
}

struct TrainFlags {
  std::string arch = "span";
  double lambda = 0.35;
  std::size_t epochs = 30;
  std::size_t batch = 1;
  double lr = 1e-3;
  double dropout = 0.4;
  double l2 = 1e-5;
  std::uint64_t seed = 1;
  int max_span_len = 0;  // 0 = unlimited
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t scoring_dim = 64;
  bool scorer_biases = false;
  std::string embeddings;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--arch", f.arch, "Model head: span or tagger")
      ->check(CLI::IsMember({"span", "tagger"}));
  cmd->add_option("--lambda", f.lambda,
                  "Negative sampling ratio (sampled regime)");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--batch", f.batch, "Sentences per optimizer step");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--dropout", f.dropout, "Dropout rate");
  cmd->add_option("--l2", f.l2, "L2 regularization strength");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--max-span-len", f.max_span_len,
                  "Optional span length cap (0 = unlimited)");
  cmd->add_option("--embed-dim", f.embed_dim, "Word embedding width");
  cmd->add_option("--hidden-dim", f.hidden_dim,
                  "Encoder output width (even)");
  cmd->add_option("--scoring-dim", f.scoring_dim, "Span scorer hidden width");
  cmd->add_flag("--scorer-biases", f.scorer_biases,
                "Enable bias terms in the span scorer");
  cmd->add_option("--embeddings", f.embeddings,
                  "Pretrained embedding text file");
}

TrainConfig to_train_config(const TrainFlags& f) {
  TrainConfig cfg;
  cfg.model = f.arch == "tagger" ? ModelKind::tagger : ModelKind::span;
  cfg.lambda = f.lambda;
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch;
  cfg.lr = f.lr;
  cfg.dropout = f.dropout;
  cfg.l2 = f.l2;
  cfg.seed = f.seed;
  if (f.max_span_len > 0) cfg.max_span_len = f.max_span_len;
  cfg.embed_dim = f.embed_dim;
  cfg.hidden_dim = f.hidden_dim;
  cfg.scoring_dim = f.scoring_dim;
  cfg.scorer_biases = f.scorer_biases;
  if (!f.embeddings.empty()) cfg.pretrained_embeddings = f.embeddings;
  return cfg;
}

// --- subcommand bodies ------------------------------------------------------

int cmd_gen(const std::string& out, const std::string& dev_out,
            const std::string& test_out, GeneratorConfig cfg,
            std::size_t dev_count, std::size_t test_count,
            std::uint64_t seed) {
  cfg = finalize_generator_config(cfg);
  write_conll_file(gen_synthetic(cfg, seed), out);
  if (!dev_out.empty()) {
    GeneratorConfig dc = cfg;
    dc.sentence_count = dev_count;
    write_conll_file(gen_synthetic(dc, split_seed(seed, 0xde1)), dev_out);
  }
  if (!test_out.empty()) {
    GeneratorConfig tc = cfg;
    tc.sentence_count = test_count;
    write_conll_file(gen_synthetic(tc, split_seed(seed, 0x7e57)), test_out);
  }
  return kOk;
}

int cmd_mask(const std::string& input, double prob, std::uint64_t seed,
             const std::string& output, const std::string& sidecar) {
  const Corpus corpus = load_corpus(input);
  const Corpus masked = mask_entities(corpus, prob, seed);
  write_conll_file(masked, output);
  if (!sidecar.empty()) write_sidecar_file(masked, sidecar);
  return kOk;
}

int cmd_train(const std::string& data, const std::string& dev_path,
              const std::string& regime_name_, const std::string& sidecar,
              const std::string& out, const std::string& log_path,
              const TrainFlags& flags, bool lambda_given) {
  TrainConfig cfg = to_train_config(flags);
  cfg.regime = parse_regime(regime_name_);
  if (cfg.regime != Regime::sampled && lambda_given) {
    std::cerr << "warning: --lambda is ignored under the " << regime_name_
              << " regime\n";
  }
  if (cfg.regime == Regime::oracle && sidecar.empty()) {
    throw ConfigError("the oracle regime requires --sidecar");
  }
  const Corpus train = load_corpus(data, sidecar);
  Corpus dev;
  const bool have_dev = !dev_path.empty();
  if (have_dev) dev = load_corpus(dev_path);
  const TrainResult result =
      train_model(train, have_dev ? &dev : nullptr, cfg);
  save_checkpoint(result.model, out);
  if (!log_path.empty()) write_loss_log(result.log, log_path);
  for (const auto& e : result.log) {
    std::cerr << "epoch " << e.epoch << "\tloss " << e.mean_loss;
    if (!std::isnan(e.dev_f1)) std::cerr << "\tdev_f1 " << e.dev_f1;
    std::cerr << '\n';
  }
  return kOk;
}

int cmd_eval(const std::string& model_path, const std::string& data,
             int max_span_len) {
  const ModelBundle model = load_checkpoint(model_path);
  const Corpus corpus = load_corpus(data);
  std::optional<int> cap;
  if (max_span_len > 0) cap = max_span_len;
  std::vector<SpanSet> pred, gold;
  for (const auto& s : corpus.sentences) {
    pred.push_back(predict(model, s.sentence, cap));
    gold.push_back(s.gold);
  }
  write_eval_report(std::cout, entity_f1(pred, gold));
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& input,
                const std::string& output, int max_span_len) {
  const ModelBundle model = load_checkpoint(model_path);
  const Corpus corpus = load_corpus(input);
  std::optional<int> cap;
  if (max_span_len > 0) cap = max_span_len;
  std::vector<std::vector<ScoredEntity>> batches;
  batches.reserve(corpus.sentences.size());
  for (const auto& s : corpus.sentences) {
    batches.push_back(predict_scored(model, s.sentence, cap));
  }
  std::ofstream out(output);
  if (!out) throw ParseError("cannot write predictions: " + output);
  write_predictions(out, batches);
  return kOk;
}

int cmd_study(const std::string& gold_path, const std::string& dev_path,
              const std::string& test_path, const std::string& probs_text,
              const std::string& regimes_text, const std::string& seeds_text,
              const std::string& lambdas_text, const std::string& out_dir,
              std::size_t jobs, const TrainFlags& flags) {
  StudyConfig cfg;
  cfg.train = to_train_config(flags);
  cfg.probs = parse_doubles(probs_text, "probability");
  for (const auto& name : split_list(regimes_text)) {
    cfg.regimes.push_back(parse_regime(name));
  }
  if (cfg.regimes.empty()) throw ConfigError("empty regime list");
  cfg.seeds = parse_seeds(seeds_text);
  if (!lambdas_text.empty()) {
    cfg.lambdas = parse_doubles(lambdas_text, "lambda");
  }
  cfg.jobs = jobs;
  cfg.out_dir = out_dir;

  const Corpus gold = load_corpus(gold_path);
  const Corpus test = load_corpus(test_path);
  Corpus dev;
  const bool have_dev = !dev_path.empty();
  if (have_dev) dev = load_corpus(dev_path);

  const StudyResult result =
      run_study(gold, have_dev ? &dev : nullptr, test, cfg);
  write_study_summary(std::cout, result);
  write_degradation_report(std::cout, result, cfg);
  return result.all_ok ? kOk : kNumericError;
}

int cmd_bound(int n, std::size_t m, double lambda, std::size_t trials,
              std::uint64_t seed, std::size_t hidden) {
  const BoundReport report = bound_montecarlo(n, m, lambda, trials, seed);
  std::cout << "# n\tm\tlambda\tk\tN\texact\tbound\tempirical\tstderr\n";
  std::cout << report.summary_line() << '\n';
  if (hidden > 1) {
    const double clean =
        multi_hidden_noncollision(n, m, lambda, hidden, trials, seed);
    std::cout << "# beyond the proven single-entity case: P(no collision with "
              << hidden << " hidden spans) = " << clean << '\n';
  }
  if (report.empirical < report.bound - 3.0 * report.stderr_) {
    std::cerr << "bound violated: empirical " << report.empirical
              << " below " << report.bound << " - 3*stderr\n";
    return kNumericError;
  }
  return kOk;
}

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"Span-based NER with negative sampling under unlabeled entities"};
  app.require_subcommand(1);

  // gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus");
  GeneratorConfig gen_cfg;
  std::string gen_out, gen_dev_out, gen_test_out;
  std::size_t gen_dev_count = 300, gen_test_count = 500;
  std::uint64_t gen_seed = 1;
  gen->add_option("--out", gen_out, "Training corpus path")->required();
  gen->add_option("--dev-out", gen_dev_out, "Dev corpus path (optional)");
  gen->add_option("--test-out", gen_test_out, "Test corpus path (optional)");
  gen->add_option("--count", gen_cfg.sentence_count, "Training sentences");
  gen->add_option("--dev-count", gen_dev_count, "Dev sentences");
  gen->add_option("--test-count", gen_test_count, "Test sentences");
  gen->add_option("--min-len", gen_cfg.min_len, "Minimum sentence length");
  gen->add_option("--max-len", gen_cfg.max_len, "Maximum sentence length");
  gen->add_option("--types", gen_cfg.type_count, "Entity type count");
  gen->add_option("--min-entities", gen_cfg.min_entities,
                  "Minimum entities per sentence");
  gen->add_option("--max-entities", gen_cfg.max_entities,
                  "Maximum entities per sentence");
  gen->add_option("--phrases-per-type", gen_cfg.phrases_per_type,
                  "Lexicon phrases per type");
  gen->add_option("--max-phrase-len", gen_cfg.max_phrase_len,
                  "Longest phrase in tokens");
  gen->add_option("--context-vocab", gen_cfg.context_vocab,
                  "Context word inventory size");
  gen->add_option("--zipf", gen_cfg.zipf_exponent,
                  "Phrase usage skew (0 = uniform)");
  gen->add_option("--seed", gen_seed, "RNG seed");

  // mask ---------------------------------------------------------------
  auto* mask = app.add_subcommand("mask", "Hide gold entities at random");
  std::string mask_input, mask_output, mask_sidecar;
  double mask_prob = 0.0;
  std::uint64_t mask_seed = 1;
  mask->add_option("--input", mask_input, "Fully annotated CoNLL file")
      ->required();
  mask->add_option("--prob", mask_prob, "Masking probability p")->required();
  mask->add_option("--seed", mask_seed, "RNG seed");
  mask->add_option("--output", mask_output, "Masked CoNLL path")->required();
  mask->add_option("--sidecar", mask_sidecar, "Hidden-span sidecar path");

  // train ----------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a model");
  std::string train_data, train_dev, train_regime = "sampled";
  std::string train_sidecar, train_out, train_log;
  TrainFlags train_flags;
  train->add_option("--data", train_data, "Training CoNLL file")->required();
  train->add_option("--dev", train_dev, "Dev CoNLL file (best checkpoint)");
  train->add_option("--regime", train_regime,
                    "Training regime: sampled, full, oracle")
      ->check(CLI::IsMember({"sampled", "full", "oracle"}));
  train->add_option("--sidecar", train_sidecar,
                    "Hidden-span sidecar (oracle regime)");
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--log", train_log, "Loss log path");
  add_train_flags(train, train_flags);

  // eval / predict -------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Score a model against a corpus");
  std::string eval_model, eval_data;
  int eval_cap = 0;
  eval->add_option("--model", eval_model, "Checkpoint path")->required();
  eval->add_option("--data", eval_data, "CoNLL file with gold spans")
      ->required();
  eval->add_option("--max-span-len", eval_cap,
                   "Optional span length cap (0 = unlimited)");

  auto* predict_cmd = app.add_subcommand("predict", "Write span predictions");
  std::string pred_model, pred_input, pred_output;
  int pred_cap = 0;
  predict_cmd->add_option("--model", pred_model, "Checkpoint path")
      ->required();
  predict_cmd->add_option("--input", pred_input, "CoNLL file")->required();
  predict_cmd->add_option("--output", pred_output, "Prediction file path")
      ->required();
  predict_cmd->add_option("--max-span-len", pred_cap,
                          "Optional span length cap (0 = unlimited)");

  // study ------------------------------------------------------------------
  auto* study = app.add_subcommand(
      "study", "Degradation sweep over masking probabilities");
  std::string study_gold, study_dev, study_test;
  std::string study_probs, study_regimes = "sampled,full,oracle";
  std::string study_seeds = "1", study_lambdas, study_out_dir = "study-out";
  std::size_t study_jobs = 1;
  TrainFlags study_flags;
  study->add_option("--gold", study_gold, "Fully annotated training corpus")
      ->required();
  study->add_option("--dev", study_dev, "Dev corpus");
  study->add_option("--test", study_test, "Held-out test corpus")->required();
  study->add_option("--probs", study_probs,
                    "Comma-separated masking probabilities")
      ->required();
  study->add_option("--regimes", study_regimes, "Comma-separated regimes");
  study->add_option("--seeds", study_seeds, "Comma-separated seeds");
  study->add_option("--lambdas", study_lambdas,
                    "Comma-separated sampled-regime ratios");
  study->add_option("--out-dir", study_out_dir, "Artifact directory");
  study->add_option("--jobs", study_jobs, "Parallel training cells");
  add_train_flags(study, study_flags);

  // bound ------------------------------------------------------------------
  auto* bound = app.add_subcommand(
      "bound", "Verify the negative-sampling non-selection bound");
  int bound_n = 10;
  std::size_t bound_m = 1, bound_trials = 100000, bound_hidden = 1;
  double bound_lambda = 0.35;
  std::uint64_t bound_seed = 1;
  bound->add_option("--n", bound_n, "Sentence length")->required();
  bound->add_option("--m", bound_m, "Visible gold span count");
  bound->add_option("--lambda", bound_lambda, "Sampling ratio");
  bound->add_option("--trials", bound_trials, "Monte-Carlo trials");
  bound->add_option("--seed", bound_seed, "RNG seed");
  bound->add_option("--hidden", bound_hidden,
                    "Hidden span count for the collision extra");

  // config files: key=value lines matching long option names
  std::string config_path;
  for (auto* cmd : app.get_subcommands({})) {
    cmd->add_option("--config", config_path,
                    "key=value config file; explicit flags win");
  }

  try {
    // locate the subcommand and a --config flag before the real parse
    if (!args.empty()) {
      CLI::App* cmd = app.get_subcommand_no_throw(args[0]);
      std::string cfg_file;
      for (std::size_t k = 1; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) {
          cfg_file = args[k + 1];
        } else if (args[k].rfind("--config=", 0) == 0) {
          cfg_file = args[k].substr(9);
        }
      }
      if (cmd && !cfg_file.empty()) {
        merge_config_file(cmd, cfg_file, args);
      }
    }

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    app.parse(argv_rev);

    const CLI::App* active = app.get_subcommands().front();
    echo_effective_config(active);

    if (gen->parsed()) {
      return cmd_gen(gen_out, gen_dev_out, gen_test_out, gen_cfg,
                     gen_dev_count, gen_test_count, gen_seed);
    }
    if (mask->parsed()) {
      return cmd_mask(mask_input, mask_prob, mask_seed, mask_output,
                      mask_sidecar);
    }
    if (train->parsed()) {
      return cmd_train(train_data, train_dev, train_regime, train_sidecar,
                       train_out, train_log, train_flags,
                       train->count("--lambda") > 0);
    }
    if (eval->parsed()) return cmd_eval(eval_model, eval_data, eval_cap);
    if (predict_cmd->parsed()) {
      return cmd_predict(pred_model, pred_input, pred_output, pred_cap);
    }
    if (study->parsed()) {
      return cmd_study(study_gold, study_dev, study_test, study_probs,
                       study_regimes, study_seeds, study_lambdas,
                       study_out_dir, study_jobs, study_flags);
    }
    if (bound->parsed()) {
      return cmd_bound(bound_n, bound_m, bound_lambda, bound_trials,
                       bound_seed, bound_hidden);
    }
    return kUsageError;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const LoadError& e) {
    std::cerr << "load error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  }
}

}  // namespace negspan::cli
