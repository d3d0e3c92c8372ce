// qbm: command-line front end for the QBM classifier library.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qbm/baseline_fnn.hpp"
#include "qbm/errors.hpp"
#include "qbm/harness.hpp"
#include "qbm/metrics.hpp"
#include "qbm/model_file.hpp"
#include "qbm/pipeline.hpp"
#include "qbm/qbm_classifier.hpp"
#include "qbm/rng.hpp"
#include "qbm/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kBadInput = 2, kLoadFailure = 3 };

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qbm::LoadError(qbm::LoadError::Kind::kMissingFile, "cannot open " + path.string());
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw qbm::LoadError(qbm::LoadError::Kind::kCorruptFile, path.string() + " is not valid JSON");
  }
  return doc;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string metric(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

qbm::LabelMap labels_for(const std::string& labels_path, const fs::path& data_dir = {}) {
  if (!labels_path.empty()) return qbm::load_label_map(labels_path);
  if (!data_dir.empty() && fs::exists(data_dir / "labels.json")) {
    return qbm::load_label_map(data_dir / "labels.json");
  }
  return qbm::default_label_map();
}

/// A prepared data directory: train.csv and test.csv (binarized), labels.json.
struct PreparedData {
  qbm::DatasetSplit split;
  qbm::LabelMap labels;
};

PreparedData load_prepared(const fs::path& dir) {
  PreparedData d;
  d.labels = labels_for("", dir);
  d.split.train = qbm::load_features(dir / "train.csv", d.labels);
  d.split.test = qbm::load_features(dir / "test.csv", d.labels);
  if (d.split.train.empty() || d.split.test.empty()) {
    throw qbm::InvalidInput("data directory " + dir.string() + " has an empty train or test set");
  }
  return d;
}

qbm::RunOptions run_options(const PreparedData& data, unsigned workers) {
  qbm::RunOptions o;
  o.input_units = data.split.train.front().features.size();
  o.label_units = data.labels.empty() ? 0 : data.labels.rbegin()->first + 1;
  o.workers = workers;
  return o;
}

// ---- subcommands -----------------------------------------------------------

struct SynthArgs {
  std::string out;
  qbm::SyntheticCorpusSpec spec;
};

int run_synth(const SynthArgs& a) {
  const auto records = qbm::synthetic_corpus(a.spec);
  qbm::save_features(a.out, records);
  std::cerr << "wrote " << records.size() << " records to " << a.out << "\n";
  return kOk;
}

struct CompressionArgs {
  std::string features;
  std::string out;
  std::string labels;
  std::string history;
  qbm::CompressionTrainConfig config;
};

int run_train_compression(const CompressionArgs& a) {
  const auto records = qbm::load_features(a.features, labels_for(a.labels));
  Stopwatch clock;
  qbm::TrainHistory history;
  const auto layer = qbm::train_compression(records, a.config, &history);
  qbm::save_compression(layer, a.out);
  std::ostringstream csv;
  csv << "epoch,surrogate_accuracy,surrogate_auc,mean_abs_gradient\n";
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    const auto& r = history.epochs[e];
    csv << e + 1 << ',' << metric(r.train_accuracy) << ',' << metric(r.train_auc) << ','
        << metric(r.mean_abs_gradient) << '\n';
  }
  if (!a.history.empty()) write_text(a.history, csv.str());
  if (!history.epochs.empty()) {
    std::cerr << "surrogate head: accuracy " << metric(history.epochs.back().train_accuracy)
              << ", auc " << metric(history.epochs.back().train_auc) << "\n";
  }
  std::cerr << "compression trained in " << clock.seconds() << " s\n";
  return kOk;
}

struct PrepareArgs {
  std::string features;
  std::string layer;
  std::string labels;
  std::string out;
  std::size_t train_groups = 20;
  std::size_t test_groups = 5;
  std::uint64_t seed = 0;
};

int run_prepare(const PrepareArgs& a) {
  const auto labels = labels_for(a.labels);
  const auto raw = qbm::load_features(a.features, labels);
  const auto layer = qbm::load_compression(a.layer);
  std::vector<qbm::FeatureRecord> binary;
  binary.reserve(raw.size());
  for (const auto& r : raw) {
    if (r.stage != qbm::FeatureStage::kRaw512) {
      throw qbm::InvalidInput("prepare expects raw512 features");
    }
    binary.push_back(qbm::binarize(qbm::compress(layer, r)));
  }
  const auto split = qbm::split_balanced(binary, a.train_groups, a.test_groups, a.seed);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  qbm::save_features(dir / "train.csv", split.train);
  qbm::save_features(dir / "test.csv", split.test);
  qbm::save_label_map(dir / "labels.json", labels);
  write_text(dir / "split_manifest.json", qbm::manifest_to_json(split, labels).dump(1) + "\n");
  std::cerr << "train " << split.train.size() << " images, test " << split.test.size()
            << " images\n";
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  unsigned workers = 1;
};

int run_train(const TrainArgs& a, qbm::Approach approach) {
  auto config = qbm::TrialConfig::from_json(read_json(a.config));
  if (config.approach != approach) {
    throw qbm::InvalidInput("config approach is " + std::string(qbm::to_string(config.approach)) +
                            "; use train-" + std::string(qbm::to_string(config.approach)));
  }
  const auto data = load_prepared(a.data);
  Stopwatch clock;
  std::vector<qbm::TrainedModel> models;
  const auto result = qbm::run_trial(config, data.split, run_options(data, a.workers), &models);

  const fs::path out(a.out);
  qbm::emit_report({result}, out);
  fs::create_directories(out / "models");
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto path = out / "models" / ("seed_" + std::to_string(config.train_seeds[k]) + ".model");
    if (const auto* q = std::get_if<qbm::QbmClassifier>(&models[k])) {
      qbm::save_model(*q, path);
    } else {
      qbm::save_fnn(std::get<qbm::FnnModel>(models[k]), path);
    }
  }
  std::cerr << config.name << ": train accuracy " << metric(result.train_accuracy.mean)
            << ", test accuracy " << metric(result.test_accuracy.mean) << ", objective "
            << metric(result.objective) << " (" << clock.seconds() << " s)\n";
  return kOk;
}

struct SearchArgs {
  std::vector<std::string> spaces;
  std::string approach = "qbm";
  std::string data;
  std::string out;
  std::string strategy = "random";
  qbm::SearchOptions options;
};

int run_search_cmd(SearchArgs a) {
  std::vector<qbm::SearchSpace> spaces;
  for (const auto& path : a.spaces) spaces.push_back(qbm::SearchSpace::from_json(read_json(path)));
  if (spaces.empty()) {
    spaces.push_back(qbm::parse_approach(a.approach) == qbm::Approach::kQbm
                         ? qbm::SearchSpace::default_qbm()
                         : qbm::SearchSpace::default_fnn());
  }
  const auto data = load_prepared(a.data);
  a.options.strategy = qbm::parse_search_strategy(a.strategy);
  const unsigned workers = a.options.run.workers;
  a.options.run = run_options(data, workers);

  // Each space gets the full budget; trial indices continue across spaces.
  Stopwatch clock;
  std::vector<qbm::TrialResult> results;
  json space_docs = json::array();
  for (const auto& space : spaces) {
    auto part = qbm::run_search(space, data.split, a.options);
    results.insert(results.end(), part.begin(), part.end());
    a.options.first_trial += a.options.budget;
    space_docs.push_back(space.to_json());
  }
  qbm::sort_by_objective(results);
  qbm::emit_report(results, a.out);
  write_text(fs::path(a.out) / "spaces.json", space_docs.dump(1) + "\n");
  std::cerr << results.size() << " trials in " << clock.seconds() << " s; best "
            << results.front().config.name << " objective " << metric(results.front().objective)
            << "\n";
  return kOk;
}

struct EvaluateArgs {
  std::string model;
  std::string test;
  std::string labels;
  std::string out;
  std::size_t test_seeds = 10;
  std::uint64_t seed = 0;
  std::string sampler = "sa";
  std::size_t samples = 20;
  std::size_t gibbs_sweeps = 100;
  std::size_t anneal_sweeps = 1000;
  unsigned workers = 1;
};

int run_evaluate(const EvaluateArgs& a) {
  if (a.test_seeds == 0) throw qbm::InvalidInput("--test-seeds must be positive");
  const auto records = qbm::load_features(a.test, labels_for(a.labels));
  if (records.empty()) throw qbm::InvalidInput("test file has no records");
  const auto examples = qbm::to_examples(records);
  const auto kind = qbm::peek_model_kind(a.model);

  std::vector<double> accuracy, auc;
  if (kind == "qbm") {
    const auto model = qbm::load_model(a.model);
    qbm::SamplerConfig sampler;
    sampler.backend = qbm::parse_sampler_backend(a.sampler);
    sampler.gibbs_sweeps = a.gibbs_sweeps;
    sampler.schedule.sweeps = a.anneal_sweeps;
    sampler.workers = a.workers;
    for (std::size_t t = 0; t < a.test_seeds; ++t) {
      const auto eval = qbm::evaluate(model, examples, sampler, a.samples,
                                      qbm::derive_seed(a.seed, t));
      accuracy.push_back(eval.accuracy);
      auc.push_back(eval.auc);
    }
  } else if (kind == "fnn") {
    // The network is deterministic; every test seed gives the same scores.
    const auto model = qbm::load_fnn(a.model);
    const auto eval = qbm::evaluate_fnn(model, examples);
    accuracy.assign(a.test_seeds, eval.accuracy);
    auc.assign(a.test_seeds, eval.auc);
  } else {
    throw qbm::LoadError(qbm::LoadError::Kind::kWrongKind,
                         a.model + " holds a '" + kind + "' model, not a classifier");
  }

  std::ostringstream csv;
  csv << "test_seed,accuracy,auc\n";
  for (std::size_t t = 0; t < a.test_seeds; ++t) {
    csv << t << ',' << metric(accuracy[t]) << ',' << metric(auc[t]) << '\n';
  }
  const auto acc_ms = qbm::mean_std(accuracy);
  const auto auc_ms = qbm::mean_std(auc);
  csv << "mean," << metric(acc_ms.mean) << ',' << metric(auc_ms.mean) << '\n';
  csv << "std," << metric(acc_ms.std) << ',' << metric(auc_ms.std) << '\n';
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  return kOk;
}

struct ReportArgs {
  std::string in;
  std::string out;
};

int run_report(const ReportArgs& a) {
  fs::path in(a.in);
  if (fs::is_directory(in)) in /= "results.json";
  auto results = qbm::load_results(in);
  if (results.empty()) throw qbm::InvalidInput(in.string() + " holds no results");
  qbm::emit_report(results, a.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boltzmann-machine classifiers trained with annealing-based sampling"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic grouped 512-dim feature corpus");
  c_synth->add_option("--out", synth.out, "Output feature CSV")->required();
  c_synth->add_option("--classes", synth.spec.classes)->capture_default_str();
  c_synth->add_option("--groups-per-class", synth.spec.groups_per_class)->capture_default_str();
  c_synth->add_option("--min-images", synth.spec.min_images_per_group)->capture_default_str();
  c_synth->add_option("--max-images", synth.spec.max_images_per_group)->capture_default_str();
  c_synth->add_option("--separation", synth.spec.class_separation)->capture_default_str();
  c_synth->add_option("--group-spread", synth.spec.group_spread)->capture_default_str();
  c_synth->add_option("--noise", synth.spec.image_noise)->capture_default_str();
  c_synth->add_option("--seed", synth.spec.seed)->capture_default_str();

  CompressionArgs comp;
  auto* c_comp = app.add_subcommand("train-compression",
                                    "Train the 512->64 compression layer with a surrogate head");
  c_comp->add_option("--features", comp.features, "Raw 512-dim feature CSV")->required();
  c_comp->add_option("--out", comp.out, "Output layer model file")->required();
  c_comp->add_option("--labels", comp.labels, "Label map JSON");
  c_comp->add_option("--history", comp.history, "Write surrogate history CSV here");
  c_comp->add_option("--epochs", comp.config.epochs)->capture_default_str();
  c_comp->add_option("--batch-size", comp.config.batch_size)->capture_default_str();
  c_comp->add_option("--lr", comp.config.adam.learning_rate)->capture_default_str();
  c_comp->add_option("--seed", comp.config.seed)->capture_default_str();
  c_comp->add_option("--workers", comp.config.workers)->capture_default_str();

  PrepareArgs prep;
  auto* c_prep = app.add_subcommand("prepare", "Compress, binarize and split a raw corpus");
  c_prep->add_option("--features", prep.features, "Raw 512-dim feature CSV")->required();
  c_prep->add_option("--layer", prep.layer, "Compression layer model file")->required();
  c_prep->add_option("--out", prep.out, "Output data directory")->required();
  c_prep->add_option("--labels", prep.labels, "Label map JSON");
  c_prep->add_option("--train-groups", prep.train_groups)->capture_default_str();
  c_prep->add_option("--test-groups", prep.test_groups)->capture_default_str();
  c_prep->add_option("--seed", prep.seed)->capture_default_str();

  TrainArgs train_qbm, train_fnn;
  auto add_train = [&](const char* name, const char* help, TrainArgs& t) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--config", t.config, "Trial config JSON")->required();
    c->add_option("--data", t.data, "Prepared data directory")->required();
    c->add_option("--out", t.out, "Output directory")->required();
    c->add_option("--workers", t.workers)->capture_default_str();
    return c;
  };
  auto* c_tq = add_train("train-qbm", "Train and test a QBM trial config", train_qbm);
  auto* c_tf = add_train("train-fnn", "Train and test an FNN trial config", train_fnn);

  SearchArgs search;
  auto* c_search = app.add_subcommand("search", "Hyperparameter search with report");
  c_search->add_option("--space", search.spaces,
                       "Search space JSON; repeat to search several (default: built-in)");
  c_search->add_option("--approach", search.approach, "qbm or fnn when --space is omitted")
      ->capture_default_str();
  c_search->add_option("--data", search.data, "Prepared data directory")->required();
  c_search->add_option("--out", search.out, "Output directory")->required();
  c_search->add_option("--budget", search.options.budget)->capture_default_str();
  c_search->add_option("--seeds", search.options.train_seed_count, "Training seeds per trial")
      ->capture_default_str();
  c_search->add_option("--test-seeds", search.options.test_seed_count)->capture_default_str();
  c_search->add_option("--strategy", search.strategy, "random or coordinate")
      ->capture_default_str();
  c_search->add_option("--master-seed", search.options.master_seed)->capture_default_str();
  c_search->add_option("--workers", search.options.run.workers)->capture_default_str();

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Score a saved model on a feature CSV");
  c_eval->add_option("--model", eval.model, "Model file")->required();
  c_eval->add_option("--test", eval.test, "Binarized feature CSV")->required();
  c_eval->add_option("--labels", eval.labels, "Label map JSON");
  c_eval->add_option("--out", eval.out, "Write CSV here instead of stdout");
  c_eval->add_option("--test-seeds", eval.test_seeds)->capture_default_str();
  c_eval->add_option("--seed", eval.seed)->capture_default_str();
  c_eval->add_option("--sampler", eval.sampler, "exact, gibbs, sa or enumeration")
      ->capture_default_str();
  c_eval->add_option("--samples", eval.samples)->capture_default_str();
  c_eval->add_option("--gibbs-sweeps", eval.gibbs_sweeps)->capture_default_str();
  c_eval->add_option("--anneal-sweeps", eval.anneal_sweeps)->capture_default_str();
  c_eval->add_option("--workers", eval.workers)->capture_default_str();

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Re-emit a report from results.json");
  c_report->add_option("--in", report.in, "results.json or a directory holding it")->required();
  c_report->add_option("--out", report.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_synth) return run_synth(synth);
    if (*c_comp) return run_train_compression(comp);
    if (*c_prep) return run_prepare(prep);
    if (*c_tq) return run_train(train_qbm, qbm::Approach::kQbm);
    if (*c_tf) return run_train(train_fnn, qbm::Approach::kFnn);
    if (*c_search) return run_search_cmd(search);
    if (*c_eval) return run_evaluate(eval);
    if (*c_report) return run_report(report);
  } catch (const qbm::LoadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kLoadFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
