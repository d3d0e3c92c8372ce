#include "qbm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "qbm/errors.hpp"
#include "qbm/parallel.hpp"

namespace qbm {

namespace {

using nlohmann::json;

// Seed-derivation stream tags.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kUntrainedEvalStream = 2;
constexpr std::uint64_t kSearchStream = 10;
constexpr std::uint64_t kTrainSeedStream = 11;
constexpr std::uint64_t kTestSeedStream = 12;

void reject_unknown_keys(const json& doc, const std::set<std::string>& allowed,
                         std::string_view what) {
  if (!doc.is_object()) throw InvalidInput(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.contains(key)) {
      throw InvalidInput("unknown key '" + key + "' in " + std::string(what));
    }
  }
}

template <typename T>
T required(const json& doc, const char* key, std::string_view what) {
  const auto it = doc.find(key);
  if (it == doc.end()) {
    throw InvalidInput(std::string(what) + " is missing '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string(what) + ": '" + key + "' has the wrong type");
  }
}

IntRange int_range(const json& doc, const char* key) {
  const auto v = required<std::vector<std::int64_t>>(doc, key, "search space");
  if (v.size() != 2) throw InvalidInput(std::string("range '") + key + "' needs [lo, hi]");
  return {v[0], v[1]};
}

RealRange real_range(const json& doc, const char* key) {
  const auto v = required<std::vector<double>>(doc, key, "search space");
  if (v.size() != 2) throw InvalidInput(std::string("range '") + key + "' needs [lo, hi]");
  return {v[0], v[1]};
}

void check_range(const IntRange& r, std::int64_t min, std::int64_t max, const char* name) {
  if (r.lo > r.hi) throw InvalidInput(std::string("empty range for ") + name);
  if (r.lo < min || r.hi > max) {
    throw InvalidInput(std::string(name) + " range must lie within [" + std::to_string(min) +
                       ", " + std::to_string(max) + "]");
  }
}

void check_range(const RealRange& r, double min, double max, const char* name) {
  if (!(r.lo <= r.hi)) throw InvalidInput(std::string("empty range for ") + name);
  if (r.lo < min || r.hi > max) throw InvalidInput(std::string(name) + " range out of bounds");
}

double draw(const RealRange& r, Rng& rng, bool log_scale) {
  if (r.lo == r.hi) return r.lo;
  if (log_scale && r.lo > 0.0) {
    return std::exp(rng.uniform(std::log(r.lo), std::log(r.hi)));
  }
  return rng.uniform(r.lo, r.hi);
}

std::size_t draw(const IntRange& r, Rng& rng) {
  return static_cast<std::size_t>(rng.between(r.lo, r.hi));
}

json range_json(const IntRange& r) { return json::array({r.lo, r.hi}); }
json range_json(const RealRange& r) { return json::array({r.lo, r.hi}); }

// NaN is not representable in JSON; null stands for an undefined metric.
json metric_json(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json mean_std_json(const MeanStd& m) {
  return {{"mean", metric_json(m.mean)}, {"std", metric_json(m.std)}};
}

double metric_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::vector<std::uint64_t> derived_seeds(std::uint64_t master, std::uint64_t stream,
                                         std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(derive_seed(master, {stream, i}));
  return seeds;
}

std::vector<std::size_t> even_split(std::size_t layers, std::size_t total) {
  std::vector<std::size_t> sizes(layers, total / layers);
  for (std::size_t k = 0; k < total % layers; ++k) ++sizes[k];
  return sizes;
}

SeedOutcome run_seed(const TrialConfig& config, const std::vector<Example>& train_set,
                     const std::vector<Example>& test_set, std::uint64_t train_seed,
                     const RunOptions& options, TrainedModel* model_out) {
  SeedOutcome out;
  out.train_seed = train_seed;
  const auto init_seed = derive_seed(train_seed, kInitStream);
  const auto fit_seed = derive_seed(train_seed, kTrainStream);

  if (config.approach == Approach::kQbm) {
    const auto sampler = config.sampler_config();
    auto qbm = init_qbm(QbmTopology::make(options.input_units, options.label_units,
                                          config.hidden_layers, config.hidden_units),
                        *config.beta_eff, init_seed);
    const QbmTrainConfig tc{config.batch_size, config.epochs, *config.sample_count,
                            config.adam, fit_seed};
    out.history = train(qbm, train_set, tc, sampler);
    if (out.history.epochs.empty()) {
      const auto eval = evaluate(qbm, train_set, sampler, *config.sample_count,
                                 derive_seed(train_seed, kUntrainedEvalStream));
      out.final_train_accuracy = eval.accuracy;
      out.final_train_auc = eval.auc;
    }
    for (auto test_seed : config.test_seeds) {
      const auto eval = evaluate(qbm, test_set, sampler, *config.sample_count, test_seed);
      out.test_accuracy.push_back(eval.accuracy);
      out.test_auc.push_back(eval.auc);
    }
    if (model_out) *model_out = std::move(qbm);
  } else {
    auto fnn = make_fnn(options.input_units,
                        even_split(config.hidden_layers, config.hidden_units),
                        options.label_units, init_seed);
    const FnnTrainConfig tc{config.batch_size, config.epochs, config.adam, fit_seed, 1};
    out.history = fnn_train(fnn, train_set, tc);
    if (out.history.epochs.empty()) {
      const auto eval = evaluate_fnn(fnn, train_set);
      out.final_train_accuracy = eval.accuracy;
      out.final_train_auc = eval.auc;
    }
    // The forward pass is deterministic; a test seed only permutes the
    // evaluation order, which leaves both metrics unchanged.
    for (auto test_seed : config.test_seeds) {
      std::vector<Example> shuffled = test_set;
      Rng rng(test_seed);
      rng.shuffle(shuffled.begin(), shuffled.end());
      const auto eval = evaluate_fnn(fnn, shuffled);
      out.test_accuracy.push_back(eval.accuracy);
      out.test_auc.push_back(eval.auc);
    }
    if (model_out) *model_out = std::move(fnn);
  }

  if (!out.history.epochs.empty()) {
    out.final_train_accuracy = out.history.epochs.back().train_accuracy;
    out.final_train_auc = out.history.epochs.back().train_auc;
  }
  out.mean_test_accuracy = mean_std(out.test_accuracy).mean;
  out.mean_test_auc = mean_std(out.test_auc).mean;
  return out;
}

void aggregate(TrialResult& result) {
  std::vector<double> acc, auc, test_acc, test_auc;
  std::size_t epochs = 0;
  for (const auto& s : result.seeds) {
    acc.push_back(s.final_train_accuracy);
    auc.push_back(s.final_train_auc);
    test_acc.push_back(s.mean_test_accuracy);
    test_auc.push_back(s.mean_test_auc);
    epochs = std::max(epochs, s.history.epochs.size());
  }
  result.train_accuracy = mean_std(acc);
  result.train_auc = mean_std(auc);
  result.test_accuracy = mean_std(test_acc);
  result.test_auc = mean_std(test_auc);
  result.objective = 0.5 * (result.train_accuracy.mean + result.train_auc.mean);

  result.epoch_accuracy.clear();
  result.epoch_auc.clear();
  for (std::size_t e = 0; e < epochs; ++e) {
    std::vector<double> a, u;
    for (const auto& s : result.seeds) {
      if (e < s.history.epochs.size()) {
        a.push_back(s.history.epochs[e].train_accuracy);
        u.push_back(s.history.epochs[e].train_auc);
      }
    }
    result.epoch_accuracy.push_back(mean_std(a));
    result.epoch_auc.push_back(mean_std(u));
  }
}

std::string trial_name(SearchStrategy strategy, std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return (strategy == SearchStrategy::kRandom ? "rs_" : "cd_") + digits;
}

}  // namespace

std::string_view to_string(Approach approach) {
  return approach == Approach::kQbm ? "qbm" : "fnn";
}

Approach parse_approach(std::string_view name) {
  if (name == "qbm") return Approach::kQbm;
  if (name == "fnn") return Approach::kFnn;
  throw InvalidInput("unknown approach '" + std::string(name) + "' (expected qbm or fnn)");
}

SearchStrategy parse_search_strategy(std::string_view name) {
  if (name == "random") return SearchStrategy::kRandom;
  if (name == "coordinate") return SearchStrategy::kCoordinate;
  throw InvalidInput("unknown search strategy '" + std::string(name) + "'");
}

SearchSpace SearchSpace::default_qbm() {
  SearchSpace s;
  s.approach = Approach::kQbm;
  s.beta_eff = RealRange{0.5, 10.0};
  s.sample_count = IntRange{5, 100};
  return s;
}

SearchSpace SearchSpace::default_fnn() {
  SearchSpace s;
  s.approach = Approach::kFnn;
  s.hidden_layers = {1, 1};
  return s;
}

void SearchSpace::validate() const {
  check_range(batch_size, 1, 1 << 20, "batch_size");
  check_range(epochs, 0, 1000, "epochs");
  check_range(hidden_layers, 1, 64, "hidden_layers");
  check_range(hidden_units, 1, 100000, "hidden_units");
  if (hidden_units.lo < hidden_layers.hi) {
    throw InvalidInput("hidden_units must allow one unit per hidden layer");
  }
  check_range(learning_rate, 0.0, 10.0, "learning_rate");
  check_range(adam_beta1, 0.0, 0.999999, "adam_beta1");
  check_range(adam_beta2, 0.0, 0.999999, "adam_beta2");
  check_range(adam_epsilon, 0.0, 1e3, "adam_epsilon");
  if (approach == Approach::kQbm) {
    if (!beta_eff || !sample_count) {
      throw InvalidInput("qbm search space needs beta_eff and sample_count ranges");
    }
    check_range(*beta_eff, 1e-12, 1e6, "beta_eff");
    if (beta_eff->lo <= 0.0) throw InvalidInput("beta_eff must be positive");
    check_range(*sample_count, 1, 1 << 20, "sample_count");
    if (gibbs_sweeps == 0 || anneal_sweeps == 0) {
      throw InvalidInput("sampler sweep counts must be positive");
    }
  } else if (beta_eff || sample_count) {
    throw InvalidInput("beta_eff and sample_count do not apply to the fnn approach");
  }
}

SearchSpace SearchSpace::from_json(const json& doc) {
  static const std::set<std::string> common{
      "approach",      "batch_size", "epochs",     "hidden_layers", "hidden_units",
      "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon"};
  static const std::set<std::string> qbm_only{"beta_eff", "sample_count", "sampler",
                                              "gibbs_sweeps", "anneal_sweeps"};
  auto all = common;
  all.insert(qbm_only.begin(), qbm_only.end());
  reject_unknown_keys(doc, all, "search space");

  SearchSpace s;
  s.approach = parse_approach(required<std::string>(doc, "approach", "search space"));
  if (s.approach == Approach::kFnn) {
    for (const auto& key : qbm_only) {
      if (doc.contains(key)) {
        throw InvalidInput("'" + key + "' does not apply to the fnn approach");
      }
    }
  }
  s.batch_size = int_range(doc, "batch_size");
  s.epochs = int_range(doc, "epochs");
  s.hidden_layers = int_range(doc, "hidden_layers");
  s.hidden_units = int_range(doc, "hidden_units");
  s.learning_rate = real_range(doc, "learning_rate");
  s.adam_beta1 = real_range(doc, "adam_beta1");
  s.adam_beta2 = real_range(doc, "adam_beta2");
  s.adam_epsilon = real_range(doc, "adam_epsilon");
  if (s.approach == Approach::kQbm) {
    s.beta_eff = real_range(doc, "beta_eff");
    s.sample_count = int_range(doc, "sample_count");
    if (doc.contains("sampler")) {
      s.sampler = parse_sampler_backend(required<std::string>(doc, "sampler", "search space"));
    }
    if (doc.contains("gibbs_sweeps")) {
      s.gibbs_sweeps = required<std::size_t>(doc, "gibbs_sweeps", "search space");
    }
    if (doc.contains("anneal_sweeps")) {
      s.anneal_sweeps = required<std::size_t>(doc, "anneal_sweeps", "search space");
    }
  }
  s.validate();
  return s;
}

json SearchSpace::to_json() const {
  json doc{{"approach", std::string(qbm::to_string(approach))},
           {"batch_size", range_json(batch_size)},
           {"epochs", range_json(epochs)},
           {"hidden_layers", range_json(hidden_layers)},
           {"hidden_units", range_json(hidden_units)},
           {"learning_rate", range_json(learning_rate)},
           {"adam_beta1", range_json(adam_beta1)},
           {"adam_beta2", range_json(adam_beta2)},
           {"adam_epsilon", range_json(adam_epsilon)}};
  if (approach == Approach::kQbm) {
    doc["beta_eff"] = range_json(*beta_eff);
    doc["sample_count"] = range_json(*sample_count);
    doc["sampler"] = std::string(qbm::to_string(sampler));
    doc["gibbs_sweeps"] = gibbs_sweeps;
    doc["anneal_sweeps"] = anneal_sweeps;
  }
  return doc;
}

void TrialConfig::validate() const {
  if (name.empty() || name.find_first_of(",/\\\r\n\"") != std::string::npos) {
    throw InvalidInput("trial name '" + name + "' must be non-empty and CSV/path safe");
  }
  if (batch_size == 0) throw InvalidInput("batch_size must be positive");
  if (hidden_layers == 0) throw InvalidInput("hidden_layers must be at least 1");
  if (hidden_units < hidden_layers) {
    throw InvalidInput("hidden_units must be at least hidden_layers");
  }
  adam.validate();
  if (approach == Approach::kQbm) {
    if (!beta_eff || !(*beta_eff > 0.0)) throw InvalidInput("qbm trial needs beta_eff > 0");
    if (!sample_count || *sample_count == 0) {
      throw InvalidInput("qbm trial needs sample_count >= 1");
    }
    if (gibbs_sweeps == 0 || anneal_sweeps == 0) {
      throw InvalidInput("sampler sweep counts must be positive");
    }
  } else if (beta_eff || sample_count) {
    throw InvalidInput("beta_eff and sample_count do not apply to the fnn approach");
  }
  if (train_seeds.empty() || test_seeds.empty()) {
    throw InvalidInput("trial needs at least one training and one test seed");
  }
  const std::set<std::uint64_t> train_set(train_seeds.begin(), train_seeds.end());
  const std::set<std::uint64_t> test_set(test_seeds.begin(), test_seeds.end());
  if (train_set.size() != train_seeds.size() || test_set.size() != test_seeds.size()) {
    throw InvalidInput("trial seeds must be distinct");
  }
}

SamplerConfig TrialConfig::sampler_config() const {
  SamplerConfig s;
  s.backend = sampler;
  s.gibbs_sweeps = gibbs_sweeps;
  s.schedule.sweeps = anneal_sweeps;
  return s;
}

TrialConfig TrialConfig::from_json(const json& doc) {
  static const std::set<std::string> common{
      "name",         "approach",      "batch_size", "epochs",     "hidden_layers",
      "hidden_units", "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon",
      "train_seeds",  "test_seeds"};
  static const std::set<std::string> qbm_only{"beta_eff", "sample_count", "sampler",
                                              "gibbs_sweeps", "anneal_sweeps"};
  auto all = common;
  all.insert(qbm_only.begin(), qbm_only.end());
  reject_unknown_keys(doc, all, "trial config");

  constexpr std::string_view what = "trial config";
  TrialConfig c;
  c.approach = parse_approach(required<std::string>(doc, "approach", what));
  if (c.approach == Approach::kFnn) {
    for (const auto& key : qbm_only) {
      if (doc.contains(key)) {
        throw InvalidInput("'" + key + "' does not apply to the fnn approach");
      }
    }
  }
  if (doc.contains("name")) c.name = required<std::string>(doc, "name", what);
  c.batch_size = required<std::size_t>(doc, "batch_size", what);
  c.epochs = required<std::size_t>(doc, "epochs", what);
  c.hidden_layers = required<std::size_t>(doc, "hidden_layers", what);
  c.hidden_units = required<std::size_t>(doc, "hidden_units", what);
  c.adam.learning_rate = required<double>(doc, "learning_rate", what);
  c.adam.beta1 = required<double>(doc, "adam_beta1", what);
  c.adam.beta2 = required<double>(doc, "adam_beta2", what);
  c.adam.epsilon = required<double>(doc, "adam_epsilon", what);
  c.train_seeds = required<std::vector<std::uint64_t>>(doc, "train_seeds", what);
  c.test_seeds = required<std::vector<std::uint64_t>>(doc, "test_seeds", what);
  if (c.approach == Approach::kQbm) {
    c.beta_eff = required<double>(doc, "beta_eff", what);
    c.sample_count = required<std::size_t>(doc, "sample_count", what);
    if (doc.contains("sampler")) {
      c.sampler = parse_sampler_backend(required<std::string>(doc, "sampler", what));
    }
    if (doc.contains("gibbs_sweeps")) {
      c.gibbs_sweeps = required<std::size_t>(doc, "gibbs_sweeps", what);
    }
    if (doc.contains("anneal_sweeps")) {
      c.anneal_sweeps = required<std::size_t>(doc, "anneal_sweeps", what);
    }
  }
  c.validate();
  return c;
}

json TrialConfig::to_json() const {
  json doc{{"name", name},
           {"approach", std::string(qbm::to_string(approach))},
           {"batch_size", batch_size},
           {"epochs", epochs},
           {"hidden_layers", hidden_layers},
           {"hidden_units", hidden_units},
           {"learning_rate", adam.learning_rate},
           {"adam_beta1", adam.beta1},
           {"adam_beta2", adam.beta2},
           {"adam_epsilon", adam.epsilon},
           {"train_seeds", train_seeds},
           {"test_seeds", test_seeds}};
  if (approach == Approach::kQbm) {
    doc["beta_eff"] = *beta_eff;
    doc["sample_count"] = *sample_count;
    doc["sampler"] = std::string(qbm::to_string(sampler));
    doc["gibbs_sweeps"] = gibbs_sweeps;
    doc["anneal_sweeps"] = anneal_sweeps;
  }
  return doc;
}

json TrialResult::to_json() const {
  json seed_docs = json::array();
  for (const auto& s : seeds) {
    json epochs = json::array();
    for (const auto& e : s.history.epochs) {
      epochs.push_back({{"train_accuracy", e.train_accuracy},
                        {"train_auc", metric_json(e.train_auc)},
                        {"mean_abs_gradient", e.mean_abs_gradient}});
    }
    json test_auc = json::array();
    for (double v : s.test_auc) test_auc.push_back(metric_json(v));
    seed_docs.push_back({{"train_seed", s.train_seed},
                         {"history", epochs},
                         {"final_train_accuracy", s.final_train_accuracy},
                         {"final_train_auc", metric_json(s.final_train_auc)},
                         {"test_accuracy", s.test_accuracy},
                         {"test_auc", test_auc},
                         {"mean_test_accuracy", s.mean_test_accuracy},
                         {"mean_test_auc", metric_json(s.mean_test_auc)}});
  }
  return {{"config", config.to_json()},
          {"parameter_count", parameter_count},
          {"seeds", seed_docs},
          {"summary",
           {{"train_accuracy", mean_std_json(train_accuracy)},
            {"train_auc", mean_std_json(train_auc)},
            {"test_accuracy", mean_std_json(test_accuracy)},
            {"test_auc", mean_std_json(test_auc)}}},
          {"objective", metric_json(objective)}};
}

TrialResult TrialResult::from_json(const json& doc) {
  try {
    TrialResult r;
    r.config = TrialConfig::from_json(doc.at("config"));
    r.parameter_count = doc.at("parameter_count").get<std::size_t>();
    for (const auto& s : doc.at("seeds")) {
      SeedOutcome o;
      o.train_seed = s.at("train_seed").get<std::uint64_t>();
      for (const auto& e : s.at("history")) {
        o.history.epochs.push_back({e.at("train_accuracy").get<double>(),
                                    metric_from(e.at("train_auc")),
                                    e.at("mean_abs_gradient").get<double>(), 0.0});
      }
      o.final_train_accuracy = s.at("final_train_accuracy").get<double>();
      o.final_train_auc = metric_from(s.at("final_train_auc"));
      o.test_accuracy = s.at("test_accuracy").get<std::vector<double>>();
      for (const auto& v : s.at("test_auc")) o.test_auc.push_back(metric_from(v));
      o.mean_test_accuracy = s.at("mean_test_accuracy").get<double>();
      o.mean_test_auc = metric_from(s.at("mean_test_auc"));
      r.seeds.push_back(std::move(o));
    }
    aggregate(r);
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed trial result: ") + e.what());
  }
}

TrialResult run_trial(const TrialConfig& config, const DatasetSplit& split,
                      const RunOptions& options, std::vector<TrainedModel>* models) {
  config.validate();
  if (split.train.empty() || split.test.empty()) {
    throw InvalidInput("trial needs non-empty train and test sets");
  }
  const auto start = std::chrono::steady_clock::now();
  const auto train_set = to_examples(split.train);
  const auto test_set = to_examples(split.test);

  TrialResult result;
  result.config = config;
  result.seeds.resize(config.train_seeds.size());
  std::vector<TrainedModel> trained(config.train_seeds.size(), TrainedModel{FnnModel{}});
  parallel_for(config.train_seeds.size(), options.workers, [&](std::size_t k) {
    try {
      result.seeds[k] = run_seed(config, train_set, test_set, config.train_seeds[k], options,
                                 models ? &trained[k] : nullptr);
    } catch (const std::exception& e) {
      throw std::runtime_error("trial '" + config.name + "' failed for training seed " +
                               std::to_string(config.train_seeds[k]) + ": " + e.what());
    }
  });

  if (config.approach == Approach::kQbm) {
    const auto qbm = init_qbm(QbmTopology::make(options.input_units, options.label_units,
                                                config.hidden_layers, config.hidden_units),
                              *config.beta_eff, 0);
    result.parameter_count = parameter_count(qbm);
  } else {
    result.parameter_count = parameter_count(
        make_fnn(options.input_units, even_split(config.hidden_layers, config.hidden_units),
                 options.label_units, 0));
  }
  aggregate(result);
  if (models) {
    for (auto& m : trained) models->push_back(std::move(m));
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  result.wall_seconds = elapsed.count();
  return result;
}

TrialConfig sample_config(const SearchSpace& space, Rng& rng) {
  TrialConfig c;
  c.approach = space.approach;
  c.batch_size = draw(space.batch_size, rng);
  c.epochs = draw(space.epochs, rng);
  c.hidden_layers = draw(space.hidden_layers, rng);
  c.hidden_units = std::max<std::size_t>(draw(space.hidden_units, rng), c.hidden_layers);
  c.adam.learning_rate = draw(space.learning_rate, rng, true);
  c.adam.beta1 = draw(space.adam_beta1, rng, false);
  c.adam.beta2 = draw(space.adam_beta2, rng, false);
  c.adam.epsilon = draw(space.adam_epsilon, rng, true);
  if (space.approach == Approach::kQbm) {
    c.beta_eff = draw(*space.beta_eff, rng, false);
    c.sample_count = draw(*space.sample_count, rng);
    c.sampler = space.sampler;
    c.gibbs_sweeps = space.gibbs_sweeps;
    c.anneal_sweeps = space.anneal_sweeps;
  }
  return c;
}

void sort_by_objective(std::vector<TrialResult>& results) {
  // An undefined objective ranks last.
  const auto key = [](double v) {
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  };
  std::stable_sort(results.begin(), results.end(),
                   [&](const TrialResult& a, const TrialResult& b) {
                     return key(a.objective) > key(b.objective);
                   });
}

std::vector<TrialResult> run_search(const SearchSpace& space, const DatasetSplit& split,
                                    const SearchOptions& options) {
  space.validate();
  if (options.budget == 0) throw InvalidInput("search budget must be at least 1");
  if (options.train_seed_count == 0 || options.test_seed_count == 0) {
    throw InvalidInput("search needs at least one training and one test seed");
  }
  const auto train_seeds =
      derived_seeds(options.master_seed, kTrainSeedStream, options.train_seed_count);
  const auto test_seeds =
      derived_seeds(options.master_seed, kTestSeedStream, options.test_seed_count);
  auto with_seeds = [&](TrialConfig c, std::size_t index) {
    c.name = trial_name(options.strategy, options.first_trial + index);
    c.train_seeds = train_seeds;
    c.test_seeds = test_seeds;
    return c;
  };

  std::vector<TrialResult> results(options.budget);
  if (options.strategy == SearchStrategy::kRandom) {
    std::vector<TrialConfig> configs;
    for (std::size_t k = 0; k < options.budget; ++k) {
      Rng rng(derive_seed(options.master_seed, {kSearchStream, options.first_trial + k}));
      configs.push_back(with_seeds(sample_config(space, rng), k));
    }
    RunOptions inner = options.run;
    inner.workers = 1;
    parallel_for(options.budget, options.run.workers,
                 [&](std::size_t k) { results[k] = run_trial(configs[k], split, inner); });
  } else {
    // Coordinate search: start from a random draw, then re-draw one
    // coordinate at a time and keep the change if the objective improves.
    Rng start_rng(derive_seed(options.master_seed, {kSearchStream, options.first_trial}));
    TrialConfig best = with_seeds(sample_config(space, start_rng), 0);
    results[0] = run_trial(best, split, options.run);
    double best_objective = results[0].objective;
    const std::size_t coordinates = space.approach == Approach::kQbm ? 10 : 8;
    for (std::size_t k = 1; k < options.budget; ++k) {
      Rng rng(derive_seed(options.master_seed, {kSearchStream, options.first_trial + k}));
      const TrialConfig proposal_draw = sample_config(space, rng);
      TrialConfig candidate = best;
      switch ((k - 1) % coordinates) {
        case 0: candidate.batch_size = proposal_draw.batch_size; break;
        case 1: candidate.epochs = proposal_draw.epochs; break;
        case 2: candidate.hidden_layers = proposal_draw.hidden_layers; break;
        case 3: candidate.hidden_units = proposal_draw.hidden_units; break;
        case 4: candidate.adam.learning_rate = proposal_draw.adam.learning_rate; break;
        case 5: candidate.adam.beta1 = proposal_draw.adam.beta1; break;
        case 6: candidate.adam.beta2 = proposal_draw.adam.beta2; break;
        case 7: candidate.adam.epsilon = proposal_draw.adam.epsilon; break;
        case 8: candidate.beta_eff = proposal_draw.beta_eff; break;
        case 9: candidate.sample_count = proposal_draw.sample_count; break;
      }
      candidate.hidden_units = std::max(candidate.hidden_units, candidate.hidden_layers);
      candidate = with_seeds(candidate, k);
      results[k] = run_trial(candidate, split, options.run);
      if (results[k].objective > best_objective) {
        best_objective = results[k].objective;
        best = candidate;
      }
    }
  }

  sort_by_objective(results);
  return results;
}

}  // namespace qbm
