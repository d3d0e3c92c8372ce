#include "qbm/qbm_classifier.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qbm/errors.hpp"
#include "qbm/metrics.hpp"
#include "qbm/model_file.hpp"
#include "qbm/parallel.hpp"
#include "qbm/rng.hpp"

namespace qbm {

namespace {

constexpr double kInitScale = 0.1;

// Stream tags for seed derivation inside train().
constexpr std::uint64_t kShuffleStream = 0;
constexpr std::uint64_t kStepStream = 1;
constexpr std::uint64_t kEvalStream = 2;

/// Draws clamped-phase samples for one classifier. Couplings are fixed for
/// the lifetime of the object; only clamp-dependent biases change per call.
class PhaseSampler {
 public:
  explicit PhaseSampler(const QbmClassifier& qbm)
      : qbm_(qbm), full_(qbm.model) {
    const auto& topo = qbm.topology;
    for (std::size_t i = topo.hidden_offset(); i < topo.label_offset(); ++i) {
      hidden_units_.push_back(i);
    }
    model_free_units_ = hidden_units_;
    for (std::size_t i = topo.label_offset(); i < topo.total_units(); ++i) {
      model_free_units_.push_back(i);
    }
    data_graph_ = CouplingGraph(qbm.model, hidden_units_);
    model_graph_ = CouplingGraph(qbm.model, model_free_units_);
  }

  /// Full-length states with clamped units merged in. `label` set means the
  /// data phase (labels clamped to its one-hot code).
  SampleSet sample(std::span<const std::uint8_t> input_bits,
                   std::optional<std::size_t> label, const SamplerConfig& sampler,
                   std::size_t count, std::uint64_t seed) const {
    const auto& topo = qbm_.topology;
    if (input_bits.size() != topo.input_units) {
      throw InvalidInput("input has " + std::to_string(input_bits.size()) +
                         " bits, classifier expects " +
                         std::to_string(topo.input_units));
    }
    for (auto b : input_bits) {
      if (b > 1) throw InvalidInput("input bits must be 0 or 1");
    }
    if (label && *label >= topo.label_units) {
      throw InvalidInput("label " + std::to_string(*label) + " out of range");
    }

    BinaryState clamped(topo.total_units(), 0);
    std::copy(input_bits.begin(), input_bits.end(), clamped.begin());
    if (label) clamped[topo.label_offset() + *label] = 1;
    const std::size_t free_end = label ? topo.label_offset() : topo.total_units();

    const auto& free_units = label ? hidden_units_ : model_free_units_;
    const auto& graph = label ? data_graph_ : model_graph_;
    std::vector<double> biases(free_units.size());
    for (std::size_t k = 0; k < free_units.size(); ++k) {
      const std::size_t i = free_units[k];
      double b = qbm_.model.bias(i);
      const auto nbr = full_.neighbors(i);
      const auto w = full_.couplings(i);
      for (std::size_t e = 0; e < nbr.size(); ++e) {
        const std::size_t j = nbr[e];
        const bool is_clamped = j < topo.hidden_offset() || j >= free_end;
        if (is_clamped && clamped[j]) b += w[e];
      }
      biases[k] = b;
    }

    SampleSet free = draw_samples(graph, biases, qbm_.beta_eff, sampler, count, seed);
    SampleSet full{{}, std::move(free.weights), topo.total_units(), seed,
                   free.backend};
    full.states.reserve(free.states.size());
    for (const auto& s : free.states) {
      BinaryState merged = clamped;
      for (std::size_t k = 0; k < free_units.size(); ++k) merged[free_units[k]] = s[k];
      full.states.push_back(std::move(merged));
    }
    return full;
  }

 private:
  const QbmClassifier& qbm_;
  CouplingGraph full_;
  std::vector<std::size_t> hidden_units_;
  std::vector<std::size_t> model_free_units_;
  CouplingGraph data_graph_{EnergyModel(1)};
  CouplingGraph model_graph_{EnergyModel(1)};
};

SamplerConfig serial(SamplerConfig sampler) {
  sampler.workers = 1;
  return sampler;
}

std::vector<double> parameter_statistics(const QbmClassifier& qbm,
                                         const std::vector<Edge>& edges,
                                         const Moments& m) {
  const auto& topo = qbm.topology;
  std::vector<double> out;
  out.reserve(edges.size() + topo.total_units() - topo.hidden_offset());
  for (const auto& e : edges) out.push_back(m.pair(e.i, e.j));
  for (std::size_t i = topo.hidden_offset(); i < topo.total_units(); ++i) {
    out.push_back(m.first[i]);
  }
  return out;
}

std::vector<double> label_scores(const QbmTopology& topo, const SampleSet& samples) {
  std::vector<double> scores(topo.label_units, 0.0);
  const bool weighted = !samples.weights.empty();
  double total = 0.0;
  for (std::size_t k = 0; k < samples.states.size(); ++k) {
    const double w = weighted ? samples.weights[k] : 1.0;
    total += w;
    for (std::size_t c = 0; c < topo.label_units; ++c) {
      if (samples.states[k][topo.label_offset() + c]) scores[c] += w;
    }
  }
  double sum = 0.0;
  for (auto& s : scores) {
    s /= total;
    sum += s;
  }
  if (sum <= 0.0) {
    std::fill(scores.begin(), scores.end(), 1.0 / static_cast<double>(topo.label_units));
  } else {
    for (auto& s : scores) s /= sum;
  }
  return scores;
}

void check_examples(const QbmClassifier& qbm, std::span<const Example> data) {
  for (const auto& ex : data) (void)input_bits_of(qbm, ex);
}

}  // namespace

QbmTopology QbmTopology::make(std::size_t input_units, std::size_t label_units,
                              std::size_t hidden_layers, std::size_t hidden_total) {
  if (hidden_layers == 0) throw InvalidInput("QBM needs at least one hidden layer");
  if (hidden_total < hidden_layers) {
    throw InvalidInput("QBM needs at least one unit per hidden layer");
  }
  std::vector<std::size_t> sizes(hidden_layers, hidden_total / hidden_layers);
  for (std::size_t k = 0; k < hidden_total % hidden_layers; ++k) ++sizes[k];
  return make(input_units, label_units, hidden_layers, hidden_total, std::move(sizes));
}

QbmTopology QbmTopology::make(std::size_t input_units, std::size_t label_units,
                              std::size_t hidden_layers, std::size_t hidden_total,
                              std::vector<std::size_t> layer_sizes) {
  QbmTopology topo{input_units, label_units, std::move(layer_sizes)};
  topo.validate();
  if (topo.hidden_layers() != hidden_layers || topo.hidden_total() != hidden_total) {
    throw InvalidInput("layer sizes do not match h=" + std::to_string(hidden_layers) +
                       ", n=" + std::to_string(hidden_total));
  }
  return topo;
}

void QbmTopology::validate() const {
  if (input_units == 0) throw InvalidInput("QBM needs at least one input unit");
  if (label_units < 2) throw InvalidInput("QBM needs at least two label units");
  if (layer_sizes.empty()) throw InvalidInput("QBM needs at least one hidden layer");
  for (auto size : layer_sizes) {
    if (size == 0) throw InvalidInput("hidden layers must not be empty");
  }
}

std::size_t QbmTopology::hidden_total() const {
  return std::accumulate(layer_sizes.begin(), layer_sizes.end(), std::size_t{0});
}

std::vector<std::uint8_t> QbmTopology::edge_mask() const {
  const std::size_t n = total_units();
  std::vector<std::uint8_t> mask(n * n, 0);
  // Layer boundaries: inputs, hidden layers, labels.
  std::vector<std::size_t> starts{0, input_units};
  for (auto size : layer_sizes) starts.push_back(starts.back() + size);
  starts.push_back(starts.back() + label_units);
  for (std::size_t layer = 0; layer + 2 < starts.size(); ++layer) {
    for (std::size_t i = starts[layer]; i < starts[layer + 1]; ++i) {
      for (std::size_t j = starts[layer + 1]; j < starts[layer + 2]; ++j) {
        mask[i * n + j] = 1;
        mask[j * n + i] = 1;
      }
    }
  }
  return mask;
}

std::size_t QbmTopology::edge_count() const {
  std::size_t count = input_units * layer_sizes.front();
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    count += layer_sizes[k] * layer_sizes[k + 1];
  }
  return count + layer_sizes.back() * label_units;
}

QbmClassifier init_qbm(const QbmTopology& topology, double beta_eff,
                       std::uint64_t seed) {
  topology.validate();
  if (!(beta_eff > 0.0) || !std::isfinite(beta_eff)) {
    throw InvalidInput("beta_eff must be positive");
  }
  QbmClassifier qbm{topology,
                    EnergyModel::with_mask(topology.total_units(), topology.edge_mask()),
                    beta_eff, 0};
  Rng rng(seed);
  for (const auto& e : qbm.model.edges()) {
    qbm.model.set_weight(e.i, e.j, rng.uniform(-kInitScale, kInitScale));
  }
  for (std::size_t i = topology.hidden_offset(); i < topology.total_units(); ++i) {
    qbm.model.set_bias(i, rng.uniform(-kInitScale, kInitScale));
  }
  return qbm;
}

std::size_t parameter_count(const QbmClassifier& qbm) {
  const auto& topo = qbm.topology;
  return topo.edge_count() + topo.hidden_total() + topo.label_units;
}

std::vector<double> get_parameters(const QbmClassifier& qbm) {
  const auto& topo = qbm.topology;
  std::vector<double> params;
  params.reserve(parameter_count(qbm));
  for (const auto& e : qbm.model.edges()) params.push_back(qbm.model.weight(e.i, e.j));
  for (std::size_t i = topo.hidden_offset(); i < topo.total_units(); ++i) {
    params.push_back(qbm.model.bias(i));
  }
  return params;
}

void set_parameters(QbmClassifier& qbm, std::span<const double> params) {
  if (params.size() != parameter_count(qbm)) {
    throw InvalidInput("parameter vector has wrong length");
  }
  std::size_t k = 0;
  for (const auto& e : qbm.model.edges()) qbm.model.set_weight(e.i, e.j, params[k++]);
  for (std::size_t i = qbm.topology.hidden_offset(); i < qbm.topology.total_units(); ++i) {
    qbm.model.set_bias(i, params[k++]);
  }
}

Moments data_phase_moments(const QbmClassifier& qbm,
                           std::span<const std::uint8_t> input_bits,
                           std::size_t label, const SamplerConfig& sampler,
                           std::size_t sample_count, std::uint64_t seed) {
  return estimate_moments(
      PhaseSampler(qbm).sample(input_bits, label, sampler, sample_count, seed));
}

Moments model_phase_moments(const QbmClassifier& qbm,
                            std::span<const std::uint8_t> input_bits,
                            const SamplerConfig& sampler, std::size_t sample_count,
                            std::uint64_t seed) {
  return estimate_moments(PhaseSampler(qbm).sample(input_bits, std::nullopt, sampler,
                                                   sample_count, seed));
}

std::vector<double> moment_gradient(const QbmClassifier& qbm,
                                    std::span<const Example> batch,
                                    const SamplerConfig& sampler,
                                    std::size_t sample_count, std::uint64_t seed) {
  if (batch.empty()) throw InvalidInput("train_step needs a non-empty batch");
  check_examples(qbm, batch);
  const PhaseSampler phases(qbm);
  const auto edges = qbm.model.edges();
  const SamplerConfig inner = serial(sampler);

  std::vector<std::vector<double>> per_item(batch.size());
  parallel_for(batch.size(), sampler.workers, [&](std::size_t d) {
    const BinaryState bits = input_bits_of(qbm, batch[d]);
    const Moments data = estimate_moments(phases.sample(
        bits, batch[d].label, inner, sample_count, derive_seed(seed, {d, 0})));
    const Moments model = estimate_moments(phases.sample(
        bits, std::nullopt, inner, sample_count, derive_seed(seed, {d, 1})));
    auto g = parameter_statistics(qbm, edges, data);
    const auto m = parameter_statistics(qbm, edges, model);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] -= m[k];
    per_item[d] = std::move(g);
  });

  std::vector<double> grad(parameter_count(qbm), 0.0);
  for (const auto& g : per_item) {
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
  }
  for (auto& g : grad) g /= static_cast<double>(batch.size());
  return grad;
}

BatchStats train_step(QbmClassifier& qbm, std::span<const Example> batch,
                      const SamplerConfig& sampler, std::size_t sample_count,
                      AdamState& adam, std::uint64_t seed) {
  auto grad = moment_gradient(qbm, batch, sampler, sample_count, seed);
  BatchStats stats;
  for (double g : grad) stats.mean_abs_gradient += std::abs(g);
  stats.mean_abs_gradient /= static_cast<double>(grad.size());

  // Adam minimizes; the likelihood rises along +(data - model).
  for (auto& g : grad) g = -g;
  auto params = get_parameters(qbm);
  adam_update(params, grad, adam);
  set_parameters(qbm, params);
  return stats;
}

TrainHistory train(QbmClassifier& qbm, std::span<const Example> data,
                   const QbmTrainConfig& config, const SamplerConfig& sampler) {
  if (data.empty()) throw InvalidInput("training set is empty");
  if (config.batch_size == 0) throw InvalidInput("batch size must be positive");
  if (config.sample_count == 0) throw InvalidInput("sample count must be positive");
  config.adam.validate();
  check_examples(qbm, data);

  TrainHistory history;
  AdamState adam(parameter_count(qbm), config.adam);
  std::vector<std::size_t> order(data.size());
  std::vector<Example> batch;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, {kShuffleStream, epoch}));
    shuffle_rng.shuffle(order.begin(), order.end());

    double grad_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t last = std::min(order.size(), first + config.batch_size);
      batch.clear();
      for (std::size_t k = first; k < last; ++k) batch.push_back(data[order[k]]);
      const auto stats =
          train_step(qbm, batch, sampler, config.sample_count, adam,
                     derive_seed(config.seed, {kStepStream, epoch, steps}));
      grad_sum += stats.mean_abs_gradient;
      ++steps;
    }
    ++qbm.trained_epochs;

    const auto eval = evaluate(qbm, data, sampler, config.sample_count,
                               derive_seed(config.seed, {kEvalStream, epoch}));
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    history.epochs.push_back({eval.accuracy, eval.auc,
                              grad_sum / static_cast<double>(steps), elapsed.count()});
  }
  return history;
}

std::vector<double> predict(const QbmClassifier& qbm,
                            std::span<const std::uint8_t> input_bits,
                            const SamplerConfig& sampler, std::size_t sample_count,
                            std::uint64_t seed) {
  const auto samples =
      PhaseSampler(qbm).sample(input_bits, std::nullopt, sampler, sample_count, seed);
  return label_scores(qbm.topology, samples);
}

Evaluation evaluate(const QbmClassifier& qbm, std::span<const Example> data,
                    const SamplerConfig& sampler, std::size_t sample_count,
                    std::uint64_t seed) {
  if (data.empty()) throw InvalidInput("evaluation set is empty");
  check_examples(qbm, data);
  const PhaseSampler phases(qbm);
  const SamplerConfig inner = serial(sampler);

  Evaluation out;
  out.scores.resize(data.size());
  parallel_for(data.size(), sampler.workers, [&](std::size_t k) {
    const auto samples = phases.sample(input_bits_of(qbm, data[k]), std::nullopt, inner,
                                       sample_count, derive_seed(seed, k));
    out.scores[k] = label_scores(qbm.topology, samples);
  });

  std::vector<std::size_t> labels;
  labels.reserve(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    out.predictions.push_back(argmax_class(out.scores[k]));
    labels.push_back(data[k].label);
  }
  out.accuracy = accuracy(out.predictions, labels);
  try {
    out.auc = auc_roc_macro(out.scores, labels);
  } catch (const UndefinedMetric&) {
    out.auc = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

BinaryState input_bits_of(const QbmClassifier& qbm, const Example& example) {
  if (example.features.size() != qbm.topology.input_units) {
    throw InvalidInput("example has " + std::to_string(example.features.size()) +
                       " features, classifier expects " +
                       std::to_string(qbm.topology.input_units));
  }
  if (example.label >= qbm.topology.label_units) {
    throw InvalidInput("example label " + std::to_string(example.label) +
                       " out of range");
  }
  BinaryState bits(example.features.size());
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const double v = example.features[k];
    if (v != 0.0 && v != 1.0) {
      throw InvalidInput("QBM inputs must be binarized (0 or 1)");
    }
    bits[k] = v == 1.0 ? 1 : 0;
  }
  return bits;
}

void save_model(const QbmClassifier& qbm, const std::filesystem::path& path) {
  const auto& topo = qbm.topology;
  nlohmann::json body;
  body["topology"] = {{"input_units", topo.input_units},
                      {"label_units", topo.label_units},
                      {"hidden_layers", topo.hidden_layers()},
                      {"hidden_total", topo.hidden_total()},
                      {"layer_sizes", topo.layer_sizes}};
  body["beta_eff"] = qbm.beta_eff;
  std::vector<double> weights;
  for (const auto& e : qbm.model.edges()) weights.push_back(qbm.model.weight(e.i, e.j));
  body["weights"] = weights;
  body["biases"] = std::vector<double>(qbm.model.biases().begin(),
                                       qbm.model.biases().end());
  body["trained_epochs"] = qbm.trained_epochs;
  write_model_file(path, "qbm", body);
}

QbmClassifier load_model(const std::filesystem::path& path) {
  const auto doc = read_model_file(path, "qbm");
  auto corrupt = [&](const std::string& why) {
    return LoadError(LoadError::Kind::kCorruptFile,
                     "model file " + path.string() + ": " + why);
  };
  try {
    const auto& t = doc.at("topology");
    const auto topo = QbmTopology::make(
        t.at("input_units").get<std::size_t>(), t.at("label_units").get<std::size_t>(),
        t.at("hidden_layers").get<std::size_t>(), t.at("hidden_total").get<std::size_t>(),
        t.at("layer_sizes").get<std::vector<std::size_t>>());
    QbmClassifier qbm{topo, EnergyModel::with_mask(topo.total_units(), topo.edge_mask()),
                      doc.at("beta_eff").get<double>(),
                      doc.at("trained_epochs").get<std::size_t>()};
    if (!(qbm.beta_eff > 0.0)) throw corrupt("beta_eff must be positive");
    const auto weights = doc.at("weights").get<std::vector<double>>();
    const auto biases = doc.at("biases").get<std::vector<double>>();
    const auto edges = qbm.model.edges();
    if (weights.size() != edges.size()) throw corrupt("weight count does not match topology");
    if (biases.size() != topo.total_units()) throw corrupt("bias count does not match topology");
    for (std::size_t k = 0; k < edges.size(); ++k) {
      qbm.model.set_weight(edges[k].i, edges[k].j, weights[k]);
    }
    for (std::size_t i = 0; i < biases.size(); ++i) {
      if (i < topo.input_units && biases[i] != 0.0) throw corrupt("input biases must be zero");
      qbm.model.set_bias(i, biases[i]);
    }
    return qbm;
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(e.what());
  } catch (const InvalidInput& e) {
    throw corrupt(e.what());
  }
}

}  // namespace qbm
