#pragma once

// Brute-force reference computations shared by unit and acceptance tests.
// They enumerate free-unit assignments with energy() directly and never go
// through the samplers under test.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "qbm/energy_model.hpp"
#include "qbm/qbm_classifier.hpp"
#include "qbm/training.hpp"

namespace qbm::oracle {

/// Full states consistent with clamped inputs (and label, if given), with
/// their normalized probabilities under P ∝ exp(beta_eff * E).
struct Conditional {
  std::vector<BinaryState> states;
  std::vector<double> probabilities;
};

inline Conditional conditional(const QbmClassifier& qbm, std::span<const std::uint8_t> bits,
                               std::optional<std::size_t> label) {
  const auto& topo = qbm.topology;
  const std::size_t n = topo.total_units();
  std::vector<std::size_t> free;
  for (std::size_t i = topo.hidden_offset(); i < topo.label_offset(); ++i) free.push_back(i);
  if (!label) {
    for (std::size_t i = topo.label_offset(); i < n; ++i) free.push_back(i);
  }
  BinaryState base(n, 0);
  for (std::size_t i = 0; i < topo.input_units; ++i) base[i] = bits[i];
  if (label) base[topo.label_offset() + *label] = 1;

  Conditional out;
  std::vector<double> log_w;
  for (std::size_t k = 0; k < (std::size_t{1} << free.size()); ++k) {
    BinaryState s = base;
    for (std::size_t f = 0; f < free.size(); ++f) s[free[f]] = static_cast<std::uint8_t>((k >> f) & 1u);
    log_w.push_back(qbm.beta_eff * energy(qbm.model, s));
    out.states.push_back(std::move(s));
  }
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_w) top = std::max(top, v);
  double z = 0.0;
  for (double v : log_w) z += std::exp(v - top);
  for (double v : log_w) out.probabilities.push_back(std::exp(v - top) / z);
  return out;
}

/// Parameter statistics in get_parameters order: edge pair moments, then
/// first moments of hidden and label units.
inline std::vector<double> statistics(const QbmClassifier& qbm, const Conditional& c) {
  const auto edges = qbm.model.edges();
  const auto& topo = qbm.topology;
  std::vector<double> out(edges.size() + topo.total_units() - topo.hidden_offset(), 0.0);
  for (std::size_t k = 0; k < c.states.size(); ++k) {
    const auto& s = c.states[k];
    const double p = c.probabilities[k];
    std::size_t slot = 0;
    for (const auto& e : edges) out[slot++] += p * s[e.i] * s[e.j];
    for (std::size_t i = topo.hidden_offset(); i < topo.total_units(); ++i) out[slot++] += p * s[i];
  }
  return out;
}

/// Batch-mean of data-phase minus model-phase statistics.
inline std::vector<double> gradient(const QbmClassifier& qbm, std::span<const Example> batch) {
  std::vector<double> grad(parameter_count(qbm), 0.0);
  for (const auto& ex : batch) {
    const auto bits = input_bits_of(qbm, ex);
    const auto data = statistics(qbm, conditional(qbm, bits, ex.label));
    const auto model = statistics(qbm, conditional(qbm, bits, std::nullopt));
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += data[k] - model[k];
  }
  for (auto& g : grad) g /= static_cast<double>(batch.size());
  return grad;
}

/// P(label units equal one-hot(label) | inputs), hidden units marginalized.
inline double label_probability(const QbmClassifier& qbm, std::span<const std::uint8_t> bits,
                                std::size_t label) {
  const auto c = conditional(qbm, bits, std::nullopt);
  const auto& topo = qbm.topology;
  double p = 0.0;
  for (std::size_t k = 0; k < c.states.size(); ++k) {
    bool hit = true;
    for (std::size_t l = 0; l < topo.label_units; ++l) {
      hit = hit && c.states[k][topo.label_offset() + l] == (l == label ? 1 : 0);
    }
    if (hit) p += c.probabilities[k];
  }
  return p;
}

/// Marginal P(label unit `label` = 1 | inputs).
inline double label_marginal(const QbmClassifier& qbm, std::span<const std::uint8_t> bits,
                             std::size_t label) {
  const auto c = conditional(qbm, bits, std::nullopt);
  double p = 0.0;
  for (std::size_t k = 0; k < c.states.size(); ++k) {
    p += c.probabilities[k] * c.states[k][qbm.topology.label_offset() + label];
  }
  return p;
}

/// D_KL between the empirical conditional label distribution (one-hot per
/// datapoint) and the model's, averaged over datapoints.
inline double kl_divergence(const QbmClassifier& qbm, std::span<const Example> data) {
  double kl = 0.0;
  for (const auto& ex : data) {
    kl -= std::log(label_probability(qbm, input_bits_of(qbm, ex), ex.label));
  }
  return kl / static_cast<double>(data.size());
}

}  // namespace qbm::oracle
