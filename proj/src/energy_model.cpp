#include "qbm/energy_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "qbm/errors.hpp"

namespace qbm {

namespace {

std::vector<std::uint8_t> complete_mask(std::size_t n) {
  std::vector<std::uint8_t> mask(n * n, 1);
  for (std::size_t i = 0; i < n; ++i) mask[i * n + i] = 0;
  return mask;
}

}  // namespace

EnergyModel::EnergyModel(std::size_t num_units)
    : EnergyModel(with_mask(num_units, complete_mask(num_units))) {}

EnergyModel::EnergyModel(std::size_t num_units, std::vector<double> weights,
                         std::vector<double> biases,
                         std::vector<std::uint8_t> edge_mask)
    : num_units_(num_units),
      weights_(std::move(weights)),
      biases_(std::move(biases)),
      edge_mask_(std::move(edge_mask)) {
  const std::size_t n = num_units_;
  if (n == 0) throw InvalidInput("EnergyModel: num_units must be positive");
  if (weights_.size() != n * n || edge_mask_.size() != n * n ||
      biases_.size() != n) {
    throw InvalidInput("EnergyModel: coefficient shapes do not match num_units");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (weights_[i * n + i] != 0.0 || edge_mask_[i * n + i] != 0) {
      throw InvalidInput("EnergyModel: diagonal must be zero");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = weights_[i * n + j];
      if (w != weights_[j * n + i]) {
        throw InvalidInput("EnergyModel: weights not symmetric at (" +
                           std::to_string(i) + "," + std::to_string(j) + ")");
      }
      if ((edge_mask_[i * n + j] != 0) != (edge_mask_[j * n + i] != 0)) {
        throw InvalidInput("EnergyModel: edge mask not symmetric");
      }
      if (edge_mask_[i * n + j] == 0 && w != 0.0) {
        throw InvalidInput("EnergyModel: non-zero weight outside edge mask");
      }
    }
  }
}

EnergyModel EnergyModel::with_mask(std::size_t num_units,
                                   std::vector<std::uint8_t> edge_mask) {
  return EnergyModel(num_units, std::vector<double>(num_units * num_units, 0.0),
                     std::vector<double>(num_units, 0.0), std::move(edge_mask));
}

void EnergyModel::check_index(std::size_t i) const {
  if (i >= num_units_) {
    throw InvalidInput("EnergyModel: unit index " + std::to_string(i) +
                       " out of range");
  }
}

void EnergyModel::set_weight(std::size_t i, std::size_t j, double value) {
  check_index(i);
  check_index(j);
  if (!has_edge(i, j)) {
    throw InvalidInput("EnergyModel: no coupling between units " +
                       std::to_string(i) + " and " + std::to_string(j));
  }
  weights_[i * num_units_ + j] = value;
  weights_[j * num_units_ + i] = value;
}

void EnergyModel::set_bias(std::size_t i, double value) {
  check_index(i);
  biases_[i] = value;
}

std::vector<Edge> EnergyModel::edges() const {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < num_units_; ++i) {
    for (std::size_t j = i + 1; j < num_units_; ++j) {
      if (has_edge(i, j)) out.push_back({i, j});
    }
  }
  return out;
}

void validate_state(const EnergyModel& model, std::span<const std::uint8_t> state) {
  if (state.size() != model.num_units()) {
    throw InvalidInput("state length " + std::to_string(state.size()) +
                       " does not match model with " +
                       std::to_string(model.num_units()) + " units");
  }
  for (auto v : state) {
    if (v > 1) throw InvalidInput("state entries must be 0 or 1");
  }
}

double energy(const EnergyModel& model, std::span<const std::uint8_t> state) {
  validate_state(model, state);
  const std::size_t n = model.num_units();
  const auto w = model.weights();
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!state[i]) continue;
    e += model.bias(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (state[j]) e += w[i * n + j];
    }
  }
  return e;
}

std::vector<double> enumerate_energies(const EnergyModel& model) {
  const std::size_t n = model.num_units();
  if (n > kEnumerationLimit) {
    throw CapabilityError("cannot enumerate " + std::to_string(n) +
                          " units (limit " + std::to_string(kEnumerationLimit) +
                          ")");
  }
  const std::size_t states = std::size_t{1} << n;
  const auto w = model.weights();
  std::vector<double> energies(states, 0.0);
  // Walk the Gray code so each step flips exactly one unit.
  std::vector<std::uint8_t> s(n, 0);
  double e = 0.0;
  std::size_t code = 0;
  for (std::size_t k = 1; k < states; ++k) {
    const auto flip = static_cast<std::size_t>(std::countr_zero(k));
    double field = model.bias(flip);
    for (std::size_t j = 0; j < n; ++j) {
      if (s[j]) field += w[flip * n + j];
    }
    if (s[flip]) {
      e -= field;
      s[flip] = 0;
    } else {
      e += field;
      s[flip] = 1;
    }
    code ^= std::size_t{1} << flip;
    energies[code] = e;
  }
  return energies;
}

double boltzmann_probability(const EnergyModel& model,
                             std::span<const std::uint8_t> state, double beta) {
  validate_state(model, state);
  if (!(beta > 0.0)) throw InvalidInput("beta must be positive");
  const auto energies = enumerate_energies(model);
  double max_exponent = -HUGE_VAL;
  for (double e : energies) max_exponent = std::max(max_exponent, beta * e);
  double z = 0.0;
  for (double e : energies) z += std::exp(beta * e - max_exponent);
  return std::exp(beta * energy(model, state) - max_exponent) / z;
}

BinaryState ClampedModel::merge(std::span<const std::uint8_t> free_state) const {
  if (free_state.size() != free_indices.size()) {
    throw InvalidInput("free state length does not match clamped model");
  }
  BinaryState full(base.num_units(), 0);
  for (const auto& [index, value] : assignment) full[index] = value;
  for (std::size_t k = 0; k < free_indices.size(); ++k) {
    full[free_indices[k]] = free_state[k];
  }
  return full;
}

ClampedModel clamp(const EnergyModel& model, const ClampAssignment& assignment) {
  const std::size_t n = model.num_units();
  std::vector<std::uint8_t> is_clamped(n, 0);
  for (const auto& [index, value] : assignment) {
    if (index >= n) {
      throw InvalidInput("clamp index " + std::to_string(index) + " out of range");
    }
    if (value > 1) throw InvalidInput("clamp values must be 0 or 1");
    is_clamped[index] = 1;
  }

  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_clamped[i]) free.push_back(i);
  }

  double offset = 0.0;
  for (auto it = assignment.begin(); it != assignment.end(); ++it) {
    if (!it->second) continue;
    offset += model.bias(it->first);
    for (auto jt = std::next(it); jt != assignment.end(); ++jt) {
      if (jt->second) offset += model.weight(it->first, jt->first);
    }
  }

  const std::size_t m = free.size();
  // EnergyModel needs at least one unit.
  if (m == 0) throw InvalidInput("clamp leaves no free units");

  std::vector<double> weights(m * m, 0.0);
  std::vector<double> biases(m, 0.0);
  std::vector<std::uint8_t> mask(m * m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t i = free[a];
    double b = model.bias(i);
    for (const auto& [j, value] : assignment) {
      if (value) b += model.weight(i, j);
    }
    biases[a] = b;
    for (std::size_t c = 0; c < m; ++c) {
      weights[a * m + c] = model.weight(i, free[c]);
      mask[a * m + c] = model.has_edge(i, free[c]) ? 1 : 0;
    }
  }

  return ClampedModel{model, assignment, std::move(free),
                      EnergyModel(m, std::move(weights), std::move(biases),
                                  std::move(mask)),
                      offset};
}

EnergyModel to_minimization_objective(const EnergyModel& model, double beta_eff) {
  if (!(beta_eff > 0.0)) throw InvalidInput("beta_eff must be positive");
  std::vector<double> weights(model.weights().begin(), model.weights().end());
  std::vector<double> biases(model.biases().begin(), model.biases().end());
  for (auto& w : weights) w = w == 0.0 ? 0.0 : -beta_eff * w;
  for (auto& b : biases) b = b == 0.0 ? 0.0 : -beta_eff * b;
  return EnergyModel(model.num_units(), std::move(weights), std::move(biases),
                     {model.edge_mask().begin(), model.edge_mask().end()});
}

}  // namespace qbm
