#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace qbm {

/// Binary unit values, one byte per unit, each 0 or 1.
using BinaryState = std::vector<std::uint8_t>;

/// Largest model that may be enumerated exhaustively (2^20 states).
inline constexpr std::size_t kEnumerationLimit = 20;

struct Edge {
  std::size_t i;
  std::size_t j;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Pairwise energy over binary units,
///
///   E(s) = sum_{i<j} w_ij s_i s_j + sum_i b_i s_i,
///
/// with the Boltzmann weight of a state proportional to exp(+beta * E(s)).
/// Weights are stored as a dense symmetric matrix with zero diagonal; the
/// edge mask marks which couplings may be non-zero.
class EnergyModel {
 public:
  /// All-zero model over a complete graph.
  explicit EnergyModel(std::size_t num_units);

  /// Validates symmetry, zero diagonal and mask consistency.
  EnergyModel(std::size_t num_units, std::vector<double> weights,
              std::vector<double> biases, std::vector<std::uint8_t> edge_mask);

  /// All-zero model with the given symmetric edge mask.
  static EnergyModel with_mask(std::size_t num_units,
                               std::vector<std::uint8_t> edge_mask);

  std::size_t num_units() const noexcept { return num_units_; }

  double weight(std::size_t i, std::size_t j) const {
    return weights_[i * num_units_ + j];
  }
  double bias(std::size_t i) const { return biases_[i]; }
  bool has_edge(std::size_t i, std::size_t j) const {
    return edge_mask_[i * num_units_ + j] != 0;
  }

  /// Sets w_ij = w_ji. Throws InvalidInput for i == j or a masked-out pair.
  void set_weight(std::size_t i, std::size_t j, double value);
  void set_bias(std::size_t i, double value);

  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> biases() const noexcept { return biases_; }
  std::span<const std::uint8_t> edge_mask() const noexcept { return edge_mask_; }

  /// Allowed couplings (i < j), in row-major order.
  std::vector<Edge> edges() const;

  friend bool operator==(const EnergyModel&, const EnergyModel&) = default;

 private:
  void check_index(std::size_t i) const;

  std::size_t num_units_;
  std::vector<double> weights_;
  std::vector<double> biases_;
  std::vector<std::uint8_t> edge_mask_;
};

/// Throws InvalidInput unless `state` has one 0/1 entry per unit.
void validate_state(const EnergyModel& model, std::span<const std::uint8_t> state);

/// E(s), each unordered pair counted once.
double energy(const EnergyModel& model, std::span<const std::uint8_t> state);

/// exp(beta E(s)) / sum_s' exp(beta E(s')), by enumeration. Throws
/// CapabilityError above kEnumerationLimit units.
double boltzmann_probability(const EnergyModel& model,
                             std::span<const std::uint8_t> state, double beta);

using ClampAssignment = std::map<std::size_t, std::uint8_t>;

/// A model with some units fixed. For every assignment x of the free units,
///   reduced.energy(x) + offset == base.energy(merge(x)).
struct ClampedModel {
  EnergyModel base;
  ClampAssignment assignment;
  std::vector<std::size_t> free_indices;
  EnergyModel reduced;
  double offset = 0.0;

  /// Full state from the clamped values plus `free_state` (ordered as
  /// free_indices).
  BinaryState merge(std::span<const std::uint8_t> free_state) const;
};

ClampedModel clamp(const EnergyModel& model, const ClampAssignment& assignment);

/// Energies of all 2^n states; entry k belongs to the state whose unit i is
/// bit i of k. Throws CapabilityError above kEnumerationLimit units.
std::vector<double> enumerate_energies(const EnergyModel& model);

/// Coefficients negated and scaled by beta_eff. Sampling the result with a
/// minimizing sampler at unit temperature, P ∝ exp(-objective), realizes
/// P ∝ exp(beta_eff E) of the source model.
EnergyModel to_minimization_objective(const EnergyModel& model, double beta_eff);

}  // namespace qbm
