#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qbm/energy_model.hpp"

namespace qbm {

enum class SamplerBackend {
  kExact,        ///< i.i.d. categorical draws from the enumerated distribution
  kGibbs,        ///< end states of independent single-site Gibbs chains
  kAnnealing,    ///< end states of independent simulated-annealing runs
  kEnumeration,  ///< every state once, weighted by its exact probability
};

std::string_view to_string(SamplerBackend backend);
/// Accepts "exact", "gibbs", "sa", "enumeration".
SamplerBackend parse_sampler_backend(std::string_view name);

struct AnnealSchedule {
  enum class Interpolation { kLinear, kGeometric };

  std::size_t sweeps = 1000;
  double beta_start = 0.1;
  double beta_end = 1.0;
  Interpolation interpolation = Interpolation::kGeometric;

  void validate() const;
  /// Inverse temperature used during sweep `k` (0-based). The last sweep
  /// always runs at beta_end.
  double beta_at(std::size_t k) const;
};

/// A collection of binary states drawn from one model. `weights` is empty for
/// ordinary samples (each state counts equally); the enumeration backend
/// fills it with exact probabilities.
struct SampleSet {
  std::vector<BinaryState> states;
  std::vector<double> weights;
  std::size_t model_units = 0;
  std::uint64_t seed = 0;
  SamplerBackend backend = SamplerBackend::kExact;
};

/// First and second moments <s_i>, <s_i s_j> of binary units.
struct Moments {
  std::size_t num_units = 0;
  std::vector<double> first;
  std::vector<double> second;  ///< row-major num_units x num_units

  double pair(std::size_t i, std::size_t j) const {
    return second[i * num_units + j];
  }
};

/// Normalized probabilities of all 2^n states (index bit i = unit i).
struct ProbabilityTable {
  std::size_t num_units = 0;
  std::vector<double> probabilities;

  BinaryState state(std::size_t index) const;
  static std::size_t index_of(std::span<const std::uint8_t> state);
};

/// Sparse adjacency view of an EnergyModel's couplings, optionally restricted
/// to a subset of its units. Samplers run on this form.
class CouplingGraph {
 public:
  explicit CouplingGraph(const EnergyModel& model);
  /// Subgraph induced by `units` (local index k = units[k]); couplings to
  /// units outside the subset are dropped.
  CouplingGraph(const EnergyModel& model, std::span<const std::size_t> units);

  std::size_t num_units() const noexcept { return offsets_.size() - 1; }
  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> couplings(std::size_t i) const {
    return {couplings_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  /// Copy with every coupling multiplied by `factor`.
  CouplingGraph scaled(double factor) const;
  /// Dense model with these couplings and the given biases.
  EnergyModel to_model(std::span<const double> biases) const;

 private:
  CouplingGraph() = default;

  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> neighbors_;
  std::vector<double> couplings_;
};

/// Backend choice and its knobs. `workers` only changes wall-clock time:
/// every sample is seeded from (seed, sample index).
struct SamplerConfig {
  SamplerBackend backend = SamplerBackend::kGibbs;
  std::size_t gibbs_sweeps = 100;
  AnnealSchedule schedule{};
  unsigned workers = 1;
};

ProbabilityTable enumerate_distribution(const EnergyModel& model, double beta);

SampleSet sample_exact(const EnergyModel& model, double beta, std::size_t count,
                       std::uint64_t seed);

SampleSet sample_gibbs(const EnergyModel& model, double beta, std::size_t sweeps,
                       std::size_t count, std::uint64_t seed, unsigned workers = 1);

/// One independent anneal of to_minimization_objective(model, beta_eff) per
/// sample; the schedule's inverse temperatures apply to that objective.
SampleSet sample_sa(const EnergyModel& model, double beta_eff,
                    const AnnealSchedule& schedule, std::size_t count,
                    std::uint64_t seed, unsigned workers = 1);

/// Dispatches to the configured backend. `beta` is the inverse temperature
/// of the Boltzmann distribution to approximate (beta_eff for annealing).
SampleSet draw_samples(const CouplingGraph& graph, std::span<const double> biases,
                       double beta, const SamplerConfig& config, std::size_t count,
                       std::uint64_t seed);

SampleSet draw_samples(const EnergyModel& model, double beta,
                       const SamplerConfig& config, std::size_t count,
                       std::uint64_t seed);

Moments estimate_moments(const SampleSet& samples);

/// Exact moments of an enumerated distribution.
Moments exact_moments(const ProbabilityTable& table);

/// Empirical state frequencies (length 2^n). Requires n <= kEnumerationLimit.
ProbabilityTable empirical_distribution(const SampleSet& samples);

/// Half the L1 distance between two tables over the same units.
double total_variation(const ProbabilityTable& a, const ProbabilityTable& b);

}  // namespace qbm
