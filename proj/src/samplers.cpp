#include "qbm/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qbm/errors.hpp"
#include "qbm/parallel.hpp"
#include "qbm/rng.hpp"

namespace qbm {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidInput("inverse temperature must be positive and finite");
  }
}

void check_count(std::size_t count) {
  if (count == 0) throw InvalidInput("sample count must be positive");
}

void check_biases(const CouplingGraph& graph, std::span<const double> biases) {
  if (biases.size() != graph.num_units()) {
    throw InvalidInput("bias vector length does not match coupling graph");
  }
}

double local_field(const CouplingGraph& graph, std::span<const double> biases,
                   const BinaryState& s, std::size_t i) {
  double field = biases[i];
  const auto nbr = graph.neighbors(i);
  const auto w = graph.couplings(i);
  for (std::size_t k = 0; k < nbr.size(); ++k) {
    if (s[nbr[k]]) field += w[k];
  }
  return field;
}

BinaryState random_state(Rng& rng, std::size_t n) {
  BinaryState s(n);
  for (auto& v : s) v = rng.bit() ? 1 : 0;
  return s;
}

ProbabilityTable table_from_energies(const std::vector<double>& energies,
                                     std::size_t n, double beta) {
  double max_exponent = -HUGE_VAL;
  for (double e : energies) max_exponent = std::max(max_exponent, beta * e);
  ProbabilityTable table{n, std::vector<double>(energies.size())};
  double z = 0.0;
  for (std::size_t k = 0; k < energies.size(); ++k) {
    table.probabilities[k] = std::exp(beta * energies[k] - max_exponent);
    z += table.probabilities[k];
  }
  for (auto& p : table.probabilities) p /= z;
  return table;
}

SampleSet exact_from_table(const ProbabilityTable& table, std::size_t count,
                           std::uint64_t seed) {
  std::vector<double> cdf(table.probabilities.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    acc += table.probabilities[k];
    cdf[k] = acc;
  }
  SampleSet out{{}, {}, table.num_units, seed, SamplerBackend::kExact};
  out.states.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u =
        static_cast<double>(derive_seed(seed, i) >> 11) * 0x1.0p-53 * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    out.states.push_back(
        table.state(static_cast<std::size_t>(it - cdf.begin())));
  }
  return out;
}

SampleSet gibbs_on_graph(const CouplingGraph& graph, std::span<const double> biases,
                         double beta, std::size_t sweeps, std::size_t count,
                         std::uint64_t seed, unsigned workers) {
  check_biases(graph, biases);
  check_beta(beta);
  check_count(count);
  if (sweeps == 0) throw InvalidInput("Gibbs sampler needs at least one sweep");
  const std::size_t n = graph.num_units();
  SampleSet out{std::vector<BinaryState>(count), {}, n, seed,
                SamplerBackend::kGibbs};
  parallel_for(count, workers, [&](std::size_t chain) {
    Rng rng(derive_seed(seed, chain));
    BinaryState s = random_state(rng, n);
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(beta * local_field(graph, biases, s, i));
        s[i] = rng.uniform() < p ? 1 : 0;
      }
    }
    out.states[chain] = std::move(s);
  });
  return out;
}

/// Metropolis annealing that minimizes the objective given by
/// (`graph`, `biases`), i.e. samples P ∝ exp(-beta_k Q(s)) at each stage.
SampleSet anneal_on_objective(const CouplingGraph& graph,
                              std::span<const double> biases,
                              const AnnealSchedule& schedule, std::size_t count,
                              std::uint64_t seed, unsigned workers) {
  schedule.validate();
  check_count(count);
  const std::size_t n = graph.num_units();
  std::vector<double> betas(schedule.sweeps);
  for (std::size_t k = 0; k < schedule.sweeps; ++k) betas[k] = schedule.beta_at(k);

  SampleSet out{std::vector<BinaryState>(count), {}, n, seed,
                SamplerBackend::kAnnealing};
  parallel_for(count, workers, [&](std::size_t run) {
    Rng rng(derive_seed(seed, run));
    BinaryState s = random_state(rng, n);
    for (double beta : betas) {
      for (std::size_t i = 0; i < n; ++i) {
        const double field = local_field(graph, biases, s, i);
        const double delta = s[i] ? -field : field;
        if (delta <= 0.0 || rng.uniform() < std::exp(-beta * delta)) {
          s[i] ^= 1;
        }
      }
    }
    out.states[run] = std::move(s);
  });
  return out;
}

}  // namespace

std::string_view to_string(SamplerBackend backend) {
  switch (backend) {
    case SamplerBackend::kExact: return "exact";
    case SamplerBackend::kGibbs: return "gibbs";
    case SamplerBackend::kAnnealing: return "sa";
    case SamplerBackend::kEnumeration: return "enumeration";
  }
  return "unknown";
}

SamplerBackend parse_sampler_backend(std::string_view name) {
  if (name == "exact") return SamplerBackend::kExact;
  if (name == "gibbs") return SamplerBackend::kGibbs;
  if (name == "sa") return SamplerBackend::kAnnealing;
  if (name == "enumeration") return SamplerBackend::kEnumeration;
  throw InvalidInput("unknown sampler '" + std::string(name) +
                     "' (expected exact, gibbs, sa or enumeration)");
}

void AnnealSchedule::validate() const {
  if (sweeps < 1) throw InvalidInput("anneal schedule needs at least one sweep");
  if (!(beta_start > 0.0) || !(beta_end > 0.0)) {
    throw InvalidInput("anneal schedule temperatures must be positive");
  }
  if (beta_start > beta_end) {
    throw InvalidInput("anneal schedule must not decrease beta");
  }
}

double AnnealSchedule::beta_at(std::size_t k) const {
  if (sweeps <= 1 || k + 1 >= sweeps) return beta_end;
  const double t = static_cast<double>(k) / static_cast<double>(sweeps - 1);
  if (interpolation == Interpolation::kLinear) {
    return beta_start + t * (beta_end - beta_start);
  }
  return beta_start * std::pow(beta_end / beta_start, t);
}

BinaryState ProbabilityTable::state(std::size_t index) const {
  BinaryState s(num_units);
  for (std::size_t i = 0; i < num_units; ++i) s[i] = (index >> i) & 1U;
  return s;
}

std::size_t ProbabilityTable::index_of(std::span<const std::uint8_t> state) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i]) index |= std::size_t{1} << i;
  }
  return index;
}

CouplingGraph::CouplingGraph(const EnergyModel& model) {
  const std::size_t n = model.num_units();
  const auto w = model.weights();
  offsets_.reserve(n + 1);
  offsets_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (model.has_edge(i, j)) {
        neighbors_.push_back(j);
        couplings_.push_back(w[i * n + j]);
      }
    }
    offsets_.push_back(neighbors_.size());
  }
}

CouplingGraph::CouplingGraph(const EnergyModel& model,
                             std::span<const std::size_t> units) {
  const std::size_t n = model.num_units();
  std::vector<std::size_t> local(n, n);
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (units[k] >= n) throw InvalidInput("subgraph unit index out of range");
    if (local[units[k]] != n) throw InvalidInput("subgraph units must be distinct");
    local[units[k]] = k;
  }
  const auto w = model.weights();
  offsets_.reserve(units.size() + 1);
  offsets_.push_back(0);
  for (std::size_t i : units) {
    for (std::size_t j = 0; j < n; ++j) {
      if (local[j] != n && model.has_edge(i, j)) {
        neighbors_.push_back(local[j]);
        couplings_.push_back(w[i * n + j]);
      }
    }
    offsets_.push_back(neighbors_.size());
  }
}

CouplingGraph CouplingGraph::scaled(double factor) const {
  CouplingGraph out = *this;
  for (auto& w : out.couplings_) w *= factor;
  return out;
}

EnergyModel CouplingGraph::to_model(std::span<const double> biases) const {
  const std::size_t n = num_units();
  if (biases.size() != n) throw InvalidInput("bias vector length mismatch");
  std::vector<double> weights(n * n, 0.0);
  std::vector<std::uint8_t> mask(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbr = neighbors(i);
    const auto w = couplings(i);
    for (std::size_t k = 0; k < nbr.size(); ++k) {
      weights[i * n + nbr[k]] = w[k];
      mask[i * n + nbr[k]] = 1;
    }
  }
  return EnergyModel(n, std::move(weights), {biases.begin(), biases.end()},
                     std::move(mask));
}

ProbabilityTable enumerate_distribution(const EnergyModel& model, double beta) {
  check_beta(beta);
  return table_from_energies(enumerate_energies(model), model.num_units(), beta);
}

SampleSet sample_exact(const EnergyModel& model, double beta, std::size_t count,
                       std::uint64_t seed) {
  check_count(count);
  return exact_from_table(enumerate_distribution(model, beta), count, seed);
}

SampleSet sample_gibbs(const EnergyModel& model, double beta, std::size_t sweeps,
                       std::size_t count, std::uint64_t seed, unsigned workers) {
  return gibbs_on_graph(CouplingGraph(model), model.biases(), beta, sweeps, count,
                        seed, workers);
}

SampleSet sample_sa(const EnergyModel& model, double beta_eff,
                    const AnnealSchedule& schedule, std::size_t count,
                    std::uint64_t seed, unsigned workers) {
  const EnergyModel objective = to_minimization_objective(model, beta_eff);
  return anneal_on_objective(CouplingGraph(objective), objective.biases(),
                             schedule, count, seed, workers);
}

SampleSet draw_samples(const CouplingGraph& graph, std::span<const double> biases,
                       double beta, const SamplerConfig& config, std::size_t count,
                       std::uint64_t seed) {
  check_biases(graph, biases);
  check_beta(beta);
  switch (config.backend) {
    case SamplerBackend::kExact:
      return sample_exact(graph.to_model(biases), beta, count, seed);
    case SamplerBackend::kGibbs:
      return gibbs_on_graph(graph, biases, beta, config.gibbs_sweeps, count, seed,
                            config.workers);
    case SamplerBackend::kAnnealing: {
      std::vector<double> objective_biases(biases.begin(), biases.end());
      for (auto& b : objective_biases) b *= -beta;
      return anneal_on_objective(graph.scaled(-beta), objective_biases,
                                 config.schedule, count, seed, config.workers);
    }
    case SamplerBackend::kEnumeration: {
      const auto table = enumerate_distribution(graph.to_model(biases), beta);
      SampleSet out{{}, table.probabilities, table.num_units, seed,
                    SamplerBackend::kEnumeration};
      out.states.reserve(table.probabilities.size());
      for (std::size_t k = 0; k < table.probabilities.size(); ++k) {
        out.states.push_back(table.state(k));
      }
      return out;
    }
  }
  throw InvalidInput("unknown sampler backend");
}

SampleSet draw_samples(const EnergyModel& model, double beta,
                       const SamplerConfig& config, std::size_t count,
                       std::uint64_t seed) {
  return draw_samples(CouplingGraph(model), model.biases(), beta, config, count,
                      seed);
}

Moments estimate_moments(const SampleSet& samples) {
  if (samples.states.empty()) throw InvalidInput("cannot average an empty sample set");
  const bool weighted = !samples.weights.empty();
  if (weighted && samples.weights.size() != samples.states.size()) {
    throw InvalidInput("sample weights do not match sample count");
  }
  const std::size_t n = samples.model_units;
  Moments m{n, std::vector<double>(n, 0.0), std::vector<double>(n * n, 0.0)};
  std::vector<std::size_t> active;
  active.reserve(n);
  double total = 0.0;
  for (std::size_t k = 0; k < samples.states.size(); ++k) {
    const auto& s = samples.states[k];
    if (s.size() != n) throw InvalidInput("sample length does not match model");
    const double w = weighted ? samples.weights[k] : 1.0;
    total += w;
    if (w == 0.0) continue;
    active.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (s[i]) active.push_back(i);
    }
    for (std::size_t a = 0; a < active.size(); ++a) {
      m.first[active[a]] += w;
      double* row = m.second.data() + active[a] * n;
      for (std::size_t b = a; b < active.size(); ++b) row[active[b]] += w;
    }
  }
  for (auto& v : m.first) v /= total;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      m.second[i * n + j] /= total;
      m.second[j * n + i] = m.second[i * n + j];
    }
  }
  return m;
}

Moments exact_moments(const ProbabilityTable& table) {
  SampleSet weighted{{}, table.probabilities, table.num_units, 0,
                     SamplerBackend::kEnumeration};
  weighted.states.reserve(table.probabilities.size());
  for (std::size_t k = 0; k < table.probabilities.size(); ++k) {
    weighted.states.push_back(table.state(k));
  }
  return estimate_moments(weighted);
}

ProbabilityTable empirical_distribution(const SampleSet& samples) {
  if (samples.model_units > kEnumerationLimit) {
    throw CapabilityError("empirical distribution limited to " +
                          std::to_string(kEnumerationLimit) + " units");
  }
  if (samples.states.empty()) throw InvalidInput("empty sample set");
  ProbabilityTable table{samples.model_units,
                         std::vector<double>(std::size_t{1} << samples.model_units)};
  const bool weighted = !samples.weights.empty();
  double total = 0.0;
  for (std::size_t k = 0; k < samples.states.size(); ++k) {
    const double w = weighted ? samples.weights[k] : 1.0;
    table.probabilities[ProbabilityTable::index_of(samples.states[k])] += w;
    total += w;
  }
  for (auto& p : table.probabilities) p /= total;
  return table;
}

double total_variation(const ProbabilityTable& a, const ProbabilityTable& b) {
  if (a.num_units != b.num_units ||
      a.probabilities.size() != b.probabilities.size()) {
    throw InvalidInput("probability tables cover different units");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < a.probabilities.size(); ++k) {
    sum += std::abs(a.probabilities[k] - b.probabilities[k]);
  }
  return 0.5 * sum;
}

}  // namespace qbm
