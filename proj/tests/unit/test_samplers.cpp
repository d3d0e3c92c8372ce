#include <algorithm>
#include <cmath>
#include <numbers>

#include <doctest.h>

#include "qbm/errors.hpp"
#include "qbm/samplers.hpp"
#include "test_util.hpp"

using namespace qbm;
using qbm::test::random_model;

namespace {

EnergyModel coupled_pair() {
  EnergyModel m(2);
  m.set_weight(0, 1, 1.0);
  return m;
}

double frequency(const SampleSet& s, const BinaryState& target) {
  std::size_t hits = 0;
  for (const auto& x : s.states) hits += x == target;
  return static_cast<double>(hits) / static_cast<double>(s.states.size());
}

double marginal(const SampleSet& s, std::size_t unit) {
  double total = 0.0;
  for (const auto& x : s.states) total += x[unit];
  return total / static_cast<double>(s.states.size());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

const double kE = std::numbers::e;

}  // namespace

TEST_SUITE("samplers") {

TEST_CASE("backend names round trip") {
  for (auto b : {SamplerBackend::kExact, SamplerBackend::kGibbs, SamplerBackend::kAnnealing,
                 SamplerBackend::kEnumeration}) {
    CHECK(parse_sampler_backend(to_string(b)) == b);
  }
  CHECK(to_string(SamplerBackend::kAnnealing) == "sa");
  CHECK_THROWS_AS(parse_sampler_backend("qpu"), InvalidInput);
}

TEST_CASE("anneal schedule") {
  AnnealSchedule s;
  CHECK(s.sweeps == 1000);
  CHECK(s.beta_start == 0.1);
  CHECK(s.beta_end == 1.0);
  CHECK(s.interpolation == AnnealSchedule::Interpolation::kGeometric);
  CHECK(s.beta_at(0) == doctest::Approx(0.1));
  CHECK(s.beta_at(999) == 1.0);
  CHECK(s.beta_at(500) == doctest::Approx(0.1 * std::pow(10.0, 500.0 / 999.0)));
  for (std::size_t k = 1; k < s.sweeps; ++k) CHECK(s.beta_at(k) >= s.beta_at(k - 1));

  AnnealSchedule lin{11, 1.0, 2.0, AnnealSchedule::Interpolation::kLinear};
  CHECK(lin.beta_at(5) == doctest::Approx(1.5));

  AnnealSchedule bad = s;
  bad.sweeps = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = s;
  bad.beta_start = 2.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = s;
  bad.beta_start = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("enumerate_distribution examples") {
  const auto one = enumerate_distribution(EnergyModel(1), 1.0);
  CHECK(one.probabilities == std::vector<double>{0.5, 0.5});

  const auto pair = enumerate_distribution(coupled_pair(), 1.0);
  CHECK(std::abs(pair.probabilities[ProbabilityTable::index_of(BinaryState{1, 1})] -
                 kE / (3.0 + kE)) < 1e-14);

  const auto hot = enumerate_distribution(random_model(6, 4, 3.0), 1e-12);
  double total = 0.0;
  for (double p : hot.probabilities) {
    CHECK(std::abs(p - 1.0 / 64.0) < 1e-9);
    total += p;
  }
  CHECK(std::abs(total - 1.0) < 1e-10);
  CHECK_THROWS_AS(enumerate_distribution(EnergyModel(21), 1.0), CapabilityError);
}

TEST_CASE("sample_exact examples") {
  const auto coin = sample_exact(EnergyModel(1), 3.0, 100000, 1);
  CHECK(coin.backend == SamplerBackend::kExact);
  CHECK(coin.states.size() == 100000);
  const double ones = marginal(coin, 0);
  CHECK(ones >= 0.494);
  CHECK(ones <= 0.506);

  const auto flat = sample_exact(coupled_pair(), 1e-12, 100000, 2);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(frequency(flat, qbm::test::bits_of(k, 2)) - 0.25) < 0.01);
  }

  const auto pair = sample_exact(coupled_pair(), 1.0, 100000, 3);
  CHECK(std::abs(frequency(pair, {1, 1}) - kE / (3.0 + kE)) < 0.01);
  CHECK_THROWS_AS(sample_exact(EnergyModel(21), 1.0, 10, 0), CapabilityError);
  CHECK_THROWS_AS(sample_exact(coupled_pair(), 0.0, 10, 0), InvalidInput);
  CHECK_THROWS_AS(sample_exact(coupled_pair(), 1.0, 0, 0), InvalidInput);
}

TEST_CASE("exact sampler converges at the 1/sqrt(count) rate") {
  // Median over seeds of TV * sqrt(count) stays bounded while TV shrinks.
  const auto m = random_model(8, 17);
  const auto truth = enumerate_distribution(m, 1.0);
  std::vector<double> medians;
  for (std::size_t count : {1000u, 10000u, 100000u}) {
    std::vector<double> tv;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      tv.push_back(total_variation(empirical_distribution(sample_exact(m, 1.0, count, seed)),
                                   truth));
    }
    medians.push_back(median(tv));
    CHECK(medians.back() * std::sqrt(static_cast<double>(count)) < 10.0);
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("sample_gibbs examples") {
  const auto flat = sample_gibbs(EnergyModel(3), 1.0, 5, 100000, 4);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(marginal(flat, i) - 0.5) < 0.01);

  EnergyModel biased(1);
  biased.set_bias(0, 2.0);
  const auto b = sample_gibbs(biased, 1.0, 10, 100000, 5);
  CHECK(std::abs(marginal(b, 0) - 1.0 / (1.0 + std::exp(-2.0))) < 0.01);
  CHECK_THROWS_AS(sample_gibbs(biased, 1.0, 0, 10, 5), InvalidInput);
}

TEST_CASE("gibbs TV falls as sweeps grow") {
  const auto m = random_model(6, 8, 2.0);
  const auto truth = enumerate_distribution(m, 1.0);
  std::vector<double> medians;
  for (std::size_t sweeps : {1u, 3u, 30u}) {
    std::vector<double> tv;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      tv.push_back(total_variation(
          empirical_distribution(sample_gibbs(m, 1.0, sweeps, 20000, seed)), truth));
    }
    medians.push_back(median(tv));
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
  CHECK(medians[2] < 0.05);
}

TEST_CASE("sample_sa examples") {
  const auto flat = sample_sa(EnergyModel(3), 1.0, AnnealSchedule{}, 100000, 6);
  CHECK(flat.backend == SamplerBackend::kAnnealing);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(std::abs(frequency(flat, qbm::test::bits_of(k, 3)) - 0.125) < 0.01);
  }

  EnergyModel biased(1);
  biased.set_bias(0, 1.0);
  const auto b = sample_sa(biased, 1.0, AnnealSchedule{}, 100000, 7);
  CHECK(std::abs(marginal(b, 0) - 1.0 / (1.0 + std::exp(-1.0))) < 0.02);
}

TEST_CASE("samplers are deterministic and worker independent") {
  const auto m = random_model(7, 31);
  CHECK(sample_gibbs(m, 1.0, 20, 300, 9).states == sample_gibbs(m, 1.0, 20, 300, 9).states);
  CHECK(sample_gibbs(m, 1.0, 20, 300, 9, 1).states ==
        sample_gibbs(m, 1.0, 20, 300, 9, 4).states);
  AnnealSchedule s{200};
  CHECK(sample_sa(m, 2.0, s, 300, 9, 1).states == sample_sa(m, 2.0, s, 300, 9, 3).states);
  CHECK(sample_exact(m, 1.0, 300, 9).states == sample_exact(m, 1.0, 300, 9).states);
  CHECK(sample_gibbs(m, 1.0, 20, 300, 9).states != sample_gibbs(m, 1.0, 20, 300, 10).states);
}

TEST_CASE("estimate_moments examples") {
  SampleSet two{{{1, 1}, {0, 0}}, {}, 2, 0, SamplerBackend::kExact};
  const auto m = estimate_moments(two);
  CHECK(m.first == std::vector<double>{0.5, 0.5});
  CHECK(m.pair(0, 1) == 0.5);

  SampleSet same{{{1, 0}, {1, 0}, {1, 0}}, {}, 2, 0, SamplerBackend::kExact};
  const auto s = estimate_moments(same);
  CHECK(s.first == std::vector<double>{1.0, 0.0});
  CHECK(s.pair(0, 1) == 0.0);

  const auto pair = estimate_moments(sample_exact(coupled_pair(), 1.0, 100000, 12));
  CHECK(std::abs(pair.pair(0, 1) - kE / (3.0 + kE)) < 0.01);

  SampleSet empty;
  empty.model_units = 2;
  CHECK_THROWS_AS(estimate_moments(empty), InvalidInput);
}

TEST_CASE("moment invariants hold on sampled sets") {
  const auto m = random_model(6, 40);
  const auto mom = estimate_moments(sample_gibbs(m, 1.0, 10, 500, 1));
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(mom.pair(i, i) == mom.first[i]);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(mom.pair(i, j) == mom.pair(j, i));
      CHECK(mom.pair(i, j) <= std::min(mom.first[i], mom.first[j]) + 1e-12);
    }
  }
}

TEST_CASE("enumeration backend moments equal exact moments") {
  const auto m = random_model(9, 41);
  SamplerConfig config;
  config.backend = SamplerBackend::kEnumeration;
  const auto set = draw_samples(m, 1.7, config, 1, 0);
  CHECK(set.states.size() == 512);
  const auto sampled = estimate_moments(set);
  const auto exact = exact_moments(enumerate_distribution(m, 1.7));
  for (std::size_t i = 0; i < sampled.second.size(); ++i) {
    CHECK(std::abs(sampled.second[i] - exact.second[i]) < 1e-10);
  }
  for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(sampled.first[i] - exact.first[i]) < 1e-10);
}

TEST_CASE("sampling a clamped model matches the conditioned joint") {
  const auto m = random_model(7, 52);
  const ClampAssignment a{{0, 1}, {3, 1}, {5, 0}};
  const auto c = clamp(m, a);
  const auto joint = enumerate_distribution(m, 1.0);
  double mass = 0.0;
  std::vector<double> conditioned(std::size_t{1} << c.free_indices.size(), 0.0);
  for (std::size_t k = 0; k < conditioned.size(); ++k) {
    const auto full = c.merge(qbm::test::bits_of(k, c.free_indices.size()));
    conditioned[k] = joint.probabilities[ProbabilityTable::index_of(full)];
    mass += conditioned[k];
  }
  for (auto& p : conditioned) p /= mass;
  const ProbabilityTable expected{c.free_indices.size(), conditioned};
  const auto drawn = empirical_distribution(sample_exact(c.reduced, 1.0, 50000, 3));
  CHECK(total_variation(drawn, expected) < 0.02);
  const auto gibbs = empirical_distribution(sample_gibbs(c.reduced, 1.0, 50, 50000, 3));
  CHECK(total_variation(gibbs, expected) < 0.03);
}

TEST_CASE("draw_samples on a coupling graph scales by beta") {
  const auto m = random_model(5, 61);
  const CouplingGraph graph(m);
  std::vector<double> biases(m.biases().begin(), m.biases().end());
  CHECK(graph.to_model(biases) == m);
  SamplerConfig config;
  config.backend = SamplerBackend::kEnumeration;
  const auto set = draw_samples(graph, biases, 2.5, config, 1, 0);
  const auto truth = enumerate_distribution(m, 2.5);
  CHECK(total_variation(empirical_distribution(set), truth) < 1e-12);
}

}  // TEST_SUITE
