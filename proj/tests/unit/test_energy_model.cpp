#include <cmath>
#include <numbers>

#include <doctest.h>

#include "qbm/energy_model.hpp"
#include "qbm/errors.hpp"
#include "qbm/samplers.hpp"
#include "test_util.hpp"

using namespace qbm;
using qbm::test::bits_of;
using qbm::test::random_model;

namespace {

EnergyModel two_unit(double w, double b0 = 0.0, double b1 = 0.0) {
  EnergyModel m(2);
  m.set_weight(0, 1, w);
  m.set_bias(0, b0);
  m.set_bias(1, b1);
  return m;
}

}  // namespace

TEST_SUITE("energy_model") {

TEST_CASE("energy matches hand arithmetic") {
  CHECK(energy(two_unit(1.0, 0.5, -0.5), BinaryState{1, 1}) == doctest::Approx(1.0));

  EnergyModel m(3);
  m.set_weight(0, 1, 2.0);
  m.set_weight(0, 2, -1.0);
  m.set_bias(2, 1.0);
  CHECK(energy(m, BinaryState{1, 0, 1}) == 0.0);
  CHECK(energy(m, BinaryState{1, 1, 1}) == doctest::Approx(2.0));

  const auto r = random_model(7, 3);
  CHECK(energy(r, BinaryState(7, 0)) == 0.0);
}

TEST_CASE("energy counts each unordered pair once") {
  EnergyModel m(2);
  m.set_weight(1, 0, 3.0);
  CHECK(m.weight(0, 1) == 3.0);
  CHECK(energy(m, BinaryState{1, 1}) == 3.0);
}

TEST_CASE("energy rejects bad states") {
  EnergyModel m(3);
  CHECK_THROWS_AS(energy(m, BinaryState{1, 0}), InvalidInput);
  CHECK_THROWS_AS(energy(m, BinaryState{1, 2, 0}), InvalidInput);
}

TEST_CASE("model construction validates invariants") {
  CHECK_THROWS_AS(EnergyModel(0), InvalidInput);
  // Asymmetric weights.
  CHECK_THROWS_AS(EnergyModel(2, {0, 1, 2, 0}, {0, 0}, {0, 1, 1, 0}), InvalidInput);
  // Non-zero diagonal.
  CHECK_THROWS_AS(EnergyModel(2, {1, 0, 0, 0}, {0, 0}, {0, 0, 0, 0}), InvalidInput);
  // Weight outside the mask.
  CHECK_THROWS_AS(EnergyModel(2, {0, 1, 1, 0}, {0, 0}, {0, 0, 0, 0}), InvalidInput);
  CHECK_NOTHROW(EnergyModel(2, {0, 1, 1, 0}, {0, 0}, {0, 1, 1, 0}));

  auto masked = EnergyModel::with_mask(3, {0, 1, 0, 1, 0, 0, 0, 0, 0});
  CHECK_NOTHROW(masked.set_weight(0, 1, 0.5));
  CHECK_THROWS_AS(masked.set_weight(0, 2, 0.5), InvalidInput);
  CHECK_THROWS_AS(masked.set_weight(1, 1, 0.5), InvalidInput);
  CHECK(masked.edges() == std::vector<Edge>{{0, 1}});
}

TEST_CASE("boltzmann probability hand values") {
  EnergyModel one(1);
  CHECK(boltzmann_probability(one, BinaryState{1}, 1.0) == doctest::Approx(0.5).epsilon(1e-15));

  const double e = std::numbers::e;
  const double p11 = boltzmann_probability(two_unit(1.0), BinaryState{1, 1}, 1.0);
  CHECK(std::abs(p11 - e / (3.0 + e)) < 1e-14);
  CHECK(std::abs(p11 - 0.4753669) < 1e-7);

  const auto r = random_model(5, 11, 2.0);
  for (std::size_t k = 0; k < 32; ++k) {
    CHECK(std::abs(boltzmann_probability(r, bits_of(k, 5), 1e-12) - 1.0 / 32.0) < 1e-9);
  }
}

TEST_CASE("boltzmann probability normalizes and is monotone in energy") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t n = 4 + seed * 2;  // up to 12 units
    const auto m = random_model(n, seed);
    const auto energies = enumerate_energies(m);
    double total = 0.0;
    std::vector<double> p(energies.size());
    for (std::size_t k = 0; k < energies.size(); ++k) {
      p[k] = boltzmann_probability(m, bits_of(k, n), 0.7);
      total += p[k];
    }
    CHECK(std::abs(total - 1.0) < 1e-10);
    for (std::size_t a = 0; a < std::min<std::size_t>(p.size(), 64); ++a) {
      for (std::size_t b = 0; b < std::min<std::size_t>(p.size(), 64); ++b) {
        if (energies[a] > energies[b]) CHECK(p[a] > p[b]);
      }
    }
  }
}

TEST_CASE("enumerate_energies agrees with energy on every state") {
  const auto m = random_model(9, 21);
  const auto energies = enumerate_energies(m);
  REQUIRE(energies.size() == 512);
  for (std::size_t k = 0; k < energies.size(); ++k) {
    CHECK(std::abs(energies[k] - energy(m, bits_of(k, 9))) < 1e-12);
  }
}

TEST_CASE("enumeration limit is a capability error") {
  EnergyModel big(kEnumerationLimit + 1);
  CHECK_THROWS_AS(boltzmann_probability(big, BinaryState(kEnumerationLimit + 1, 0), 1.0),
                  CapabilityError);
  CHECK_THROWS_AS(enumerate_energies(big), CapabilityError);
}

TEST_CASE("clamp examples") {
  SUBCASE("linear absorption") {
    const auto c = clamp(two_unit(1.0), {{1, 1}});
    REQUIRE(c.reduced.num_units() == 1);
    CHECK(c.free_indices == std::vector<std::size_t>{0});
    CHECK(c.reduced.bias(0) == 1.0);
    CHECK(c.offset == 0.0);
  }
  SUBCASE("clamp nothing") {
    const auto m = random_model(4, 5);
    const auto c = clamp(m, {});
    CHECK(c.reduced == m);
    CHECK(c.offset == 0.0);
  }
  SUBCASE("three units") {
    EnergyModel m(3);
    m.set_weight(0, 1, 2.0);
    m.set_weight(1, 2, -1.0);
    m.set_bias(1, 1.0);
    const auto c = clamp(m, {{1, 1}});
    CHECK(c.free_indices == std::vector<std::size_t>{0, 2});
    CHECK(c.reduced.bias(0) == 2.0);
    CHECK(c.reduced.bias(1) == -1.0);
    CHECK(c.offset == 1.0);
  }
  SUBCASE("errors") {
    const auto m = random_model(3, 1);
    CHECK_THROWS_AS(clamp(m, {{3, 1}}), InvalidInput);
    CHECK_THROWS_AS(clamp(m, {{0, 2}}), InvalidInput);
  }
}

TEST_CASE("energy additivity under clamping, exhaustive") {
  Rng pick(77);
  for (std::uint64_t trial = 0; trial < 12; ++trial) {
    const std::size_t n = 2 + trial % 11;  // 2..12 units
    const auto m = random_model(n, 100 + trial);
    ClampAssignment a;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (pick.bit()) a[i] = static_cast<std::uint8_t>(pick.bit());
    }
    const auto c = clamp(m, a);
    const std::size_t free = c.free_indices.size();
    for (std::size_t k = 0; k < (std::size_t{1} << free); ++k) {
      const auto f = bits_of(k, free);
      const auto full = c.merge(f);
      for (const auto& [i, v] : a) CHECK(full[i] == v);
      CHECK(std::abs(energy(m, full) - (energy(c.reduced, f) + c.offset)) < 1e-12);
    }
  }
}

TEST_CASE("clamped conditional equals conditioned joint") {
  const auto m = random_model(6, 9);
  const ClampAssignment a{{1, 1}, {4, 0}};
  const auto c = clamp(m, a);
  const auto joint = enumerate_distribution(m, 1.3);
  const auto reduced = enumerate_distribution(c.reduced, 1.3);
  double mass = 0.0;
  for (std::size_t k = 0; k < joint.probabilities.size(); ++k) {
    const auto s = joint.state(k);
    if (s[1] == 1 && s[4] == 0) mass += joint.probabilities[k];
  }
  for (std::size_t k = 0; k < reduced.probabilities.size(); ++k) {
    const auto full = c.merge(reduced.state(k));
    const double conditional = joint.probabilities[ProbabilityTable::index_of(full)] / mass;
    CHECK(std::abs(conditional - reduced.probabilities[k]) < 1e-12);
  }
}

TEST_CASE("minimization objective") {
  const auto obj = to_minimization_objective(two_unit(1.0, 0.5), 2.0);
  CHECK(obj.weight(0, 1) == -2.0);
  CHECK(obj.bias(0) == -1.0);
  CHECK(obj.bias(1) == 0.0);

  EnergyModel zero(3);
  CHECK(to_minimization_objective(zero, 1.0) == zero);

  const auto m = random_model(5, 2);
  CHECK(to_minimization_objective(to_minimization_objective(m, 1.0), 1.0) == m);
  CHECK_THROWS_AS(to_minimization_objective(m, 0.0), InvalidInput);
  CHECK_THROWS_AS(to_minimization_objective(m, -1.0), InvalidInput);
}

TEST_CASE("minimization objective at unit temperature reproduces beta_eff 5.57229") {
  // A sampler favouring low objective values draws P ∝ exp(-objective).
  // Row ba_86 uses beta_eff = 5.57229.
  const double beta_eff = 5.57229;
  const auto m = random_model(6, 86, 0.5);
  const auto obj = to_minimization_objective(m, beta_eff);
  const auto obj_energies = enumerate_energies(obj);
  double z = 0.0;
  for (double e : obj_energies) z += std::exp(-e);
  for (std::size_t k = 0; k < obj_energies.size(); ++k) {
    const double p_min = std::exp(-obj_energies[k]) / z;
    CHECK(std::abs(p_min - boltzmann_probability(m, bits_of(k, 6), beta_eff)) < 1e-12);
  }
}

}  // TEST_SUITE
