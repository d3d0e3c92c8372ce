#include "qbm/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "qbm/errors.hpp"
#include "qbm/rng.hpp"

namespace qbm {

namespace {

// Box-Muller on the portable uniform stream; std::normal_distribution is
// implementation-defined.
double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string group_name(std::size_t label, std::size_t group) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "c%zu_g%03zu", label, group);
  return buf;
}

}  // namespace

void SyntheticCorpusSpec::validate() const {
  if (classes < 2) throw InvalidInput("synthetic corpus needs at least two classes");
  if (groups_per_class == 0) throw InvalidInput("groups_per_class must be positive");
  if (min_images_per_group == 0 || min_images_per_group > max_images_per_group) {
    throw InvalidInput("need 0 < min_images_per_group <= max_images_per_group");
  }
  if (dim != kRawFeatureDim) {
    throw InvalidInput("synthetic corpus dim must be " + std::to_string(kRawFeatureDim));
  }
  if (!(class_separation >= 0.0) || !(group_spread >= 0.0) || !(image_noise >= 0.0)) {
    throw InvalidInput("synthetic corpus scales must be non-negative");
  }
}

std::vector<FeatureRecord> synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  std::vector<FeatureRecord> out;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    Rng mean_rng(derive_seed(spec.seed, {0, c}));
    std::vector<double> mean(spec.dim);
    for (auto& m : mean) m = spec.class_separation * gaussian(mean_rng);

    for (std::size_t g = 0; g < spec.groups_per_class; ++g) {
      Rng rng(derive_seed(spec.seed, {1, c, g}));
      const auto images = static_cast<std::size_t>(
          rng.between(static_cast<std::int64_t>(spec.min_images_per_group),
                      static_cast<std::int64_t>(spec.max_images_per_group)));
      std::vector<double> center(mean);
      for (auto& x : center) x += spec.group_spread * gaussian(rng);
      for (std::size_t i = 0; i < images; ++i) {
        FeatureRecord r;
        r.group_id = group_name(c, g);
        r.label = c;
        r.stage = FeatureStage::kRaw512;
        r.features = center;
        for (auto& x : r.features) x += spec.image_noise * gaussian(rng);
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace qbm
