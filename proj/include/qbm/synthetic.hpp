#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qbm/pipeline.hpp"

namespace qbm {

/// Parameters of a synthetic grouped feature corpus. Each class has a random
/// mean direction; each group (patient) adds a shared offset; each image
/// adds independent noise. All draws are Gaussian.
struct SyntheticCorpusSpec {
  std::size_t classes = 3;
  std::size_t groups_per_class = 50;
  std::size_t min_images_per_group = 4;
  std::size_t max_images_per_group = 8;
  std::size_t dim = kRawFeatureDim;
  double class_separation = 0.03;  ///< std of class-mean coordinates
  double group_spread = 0.5;
  double image_noise = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Raw-stage records ordered by class, group, image. Group ids are
/// "c<class>_g<index>" with a zero-padded index.
std::vector<FeatureRecord> synthetic_corpus(const SyntheticCorpusSpec& spec);

}  // namespace qbm
