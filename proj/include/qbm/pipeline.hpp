#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qbm/adam.hpp"
#include "qbm/training.hpp"

namespace qbm {

inline constexpr std::size_t kRawFeatureDim = 512;
inline constexpr std::size_t kCompressedDim = 64;

enum class FeatureStage { kRaw512, kComp64, kBin64 };

std::string_view to_string(FeatureStage stage);
FeatureStage parse_feature_stage(std::string_view name);

/// One image's features. group_id identifies the patient the image came from.
struct FeatureRecord {
  std::string group_id;
  std::size_t label = 0;
  FeatureStage stage = FeatureStage::kRaw512;
  std::vector<double> features;

  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

/// Class index -> class name.
using LabelMap = std::map<std::size_t, std::string>;

/// {0: "Covid", 1: "Cap", 2: "Normal"}.
LabelMap default_label_map();
LabelMap load_label_map(const std::filesystem::path& path);
void save_label_map(const std::filesystem::path& path, const LabelMap& labels);

/// Reads the feature CSV: `group_id,label[,stage],f0,...,f{d-1}` with d = 512
/// or 64. Without a stage column the stage follows from d (raw512 / comp64).
/// Throws LoadError for a missing file and FormatError (with line number)
/// for bad headers, wrong arity, non-finite values or unknown labels.
std::vector<FeatureRecord> load_features(const std::filesystem::path& path,
                                         const LabelMap& labels = default_label_map());

/// Writes records of a single stage. Raw records omit the stage column.
void save_features(const std::filesystem::path& path,
                   std::span<const FeatureRecord> records);

/// Frozen 512 -> 64 affine map, W row-major (64 x 512).
struct CompressionLayer {
  std::vector<double> weight;
  std::vector<double> bias;
  std::size_t trained_epochs = 0;

  friend bool operator==(const CompressionLayer&, const CompressionLayer&) = default;
};

struct CompressionTrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  AdamHyper adam{};
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Trains 512 -> 64 (affine) -> 3 (softmax surrogate head) with
/// cross-entropy, then keeps only the compression part. The surrogate head's
/// per-epoch metrics go to `surrogate_history` when given.
CompressionLayer train_compression(std::span<const FeatureRecord> records,
                                   const CompressionTrainConfig& config,
                                   TrainHistory* surrogate_history = nullptr);

FeatureRecord compress(const CompressionLayer& layer, const FeatureRecord& record);

/// bit_k = 1 iff feature_k > 0.
FeatureRecord binarize(const FeatureRecord& record);

void save_compression(const CompressionLayer& layer, const std::filesystem::path& path);
CompressionLayer load_compression(const std::filesystem::path& path);

struct ClassSplitInfo {
  std::vector<std::string> train_groups;
  std::vector<std::string> test_groups;
  std::size_t train_images = 0;
  std::size_t test_images = 0;
  std::size_t train_deleted = 0;
  std::size_t test_deleted = 0;
};

struct DatasetSplit {
  std::vector<FeatureRecord> train;
  std::vector<FeatureRecord> test;
  std::map<std::size_t, ClassSplitInfo> manifest;
};

/// Seeded, group-disjoint split with equal per-class image counts. Which
/// groups land where depends only on the seed and each class's sorted group
/// ids. Surplus images are deleted from the currently largest group first.
DatasetSplit split_balanced(std::span<const FeatureRecord> records,
                            std::size_t train_groups_per_class,
                            std::size_t test_groups_per_class, std::uint64_t seed);

nlohmann::json manifest_to_json(const DatasetSplit& split, const LabelMap& labels);

std::vector<Example> to_examples(std::span<const FeatureRecord> records);

}  // namespace qbm
