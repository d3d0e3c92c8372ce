#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qbm/adam.hpp"
#include "qbm/dense_network.hpp"
#include "qbm/training.hpp"

namespace qbm {

/// Sigmoid hidden layers, softmax output. The classical control for the QBM.
struct FnnModel {
  DenseNetwork network;

  friend bool operator==(const FnnModel&, const FnnModel&) = default;
};

/// Throws InvalidInput for an empty hidden configuration.
FnnModel make_fnn(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                  std::size_t output_dim, std::uint64_t seed);

std::vector<double> fnn_forward(const FnnModel& model, std::span<const double> features);

struct FnnTrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  AdamHyper adam{};
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Mini-batch cross-entropy training with Adam. Per-epoch metrics come from
/// the deterministic forward pass.
TrainHistory fnn_train(FnnModel& model, std::span<const Example> data,
                       const FnnTrainConfig& config);

Evaluation evaluate_fnn(const FnnModel& model, std::span<const Example> data);

/// Weights plus biases of every layer.
std::size_t parameter_count(const FnnModel& model);

void save_fnn(const FnnModel& model, const std::filesystem::path& path);
FnnModel load_fnn(const std::filesystem::path& path);

}  // namespace qbm
