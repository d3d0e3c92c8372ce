#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "qbm/adam.hpp"
#include "qbm/energy_model.hpp"
#include "qbm/samplers.hpp"
#include "qbm/training.hpp"

namespace qbm {

/// Layered deep-BM connectivity. Units are laid out as
///   [inputs][hidden layer 1]...[hidden layer h][labels]
/// with couplings only between adjacent layers (inputs to the first hidden
/// layer, the last hidden layer to the labels).
struct QbmTopology {
  std::size_t input_units = 64;
  std::size_t label_units = 3;
  std::vector<std::size_t> layer_sizes;

  /// Splits `hidden_total` over `hidden_layers` layers as evenly as possible;
  /// earlier layers take the remainder.
  static QbmTopology make(std::size_t input_units, std::size_t label_units,
                          std::size_t hidden_layers, std::size_t hidden_total);

  /// Explicit layer sizes; rejects sizes inconsistent with (h, n).
  static QbmTopology make(std::size_t input_units, std::size_t label_units,
                          std::size_t hidden_layers, std::size_t hidden_total,
                          std::vector<std::size_t> layer_sizes);

  void validate() const;

  std::size_t hidden_layers() const { return layer_sizes.size(); }
  std::size_t hidden_total() const;
  std::size_t total_units() const { return input_units + hidden_total() + label_units; }
  std::size_t hidden_offset() const { return input_units; }
  std::size_t label_offset() const { return input_units + hidden_total(); }

  std::vector<std::uint8_t> edge_mask() const;
  std::size_t edge_count() const;

  friend bool operator==(const QbmTopology&, const QbmTopology&) = default;
};

struct QbmClassifier {
  QbmTopology topology;
  EnergyModel model{1};
  double beta_eff = 1.0;
  std::size_t trained_epochs = 0;

  friend bool operator==(const QbmClassifier&, const QbmClassifier&) = default;
};

/// Masked weights and hidden/label biases ~ U[-0.1, 0.1]; input biases 0.
QbmClassifier init_qbm(const QbmTopology& topology, double beta_eff,
                       std::uint64_t seed);

/// Trainable weights (masked edges, row-major) followed by hidden and label
/// biases.
std::size_t parameter_count(const QbmClassifier& qbm);
std::vector<double> get_parameters(const QbmClassifier& qbm);
void set_parameters(QbmClassifier& qbm, std::span<const double> params);

/// Inputs and labels clamped; hidden units sampled. Moments cover all units.
Moments data_phase_moments(const QbmClassifier& qbm,
                           std::span<const std::uint8_t> input_bits,
                           std::size_t label, const SamplerConfig& sampler,
                           std::size_t sample_count, std::uint64_t seed);

/// Inputs clamped; hidden and label units sampled.
Moments model_phase_moments(const QbmClassifier& qbm,
                            std::span<const std::uint8_t> input_bits,
                            const SamplerConfig& sampler, std::size_t sample_count,
                            std::uint64_t seed);

/// Per-parameter mean of <.>_data - <.>_model over the batch, laid out like
/// get_parameters(). Input biases are not parameters and get no entry.
std::vector<double> moment_gradient(const QbmClassifier& qbm,
                                    std::span<const Example> batch,
                                    const SamplerConfig& sampler,
                                    std::size_t sample_count, std::uint64_t seed);

struct BatchStats {
  double mean_abs_gradient = 0.0;
};

/// Estimates the moment gradient and takes one Adam step that raises the
/// conditional likelihood of the batch labels.
BatchStats train_step(QbmClassifier& qbm, std::span<const Example> batch,
                      const SamplerConfig& sampler, std::size_t sample_count,
                      AdamState& adam, std::uint64_t seed);

struct QbmTrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t sample_count = 20;
  AdamHyper adam{};
  std::uint64_t seed = 0;
};

/// Seeded shuffle per epoch, one train_step per batch, then training
/// accuracy and AUC from predict().
TrainHistory train(QbmClassifier& qbm, std::span<const Example> data,
                   const QbmTrainConfig& config, const SamplerConfig& sampler);

/// Mean label-unit activations of the model phase, normalized to sum to 1
/// (uniform when all are zero).
std::vector<double> predict(const QbmClassifier& qbm,
                            std::span<const std::uint8_t> input_bits,
                            const SamplerConfig& sampler, std::size_t sample_count,
                            std::uint64_t seed);

/// Predicts every example (item k seeded from (seed, k)) and scores the run.
Evaluation evaluate(const QbmClassifier& qbm, std::span<const Example> data,
                    const SamplerConfig& sampler, std::size_t sample_count,
                    std::uint64_t seed);

/// Binary input bits from a 0/1 feature vector; throws on other values or a
/// length mismatch.
BinaryState input_bits_of(const QbmClassifier& qbm, const Example& example);

void save_model(const QbmClassifier& qbm, const std::filesystem::path& path);
QbmClassifier load_model(const std::filesystem::path& path);

}  // namespace qbm
