#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace qbm {

enum class Activation { kIdentity, kSigmoid };

/// y = act(W x + b), W stored row-major (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Stack of dense layers with a softmax on the last layer's affine output,
/// trained with categorical cross-entropy.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  /// Hidden layers use `hidden_activation`; the output layer is affine and
  /// feeds the softmax. Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases 0.
  DenseNetwork(std::size_t input_dim, const std::vector<std::size_t>& hidden,
               std::size_t output_dim, Activation hidden_activation,
               std::uint64_t seed);
  explicit DenseNetwork(std::vector<DenseLayer> layers);

  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t output_dim() const { return layers_.back().out; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Class probabilities.
  std::vector<double> forward(std::span<const double> x) const;

  /// Adds d(-log p_label)/d(params) for one example to `grad` (laid out as
  /// get_parameters()) and returns the loss.
  double accumulate_gradient(std::span<const double> x, std::size_t label,
                             std::span<double> grad) const;

  std::size_t parameter_count() const;
  std::vector<double> get_parameters() const;
  void set_parameters(std::span<const double> params);

  nlohmann::json to_json() const;
  static DenseNetwork from_json(const nlohmann::json& doc);

  friend bool operator==(const DenseNetwork&, const DenseNetwork&) = default;

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
};

}  // namespace qbm
