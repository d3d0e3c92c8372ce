#include "qbm/dense_network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qbm/errors.hpp"
#include "qbm/rng.hpp"

namespace qbm {

namespace {

double activate(Activation a, double z) {
  if (a == Activation::kIdentity) return z;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double activation_slope(Activation a, double y) {
  return a == Activation::kIdentity ? 1.0 : y * (1.0 - y);
}

void softmax_in_place(std::vector<double>& z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

const char* activation_name(Activation a) {
  return a == Activation::kIdentity ? "identity" : "sigmoid";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw InvalidInput("unknown activation '" + name + "'");
}

}  // namespace

DenseNetwork::DenseNetwork(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                           std::size_t output_dim, Activation hidden_activation,
                           std::uint64_t seed) {
  if (input_dim == 0 || output_dim == 0) {
    throw InvalidInput("network dimensions must be positive");
  }
  Rng rng(seed);
  std::size_t in = input_dim;
  auto add_layer = [&](std::size_t out, Activation act) {
    if (out == 0) throw InvalidInput("layer sizes must be positive");
    DenseLayer layer{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0),
                     act};
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& w : layer.weight) w = rng.uniform(-scale, scale);
    layers_.push_back(std::move(layer));
    in = out;
  };
  for (auto size : hidden) add_layer(size, hidden_activation);
  add_layer(output_dim, Activation::kIdentity);
}

DenseNetwork::DenseNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  validate();
}

void DenseNetwork::validate() const {
  if (layers_.empty()) throw InvalidInput("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.in == 0 || layer.out == 0 || layer.weight.size() != layer.in * layer.out ||
        layer.bias.size() != layer.out) {
      throw InvalidInput("layer " + std::to_string(l) + " has inconsistent shape");
    }
    if (l > 0 && layer.in != layers_[l - 1].out) {
      throw InvalidInput("layer " + std::to_string(l) + " does not chain");
    }
  }
}

std::vector<double> DenseNetwork::forward(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw InvalidInput("input has " + std::to_string(x.size()) +
                       " features, network expects " + std::to_string(input_dim()));
  }
  std::vector<double> a(x.begin(), x.end());
  for (const auto& layer : layers_) {
    std::vector<double> z(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = layer.weight.data() + o * layer.in;
      double s = layer.bias[o];
      for (std::size_t i = 0; i < layer.in; ++i) s += row[i] * a[i];
      z[o] = activate(layer.activation, s);
    }
    a = std::move(z);
  }
  softmax_in_place(a);
  return a;
}

double DenseNetwork::accumulate_gradient(std::span<const double> x, std::size_t label,
                                         std::span<double> grad) const {
  if (x.size() != input_dim()) throw InvalidInput("input dimension mismatch");
  if (label >= output_dim()) throw InvalidInput("label out of range");
  if (grad.size() != parameter_count()) throw InvalidInput("gradient buffer size mismatch");

  // Forward pass keeping every layer's output.
  std::vector<std::vector<double>> acts;
  acts.reserve(layers_.size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (const auto& layer : layers_) {
    const auto& a = acts.back();
    std::vector<double> z(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = layer.weight.data() + o * layer.in;
      double s = layer.bias[o];
      for (std::size_t i = 0; i < layer.in; ++i) s += row[i] * a[i];
      z[o] = activate(layer.activation, s);
    }
    acts.push_back(std::move(z));
  }
  std::vector<double> delta = acts.back();
  softmax_in_place(delta);
  const double loss = -std::log(std::max(delta[label], 1e-300));
  delta[label] -= 1.0;  // dLoss/dLogits

  std::vector<std::size_t> offsets(layers_.size());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offsets[l] = offset;
    offset += layers_[l].weight.size() + layers_[l].bias.size();
  }

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const auto& input = acts[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + layer.weight.size();
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* row = gw + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) row[i] += d * input[i];
    }
    if (l == 0) break;
    const auto& below = layers_[l - 1];
    std::vector<double> next(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = layer.weight.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) next[i] += row[i] * d;
    }
    for (std::size_t i = 0; i < layer.in; ++i) {
      next[i] *= activation_slope(below.activation, input[i]);
    }
    delta = std::move(next);
  }
  return loss;
}

std::size_t DenseNetwork::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += layer.weight.size() + layer.bias.size();
  return count;
}

std::vector<double> DenseNetwork::get_parameters() const {
  std::vector<double> params;
  params.reserve(parameter_count());
  for (const auto& layer : layers_) {
    params.insert(params.end(), layer.weight.begin(), layer.weight.end());
    params.insert(params.end(), layer.bias.begin(), layer.bias.end());
  }
  return params;
}

void DenseNetwork::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw InvalidInput("parameter vector has wrong length");
  auto it = params.begin();
  for (auto& layer : layers_) {
    std::copy_n(it, layer.weight.size(), layer.weight.begin());
    it += static_cast<std::ptrdiff_t>(layer.weight.size());
    std::copy_n(it, layer.bias.size(), layer.bias.begin());
    it += static_cast<std::ptrdiff_t>(layer.bias.size());
  }
}

nlohmann::json DenseNetwork::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) {
    layers.push_back({{"in", layer.in},
                      {"out", layer.out},
                      {"activation", activation_name(layer.activation)},
                      {"weight", layer.weight},
                      {"bias", layer.bias}});
  }
  return layers;
}

DenseNetwork DenseNetwork::from_json(const nlohmann::json& doc) {
  std::vector<DenseLayer> layers;
  for (const auto& l : doc) {
    layers.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                      l.at("weight").get<std::vector<double>>(),
                      l.at("bias").get<std::vector<double>>(),
                      parse_activation(l.at("activation").get<std::string>())});
  }
  return DenseNetwork(std::move(layers));
}

}  // namespace qbm
