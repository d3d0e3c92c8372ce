#pragma once

#include <cmath>
#include <vector>

#include "qbm/dense_network.hpp"
#include "qbm/rng.hpp"

namespace qbm::oracle {

/// Mean cross-entropy of a network on (x, label) pairs.
inline double mean_loss(const DenseNetwork& net, const std::vector<std::vector<double>>& xs,
                        const std::vector<std::size_t>& labels) {
  double loss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) loss -= std::log(net.forward(xs[k])[labels[k]]);
  return loss / static_cast<double>(xs.size());
}

/// ||g_backprop - g_fd|| / (||g_backprop|| + ||g_fd||) with central
/// differences of step h.
inline double gradient_check(const DenseNetwork& net, const std::vector<std::vector<double>>& xs,
                             const std::vector<std::size_t>& labels, double h = 1e-5) {
  std::vector<double> analytic(net.parameter_count(), 0.0);
  for (std::size_t k = 0; k < xs.size(); ++k) net.accumulate_gradient(xs[k], labels[k], analytic);
  for (auto& g : analytic) g /= static_cast<double>(xs.size());

  DenseNetwork probe = net;
  auto params = net.get_parameters();
  double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double keep = params[p];
    params[p] = keep + h;
    probe.set_parameters(params);
    const double up = mean_loss(probe, xs, labels);
    params[p] = keep - h;
    probe.set_parameters(params);
    const double down = mean_loss(probe, xs, labels);
    params[p] = keep;
    const double numeric = (up - down) / (2.0 * h);
    diff += (analytic[p] - numeric) * (analytic[p] - numeric);
    norm_a += analytic[p] * analytic[p];
    norm_n += numeric * numeric;
  }
  return std::sqrt(diff) / (std::sqrt(norm_a) + std::sqrt(norm_n));
}

/// Small random sigmoid network with random inputs and labels.
struct GradientCase {
  DenseNetwork net;
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> labels;
};

inline GradientCase random_gradient_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t inputs = 2 + rng.below(6);
  const std::size_t outputs = 2 + rng.below(3);
  std::vector<std::size_t> hidden(1 + rng.below(2));
  for (auto& h : hidden) h = 1 + rng.below(6);
  GradientCase c{DenseNetwork(inputs, hidden, outputs, Activation::kSigmoid, rng.next_u64()),
                 {}, {}};
  auto params = c.net.get_parameters();
  for (auto& p : params) p = rng.uniform(-1.5, 1.5);
  c.net.set_parameters(params);
  for (int k = 0; k < 4; ++k) {
    std::vector<double> x(inputs);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    c.xs.push_back(std::move(x));
    c.labels.push_back(rng.below(outputs));
  }
  return c;
}

}  // namespace qbm::oracle
