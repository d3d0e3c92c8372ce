#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qbm {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Moment estimates for Adam over a flat parameter vector.
struct AdamState {
  AdamState() = default;
  AdamState(std::size_t size, AdamHyper hyper)
      : hyper(hyper), m(size, 0.0), v(size, 0.0) {}

  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// One Adam step minimizing along `grads`:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps).
void adam_update(std::span<double> params, std::span<const double> grads,
                 AdamState& state);

}  // namespace qbm
