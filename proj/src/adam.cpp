#include "qbm/adam.hpp"

#include <cmath>

#include "qbm/errors.hpp"

namespace qbm {

void AdamHyper::validate() const {
  if (!(learning_rate >= 0.0)) throw InvalidInput("learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidInput("Adam beta1 must be in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidInput("Adam beta2 must be in [0,1)");
  if (!(epsilon >= 0.0)) throw InvalidInput("Adam epsilon must be >= 0");
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 AdamState& state) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw InvalidInput("Adam: parameter, gradient and state shapes differ");
  }
  const auto& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double m_corr = 1.0 - std::pow(h.beta1, t);
  const double v_corr = 1.0 - std::pow(h.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = h.beta1 * state.m[k] + (1.0 - h.beta1) * g;
    state.v[k] = h.beta2 * state.v[k] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[k] / m_corr;
    const double v_hat = state.v[k] / v_corr;
    const double denom = std::sqrt(v_hat) + h.epsilon;
    // 0/0 only when g has been zero throughout with eps = 0.
    if (denom > 0.0) params[k] -= h.learning_rate * m_hat / denom;
  }
}

}  // namespace qbm
