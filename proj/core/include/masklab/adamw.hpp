#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "masklab/error.hpp"

namespace masklab {

template <typename T>
struct AdamWConfig {
  T lr = T(3e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.95);
  T eps = T(1e-8);
  T weight_decay = T(0.01);
  T clip = T(1.0);  // global-norm threshold; <= 0 disables clipping
};

// AdamW with decoupled weight decay and bias correction. The global-norm clip
// rescales the gradient before it enters the moment estimates.
template <typename T>
class AdamW {
 public:
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  AdamW(Eigen::Index n, const AdamWConfig<T>& cfg)
      : cfg_(cfg), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

  const AdamWConfig<T>& config() const { return cfg_; }
  std::int64_t iterations() const { return t_; }
  Vector& moment1() { return m_; }
  Vector& moment2() { return v_; }
  const Vector& moment1() const { return m_; }
  const Vector& moment2() const { return v_; }
  void restore(std::int64_t t, const Vector& m, const Vector& v) {
    check(m.size() == m_.size() && v.size() == v_.size(), "optimizer restore: size mismatch");
    t_ = t;
    m_ = m;
    v_ = v;
  }

  // Updates params in place; grads is clipped in place. Returns the pre-clip
  // global gradient norm. A non-finite gradient aborts before any state moves.
  T step(Vector& params, Vector& grads) {
    check(params.size() == m_.size() && grads.size() == m_.size(), "optimizer step: size mismatch");
    const T norm = std::sqrt(grads.squaredNorm());
    check(std::isfinite(norm), "optimizer step: non-finite gradient norm");
    if (cfg_.clip > T(0) && norm > cfg_.clip) grads *= cfg_.clip / norm;
    ++t_;
    m_ = cfg_.beta1 * m_ + (T(1) - cfg_.beta1) * grads;
    v_ = cfg_.beta2 * v_ + (T(1) - cfg_.beta2) * grads.cwiseProduct(grads);
    const T bc1 = T(1) - std::pow(cfg_.beta1, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(cfg_.beta2, static_cast<T>(t_));
    params.array() -= cfg_.lr * ((m_.array() / bc1) / ((v_.array() / bc2).sqrt() + cfg_.eps) +
                                 cfg_.weight_decay * params.array());
    return norm;
  }

 private:
  AdamWConfig<T> cfg_;
  Vector m_;
  Vector v_;
  std::int64_t t_ = 0;
};

}  // namespace masklab
