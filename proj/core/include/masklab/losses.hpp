#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "masklab/error.hpp"
#include "masklab/mask.hpp"

namespace masklab {

struct PaplConfig {
  double alpha = 0.0;  // >= 0; 0 recovers uniform weighting
  double tau = 1.0;    // > 0

  void validate() const {
    check(alpha >= 0.0, "papl: alpha must be >= 0");
    check(tau > 0.0, "papl: tau must be > 0");
  }
};

// Row-wise log-softmax accumulated in double regardless of the logit scalar,
// so float training and double grad-checking agree on loss bookkeeping.
template <typename Derived>
inline std::vector<double> row_logprobs(const Eigen::MatrixBase<Derived>& logits_row) {
  const Eigen::Index n = logits_row.size();
  std::vector<double> lp(static_cast<std::size_t>(n));
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) mx = std::max(mx, static_cast<double>(logits_row(j)));
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    lp[static_cast<std::size_t>(j)] = static_cast<double>(logits_row(j)) - mx;
    sum += std::exp(lp[static_cast<std::size_t>(j)]);
  }
  const double lse = std::log(sum);
  for (double& v : lp) v -= lse;
  return lp;
}

// log p(true token) at each masked position of one sequence. logits rows are
// flattened batch*position; row0 is this sequence's first row.
template <typename Mat>
inline std::vector<double> true_logprobs(const Mat& logits, int row0,
                                         const std::vector<int>& masked,
                                         const std::vector<int>& target) {
  std::vector<double> out;
  out.reserve(masked.size());
  for (int pos : masked) {
    check(pos >= 0 && pos < static_cast<int>(target.size()), "loss: masked position out of range");
    const std::vector<double> lp = row_logprobs(logits.row(row0 + pos));
    out.push_back(lp[static_cast<std::size_t>(target[static_cast<std::size_t>(pos)])]);
  }
  return out;
}

// w_i = (1/|M|) (1 + alpha * softmax_j((1/tau) log p_j)_i) over the masked
// set. The identity sum_i w_i = 1 + alpha/|M| holds exactly up to rounding.
inline std::vector<double> papl_weights(const std::vector<double>& true_logp,
                                        const PaplConfig& cfg) {
  cfg.validate();
  check(!true_logp.empty(), "papl_weights: empty masked set");
  const std::size_t m = true_logp.size();
  std::vector<double> w(m);
  double mx = -std::numeric_limits<double>::infinity();
  for (double lp : true_logp) {
    check(std::isfinite(lp), "papl_weights: non-finite log-prob");
    mx = std::max(mx, lp / cfg.tau);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = std::exp(true_logp[i] / cfg.tau - mx);
    sum += w[i];
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = inv_m * (1.0 + cfg.alpha * (w[i] / sum));
  return w;
}

// Uniform weights w_i = 1/lambda: the masked-language objective's
// expected-fraction normalizer.
inline std::vector<double> mdm_weights(std::size_t masked_count, double lambda) {
  check(lambda > 0.0, "mdm_weights: lambda must be positive");
  return std::vector<double>(masked_count, 1.0 / lambda);
}

// sum_i w_i * CE_i over one sequence's masked positions. When d_logits is
// non-null, adds grad_scale * w_i * (softmax - onehot(true)) to the masked
// rows; the weights are constants in the gradient.
template <typename MatIn, typename MatGrad>
inline double weighted_masked_ce(const MatIn& logits, int row0, const std::vector<int>& masked,
                                 const std::vector<int>& target, const std::vector<double>& weights,
                                 double grad_scale, MatGrad* d_logits) {
  check(weights.size() == masked.size(), "loss: weight/mask size mismatch");
  using T = typename MatGrad::Scalar;
  double loss = 0.0;
  for (std::size_t k = 0; k < masked.size(); ++k) {
    const int pos = masked[k];
    const std::vector<double> lp = row_logprobs(logits.row(row0 + pos));
    const int truth = target[static_cast<std::size_t>(pos)];
    loss -= weights[k] * lp[static_cast<std::size_t>(truth)];
    if (d_logits != nullptr) {
      const double s = grad_scale * weights[k];
      for (std::size_t j = 0; j < lp.size(); ++j) {
        (*d_logits)(row0 + pos, static_cast<Eigen::Index>(j)) +=
            static_cast<T>(s * (std::exp(lp[j]) - (static_cast<int>(j) == truth ? 1.0 : 0.0)));
      }
    }
  }
  return loss;
}

}  // namespace masklab
