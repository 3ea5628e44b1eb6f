#pragma once

// Fourier design matrix, Fourier x squared-exponential product kernel, Gram
// matrices, and analytic derivatives with respect to hyperparameters and
// probe locations.

#include "annulus/core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace annulus {

/// Relative jitter added to the mean diagonal before factorizations.
inline constexpr double default_rel_jitter = 1e-8;

/// Rows: constant, then sin/cos per frequency. Angles in degrees; the trig
/// argument is omega * theta * pi / 180.
inline MatrixXd fourier_design_matrix(const VectorXd& theta_deg,
                                      const HarmonicModel& model) {
  for (Eigen::Index j = 0; j < theta_deg.size(); ++j)
    if (!std::isfinite(theta_deg[j]))
      throw error("fourier_design_matrix: non-finite angle at index " + std::to_string(j));
  MatrixXd f(model.mode_count(), theta_deg.size());
  f.row(0).setOnes();
  for (int q = 0; q < model.k(); ++q) {
    const double w = static_cast<double>(model.frequencies[std::size_t(q)]);
    for (Eigen::Index j = 0; j < theta_deg.size(); ++j) {
      const double arg = w * deg2rad(theta_deg[j]);
      f(2 * q + 1, j) = std::sin(arg);
      f(2 * q + 2, j) = std::cos(arg);
    }
  }
  return f;
}

/// Derivative of the design matrix w.r.t. the angle (per degree).
inline MatrixXd fourier_design_matrix_dtheta(const VectorXd& theta_deg,
                                             const HarmonicModel& model) {
  MatrixXd f(model.mode_count(), theta_deg.size());
  f.row(0).setZero();
  const double scale = pi / 180.0;
  for (int q = 0; q < model.k(); ++q) {
    const double w = static_cast<double>(model.frequencies[std::size_t(q)]);
    for (Eigen::Index j = 0; j < theta_deg.size(); ++j) {
      const double arg = w * deg2rad(theta_deg[j]);
      f(2 * q + 1, j) = w * scale * std::cos(arg);
      f(2 * q + 2, j) = -w * scale * std::sin(arg);
    }
  }
  return f;
}

/// k_f(theta, theta') = F(theta)^T Lambda F(theta'), Lambda = diag(lambda^2).
inline MatrixXd fourier_kernel(const VectorXd& theta_deg, const VectorXd& theta_prime_deg,
                               const HarmonicModel& model, const VectorXd& lambda) {
  if (lambda.size() != model.mode_count())
    throw error("fourier_kernel: lambda length " + std::to_string(lambda.size()) +
                " != mode count " + std::to_string(model.mode_count()));
  const MatrixXd f = fourier_design_matrix(theta_deg, model);
  const MatrixXd fp = fourier_design_matrix(theta_prime_deg, model);
  return f.transpose() * lambda.array().square().matrix().asDiagonal() * fp;
}

/// k_s(r, r') = sigma_f^2 exp(-(r - r')^2 / (2 l^2)).
inline MatrixXd squared_exp_kernel(const VectorXd& r, const VectorXd& r_prime,
                                   double sigma_f, double l) {
  if (!(sigma_f > 0.0)) throw error("squared_exp_kernel: sigma_f must be > 0");
  if (!(l > 0.0)) throw error("squared_exp_kernel: singular lengthscale (l must be > 0)");
  MatrixXd k(r.size(), r_prime.size());
  const double inv2l2 = 1.0 / (2.0 * l * l);
  const double s2 = sigma_f * sigma_f;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    for (Eigen::Index j = 0; j < r_prime.size(); ++j) {
      const double d = r[i] - r_prime[j];
      k(i, j) = s2 * std::exp(-d * d * inv2l2);
    }
  return k;
}

inline VectorXd radii_of(const std::vector<ProbeLocation>& x) {
  VectorXd r(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) r[Eigen::Index(i)] = x[i].r;
  return r;
}

inline VectorXd angles_of(const std::vector<ProbeLocation>& x) {
  VectorXd t(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) t[Eigen::Index(i)] = x[i].theta_deg;
  return t;
}

/// Product kernel Gram matrix: entry (i,j) = k_f(theta_i, theta_j) * k_s(r_i, r_j).
inline MatrixXd gram(const std::vector<ProbeLocation>& x,
                     const std::vector<ProbeLocation>& x_prime,
                     const HyperParameterState& state, const HarmonicModel& model) {
  validate_state(state, model);
  const MatrixXd kf =
      fourier_kernel(angles_of(x), angles_of(x_prime), model, state.lambda);
  const MatrixXd ks =
      squared_exp_kernel(radii_of(x), radii_of(x_prime), state.sigma_f, state.length_scale);
  return kf.cwiseProduct(ks);
}

/// Self-Gram plus cross and prediction-grid Gram for one hyperparameter state.
struct GramBundle {
  MatrixXd k_xx;
  MatrixXd k_xxstar;
  MatrixXd k_xstar_xstar;
  HyperParameterState state;
};

inline GramBundle make_gram_bundle(const std::vector<ProbeLocation>& x,
                                   const std::vector<ProbeLocation>& x_star,
                                   const HyperParameterState& state,
                                   const HarmonicModel& model) {
  GramBundle g{gram(x, x, state, model), gram(x, x_star, state, model),
               gram(x_star, x_star, state, model), state};
  g.k_xx = 0.5 * (g.k_xx + g.k_xx.transpose().eval());
  g.k_xstar_xstar = 0.5 * (g.k_xstar_xstar + g.k_xstar_xstar.transpose().eval());
  for (const MatrixXd* m : {&g.k_xx, &g.k_xxstar, &g.k_xstar_xstar})
    if (!m->allFinite()) throw numerical_error("GramBundle: non-finite kernel entries");
  return g;
}

/// Jitter from the mean diagonal, per the factorization policy.
inline double default_jitter(const MatrixXd& k) {
  return default_rel_jitter * k.trace() / double(k.rows());
}

/// Cholesky of a symmetric matrix with escalating diagonal jitter. Throws
/// numerical_error with `what_state` appended after the escalation cap.
inline Eigen::LLT<MatrixXd> factorize_spd(const MatrixXd& a,
                                          double rel_jitter = default_rel_jitter,
                                          const std::string& what_state = "") {
  const double base = a.trace() / double(a.rows());
  double jitter = rel_jitter * std::max(base, 0.0);
  if (jitter <= 0.0) jitter = 1e-300;  // exact-zero matrices still get a floor
  for (int attempt = 0; attempt < 8; ++attempt) {
    MatrixXd aj = a;
    aj.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(aj);
    if (llt.info() == Eigen::Success) return llt;
    jitter = std::max(jitter * 100.0, 1e-12 * std::max(base, 1e-30));
  }
  throw numerical_error("factorize_spd: Cholesky failed after jitter escalation" +
                        (what_state.empty() ? "" : " for state " + what_state));
}

/// Analytic Gram derivatives w.r.t. the kernel hyperparameters on X.
struct HyperGradients {
  std::vector<MatrixXd> d_lambda;  ///< one matrix per mode scale lambda_i
  MatrixXd d_sigma_f;
  MatrixXd d_length_scale;
};

inline HyperGradients gram_grad_hyper(const std::vector<ProbeLocation>& x,
                                      const HyperParameterState& state,
                                      const HarmonicModel& model) {
  validate_state(state, model);
  const VectorXd theta = angles_of(x);
  const VectorXd r = radii_of(x);
  const MatrixXd f = fourier_design_matrix(theta, model);
  const MatrixXd ks = squared_exp_kernel(r, r, state.sigma_f, state.length_scale);
  const MatrixXd kf = f.transpose() * state.lambda.array().square().matrix().asDiagonal() * f;

  HyperGradients g;
  g.d_lambda.reserve(std::size_t(model.mode_count()));
  for (Eigen::Index i = 0; i < model.mode_count(); ++i) {
    // d/dlambda_i of lambda_i^2 F_i F_i^T (.) K_s
    const VectorXd fi = f.row(i).transpose();
    g.d_lambda.push_back((2.0 * state.lambda[i]) *
                         (fi * fi.transpose()).cwiseProduct(ks));
  }
  g.d_sigma_f = (2.0 / state.sigma_f) * kf.cwiseProduct(ks);
  const double l = state.length_scale;
  MatrixXd d2(r.size(), r.size());
  for (Eigen::Index a = 0; a < r.size(); ++a)
    for (Eigen::Index b = 0; b < r.size(); ++b) {
      const double d = r[a] - r[b];
      d2(a, b) = d * d;
    }
  g.d_length_scale = kf.cwiseProduct(ks).cwiseProduct(d2) / (l * l * l);
  return g;
}

enum class Coord { radius, angle };

/// Derivative of the self-Gram w.r.t. one coordinate of one location. Only
/// the row and column of that location are nonzero; the diagonal entry picks
/// up the derivative through both argument slots.
inline MatrixXd gram_grad_location(const std::vector<ProbeLocation>& x,
                                   const HyperParameterState& state,
                                   const HarmonicModel& model, Eigen::Index index,
                                   Coord which) {
  validate_state(state, model);
  const auto n = static_cast<Eigen::Index>(x.size());
  if (index < 0 || index >= n)
    throw error("gram_grad_location: index " + std::to_string(index) + " out of range");
  const VectorXd theta = angles_of(x);
  const VectorXd r = radii_of(x);
  const MatrixXd f = fourier_design_matrix(theta, model);
  const VectorXd lam2 = state.lambda.array().square();
  const MatrixXd ks = squared_exp_kernel(r, r, state.sigma_f, state.length_scale);

  // Row of partials d k(x_index, x_b) / d coordinate, first-argument slot.
  VectorXd row(n);
  if (which == Coord::radius) {
    const double inv_l2 = 1.0 / (state.length_scale * state.length_scale);
    const VectorXd kf_row = f.transpose() * (lam2.asDiagonal() * f.col(index));
    for (Eigen::Index b = 0; b < n; ++b) {
      const double dks = -ks(index, b) * (r[index] - r[b]) * inv_l2;
      row[b] = kf_row[b] * dks;
    }
  } else {
    const MatrixXd fd = fourier_design_matrix_dtheta(theta, model);
    for (Eigen::Index b = 0; b < n; ++b) {
      const double dkf = fd.col(index).dot(lam2.asDiagonal() * f.col(b));
      row[b] = dkf * ks(index, b);
    }
  }

  MatrixXd out = MatrixXd::Zero(n, n);
  out.row(index) = row.transpose();
  out.col(index) += row;  // second-argument slot; diagonal gets both, summing to
                          // the full derivative of k(x_i, x_i)
  return out;
}

}  // namespace annulus
