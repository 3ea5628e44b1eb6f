#pragma once

// Shared helpers for the unit and acceptance suites: random instances,
// finite differences, and a generic dense Gaussian conditioning oracle that
// stays independent of the library's optimized paths.

#include "annulus/core.hpp"

#include <Eigen/Dense>
#include <random>

namespace testutil {

using annulus::HarmonicModel;
using annulus::HyperParameterState;
using annulus::MatrixXd;
using annulus::MeasurementSet;
using annulus::NoiseModel;
using annulus::ProbeLocation;
using annulus::VectorXd;

inline HyperParameterState random_state(std::mt19937_64& rng, const HarmonicModel& model,
                                        double sigma_m_min = 0.05,
                                        double sigma_m_max = 0.5) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HyperParameterState s;
  s.lambda = VectorXd::NullaryExpr(model.mode_count(),
                                   [&](Eigen::Index) { return 0.1 + 1.4 * u(rng); });
  s.sigma_f = 0.3 + 1.5 * u(rng);
  s.length_scale = 0.15 + 0.8 * u(rng);
  s.sigma_m = sigma_m_min + (sigma_m_max - sigma_m_min) * u(rng);
  return s;
}

inline std::vector<ProbeLocation> random_locations(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  std::uniform_real_distribution<double> ut(0.0, 360.0);
  std::vector<ProbeLocation> x;
  x.reserve(std::size_t(n));
  while (static_cast<int>(x.size()) < n) {
    ProbeLocation p{ur(rng), std::min(ut(rng), 359.999)};
    bool dup = false;
    for (const auto& q : x) dup = dup || annulus::same_location(p, q);
    if (!dup) x.push_back(p);
  }
  return x;
}

inline MeasurementSet random_measurements(std::mt19937_64& rng, int n,
                                          double noise_sigma = 0.1) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto locs = random_locations(rng, n);
  VectorXd raw = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return 750.0 + g(rng); });
  return MeasurementSet(std::move(locs), raw, NoiseModel::isotropic(noise_sigma));
}

/// Central finite difference of a scalar function of one coordinate.
template <class F>
double central_diff(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double got, double want, double floor = 1e-10) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), floor});
}

/// Conditions a zero-mean joint Gaussian with covariance `joint` on its first
/// n_obs coordinates, by plain block algebra with a generic LU solve. This is
/// the brute-force oracle used against the optimized predictive formulas.
struct ConditionedGaussian {
  VectorXd mean;
  MatrixXd cov;
};

inline ConditionedGaussian condition_by_blocks(const MatrixXd& joint,
                                               const VectorXd& observed) {
  const Eigen::Index n = observed.size();
  const Eigen::Index m = joint.rows() - n;
  const MatrixXd a = joint.topLeftCorner(n, n);
  const MatrixXd b = joint.topRightCorner(n, m);
  const MatrixXd c = joint.bottomRightCorner(m, m);
  const MatrixXd a_inv = a.fullPivLu().inverse();
  ConditionedGaussian out;
  out.mean = b.transpose() * a_inv * observed;
  out.cov = c - b.transpose() * a_inv * b;
  return out;
}

}  // namespace testutil
