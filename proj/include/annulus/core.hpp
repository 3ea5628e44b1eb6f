#pragma once

// Domain types for annular measurement planes: geometry, probe locations,
// measurement containers and the centering convention shared by all modules.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace annulus {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Base error for invalid inputs / violated contracts.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (factorization breakdown, inconsistent variance, ...).
/// Carries a description of the offending state when available.
class numerical_error : public error {
 public:
  explicit numerical_error(const std::string& what) : error(what) {}
};

inline constexpr double pi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / pi; }

/// Maps an angle in degrees into [0, 360).
inline double normalize_angle_deg(double theta_deg) {
  double t = std::fmod(theta_deg, 360.0);
  if (t < 0.0) t += 360.0;
  // fmod can return 360.0 - tiny which rounds up; fold it back.
  if (t >= 360.0) t -= 360.0;
  return t;
}

/// Annulus between a hub radius and a casing radius. Radii are in physical
/// units; everywhere else radii are normalized to [0, 1] and mapped back
/// through h(). nu() is the reciprocal of the annulus area expressed in the
/// normalized parameterization, so that nu * integral of h over
/// [0,1] x [0,2pi) equals one.
struct AnnulusGeometry {
  double r_inner = 0.5;
  double r_outer = 1.0;

  AnnulusGeometry() = default;
  AnnulusGeometry(double inner, double outer) : r_inner(inner), r_outer(outer) {
    if (!(std::isfinite(inner) && std::isfinite(outer)))
      throw error("AnnulusGeometry: radii must be finite");
    if (!(0.0 < inner && inner < outer))
      throw error("AnnulusGeometry: require 0 < r_inner < r_outer, got [" +
                  std::to_string(inner) + ", " + std::to_string(outer) + "]");
  }

  double nu() const {
    return (r_outer - r_inner) / (pi * (r_outer * r_outer - r_inner * r_inner));
  }

  /// Affine map from normalized radius in [0,1] to physical radius.
  double h(double r) const { return r * (r_outer - r_inner) + r_inner; }
};

/// One sensor position: normalized radius and circumferential angle in
/// degrees. Angles are compared modulo 360.
struct ProbeLocation {
  double r = 0.0;
  double theta_deg = 0.0;
};

inline bool same_location(const ProbeLocation& a, const ProbeLocation& b) {
  return a.r == b.r &&
         normalize_angle_deg(a.theta_deg) == normalize_angle_deg(b.theta_deg);
}

inline void validate_location(const ProbeLocation& p) {
  if (!(std::isfinite(p.r) && std::isfinite(p.theta_deg)))
    throw error("ProbeLocation: non-finite coordinate");
  if (p.r < 0.0 || p.r > 1.0)
    throw error("ProbeLocation: normalized radius " + std::to_string(p.r) +
                " outside [0,1]");
  if (p.theta_deg < 0.0 || p.theta_deg >= 360.0)
    throw error("ProbeLocation: angle " + std::to_string(p.theta_deg) +
                " outside [0,360)");
}

/// Tensor grid of locations, radius-major: index = i_r * n_theta + j_theta.
inline std::vector<ProbeLocation> build_grid(const std::vector<double>& r_values,
                                             const std::vector<double>& theta_values) {
  std::vector<ProbeLocation> out;
  out.reserve(r_values.size() * theta_values.size());
  for (double r : r_values)
    for (double t : theta_values) {
      ProbeLocation p{r, t};
      validate_location(p);
      out.push_back(p);
    }
  return out;
}

struct CenteredReadings {
  VectorXd values;     ///< readings minus their arithmetic mean
  double mean_offset;  ///< the subtracted mean
};

/// Subtracts the arithmetic mean. Rejects non-finite entries, reporting the
/// first offending index.
inline CenteredReadings center(const VectorXd& readings) {
  if (readings.size() == 0) throw error("center: empty readings");
  for (Eigen::Index i = 0; i < readings.size(); ++i)
    if (!std::isfinite(readings[i]))
      throw error("center: non-finite reading at index " + std::to_string(i));
  const double mean = readings.mean();
  return CenteredReadings{readings.array() - mean, mean};
}

/// Measurement noise: either isotropic (sigma_m^2 I with sigma_m sampled as a
/// hyperparameter; the stored sigma is metadata such as the generator noise)
/// or a fixed full covariance read from file. With a fixed full Sigma the
/// sampled sigma_m does not enter the likelihood covariance; it still feeds
/// the horseshoe global scale tau.
class NoiseModel {
 public:
  static NoiseModel isotropic(double sigma = 0.0) {
    if (!(std::isfinite(sigma)) || sigma < 0.0)
      throw error("NoiseModel: isotropic sigma must be finite and >= 0");
    NoiseModel m;
    m.iso_sigma_ = sigma;
    return m;
  }

  static NoiseModel full(MatrixXd sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
      throw error("NoiseModel: Sigma must be square and non-empty");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if (!sigma.isApprox(sigma.transpose(), 1e-12))
      throw error("NoiseModel: Sigma must be symmetric");
    for (Eigen::Index i = 0; i < sigma.rows(); ++i)
      if (sigma(i, i) < 0.0)
        throw error("NoiseModel: negative noise variance on the diagonal");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw error("NoiseModel: Sigma is not positive semidefinite");
    NoiseModel m;
    m.full_sigma_ = std::move(sigma);
    return m;
  }

  bool is_isotropic() const { return !full_sigma_.has_value(); }
  double isotropic_sigma() const { return iso_sigma_; }
  const MatrixXd& full_sigma() const {
    if (!full_sigma_) throw error("NoiseModel: no full Sigma stored");
    return *full_sigma_;
  }

  /// Covariance used in the likelihood for a given sampled sigma_m.
  MatrixXd covariance(double sigma_m, Eigen::Index n) const {
    if (full_sigma_) {
      if (full_sigma_->rows() != n)
        throw error("NoiseModel: Sigma dimension mismatch");
      return *full_sigma_;
    }
    return (sigma_m * sigma_m) * MatrixXd::Identity(n, n);
  }

 private:
  NoiseModel() = default;
  double iso_sigma_ = 0.0;
  std::optional<MatrixXd> full_sigma_;
};

/// Probe locations with centered readings. Values are stored as deviations
/// around their mean; the subtracted mean is kept so physical quantities can
/// be restored. Immutable after construction.
class MeasurementSet {
 public:
  MeasurementSet(std::vector<ProbeLocation> locations, const VectorXd& raw_values,
                 NoiseModel noise)
      : MeasurementSet(std::move(locations), center_checked(raw_values),
                       std::move(noise)) {}

  /// Constructs from pre-centered values (used by file readers).
  MeasurementSet(std::vector<ProbeLocation> locations, CenteredReadings centered,
                 NoiseModel noise)
      : locations_(std::move(locations)),
        values_(std::move(centered.values)),
        mean_offset_(centered.mean_offset),
        noise_(std::move(noise)) {
    const auto n = static_cast<Eigen::Index>(locations_.size());
    if (n == 0) throw error("MeasurementSet: empty");
    if (values_.size() != n)
      throw error("MeasurementSet: locations/values length mismatch");
    for (const auto& p : locations_) validate_location(p);
    for (std::size_t i = 0; i < locations_.size(); ++i)
      for (std::size_t j = i + 1; j < locations_.size(); ++j)
        if (same_location(locations_[i], locations_[j]))
          throw error("MeasurementSet: duplicate location at indices " +
                      std::to_string(i) + " and " + std::to_string(j));
    const double scale =
        std::max(1.0, values_.cwiseAbs().maxCoeff() + std::abs(mean_offset_));
    if (std::abs(values_.sum()) > 1e-10 * double(n) * scale)
      throw error("MeasurementSet: values are not centered");
    if (!noise_.is_isotropic() && noise_.full_sigma().rows() != n)
      throw error("MeasurementSet: noise covariance dimension mismatch");
  }

  Eigen::Index size() const { return values_.size(); }
  const std::vector<ProbeLocation>& locations() const { return locations_; }
  const VectorXd& values() const { return values_; }
  double mean_offset() const { return mean_offset_; }
  const NoiseModel& noise() const { return noise_; }

  /// Likelihood noise covariance for a sampled sigma_m.
  MatrixXd noise_covariance(double sigma_m) const {
    return noise_.covariance(sigma_m, size());
  }

  VectorXd radii() const {
    VectorXd r(size());
    for (Eigen::Index i = 0; i < size(); ++i) r[i] = locations_[std::size_t(i)].r;
    return r;
  }

  VectorXd angles_deg() const {
    VectorXd t(size());
    for (Eigen::Index i = 0; i < size(); ++i)
      t[i] = locations_[std::size_t(i)].theta_deg;
    return t;
  }

 private:
  static CenteredReadings center_checked(const VectorXd& raw) { return center(raw); }

  std::vector<ProbeLocation> locations_;
  VectorXd values_;
  double mean_offset_ = 0.0;
  NoiseModel noise_;
};

/// Candidate circumferential frequencies. Mode count is 2k+1: the constant
/// plus a sine and a cosine per frequency.
struct HarmonicModel {
  std::vector<int> frequencies;

  HarmonicModel() = default;
  explicit HarmonicModel(std::vector<int> freqs) : frequencies(std::move(freqs)) {
    int prev = 0;
    for (int w : frequencies) {
      if (w < 1) throw error("HarmonicModel: frequencies must be >= 1");
      if (w <= prev) throw error("HarmonicModel: frequencies must be strictly increasing");
      prev = w;
    }
  }

  int k() const { return static_cast<int>(frequencies.size()); }
  int mode_count() const { return 2 * k() + 1; }
};

/// Latents of the regularized horseshoe. The mode variances are the
/// deterministic map lambda_i^2 = c lt_i^2 / (c + tau^2 lt_i^2).
struct HorseshoeLatents {
  double c = 1.0;
  VectorXd lambda_tilde;
  double tau = 1.0;
};

/// One point in hyperparameter space, in the constrained parameterization.
struct HyperParameterState {
  VectorXd lambda;            ///< 2k+1 nonnegative mode scales (enter as lambda^2)
  double sigma_f = 1.0;       ///< radial amplitude
  double length_scale = 1.0;  ///< radial lengthscale l
  double sigma_m = 0.0;       ///< measurement noise std
  std::optional<HorseshoeLatents> horseshoe;
};

inline void validate_state(const HyperParameterState& s, const HarmonicModel& model) {
  if (s.lambda.size() != model.mode_count())
    throw error("HyperParameterState: lambda length " + std::to_string(s.lambda.size()) +
                " != mode count " + std::to_string(model.mode_count()));
  if (s.lambda.minCoeff() < 0.0) throw error("HyperParameterState: negative lambda");
  if (!(s.sigma_f > 0.0)) throw error("HyperParameterState: sigma_f must be > 0");
  if (!(s.length_scale > 0.0))
    throw error("HyperParameterState: length scale must be > 0 (singular lengthscale)");
  if (s.sigma_m < 0.0) throw error("HyperParameterState: sigma_m must be >= 0");
  if (s.horseshoe) {
    const auto& hs = *s.horseshoe;
    if (hs.lambda_tilde.size() != s.lambda.size())
      throw error("HyperParameterState: lambda_tilde length mismatch");
    if (!(hs.c > 0.0) || !(hs.tau >= 0.0) || hs.lambda_tilde.minCoeff() <= 0.0)
      throw error("HyperParameterState: horseshoe latents out of support");
    for (Eigen::Index i = 0; i < s.lambda.size(); ++i) {
      const double lt2 = hs.lambda_tilde[i] * hs.lambda_tilde[i];
      const double expect = hs.c * lt2 / (hs.c + hs.tau * hs.tau * lt2);
      const double got = s.lambda[i] * s.lambda[i];
      if (std::abs(got - expect) > 1e-10 * std::max(1.0, expect))
        throw error("HyperParameterState: lambda^2 inconsistent with horseshoe latents");
    }
  }
}

/// Ordered hyperparameter draws from one MCMC chain plus per-draw log density
/// and tuning metadata. Divergent draws are flagged, never dropped.
struct PosteriorChain {
  std::vector<HyperParameterState> draws;
  VectorXd log_density;
  std::vector<std::uint8_t> divergent;
  int chain_id = 0;
  std::uint64_t seed = 0;
  double step_size = 0.0;
  int divergence_count = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(draws.size()); }
};

inline void validate_chain(const PosteriorChain& c, const HarmonicModel& model) {
  if (c.draws.empty()) throw error("PosteriorChain: empty chain");
  if (c.log_density.size() != c.size() || c.divergent.size() != c.draws.size())
    throw error("PosteriorChain: field length mismatch");
  for (const auto& d : c.draws) validate_state(d, model);
}

}  // namespace annulus
