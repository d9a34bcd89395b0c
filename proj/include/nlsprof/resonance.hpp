#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "nlsprof/spectrum.hpp"

namespace nlsprof {

struct ResonanceOptions {
  std::vector<double> ladder = {2, 3, 4, 6, 8, 12, 16, 20};  // sigma in units of the local spacing
  double window_fraction = 0.2;                              // s0 = fraction * e_res
  int window_samples = 8;
  double agreement = 0.05;
  bool throw_on_disagreement = true;
};

struct RateEstimate {
  double value = 0;           // sigma -> 0 extrapolation
  std::vector<double> sigma;  // ladder actually used
  std::vector<double> samples;
};

struct ResonanceData {
  double gamma0 = 0;           // resolvent estimate, clamped at zero
  double gamma0_raw = 0;
  double gamma0_density = 0;
  double relative_difference = 0;
  double energy = 0;           // e_res
  double level_spacing = 0;
  RateEstimate resolvent, density;
  double s0 = 0;
  std::vector<double> window_s, window_gamma;
  double window_min = 0;
  bool window_pass = false;
};

namespace detail {

// Least squares fit of y against the given basis columns; returns coefficients.
inline VectorXd lsq(const MatrixXd& a, const VectorXd& y) { return a.colPivHouseholderQr().solve(y); }

inline double local_spacing(const VectorXd& eps, double energy) {
  int n = static_cast<int>(eps.size());
  int j = 2;
  for (int k = 2; k < n; ++k)
    if (std::abs(eps[k] - energy) < std::abs(eps[j] - energy)) j = k;
  int lo = std::max(2, j - 1), hi = std::min(n - 1, j + 1);
  return (eps[hi] - eps[lo]) / (hi - lo);
}

}  // namespace detail

// Im <f, (H0 - E - i sigma)^{-1} P_c f> for a list of sigma, given |c_k|^2.
inline std::vector<double> lorentzian_rates(const VectorXd& eps, const VectorXd& c2, double energy,
                                            const std::vector<double>& sigma) {
  std::vector<double> out;
  for (double s : sigma) {
    double acc = 0;
    for (int k = 2; k < eps.size(); ++k) {
      double d = eps[k] - energy;
      acc += c2[k] * s / (d * d + s * s);
    }
    out.push_back(acc);
  }
  return out;
}

// pi * sum |c_k|^2 delta_sigma(eps_k - E) with a Gaussian kernel.
inline std::vector<double> density_rates(const VectorXd& eps, const VectorXd& c2, double energy,
                                         const std::vector<double>& sigma) {
  std::vector<double> out;
  for (double s : sigma) {
    double acc = 0;
    for (int k = 2; k < eps.size(); ++k) {
      double d = (eps[k] - energy) / s;
      if (std::abs(d) < 40) acc += c2[k] * std::exp(-0.5 * d * d);
    }
    out.push_back(std::numbers::pi * acc / (s * std::sqrt(2 * std::numbers::pi)));
  }
  return out;
}

// Quadratic extrapolation in sigma for the Lorentzian ladder.
inline RateEstimate extrapolate_lorentzian(const VectorXd& eps, const VectorXd& c2, double energy, double spacing,
                                           const std::vector<double>& ladder) {
  RateEstimate r;
  for (double m : ladder) r.sigma.push_back(m * spacing);
  r.samples = lorentzian_rates(eps, c2, energy, r.sigma);
  MatrixXd a(r.sigma.size(), 3);
  VectorXd y(r.sigma.size());
  for (size_t i = 0; i < r.sigma.size(); ++i) {
    a(i, 0) = 1;
    a(i, 1) = r.sigma[i];
    a(i, 2) = r.sigma[i] * r.sigma[i];
    y[i] = r.samples[i];
  }
  r.value = detail::lsq(a, y)[0];
  return r;
}

// The Gaussian-smoothed density is even in sigma: fit c0 + c2 s^2 + c4 s^4.
inline RateEstimate extrapolate_density(const VectorXd& eps, const VectorXd& c2, double energy, double spacing,
                                        const std::vector<double>& ladder) {
  RateEstimate r;
  for (double m : ladder) r.sigma.push_back(m * spacing);
  r.samples = density_rates(eps, c2, energy, r.sigma);
  MatrixXd a(r.sigma.size(), 3);
  VectorXd y(r.sigma.size());
  for (size_t i = 0; i < r.sigma.size(); ++i) {
    double s2 = r.sigma[i] * r.sigma[i];
    a(i, 0) = 1;
    a(i, 1) = s2;
    a(i, 2) = s2 * s2;
    y[i] = r.samples[i];
  }
  r.value = detail::lsq(a, y)[0];
  return r;
}

inline RadialField resonance_source(const LinearSpectrum& s) {
  VectorXcd f = s.phi0().values().cwiseProduct(s.phi1().values()).cwiseProduct(s.phi1().values());
  return RadialField(s.grid_ptr(), f);
}

inline ResonanceData fermi_constant(const LinearSpectrum& s, const RadialField& source,
                                    const ResonanceOptions& opt = {}) {
  require(s.resonance() && s.e_res() > 0, ErrorCode::AssumptionViolated,
          "resonance energy 2 e1 - e0 is not in the continuous spectrum");
  VectorXcd c = s.coefficients(project_continuous(s, source));
  VectorXd c2 = c.cwiseAbs2();
  const VectorXd& eps = s.eigenvalues();

  ResonanceData d;
  d.energy = s.e_res();
  d.level_spacing = detail::local_spacing(eps, d.energy);
  d.resolvent = extrapolate_lorentzian(eps, c2, d.energy, d.level_spacing, opt.ladder);
  d.density = extrapolate_density(eps, c2, d.energy, d.level_spacing, opt.ladder);
  d.gamma0_raw = d.resolvent.value;
  d.gamma0_density = d.density.value;
  d.gamma0 = std::max(0.0, d.gamma0_raw);
  double scale = std::max(std::abs(d.gamma0_raw), std::abs(d.gamma0_density));
  d.relative_difference = scale > 0 ? std::abs(d.gamma0_raw - d.gamma0_density) / scale : 0.0;
  // Both estimators are quadratic forms in f; an exactly vanishing source needs no cross-check.
  if (c2.sum() <= 1e-300) d.relative_difference = 0;
  if (opt.throw_on_disagreement && d.relative_difference > opt.agreement)
    fail(ErrorCode::ResolutionInsufficient,
         "resolvent estimate " + std::to_string(d.gamma0_raw) + " and density estimate " +
             std::to_string(d.gamma0_density) + " differ by " + std::to_string(100 * d.relative_difference) +
             "%; refine the grid or enlarge r_max");

  d.s0 = opt.window_fraction * d.energy;
  d.window_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j < opt.window_samples; ++j) {
    double sj = -d.s0 + 2 * d.s0 * (j + 0.5) / opt.window_samples;
    double e = d.energy + sj;
    double sp = detail::local_spacing(eps, e);
    double g = extrapolate_lorentzian(eps, c2, e, sp, opt.ladder).value;
    d.window_s.push_back(sj);
    d.window_gamma.push_back(g);
    d.window_min = std::min(d.window_min, g);
  }
  d.window_pass = d.window_min >= 0.75 * d.gamma0;
  return d;
}

inline ResonanceData fermi_constant(const LinearSpectrum& s, const ResonanceOptions& opt = {}) {
  return fermi_constant(s, resonance_source(s), opt);
}

}  // namespace nlsprof
