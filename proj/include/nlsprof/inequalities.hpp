#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "nlsprof/error.hpp"

namespace nlsprof {

// Left-hand sides of the four integral inequalities. tau = t - T.
namespace cal {

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-13);
}

// int_{T-dt}^{T} (t-s)^{-3/4} ds
inline double lhs1(double tau, double dt) { return 4 * (std::pow(tau + dt, 0.25) - std::pow(tau, 0.25)); }
inline double rhs1(double tau, double dt) { return dt * std::pow(dt + tau, -0.75); }

// Antiderivative of min(u^{-3/2}, u^{-3/4}).
inline double min_kernel_primitive(double u) { return u <= 1 ? 4 * std::pow(u, 0.25) : 6 - 2 / std::sqrt(u); }

// int_{T-dt}^{T} min((t-s)^{-3/2}, (t-s)^{-3/4}) ds
inline double lhs2(double tau, double dt) { return min_kernel_primitive(tau + dt) - min_kernel_primitive(tau); }
inline double rhs2(double tau, double dt) { return dt / (dt + tau) / std::sqrt(1 + tau); }

// int_T^t (t-s)^{-3/4} s^{-3/2} ds. Split at s = max(T, t/2): log variable on the left piece,
// u = (t-s)^{1/4} on the right piece where the kernel is singular.
inline double lhs3(double T, double t) {
  double sm = std::max(T, 0.5 * t);
  auto left = [t](double y) {
    double s = std::exp(y);
    return std::pow(t - s, -0.75) * std::pow(s, -0.5);
  };
  auto right = [t](double u) { return 4 * std::pow(t - u * u * u * u, -1.5); };
  return integrate(left, std::log(T), std::log(sm)) + integrate(right, 0, std::pow(t - sm, 0.25));
}
inline double rhs3(double T, double t) { return std::pow(T, -0.5) * std::pow(t, -0.75); }

// int_T^t min((t-s)^{-3/2}, (t-s)^{-3/4}) s^{-3/2} ds, split at t - s = 1.
inline double lhs4(double T, double t) {
  double tau = t - T;
  auto near = [t](double v) { return 4 * std::pow(t - v * v * v * v, -1.5); };
  double a = integrate(near, 0, std::pow(std::min(tau, 1.0), 0.25));
  double b = 0;
  if (tau > 1) {
    // u = t - s in [1, tau], split at u = t/2; log variables on both sides.
    double uc = std::clamp(0.5 * t, 1.0, tau);
    auto lo = [t](double z) {
      double u = std::exp(z);
      return std::pow(u, -0.5) * std::pow(t - u, -1.5);
    };
    auto hi = [t](double y) {
      double w = std::exp(y);
      return std::pow(w, -0.5) * std::pow(t - w, -1.5);
    };
    b = integrate(lo, 0, std::log(uc)) + integrate(hi, std::log(t - tau), std::log(t - uc));
  }
  return a + b;
}
inline double rhs4(double, double t) { return std::pow(t, -1.5); }

}  // namespace cal

struct InequalityResult {
  std::string name;
  int samples = 0;
  double constant = 0;          // max LHS/RHS over the samples
  double constant_doubled = 0;  // same with twice the samples
  double worst_a = 0, worst_b = 0;
  bool stable = false;          // within 10%
  bool bounded = false;

  bool pass() const { return bounded && stable; }
};

struct InequalityOptions {
  int samples = 1000;
  uint64_t seed = 7;
  double log_range = 6;        // parameters log-uniform over [1, 10^log_range]
  double edge_fraction = 0.1;  // share of samples placed exactly on the boundary tau = 0 or T = 1
  double stability = 0.1;
};

namespace detail {

struct IneqSample {
  double a, b;
};

// (tau, dt) for the first pair, (T, t) for the second pair.
inline std::vector<IneqSample> inequality_samples(int which, int count, const InequalityOptions& o) {
  std::mt19937_64 rng(o.seed + static_cast<uint64_t>(which));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<IneqSample> out;
  for (int i = 0; i < count; ++i) {
    bool edge = u(rng) < o.edge_fraction;
    double p = std::pow(10.0, o.log_range * u(rng));
    double q = std::pow(10.0, o.log_range * u(rng));
    if (which <= 2) {
      double dt = p;                         // dt >= 1
      double tau = edge ? 0.0 : q - 1;       // tau >= 0
      out.push_back({tau, dt});
    } else {
      double T = edge ? 1.0 : p;             // T >= 1
      double t = T * q;                      // t >= T
      out.push_back({T, t});
    }
  }
  return out;
}

inline double ratio(int which, const IneqSample& s) {
  switch (which) {
    case 1: return cal::lhs1(s.a, s.b) / cal::rhs1(s.a, s.b);
    case 2: return cal::lhs2(s.a, s.b) / cal::rhs2(s.a, s.b);
    case 3: return cal::lhs3(s.a, s.b) / cal::rhs3(s.a, s.b);
    default: return cal::lhs4(s.a, s.b) / cal::rhs4(s.a, s.b);
  }
}

}  // namespace detail

inline std::vector<InequalityResult> verify_integral_inequalities(const InequalityOptions& o = {}) {
  require(o.samples >= 1000, ErrorCode::InvalidArgument, "inequality check needs at least 1000 samples");
  std::vector<InequalityResult> out;
  for (int which = 1; which <= 4; ++which) {
    InequalityResult r;
    r.name = "cal-" + std::to_string(which);
    r.samples = o.samples;
    auto all = detail::inequality_samples(which, 2 * o.samples, o);
    double worst = 0, worst2 = 0;
    for (int i = 0; i < 2 * o.samples; ++i) {
      double q = detail::ratio(which, all[i]);
      if (!std::isfinite(q)) q = std::numeric_limits<double>::infinity();
      if (i < o.samples && q > worst) {
        worst = q;
        r.worst_a = all[i].a;
        r.worst_b = all[i].b;
      }
      worst2 = std::max(worst2, q);
    }
    r.constant = worst;
    r.constant_doubled = worst2;
    r.bounded = std::isfinite(worst) && std::isfinite(worst2);
    r.stable = r.bounded && std::abs(worst2 - worst) <= o.stability * worst;
    out.push_back(r);
  }
  return out;
}

}  // namespace nlsprof
