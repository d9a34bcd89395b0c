#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <tuple>
#include <random>
#include <vector>

#include "nlsprof/grid.hpp"

namespace nlsprof {

struct Window {
  double lo = 0, hi = 0;
};

struct LineFit {
  double slope = 0, intercept = 0;
  double ci_lo = 0, ci_hi = 0;  // bootstrap 95% interval of the slope
  int points = 0;
  double r2 = 1;
};

namespace detail {

inline std::pair<double, double> line(const std::vector<double>& x, const std::vector<double>& y,
                                      const std::vector<int>& idx) {
  double mx = 0, my = 0;
  for (int i : idx) {
    mx += x[i];
    my += y[i];
  }
  mx /= idx.size();
  my /= idx.size();
  double sxx = 0, sxy = 0;
  for (int i : idx) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  double b = sxx > 0 ? sxy / sxx : 0.0;
  return {b, my - b * mx};
}

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, int bootstrap, uint64_t seed) {
  const int n = static_cast<int>(x.size());
  require(n >= 3, ErrorCode::TooFewSamples, "a line fit needs at least 3 points");
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  LineFit f;
  std::tie(f.slope, f.intercept) = line(x, y, all);
  f.points = n;
  double my = 0;
  for (double v : y) my += v;
  my /= n;
  double ss = 0, sr = 0;
  for (int i = 0; i < n; ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    sr += r * r;
    ss += (y[i] - my) * (y[i] - my);
  }
  f.r2 = ss > 0 ? 1 - sr / ss : 1.0;
  f.ci_lo = f.ci_hi = f.slope;
  if (bootstrap > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<double> slopes;
    std::vector<int> idx(n);
    for (int b = 0; b < bootstrap; ++b) {
      for (int& i : idx) i = pick(rng);
      slopes.push_back(line(x, y, idx).first);
    }
    std::sort(slopes.begin(), slopes.end());
    f.ci_lo = std::min(f.slope, slopes[static_cast<size_t>(0.025 * (bootstrap - 1))]);
    f.ci_hi = std::max(f.slope, slopes[static_cast<size_t>(0.975 * (bootstrap - 1))]);
  }
  return f;
}

}  // namespace detail

struct FitOptions {
  int bootstrap = 200;
  uint64_t seed = 20240611;
  double min_decades = 1.0;
};

// Least-squares slope of log v against log t on the window.
inline LineFit fit_decay_exponent(const std::vector<double>& t, const std::vector<double>& v, Window w,
                                  const FitOptions& opt = {}) {
  require(t.size() == v.size(), ErrorCode::InvalidArgument, "series lengths differ");
  require(!t.empty(), ErrorCode::TooFewSamples, "empty series");
  require(w.lo > 0 && w.hi > w.lo, ErrorCode::WindowError, "window must satisfy 0 < lo < hi");
  require(w.lo >= t.front() * (1 - 1e-12) && w.hi <= t.back() * (1 + 1e-12), ErrorCode::WindowError,
          "window outside the sampled range");
  require(std::log10(w.hi / w.lo) >= opt.min_decades - 1e-9, ErrorCode::WindowError,
          "window spans less than the required number of decades");
  std::vector<double> lx, ly;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < w.lo * (1 - 1e-12) || t[i] > w.hi * (1 + 1e-12)) continue;
    require(v[i] > 0, ErrorCode::NonPositiveValues, "non-positive value inside the fit window");
    lx.push_back(std::log(t[i]));
    ly.push_back(std::log(v[i]));
  }
  return detail::fit_line(lx, ly, opt.bootstrap, opt.seed);
}

struct GrowthFit {
  double rate = 0;
  double reference = 0;  // gamma0 n^4
  double ratio = 0;      // rate / reference
  double band_lo = 0, band_hi = 0;
  bool in_band = false;
  int points = 0;
};

// Exponential rate of |x| on the window, compared with the band [lo, hi] * gamma0 n^4.
inline GrowthFit fit_growth_rate(const std::vector<double>& t, const std::vector<double>& x, Window w, double gamma0,
                                 double n, double band_lo = 0.5, double band_hi = 1.6,
                                 double collapse_time = std::numeric_limits<double>::infinity()) {
  require(t.size() == x.size(), ErrorCode::InvalidArgument, "series lengths differ");
  require(w.hi > w.lo, ErrorCode::WindowError, "empty growth window");
  require(w.hi <= collapse_time * (1 + 1e-12), ErrorCode::WindowError, "growth window overlaps the x-collapse region");
  std::vector<double> tt, lx;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < w.lo || t[i] > w.hi) continue;
    require(x[i] > 0, ErrorCode::NonPositiveValues, "|x| vanishes inside the growth window");
    tt.push_back(t[i]);
    lx.push_back(std::log(x[i]));
  }
  LineFit lf = detail::fit_line(tt, lx, 0, 0);
  GrowthFit g;
  g.rate = lf.slope;
  g.reference = gamma0 * std::pow(n, 4);
  g.ratio = g.reference > 0 ? g.rate / g.reference : std::numeric_limits<double>::quiet_NaN();
  g.band_lo = band_lo;
  g.band_hi = band_hi;
  g.in_band = g.ratio >= band_lo && g.ratio <= band_hi;
  g.points = lf.points;
  return g;
}

}  // namespace nlsprof
