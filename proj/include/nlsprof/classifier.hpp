#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nlsprof/fits.hpp"
#include "nlsprof/report.hpp"
#include "nlsprof/trajectory.hpp"

namespace nlsprof {

struct ClassifierParams {
  std::optional<double> alpha;  // empty: initial size, enlarged so that t1 >= 1
  double delta = 0.75;
  double iota = 0.1;
  double eps0 = 0.1;
  std::optional<double> eps;  // empty: eps0 / 4
  double x_collapse_fraction = 0.001;
  double y_collapse_fraction = 0.5;
  double plateau_lo = 0.875, plateau_hi = 1.125;
  double decay_threshold = -0.4;
  double decay_window_start = 10;
  double stabilization_tolerance = 0.1;
  double growth_band_lo = 0.5, growth_band_hi = 1.6;
  int min_samples = 100;
  std::optional<double> gamma0;  // falls back to record metadata "resonance.gamma0"

  double excited_floor() const { return eps.value_or(eps0 / 4); }

  void validate() const {
    require(delta > 0.6 && delta < 1, ErrorCode::InvalidArgument, "delta must lie in (0.6, 1)");
    require(iota > 0 && iota < 0.2, ErrorCode::InvalidArgument, "iota must lie in (0, 0.2)");
    require(delta + iota < 1, ErrorCode::InvalidArgument, "delta + iota must be below 1");
    require(!alpha || *alpha > 0, ErrorCode::InvalidArgument, "alpha must be positive");
    require(excited_floor() > 0 && eps0 > 0, ErrorCode::InvalidArgument, "excited floor must be positive");
    require(x_collapse_fraction > 0 && x_collapse_fraction < 1, ErrorCode::InvalidArgument,
            "x-collapse fraction must lie in (0, 1)");
  }
};

struct Threshold {
  bool finite = false;
  double t = std::numeric_limits<double>::infinity();
  int index = -1;

  static Threshold at(const TrajectoryRecord& r, int i) { return {true, r.samples[i].t, i}; }
  std::string describe(double horizon) const {
    return finite ? format_number(t) : "beyond horizon (T = " + format_number(horizon) + ")";
  }
};

struct Thresholds {
  Threshold t1, t2, t3, t4;
  double n = 0;
  double alpha = 0;
  bool ground_side = false;  // |x(t1)| >= |y(t1)|^{2+delta}
  int subcase = 0;           // ground-side subcase 1..3, 0 otherwise
};

inline double bracket(double t) { return 1 + std::abs(t); }

inline void check_record(const TrajectoryRecord& rec, int min_samples) {
  require(static_cast<int>(rec.samples.size()) >= min_samples, ErrorCode::TooFewSamples,
          "record has " + std::to_string(rec.samples.size()) + " samples, need " + std::to_string(min_samples));
  for (size_t i = 1; i < rec.samples.size(); ++i)
    require(rec.samples[i].t > rec.samples[i - 1].t, ErrorCode::NonMonotoneTime, "sample times must increase");
}

inline double automatic_alpha(const TrajectoryRecord& rec, double delta) {
  const auto& s0 = rec.samples.front();
  double a = std::abs(s0.x) + std::abs(s0.y) + s0.xi_l2;
  // Enlarge so the first-threshold condition holds up to the first sample at or after t = 1.
  for (const auto& s : rec.samples) {
    double mm = std::max(std::abs(s.x), std::abs(s.y));
    a = std::max(a, std::pow(mm, 2 + delta) * std::pow(bracket(s.t), 1.5));
    if (s.t >= 1) break;
  }
  return a;
}

inline Thresholds detect_thresholds(const TrajectoryRecord& rec, const ClassifierParams& p) {
  p.validate();
  check_record(rec, p.min_samples);
  const auto& s = rec.samples;
  const int ns = static_cast<int>(s.size());
  Thresholds th;
  th.alpha = p.alpha ? *p.alpha : automatic_alpha(rec, p.delta);
  const double a = th.alpha;

  int i1 = -1;
  bool broke = false;
  for (int i = 0; i < ns; ++i) {
    double mm = std::max(std::abs(s[i].x), std::abs(s[i].y));
    if (std::pow(mm, 2 + p.delta) > a * std::pow(bracket(s[i].t), -1.5)) {
      broke = true;
      break;
    }
    i1 = i;
  }
  if (!broke) return th;
  i1 = std::max(i1, 0);
  th.t1 = Threshold::at(rec, i1);
  const double ax = std::abs(s[i1].x), ay = std::abs(s[i1].y);
  th.n = std::max(ax, ay);
  const double n = th.n;

  auto first_from = [&](int start, auto pred) -> Threshold {
    for (int i = start; i < ns; ++i)
      if (pred(s[i])) return Threshold::at(rec, i);
    return {};
  };
  auto collapse = [&](int start) {
    return first_from(start, [&](const TrajectorySample& q) { return std::abs(q.x) >= p.x_collapse_fraction * n; });
  };
  auto floor_hit = [&](int start) {
    return first_from(start, [&](const TrajectorySample& q) { return std::abs(q.y) < p.excited_floor() * n; });
  };

  th.ground_side = ax >= std::pow(ay, 2 + p.delta);
  if (th.ground_side) {
    if (ax >= ay && ay <= p.eps0 * n) {
      th.subcase = 3;
      th.t2 = th.t3 = th.t4 = th.t1;
    } else if (ax >= p.x_collapse_fraction * n) {
      th.subcase = 2;
      th.t2 = th.t3 = th.t1;
      th.t4 = floor_hit(th.t3.index);
    } else {
      th.subcase = 1;
      th.t2 = th.t1;
      th.t3 = collapse(th.t2.index);
      if (th.t3.finite) th.t4 = floor_hit(th.t3.index);
    }
    return th;
  }

  int i2 = i1;
  bool broke2 = false;
  for (int i = i1; i < ns; ++i) {
    if (std::pow(n, 2 + p.iota) * std::abs(s[i].x) > a * std::pow(bracket(s[i].t), -1.5)) {
      broke2 = true;
      break;
    }
    i2 = i;
  }
  if (!broke2) return th;
  th.t2 = Threshold::at(rec, i2);
  th.t3 = collapse(i2);
  if (th.t3.finite) th.t4 = floor_hit(th.t3.index);
  return th;
}

struct ClassificationReport {
  std::string label = "inconclusive";
  std::string reason;
  Thresholds thresholds;
  double horizon = 0;
  int samples = 0;
  ClassifierParams params;
  std::optional<LineFit> decay;  // psi L2loc exponent
  Window decay_window;
  std::optional<GrowthFit> growth;
  Window growth_window;
  double gamma0 = std::numeric_limits<double>::quiet_NaN();
  std::optional<LineFit> relaxation;  // |y|^{-2} against t after t3
  double relaxation_ratio = std::numeric_limits<double>::quiet_NaN();  // slope / (4 gamma0 |x(T)|^2)
  double t4_constant = std::numeric_limits<double>::quiet_NaN();       // (t4 - t3) gamma0 eps^2 n^4
  bool plateau = false, y_collapsed = false;
  double y_variation = std::numeric_limits<double>::quiet_NaN();

  Report to_report() const;
};

namespace detail {

inline std::optional<LineFit> try_decay(const TrajectoryRecord& rec, double start, Window& w) {
  if (rec.samples.size() < 3) return std::nullopt;
  double lo = std::max(start, rec.samples.front().t);
  double hi = rec.samples.back().t;
  if (lo <= 0 || hi < 10 * lo * (1 - 1e-9)) return std::nullopt;
  std::vector<double> t, v;
  for (const auto& s : rec.samples) {
    t.push_back(s.t);
    v.push_back(s.psi_l2loc);
  }
  w = {lo, hi};
  try {
    return fit_decay_exponent(t, v, w);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

inline ClassificationReport classify(const TrajectoryRecord& rec, const ClassifierParams& p) {
  p.validate();
  ClassificationReport out;
  out.params = p;
  out.horizon = rec.horizon();
  out.samples = static_cast<int>(rec.samples.size());
  out.gamma0 = p.gamma0.value_or(rec.meta_number("resonance.gamma0"));
  if (out.samples < p.min_samples) {
    out.reason = "too few samples (" + std::to_string(out.samples) + " < " + std::to_string(p.min_samples) + ")";
    return out;
  }
  Thresholds th = detect_thresholds(rec, p);
  out.thresholds = th;
  out.decay = detail::try_decay(rec, p.decay_window_start, out.decay_window);
  const auto& s = rec.samples;

  if (!th.t1.finite) {
    if (!out.decay) {
      out.reason = "t1 beyond horizon but no decade-long decay window";
    } else if (out.decay->slope < p.decay_threshold) {
      out.label = "I";
      out.reason = "t1 beyond horizon and local norm decays";
    } else {
      out.reason = "t1 beyond horizon but local norm exponent " + format_number(out.decay->slope) +
                   " above " + format_number(p.decay_threshold);
    }
    return out;
  }

  const double n = th.n;
  if (th.t3.finite && th.t4.finite && th.t4.t > th.t3.t && out.gamma0 > 0)
    out.t4_constant = (th.t4.t - th.t3.t) * out.gamma0 * std::pow(p.excited_floor(), 2) * std::pow(n, 4);

  // Relaxation of |y| after the collapse threshold: |y|^{-2} is close to affine in t.
  if (th.t3.finite && out.gamma0 > 0) {
    std::vector<double> t, v;
    for (int i = th.t3.index; i < out.samples; ++i) {
      if (std::abs(s[i].y) <= 0) continue;
      t.push_back(s[i].t);
      v.push_back(1 / std::norm(s[i].y));
    }
    if (t.size() >= 3 && t.back() > t.front()) {
      out.relaxation = detail::fit_line(t, v, 0, 0);
      double xt = std::abs(s.back().x);
      out.relaxation_ratio = out.relaxation->slope / (4 * out.gamma0 * xt * xt);
    }
  }

  if (th.ground_side) {
    out.label = "II_a";
    out.reason = "|x(t1)| >= |y(t1)|^(2+delta), subcase " + std::to_string(th.subcase);
    return out;
  }

  if (!th.t2.finite) {
    int half = out.samples / 2;
    double lo = std::numeric_limits<double>::infinity(), hi = 0, mean = 0;
    for (int i = half; i < out.samples; ++i) {
      double ay = std::abs(s[i].y);
      lo = std::min(lo, ay);
      hi = std::max(hi, ay);
      mean += ay;
    }
    mean /= (out.samples - half);
    out.y_variation = mean > 0 ? (hi - lo) / mean : std::numeric_limits<double>::infinity();
    if (out.y_variation <= p.stabilization_tolerance) {
      out.label = "III";
      out.reason = "t2 beyond horizon and |y| stabilizes";
    } else {
      out.reason = "t2 beyond horizon but |y| does not stabilize";
    }
    return out;
  }

  out.plateau = true;
  for (int i = th.t1.index; i <= th.t2.index; ++i) {
    double ay = std::abs(s[i].y);
    if (ay < p.plateau_lo * n || ay > p.plateau_hi * n) out.plateau = false;
  }
  if (th.t3.finite) {
    for (int i = th.t3.index; i < out.samples; ++i)
      if (std::abs(s[i].y) <= p.y_collapse_fraction * n) out.y_collapsed = true;
    if (th.t3.t > th.t2.t && out.gamma0 > 0) {
      std::vector<double> t, x;
      for (const auto& q : s) {
        t.push_back(q.t);
        x.push_back(std::abs(q.x));
      }
      out.growth_window = {th.t2.t, th.t3.t};
      try {
        out.growth = fit_growth_rate(t, x, out.growth_window, out.gamma0, n, p.growth_band_lo, p.growth_band_hi,
                                     th.t3.t);
      } catch (const Error&) {
      }
    }
  }
  if (out.plateau && th.t3.finite && out.y_collapsed) {
    out.label = "II_b";
    out.reason = "plateau of |y| on [t1, t2], x-collapse at t3, |y| collapses";
  } else {
    out.reason = std::string("t2 finite without the plateau-collapse signature (plateau ") +
                 (out.plateau ? "yes" : "no") + ", t3 " + (th.t3.finite ? "finite" : "beyond horizon") +
                 ", |y| collapse " + (out.y_collapsed ? "yes" : "no") + ")";
  }
  return out;
}

inline Report ClassificationReport::to_report() const {
  Report r;
  auto& c = r.section("classification");
  c.add("case", label);
  c.add("reason", reason);
  c.add("horizon", horizon);
  c.add("samples", samples);
  auto& t = r.section("thresholds");
  t.add("t1", thresholds.t1.describe(horizon));
  t.add("t2", thresholds.t2.describe(horizon));
  t.add("t3", thresholds.t3.describe(horizon));
  t.add("t4", thresholds.t4.describe(horizon));
  t.add("n", thresholds.n);
  t.add("alpha", thresholds.alpha);
  t.add("ground_side", thresholds.ground_side);
  t.add("subcase", thresholds.subcase);
  auto& pp = r.section("parameters");
  pp.add("delta", params.delta);
  pp.add("iota", params.iota);
  pp.add("eps0", params.eps0);
  pp.add("eps", params.excited_floor());
  pp.add("x_collapse_fraction", params.x_collapse_fraction);
  pp.add("y_collapse_fraction", params.y_collapse_fraction);
  pp.add("alpha_mode", std::string(params.alpha ? "fixed" : "automatic"));
  pp.add("gamma0", gamma0);
  auto& f = r.section("fits");
  if (decay) {
    f.add("decay_exponent", decay->slope);
    f.add("decay_ci_lo", decay->ci_lo);
    f.add("decay_ci_hi", decay->ci_hi);
    f.add("decay_window", format_number(decay_window.lo) + " " + format_number(decay_window.hi));
  } else {
    f.add("decay_exponent", "n/a");
  }
  if (growth) {
    f.add("growth_rate", growth->rate);
    f.add("growth_reference", growth->reference);
    f.add("growth_ratio", growth->ratio);
    f.add("growth_band", format_number(growth->band_lo) + " " + format_number(growth->band_hi));
    f.add("growth_band_note", "ODE band [0.75, 1.25] widened for discretization and error terms");
    f.add("growth_in_band", growth->in_band);
    f.add("growth_window", format_number(growth_window.lo) + " " + format_number(growth_window.hi));
  } else {
    f.add("growth_rate", "n/a");
  }
  if (relaxation) {
    f.add("relaxation_slope", relaxation->slope);
    f.add("relaxation_ratio", relaxation_ratio);
  }
  f.add("t4_constant", std::isfinite(t4_constant) ? format_number(t4_constant) : std::string("n/a"));
  f.add("plateau", plateau);
  f.add("y_collapsed", y_collapsed);
  if (std::isfinite(y_variation)) f.add("y_variation", y_variation);
  return r;
}

}  // namespace nlsprof
