#include <gtest/gtest.h>

#include <sstream>

#include "support/fixtures.hpp"

using namespace nlsprof;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

using Series = std::function<cplx(double)>;

TrajectoryRecord synthetic(double T, double dt, const Series& x, const Series& y,
                           const std::function<double(double)>& psi = {}) {
  TrajectoryRecord r;
  long n = std::lround(T / dt);
  for (long k = 0; k <= n; ++k) {
    TrajectorySample s;
    s.t = k * dt;
    s.x = x(s.t);
    s.y = y(s.t);
    s.psi_l2loc = psi ? psi(s.t) : 1.0;
    s.mass = 1;
    r.samples.push_back(s);
  }
  return r;
}

// First root of an increasing-sign function on [a, b] by scan + bisection.
double first_crossing(const std::function<double(double)>& f, double a, double b) {
  double step = (b - a) / 20000, lo = a;
  while (lo < b && f(lo + step) <= 0) lo += step;
  double hi = lo + step;
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (lo + hi);
    (f(m) > 0 ? hi : lo) = m;
  }
  return 0.5 * (lo + hi);
}

ClassifierParams fixed_alpha(double a) {
  ClassifierParams p;
  p.alpha = a;
  return p;
}

}  // namespace

TEST(Thresholds, ConstantExcitedAmplitudeGivesClosedFormT1) {
  for (double n : {0.3, 0.5, 0.8}) {
    double dt = 0.01;
    auto rec = synthetic(50, dt, [](double) { return 0.0; }, [n](double) { return n; });
    auto p = fixed_alpha(1.0);
    auto th = detect_thresholds(rec, p);
    double expected = std::pow(1.0 / std::pow(n, 2 + p.delta), 2.0 / 3) - 1;
    ASSERT_TRUE(th.t1.finite) << n;
    EXPECT_LE(std::abs(th.t1.t - expected), dt) << n;
    EXPECT_DOUBLE_EQ(th.n, n);
    EXPECT_FALSE(th.ground_side);
    EXPECT_FALSE(th.t2.finite);
  }
}

TEST(Thresholds, ConstructedGrowthGivesT2T3T4) {
  const double dt = 0.05, x0 = 1e-7, rate = 0.05, tc = 200;
  auto x = [&](double t) { return x0 * std::exp(rate * t); };
  auto y = [&](double t) { return t < tc ? 1.0 : std::exp(-(t - tc) / 10); };
  auto rec = synthetic(300, dt, x, y);
  auto p = fixed_alpha(2.0);
  p.gamma0 = rate;
  auto th = detect_thresholds(rec, p);
  ASSERT_TRUE(th.t1.finite && th.t2.finite && th.t3.finite && th.t4.finite);
  EXPECT_LE(std::abs(th.t1.t - (std::pow(2.0, 2.0 / 3) - 1)), dt);
  double t2 = first_crossing([&](double t) { return std::pow(1.0, 2 + p.iota) * x(t) - 2 * std::pow(1 + t, -1.5); },
                             th.t1.t, 300);
  EXPECT_LE(std::abs(th.t2.t - t2), dt);
  double t3 = std::log(p.x_collapse_fraction / x0) / rate;
  EXPECT_LE(std::abs(th.t3.t - t3), dt);
  EXPECT_LT(th.t2.t, th.t3.t);
  double t4 = tc + 10 * std::log(1 / p.excited_floor());
  EXPECT_LE(std::abs(th.t4.t - t4), dt);

  auto rep = classify(rec, p);
  EXPECT_EQ(rep.label, "II_b") << rep.reason;
  ASSERT_TRUE(rep.growth.has_value());
  EXPECT_NEAR(rep.growth->ratio, 1.0, 1e-6);
  EXPECT_TRUE(rep.growth->in_band);
}

TEST(Classifier, DecayingRecordIsCaseI) {
  auto rec = synthetic(
      1000, 0.5, [](double t) { return 1e-3 * std::exp(-t); }, [](double t) { return 1e-3 * std::exp(-t); },
      [](double t) { return 0.1 * std::pow(1 + t, -1.5); });
  auto rep = classify(rec, ClassifierParams{});
  EXPECT_EQ(rep.label, "I") << rep.reason;
  EXPECT_FALSE(rep.thresholds.t1.finite);
  ASSERT_TRUE(rep.decay.has_value());
  EXPECT_NEAR(rep.decay->slope, -1.5, 0.02);
  EXPECT_NE(rep.to_report().get("thresholds", "t1").find("beyond horizon"), std::string::npos);
}

TEST(Classifier, NonDecayingLocalNormIsInconclusive) {
  auto rec = synthetic(1000, 0.5, [](double) { return 0.0; }, [](double) { return 0.0; },
                       [](double) { return 0.2; });
  auto rep = classify(rec, ClassifierParams{});
  EXPECT_EQ(rep.label, "inconclusive");
}

TEST(Classifier, GroundDominatedRecordIsCaseIIa) {
  auto rec = synthetic(100, 0.1, [](double) { return 0.5; }, [](double) { return 0.01; });
  auto rep = classify(rec, ClassifierParams{});
  EXPECT_EQ(rep.label, "II_a") << rep.reason;
  EXPECT_TRUE(rep.thresholds.ground_side);
  EXPECT_EQ(rep.thresholds.subcase, 3);
}

TEST(Classifier, StableExcitedRecordIsCaseIII) {
  auto rec = synthetic(100, 0.1, [](double) { return 0.0; },
                       [](double t) { return std::polar(0.5, -3.0 * t); });
  auto rep = classify(rec, ClassifierParams{});
  EXPECT_EQ(rep.label, "III") << rep.reason;
  EXPECT_TRUE(rep.thresholds.t1.finite);
  EXPECT_FALSE(rep.thresholds.t2.finite);
}

TEST(Classifier, NoPlateauMeansNotCaseIIb) {
  const double x0 = 1e-7, rate = 0.05;
  auto rec = synthetic(300, 0.05, [&](double t) { return x0 * std::exp(rate * t); },
                       [](double t) { return 1.0 + 0.5 * std::sin(t); });
  auto rep = classify(rec, fixed_alpha(2.0));
  EXPECT_NE(rep.label, "II_b");
  EXPECT_FALSE(rep.plateau);
}

TEST(Classifier, NormalFormTrajectoryIsCaseIIb) {
  const double g = 0.005;
  std::vector<double> times;
  for (int k = 0; k <= 4000; ++k) times.push_back(k * 1.0);
  NFOptions o;
  o.output_times = times;
  auto nf = integrate_radial_nf(1e-5, 1.0, g, 4000, {}, o);
  TrajectoryRecord rec;
  for (const auto& q : nf.samples) {
    TrajectorySample s;
    s.t = q.t;
    s.x = std::polar(q.mu, 16.0 * q.t);
    s.y = std::polar(q.nu, 3.0 * q.t);
    s.psi_l2loc = 1;
    rec.samples.push_back(s);
  }
  rec.metadata["resonance.gamma0"] = format_number(g);
  auto rep = classify(rec, ClassifierParams{});
  EXPECT_EQ(rep.label, "II_b") << rep.reason;
  EXPECT_DOUBLE_EQ(rep.gamma0, g);
  ASSERT_TRUE(rep.growth.has_value());
  EXPECT_GE(rep.growth->ratio, 0.75);
  EXPECT_LE(rep.growth->ratio, 1.25);

  // With alpha fixed, thinning the samples moves each threshold by at most one coarse interval.
  auto p = fixed_alpha(rep.thresholds.alpha);
  auto full = classify(rec, p);
  auto thin = classify(rec.thinned(2), p);
  EXPECT_EQ(full.label, "II_b");
  EXPECT_EQ(thin.label, full.label);
  auto close = [](const Threshold& a, const Threshold& b) {
    return a.finite == b.finite && (!a.finite || std::abs(a.t - b.t) <= 2.0 + 1e-12);
  };
  const auto& a = full.thresholds;
  const auto& b = thin.thresholds;
  EXPECT_TRUE(close(a.t1, b.t1) && close(a.t2, b.t2) && close(a.t3, b.t3) && close(a.t4, b.t4));
}

TEST(Classifier, ThresholdsAreOrderedForRandomRecords) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    double n = 0.1 + u(rng), x0 = std::pow(10.0, -8 + 6 * u(rng)), rate = 0.01 + 0.1 * u(rng);
    double tc = 50 + 200 * u(rng), tau = 5 + 20 * u(rng);
    auto rec = synthetic(
        300, 0.1, [&](double t) { return std::min(x0 * std::exp(rate * t), 2 * n); },
        [&](double t) { return t < tc ? n : n * std::exp(-(t - tc) / tau); });
    ClassifierParams p;
    if (u(rng) < 0.5) p.alpha = 0.5 + 3 * u(rng);
    auto th = detect_thresholds(rec, p);
    auto v = [](const Threshold& t) { return t.finite ? t.t : INFINITY; };
    EXPECT_LE(v(th.t1), v(th.t2)) << trial;
    EXPECT_LE(v(th.t2), v(th.t3)) << trial;
    EXPECT_LE(v(th.t3), v(th.t4)) << trial;
    if (!p.alpha) EXPECT_GE(v(th.t1), std::min(1.0, rec.horizon())) << trial;

    auto rep = classify(rec, p);
    if (rep.label == "I") EXPECT_FALSE(th.t1.finite);
    if (rep.label == "III") EXPECT_FALSE(th.t2.finite);
    if (rep.label == "II_a") EXPECT_TRUE(th.ground_side);
    if (rep.label == "II_b") {
      EXPECT_TRUE(th.t2.finite && th.t3.finite);
      EXPECT_FALSE(th.ground_side);
    }
  }
}

TEST(Classifier, LargerAlphaNeverMovesT1Earlier) {
  auto rec = synthetic(100, 0.1, [](double) { return 0.0; }, [](double t) { return 0.6 * std::exp(-0.001 * t); });
  double prev = -1;
  for (double a : {0.2, 0.5, 1.0, 2.0, 4.0}) {
    auto th = detect_thresholds(rec, fixed_alpha(a));
    double t1 = th.t1.finite ? th.t1.t : INFINITY;
    EXPECT_GE(t1, prev) << a;
    prev = t1;
  }
}

TEST(Classifier, RejectsBadRecordsAndParameters) {
  auto small = synthetic(5, 0.1, [](double) { return 0.0; }, [](double) { return 0.5; });
  EXPECT_EQ(code_of([&] { detect_thresholds(small, ClassifierParams{}); }), ErrorCode::TooFewSamples);
  auto rep = classify(small, ClassifierParams{});
  EXPECT_EQ(rep.label, "inconclusive");
  EXPECT_NE(rep.reason.find("too few samples"), std::string::npos);

  auto rec = synthetic(20, 0.1, [](double) { return 0.0; }, [](double) { return 0.5; });
  std::swap(rec.samples[10].t, rec.samples[11].t);
  EXPECT_EQ(code_of([&] { detect_thresholds(rec, ClassifierParams{}); }), ErrorCode::NonMonotoneTime);

  ClassifierParams p;
  p.delta = 0.5;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidArgument);
  p = {};
  p.iota = 0.3;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidArgument);
  p = {};
  p.alpha = -1;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidArgument);
}

TEST(Classifier, ZeroHorizonRecordIsInconclusive) {
  auto rec = synthetic(0, 0.1, [](double) { return 0.0; }, [](double) { return 0.5; });
  ASSERT_EQ(rec.samples.size(), 1u);
  EXPECT_EQ(classify(rec, ClassifierParams{}).label, "inconclusive");
}

TEST(Fits, ExactPowerLaw) {
  std::vector<double> t, v;
  for (int k = 0; k <= 300; ++k) {
    t.push_back(std::pow(10.0, k / 100.0));
    v.push_back(3 * std::pow(t.back(), -1.3));
  }
  auto f = fit_decay_exponent(t, v, {1, 1000});
  EXPECT_NEAR(f.slope, -1.3, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_LE(f.ci_lo, f.slope);
  EXPECT_GE(f.ci_hi, f.slope);
}

TEST(Fits, InverseSquareRootApproachesMinusHalf) {
  const double a = 1, b = 10;
  std::vector<double> t, v;
  for (int k = 0; k <= 400; ++k) {
    t.push_back(std::pow(10.0, k / 100.0));
    v.push_back(1 / std::sqrt(a + b * t.back()));
  }
  auto f = fit_decay_exponent(t, v, {1e2 * a / b, 1e4 * a / b});
  EXPECT_NEAR(f.slope, -0.5, 0.02);
}

TEST(Fits, DecayFitErrors) {
  std::vector<double> t{1, 2, 5, 10, 20, 50, 100}, v{1, 0.5, 0.2, 0.1, 0, 0.02, 0.01};
  EXPECT_EQ(code_of([&] { fit_decay_exponent(t, v, {1, 100}); }), ErrorCode::NonPositiveValues);
  EXPECT_EQ(code_of([&] { fit_decay_exponent(t, v, {2, 10}); }), ErrorCode::WindowError);
  EXPECT_EQ(code_of([&] { fit_decay_exponent(t, v, {1, 1000}); }), ErrorCode::WindowError);
  EXPECT_EQ(code_of([&] { fit_decay_exponent(t, v, {0, 100}); }), ErrorCode::WindowError);
}

TEST(Fits, ExactExponentialGrowth) {
  std::vector<double> t, x;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.5 * k);
    x.push_back(2 * std::exp(0.3 * t.back()));
  }
  auto g = fit_growth_rate(t, x, {5, 40}, 0.3, 1.0);
  EXPECT_NEAR(g.rate, 0.3, 1e-10);
  EXPECT_NEAR(g.ratio, 1.0, 1e-9);
  EXPECT_TRUE(g.in_band);
  EXPECT_EQ(code_of([&] { fit_growth_rate(t, x, {5, 40}, 0.3, 1.0, 0.5, 1.6, 30); }), ErrorCode::WindowError);
}

TEST(Inequalities, ConstantsAreBoundedAndStable) {
  auto res = verify_integral_inequalities();
  ASSERT_EQ(res.size(), 4u);
  for (const auto& r : res) {
    EXPECT_EQ(r.samples, 1000);
    EXPECT_TRUE(r.pass()) << r.name << " " << r.constant << " " << r.constant_doubled;
  }
  InequalityOptions o;
  o.samples = 999;
  EXPECT_EQ(code_of([&] { verify_integral_inequalities(o); }), ErrorCode::InvalidArgument);
}

TEST(Inequalities, ClosedFormsMatchQuadrature) {
  // Midpoint rule in d on [0, L], graded as d = L w^4 toward the singular end d = 0.
  auto q = [](const std::function<double(double)>& g, double L) {
    const int n = 200000;
    double s = 0;
    for (int i = 0; i < n; ++i) {
      double w0 = double(i) / n, w1 = double(i + 1) / n, wm = 0.5 * (w0 + w1);
      s += g(L * std::pow(wm, 4)) * L * (std::pow(w1, 4) - std::pow(w0, 4));
    }
    return s;
  };
  auto kmin = [](double u) { return std::min(std::pow(u, -1.5), std::pow(u, -0.75)); };
  // d = T - s, so t - s = tau + d.
  for (auto [tau, dt] : {std::pair{0.0, 2.0}, {3.0, 5.0}, {0.5, 40.0}, {0.0, 300.0}}) {
    double l1 = q([&](double d) { return std::pow(tau + d, -0.75); }, dt);
    double l2 = q([&](double d) { return kmin(tau + d); }, dt);
    EXPECT_NEAR(cal::lhs1(tau, dt), l1, 1e-4 * l1) << tau << " " << dt;
    EXPECT_NEAR(cal::lhs2(tau, dt), l2, 1e-4 * l2) << tau << " " << dt;
  }
  // d = t - s on [0, t - T].
  for (auto [T, t] : {std::pair{1.0, 3.0}, {2.0, 50.0}, {5.0, 5.5}, {1.0, 1e4}}) {
    double l3 = q([&](double d) { return std::pow(d, -0.75) * std::pow(t - d, -1.5); }, t - T);
    double l4 = q([&](double d) { return kmin(d) * std::pow(t - d, -1.5); }, t - T);
    EXPECT_NEAR(cal::lhs3(T, t), l3, 2e-3 * l3) << T << " " << t;
    EXPECT_NEAR(cal::lhs4(T, t), l4, 2e-3 * l4) << T << " " << t;
  }
}

TEST(Inequalities, BoundaryCases) {
  // T = t/2 over a wide range of t keeps the third ratio bounded.
  double worst = 0;
  for (double t = 2; t < 1e7; t *= 1.7) worst = std::max(worst, cal::lhs3(t / 2, t) / cal::rhs3(t / 2, t));
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_LT(worst, 10);
  // tau <= 1 (t within one unit of T) keeps the second ratio bounded.
  worst = 0;
  for (double dt = 1; dt < 1e6; dt *= 2.3)
    for (double tau : {0.0, 0.25, 0.5, 1.0}) worst = std::max(worst, cal::lhs2(tau, dt) / cal::rhs2(tau, dt));
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_LT(worst, 10);
}

TEST(Report, RoundTrip) {
  auto rec = synthetic(100, 0.1, [](double) { return 0.0; }, [](double) { return 0.5; });
  Report r = classify(rec, ClassifierParams{}).to_report();
  std::stringstream ss;
  r.write(ss);
  Report back = Report::read(ss);
  EXPECT_EQ(back, r);
  EXPECT_EQ(back.get("classification", "case"), "III");
  EXPECT_EQ(code_of([&] { back.get("classification", "nope"); }), ErrorCode::IoError);
  std::istringstream bad("key: value\n");
  EXPECT_EQ(code_of([&] { Report::read(bad); }), ErrorCode::IoError);
}
