#pragma once

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <string>
#include <vector>

#include "nlsprof/resonance.hpp"

namespace nlsprof {

// Phi1..Phi5 with
//   Phi1 = -lambda (H0 - e_res - i sigma)^{-1} P_c phi0 phi1^2
//   Phi2 = -2 lambda (H0 - e0)^{-1} P_c phi0 phi1^2,  Phi3 = -2 lambda (H0 - e1)^{-1} P_c phi0^2 phi1
//   Phi4 = -lambda (H0 - 2e0 + e1)^{-1} P_c phi0^2 phi1, Phi5 = -lambda (H0 - e0)^{-1} P_c phi0^3
struct ProfileSet {
  std::array<RadialField, 5> phi;
  std::array<RadialField, 3> source;  // phi0 phi1^2, phi0^2 phi1, phi0^3
  std::array<cplx, 5> z{};
  std::array<double, 5> coefficient{};
  std::array<int, 5> source_index{};
  std::array<double, 5> residual{};  // relative
  double sigma = 0;                  // regularization of Phi1
  double lambda = 1;
};

struct ProfileOptions {
  double sigma_spacings = 2.0;  // sigma = this many local level spacings at e_res
};

inline ProfileSet compute_profiles(const LinearSpectrum& s, double lambda, const ProfileOptions& opt = {}) {
  require(s.resonance() && s.e_res() > 0, ErrorCode::AssumptionViolated, "profiles need e0 < 2 e1 < 0 < e_res");
  ProfileSet p;
  p.lambda = lambda;
  const VectorXcd& a = s.phi0().values();
  const VectorXcd& b = s.phi1().values();
  p.source[0] = RadialField(s.grid_ptr(), VectorXcd(a.cwiseProduct(b).cwiseProduct(b)));
  p.source[1] = RadialField(s.grid_ptr(), VectorXcd(a.cwiseProduct(a).cwiseProduct(b)));
  p.source[2] = RadialField(s.grid_ptr(), VectorXcd(a.cwiseProduct(a).cwiseProduct(a)));
  p.sigma = opt.sigma_spacings * detail::local_spacing(s.eigenvalues(), s.e_res());
  const double e0 = s.e0(), e1 = s.e1();
  p.z = {cplx(s.e_res(), p.sigma), cplx(e0), cplx(e1), cplx(2 * e0 - e1), cplx(e0)};
  p.coefficient = {-lambda, -2 * lambda, -2 * lambda, -lambda, -lambda};
  p.source_index = {0, 0, 1, 1, 2};
  for (int j = 0; j < 5; ++j) {
    RadialField pf = project_continuous(s, p.source[p.source_index[j]]);
    p.phi[j] = p.coefficient[j] * resolvent_apply(s, p.z[j], pf);
    // (H0 - z) Phi - coefficient P_c source = 0
    RadialField r = s.hamiltonian().apply(p.phi[j]) - p.z[j] * p.phi[j] - p.coefficient[j] * pf;
    double scale = std::abs(p.coefficient[j]) * l2_norm(pf);
    p.residual[j] = scale > 0 ? l2_norm(r) / scale : l2_norm(r);
  }
  return p;
}

// y^2 conj(x) Phi1 + |y|^2 x Phi2 + |x|^2 y Phi3 + x^2 conj(y) Phi4 + |x|^2 x Phi5.
inline RadialField xi2(cplx x, cplx y, const ProfileSet& p) {
  RadialField out = (y * y * std::conj(x)) * p.phi[0];
  out += (std::norm(y) * x) * p.phi[1];
  out += (std::norm(x) * y) * p.phi[2];
  out += (x * x * std::conj(y)) * p.phi[3];
  out += (std::norm(x) * x) * p.phi[4];
  return out;
}

struct NFSample {
  double t = 0, mu = 0, nu = 0;
};

struct NFSeries {
  std::vector<NFSample> samples;
  bool clipped = false;
  int clip_events = 0;
  long steps = 0;

  void write_csv(const std::string& path) const {
    std::ofstream os(path);
    require(bool(os), ErrorCode::IoError, "cannot write " + path);
    os << "t,mu,nu\n" << std::setprecision(17);
    for (const auto& s : samples) os << s.t << ',' << s.mu << ',' << s.nu << '\n';
  }
};

// Extra terms (g_u, g_v) added to d|mu|/dt and d|nu|/dt.
using NFForcing = std::function<std::array<double, 2>(double t, double mu, double nu)>;

// Forcing that cancels the growth of |mu| exactly.
inline NFForcing freeze_mu(double gamma0) {
  return [gamma0](double, double mu, double nu) -> std::array<double, 2> {
    double n2 = nu * nu;
    return {-gamma0 * n2 * n2 * mu, 0.0};
  };
}

struct NFOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-16;
  std::vector<double> output_times;  // empty: every accepted step
  long max_steps = 50'000'000;
};

// d|mu|/dt = gamma0 |nu|^4 |mu| + g_u,  d|nu|/dt = -2 gamma0 |mu|^2 |nu|^3 + g_v.
inline NFSeries integrate_radial_nf(double mu0, double nu0, double gamma0, double T, const NFForcing& forcing = {},
                                    const NFOptions& opt = {}) {
  require(mu0 >= 0 && nu0 >= 0 && gamma0 >= 0, ErrorCode::InvalidArgument, "amplitudes and gamma0 must be >= 0");
  require(T >= 0 && std::isfinite(T), ErrorCode::InvalidArgument, "horizon must be finite and nonnegative");
  using State = std::array<double, 2>;
  namespace ode = boost::numeric::odeint;
  auto rhs = [&](const State& x, State& dx, double t) {
    double n2 = x[1] * x[1];
    dx[0] = gamma0 * n2 * n2 * x[0];
    dx[1] = -2 * gamma0 * x[0] * x[0] * n2 * x[1];
    if (forcing) {
      State g = forcing(t, x[0], x[1]);
      dx[0] += g[0];
      dx[1] += g[1];
    }
  };
  NFSeries out;
  out.samples.push_back({0.0, mu0, nu0});
  if (T == 0) return out;

  double amp = std::max(mu0, nu0);
  double rate = gamma0 * std::pow(amp, 4);
  double dt0 = rate > 0 ? std::min(T, 1e-3 / rate) : T;
  auto stepper = ode::make_dense_output(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>());
  stepper.initialize(State{mu0, nu0}, 0.0, dt0);
  size_t next_out = 0;
  while (!opt.output_times.empty() && next_out < opt.output_times.size() && opt.output_times[next_out] <= 0)
    ++next_out;
  while (stepper.current_time() < T) {
    require(out.steps < opt.max_steps, ErrorCode::InvalidArgument, "normal-form integration exceeded step limit");
    auto [t_old, t_new] = stepper.do_step(rhs);
    ++out.steps;
    if (!opt.output_times.empty()) {
      while (next_out < opt.output_times.size() && opt.output_times[next_out] <= std::min(t_new, T)) {
        State xs;
        stepper.calc_state(opt.output_times[next_out], xs);
        out.samples.push_back({opt.output_times[next_out], std::max(xs[0], 0.0), std::max(xs[1], 0.0)});
        ++next_out;
      }
    } else if (t_new <= T) {
      const State& xs = stepper.current_state();
      out.samples.push_back({t_new, std::max(xs[0], 0.0), std::max(xs[1], 0.0)});
    } else {
      State xs;
      stepper.calc_state(T, xs);
      out.samples.push_back({T, std::max(xs[0], 0.0), std::max(xs[1], 0.0)});
    }
    State cur = stepper.current_state();
    if (cur[0] < 0 || cur[1] < 0) {
      cur[0] = std::max(cur[0], 0.0);
      cur[1] = std::max(cur[1], 0.0);
      out.clipped = true;
      ++out.clip_events;
      stepper.initialize(cur, t_new, stepper.current_time_step());
    }
  }
  return out;
}

struct RelaxationPrediction {
  double n = 0;               // max(mu0, nu0)
  double mu_inf = 0;          // sqrt(mu0^2 + nu0^2/2), conserved without forcing
  double growth_time = 0;     // (gamma0 n^4)^{-1}
  double crossover_time = 0;  // time at which mu = nu (0 if mu0 >= nu0)
  double asymptotic_slope = 0;  // d|nu|^{-2}/dt -> 4 gamma0 mu_inf^2
  double upper_rate = 0;        // 4 gamma0 mu0^2  (|nu| <= (nu0^-2 + upper_rate t)^{-1/2})
  double lower_rate = 0;        // 4 gamma0 mu_inf^2
  double comparison_upper_rate = 0;  // 2e-6 gamma0 n^2
  double comparison_lower_rate = 0;  // 6 gamma0 n^2
  double nu0 = 0;

  double envelope_upper(double t) const { return 1 / std::sqrt(1 / (nu0 * nu0) + upper_rate * t); }
  double envelope_lower(double t) const { return 1 / std::sqrt(1 / (nu0 * nu0) + lower_rate * t); }
  double asymptotic_law(double t) const { return 1 / std::sqrt(asymptotic_slope * t); }
};

// Closed-form quantities of the forcing-free modulus system. The combination mu^2 + nu^2/2 is
// conserved, so S = nu^2 obeys dS/dt = -4 gamma0 (C - S/2) S^2 with C = mu0^2 + nu0^2/2.
// The crossover is the time at which mu = nu, i.e. S = 2C/3.
inline RelaxationPrediction predict_relaxation(double mu0, double nu0, double gamma0) {
  require(mu0 > 0 && nu0 > 0, ErrorCode::InvalidArgument, "relaxation prediction needs positive amplitudes");
  require(gamma0 > 0, ErrorCode::InvalidArgument, "relaxation prediction needs gamma0 > 0");
  RelaxationPrediction p;
  p.nu0 = nu0;
  p.n = std::max(mu0, nu0);
  double c = mu0 * mu0 + 0.5 * nu0 * nu0;
  p.mu_inf = std::sqrt(c);
  p.growth_time = 1 / (gamma0 * std::pow(p.n, 4));
  p.asymptotic_slope = 4 * gamma0 * c;
  p.upper_rate = 4 * gamma0 * mu0 * mu0;
  p.lower_rate = 4 * gamma0 * c;
  p.comparison_upper_rate = 2e-6 * gamma0 * p.n * p.n;
  p.comparison_lower_rate = 6 * gamma0 * p.n * p.n;
  const double b = 0.5;
  auto prim = [&](double s) { return -1 / (c * s) + (b / (c * c)) * std::log(s) - (b / (c * c)) * std::log(c - b * s); };
  double s0 = nu0 * nu0, sx = 2 * c / 3;
  p.crossover_time = s0 > sx ? (prim(s0) - prim(sx)) / (4 * gamma0) : 0.0;
  return p;
}

}  // namespace nlsprof
