#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "nlsprof/bound_states.hpp"

namespace nlsprof {

// psi = x phi0 + Q1(y) + xi with xi in Range(P_c), y = m e^{i theta}.
struct Decomposition {
  cplx x = 0;
  cplx y = 0;
  RadialField xi;
  double theta = 0;  // unwrapped arg y

  double m() const { return std::abs(y); }
};

// u = e^{i e0 t} x, v = e^{i e1 t} y.
inline std::pair<cplx, cplx> rotating_amplitudes(const Decomposition& d, double t, double e0, double e1) {
  return {std::exp(cplx(0, e0 * t)) * d.x, std::exp(cplx(0, e1 * t)) * d.y};
}

inline double unwrap_phase(double raw, std::optional<double> previous) {
  if (!previous) return raw;
  const double tau = 2 * std::numbers::pi;
  return raw + tau * std::round((*previous - raw) / tau);
}

inline Decomposition decompose(const BoundStateFamily& fam, const RadialField& psi,
                               std::optional<double> previous_theta = std::nullopt) {
  const LinearSpectrum& s = *fam.spectrum;
  require(fam.branch == Branch::Excited, ErrorCode::InvalidArgument, "decomposition needs the excited family");
  Decomposition d;
  d.y = inner(s.phi1(), psi);
  RadialField q = eval_excited(fam, d.y);
  d.x = inner(s.phi0(), psi) - inner(s.phi0(), q);
  d.xi = project_continuous(s, psi - q);
  d.theta = d.m() > 0 ? unwrap_phase(std::arg(d.y), previous_theta) : previous_theta.value_or(0.0);
  return d;
}

inline RadialField recompose(const BoundStateFamily& fam, const Decomposition& d) {
  RadialField out = d.x * fam.spectrum->phi0();
  out += eval_excited(fam, d.y);
  out += d.xi;
  return out;
}

struct ModulationRates {
  double m_dot = 0;
  double theta_dot = 0;
  RadialField lambda_pi;  // (theta_dot Q1 - i m_dot Q1') e^{i theta}, phi1 component removed
};

struct NonlinearityDiagnostics {
  RadialField g, g3;
  std::optional<ModulationRates> rates;  // empty when m is below the phase threshold
  double g_l1loc = 0, g3_l1loc = 0, remainder_l1loc = 0;  // remainder = G - G3
  double xi_l2loc = 0, xi_l4 = 0;
  double small_x = 0;           // X = n alpha ||xi||_L2loc + alpha ||xi||_L4^2
  double bound_quadratic = 0;   // n^2 |x| + X
  double bound_quartic = 0;     // n^4 |x| + X
};

struct DiagnosticOptions {
  double n = 0;
  double alpha = 0;
  double r1 = 4;
  double phase_threshold = 1e-10;
};

// m' = (phi1, Im G e^{-i theta}),  theta' = -(1/m) (phi1, Re G e^{-i theta}).
inline ModulationRates modulation_rates(const BoundStateFamily& fam, const Decomposition& d, const RadialField& g,
                                        double phase_threshold = 1e-10) {
  double m = d.m();
  if (m < phase_threshold)
    fail(ErrorCode::PhaseUndefined, "excited amplitude " + std::to_string(m) + " below the phase threshold");
  const LinearSpectrum& s = *fam.spectrum;
  const VectorXd& w = s.grid().weights();
  const VectorXd phi1 = s.phi1().values().real();
  cplx rot = std::exp(cplx(0, -d.theta));
  double im = 0, re = 0;
  for (int i = 0; i < g.size(); ++i) {
    cplx z = g[i] * rot;
    im += w[i] * phi1[i] * z.imag();
    re += w[i] * phi1[i] * z.real();
  }
  ModulationRates r;
  r.m_dot = im;
  r.theta_dot = -re / m;
  VectorXd q = fam.profile(m);
  VectorXd dq = fam.profile_derivative(m);
  VectorXcd lam = (r.theta_dot * q.cast<cplx>() - cplx(0, r.m_dot) * dq.cast<cplx>()) * std::exp(cplx(0, d.theta));
  RadialField lf(fam.grid_ptr(), lam);
  lf -= inner(s.phi1(), lf) * s.phi1();
  r.lambda_pi = lf;
  return r;
}

// G = lambda |psi|^2 psi - lambda Q1^3 e^{i theta} and its cubic bound-state part G3.
inline NonlinearityDiagnostics nonlinearity_terms(const BoundStateFamily& fam, const Decomposition& d, double lambda,
                                                  const DiagnosticOptions& opt = {}) {
  const LinearSpectrum& s = *fam.spectrum;
  const int n = s.size();
  double m = d.m();
  VectorXd q = m > 0 ? fam.profile(m) : VectorXd::Zero(n);
  cplx ph = std::exp(cplx(0, d.theta));
  const VectorXd p0 = s.phi0().values().real(), p1 = s.phi1().values().real();
  const cplx x = d.x, y = d.y;
  const cplx c011 = lambda * (y * y * std::conj(x) + 2 * std::norm(y) * x);
  const cplx c001 = lambda * (2 * std::norm(x) * y + x * x * std::conj(y));
  const cplx c000 = lambda * std::norm(x) * x;
  VectorXcd g(n), g3(n);
  for (int i = 0; i < n; ++i) {
    cplx q1 = q[i] * ph;
    cplx psi = x * p0[i] + q1 + d.xi[i];
    g[i] = lambda * std::norm(psi) * psi - lambda * q[i] * q[i] * q[i] * ph;
    g3[i] = c011 * p0[i] * p1[i] * p1[i] + c001 * p0[i] * p0[i] * p1[i] + c000 * p0[i] * p0[i] * p0[i];
  }
  NonlinearityDiagnostics out;
  out.g = RadialField(fam.grid_ptr(), g);
  out.g3 = RadialField(fam.grid_ptr(), g3);
  out.g_l1loc = local_norms(out.g, opt.r1).l1loc;
  out.g3_l1loc = local_norms(out.g3, opt.r1).l1loc;
  out.remainder_l1loc = local_norms(out.g - out.g3, opt.r1).l1loc;
  LocalNorms xn = local_norms(d.xi, opt.r1);
  out.xi_l2loc = xn.l2loc;
  out.xi_l4 = xn.l4;
  out.small_x = opt.n * opt.alpha * xn.l2loc + opt.alpha * xn.l4 * xn.l4;
  out.bound_quadratic = opt.n * opt.n * std::abs(x) + out.small_x;
  out.bound_quartic = std::pow(opt.n, 4) * std::abs(x) + out.small_x;
  if (m >= opt.phase_threshold) out.rates = modulation_rates(fam, d, out.g, opt.phase_threshold);
  return out;
}

}  // namespace nlsprof
