#pragma once

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <string>
#include <vector>

#include "nlsprof/spectrum.hpp"
#include "nlsprof/spline.hpp"

namespace nlsprof {

enum class Branch { Ground, Excited };

inline const char* to_string(Branch b) { return b == Branch::Ground ? "ground" : "excited"; }

struct NewtonOptions {
  int max_iterations = 50;
  double tolerance = 1e-12;  // relative residual target
  double accept = 1e-11;     // relative residual accepted after stagnation
};

struct BoundStateSample {
  double param = 0;     // n = <phi0,Q> or m = <phi1,Q>
  double energy = 0;
  VectorXd q;           // profile, u-coordinates
  VectorXd r;           // dQ/dE
  VectorXd dq;          // dQ/dparam
  double de = 0;        // dE/dparam
  double residual = 0;  // ||(H0 + lambda Q^2 - E) Q||
  double norm = 0;
  double c1 = 0;        // 1 / <Q, R>
  int iterations = 0;
};

struct NewtonResult {
  VectorXd v;  // reduced coordinates
  double energy = 0;
  double residual = 0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Solve the symmetric tridiagonal system (T + diag(d)) x = b for each column of b.
inline bool tridiag_solve(const Hamiltonian& h, const VectorXd& shift, MatrixXd& b) {
  const int n = h.grid->size();
  VectorXd d = h.diag + shift;
  VectorXd dl = VectorXd::Constant(n - 1, h.off), du = dl;
  lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, n, static_cast<lapack_int>(b.cols()), dl.data(), d.data(),
                                  du.data(), b.data(), n);
  return info == 0;
}

inline VectorXd stationary_residual(const Hamiltonian& h, const VectorXd& w, double lambda, const VectorXd& v,
                                    double e) {
  VectorXd f = h.apply_reduced(v);
  f.array() += lambda * v.array().cube() / w.array() - e * v.array();
  return f;
}

}  // namespace detail

// Newton on (H0 + lambda Q^2 - E) Q = 0 with <phi_b, Q> = p, E as Lagrange parameter.
inline NewtonResult solve_stationary(const LinearSpectrum& s, double lambda, const VectorXd& chi_b, double p,
                                     VectorXd v, double e, const NewtonOptions& opt = {}) {
  const Hamiltonian& h = s.hamiltonian();
  const VectorXd& w = s.grid().weights();
  NewtonResult out;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opt.max_iterations; ++it) {
    VectorXd f = detail::stationary_residual(h, w, lambda, v, e);
    double g = chi_b.dot(v) - p;
    double rel = f.norm() / std::max(v.norm(), 1e-300);
    out.iterations = it;
    if ((rel <= opt.tolerance && std::abs(g) <= 1e-13 * std::abs(p)) ||
        (rel <= opt.accept && rel >= 0.5 * best)) {
      out.converged = true;
      break;
    }
    best = std::min(best, rel);
    if (it == opt.max_iterations) break;
    MatrixXd rhs(v.size(), 2);
    rhs.col(0) = -f;
    rhs.col(1) = v;
    VectorXd shift = 3 * lambda * v.array().square() / w.array() - e;
    if (!detail::tridiag_solve(h, shift, rhs)) break;
    double denom = chi_b.dot(rhs.col(1));
    if (denom == 0 || !std::isfinite(denom)) break;
    double de = (-g - chi_b.dot(rhs.col(0))) / denom;
    v += rhs.col(0) + de * rhs.col(1);
    e += de;
    if (!v.allFinite() || !std::isfinite(e)) break;
  }
  out.v = v;
  out.energy = e;
  out.residual = detail::stationary_residual(h, w, lambda, v, e).norm();
  return out;
}

class BoundStateFamily {
 public:
  Branch branch = Branch::Ground;
  double lambda = 1;
  SpectrumPtr spectrum;
  std::vector<BoundStateSample> samples;  // ascending parameter

  // Regression E - e_b = a2 p^2 + a4 p^4 and the first-order value lambda * int phi_b^4.
  double e2_fit = 0, e4_fit = 0, e2_perturbative = 0;
  double quadratic_fit_residual = 0;  // lower half, one-term fit, max relative deviation
  double remainder_constant = 0;      // K in ||Q - p phi_b|| <= K p^3
  double remainder_spread = 0;        // max/min of the ratio over the branch

  double linear_energy() const { return branch == Branch::Ground ? spectrum->e0() : spectrum->e1(); }
  const RadialField& linear_mode() const { return branch == Branch::Ground ? spectrum->phi0() : spectrum->phi1(); }
  double max_param() const { return samples.back().param; }
  GridPtr grid_ptr() const { return spectrum->grid_ptr(); }

  // Profile, frequency and dQ/dp at parameter p in [0, max], real.
  VectorXd profile(double p) const {
    check_range(p);
    if (p == 0) return VectorXd::Zero(spectrum->size());
    return p * linear_mode().values().real() + remainder_(p);
  }
  double energy(double p) const {
    check_range(p);
    return energy_(p)[0];
  }
  VectorXd profile_derivative(double p) const {
    check_range(p);
    return linear_mode().values().real() + derivative_(p);
  }

  void build_interpolants() {
    const VectorXd& phib = linear_mode().values().real();
    std::vector<double> knots{0.0};
    const int n = spectrum->size(), k = static_cast<int>(samples.size());
    MatrixXd h(n, k + 1), e(1, k + 1), dq(n, k + 1);
    h.col(0).setZero();
    dq.col(0).setZero();
    e(0, 0) = linear_energy();
    for (int i = 0; i < k; ++i) {
      knots.push_back(samples[i].param);
      h.col(i + 1) = samples[i].q - samples[i].param * phib;
      dq.col(i + 1) = samples[i].dq - phib;
      e(0, i + 1) = samples[i].energy;
    }
    remainder_ = VectorSpline(knots, h);
    energy_ = VectorSpline(knots, e);
    derivative_ = VectorSpline(knots, dq);
  }

  void check_range(double p) const {
    require(p >= 0 && p <= max_param() * (1 + 1e-12), ErrorCode::OutOfRange,
            "parameter " + std::to_string(p) + " outside the computed branch [0, " + std::to_string(max_param()) + "]");
  }

  void write_csv(const std::string& path) const {
    std::ofstream os(path);
    require(bool(os), ErrorCode::IoError, "cannot write " + path);
    os << "param,E,norm_L2,c1,residual\n" << std::setprecision(17);
    for (const auto& s : samples)
      os << s.param << ',' << s.energy << ',' << s.norm << ',' << s.c1 << ',' << s.residual << '\n';
  }

 private:
  VectorSpline remainder_, energy_, derivative_;
};

using FamilyPtr = std::shared_ptr<const BoundStateFamily>;

// Geometric sampling p0 * 2^{-k/2}, k = 0..count-1, ascending.
inline std::vector<double> geometric_grid(double p0, int count) {
  std::vector<double> g;
  for (int k = count - 1; k >= 0; --k) g.push_back(p0 * std::pow(2.0, -0.5 * k));
  return g;
}

// Geometric points merged with a uniform grid of the same top value (dense enough for interpolation).
inline std::vector<double> interpolation_grid(double p0, int geometric = 16, int uniform = 48) {
  std::vector<double> g = geometric_grid(p0, geometric);
  for (int j = 1; j <= uniform; ++j) g.push_back(p0 * j / uniform);
  std::sort(g.begin(), g.end());
  std::vector<double> out;
  for (double x : g)
    if (out.empty() || x > out.back() * (1 + 1e-9)) out.push_back(x);
  return out;
}

namespace detail {

inline void fill_derivatives(const LinearSpectrum& s, double lambda, const VectorXd& chi_b, BoundStateSample& smp,
                             const VectorXd& v) {
  const VectorXd& w = s.grid().weights();
  const VectorXd& sw = s.grid().sqrt_weights();
  MatrixXd rhs = v;
  VectorXd shift = 3 * lambda * v.array().square() / w.array() - smp.energy;
  if (!tridiag_solve(s.hamiltonian(), shift, rhs) || !rhs.allFinite())
    fail(ErrorCode::DerivativeFailed, "linearized operator singular at parameter " + std::to_string(smp.param));
  VectorXd rv = rhs.col(0);
  double dp_de = chi_b.dot(rv);
  double qr = v.dot(rv);
  if (std::abs(dp_de) < 1e-300 || std::abs(qr) < 1e-300)
    fail(ErrorCode::DerivativeFailed, "branch fold at parameter " + std::to_string(smp.param));
  smp.r = rv.cwiseQuotient(sw);
  smp.dq = smp.r / dp_de;
  smp.de = 1.0 / dp_de;
  smp.c1 = 1.0 / qr;
}

}  // namespace detail

struct ContinuationOptions {
  NewtonOptions newton;
};

inline BoundStateFamily continue_family(SpectrumPtr spec, Branch branch, double lambda, std::vector<double> grid,
                                        const ContinuationOptions& opt = {}) {
  require(lambda == 1 || lambda == -1, ErrorCode::InvalidArgument, "lambda must be +1 or -1");
  require(!grid.empty(), ErrorCode::InvalidArgument, "empty parameter grid");
  std::sort(grid.begin(), grid.end());
  require(grid.front() > 0, ErrorCode::InvalidArgument, "branch parameters must be positive");

  const LinearSpectrum& s = *spec;
  BoundStateFamily fam;
  fam.branch = branch;
  fam.lambda = lambda;
  fam.spectrum = spec;
  const int b = branch == Branch::Ground ? 0 : 1;
  const VectorXd chi_b = s.eigenvectors().col(b);
  const VectorXd& sw = s.grid().sqrt_weights();
  const VectorXd& w = s.grid().weights();
  const double eb = s.eigenvalues()[b];
  const VectorXd phib = s.mode(b).values().real();
  const double int4 = (w.array() * phib.array().pow(4)).sum();
  fam.e2_perturbative = lambda * int4;

  VectorXd v_prev;
  double p_prev = 0, e_prev = eb;
  VectorXd dv_prev = chi_b;
  double de_prev = 0;
  double last_good = 0;
  for (double p : grid) {
    VectorXd v0 = p_prev == 0 ? VectorXd(p * chi_b) : VectorXd(v_prev + (p - p_prev) * dv_prev);
    double e0 = p_prev == 0 ? eb + fam.e2_perturbative * p * p : e_prev + (p - p_prev) * de_prev;
    NewtonResult nr = solve_stationary(s, lambda, chi_b, p, v0, e0, opt.newton);
    if (!nr.converged)
      throw ContinuationError("Newton did not converge at parameter " + std::to_string(p) + " on the " +
                                  to_string(branch) + " branch",
                              last_good);
    BoundStateSample smp;
    smp.param = p;
    smp.energy = nr.energy;
    smp.q = nr.v.cwiseQuotient(sw);
    smp.residual = nr.residual;
    smp.norm = nr.v.norm();
    smp.iterations = nr.iterations;
    detail::fill_derivatives(s, lambda, chi_b, smp, nr.v);
    v_prev = nr.v;
    dv_prev = smp.dq.cwiseProduct(sw);
    de_prev = smp.de;
    p_prev = p;
    e_prev = nr.energy;
    last_good = p;
    fam.samples.push_back(std::move(smp));
  }

  // Expansion fits.
  const int k = static_cast<int>(fam.samples.size());
  if (k >= 2) {
    MatrixXd a(k, 2);
    VectorXd y(k);
    for (int i = 0; i < k; ++i) {
      double p2 = fam.samples[i].param * fam.samples[i].param;
      a(i, 0) = p2;
      a(i, 1) = p2 * p2;
      y[i] = fam.samples[i].energy - eb;
    }
    VectorXd c = a.colPivHouseholderQr().solve(y);
    fam.e2_fit = c[0];
    fam.e4_fit = c[1];
  }
  int half = std::max(1, k / 2);
  double num = 0, den = 0;
  for (int i = 0; i < half; ++i) {
    double p2 = fam.samples[i].param * fam.samples[i].param;
    num += p2 * (fam.samples[i].energy - eb);
    den += p2 * p2;
  }
  double e2_low = num / den;
  for (int i = 0; i < half; ++i) {
    double de = fam.samples[i].energy - eb;
    double p2 = fam.samples[i].param * fam.samples[i].param;
    fam.quadratic_fit_residual = std::max(fam.quadratic_fit_residual, std::abs(de - e2_low * p2) / std::abs(de));
  }
  double kmin = std::numeric_limits<double>::infinity(), kmax = 0;
  for (const auto& smp : fam.samples) {
    double ratio = (smp.q - smp.param * phib).cwiseProduct(sw).norm() / std::pow(smp.param, 3);
    kmin = std::min(kmin, ratio);
    kmax = std::max(kmax, ratio);
  }
  fam.remainder_constant = kmax;
  fam.remainder_spread = kmax / kmin;
  fam.build_interpolants();
  return fam;
}

inline BoundStateFamily continue_ground_family(SpectrumPtr spec, double lambda, std::vector<double> n_grid,
                                               const ContinuationOptions& opt = {}) {
  return continue_family(std::move(spec), Branch::Ground, lambda, std::move(n_grid), opt);
}

inline BoundStateFamily continue_excited_family(SpectrumPtr spec, double lambda, std::vector<double> m_grid,
                                                const ContinuationOptions& opt = {}) {
  return continue_family(std::move(spec), Branch::Excited, lambda, std::move(m_grid), opt);
}

// Q1(|y|) y/|y| as a field.
inline RadialField eval_excited(const BoundStateFamily& fam, cplx y) {
  double m = std::abs(y);
  if (m == 0) return RadialField(fam.grid_ptr());
  VectorXd q = fam.profile(m);
  cplx ph = y / m;
  return RadialField(fam.grid_ptr(), VectorXcd(q.cast<cplx>() * ph));
}

struct DerivativeCheck {
  std::vector<double> param;
  std::vector<double> c1;
  std::vector<double> r_norm;        // ||R_E||
  std::vector<double> fd_mismatch;   // ||R_lin - R_fd|| / ||R_lin||
  double max_mismatch = 0;
  bool sign_ok = true;               // lambda c1 > 0 everywhere
};

// R_E from the linearized solve versus a centered difference of two auxiliary Newton solves.
inline DerivativeCheck family_derivatives(const BoundStateFamily& fam, double rel_step = 1e-3) {
  require(fam.samples.size() >= 5, ErrorCode::InvalidArgument, "derivative check needs at least 5 samples");
  const LinearSpectrum& s = *fam.spectrum;
  const int b = fam.branch == Branch::Ground ? 0 : 1;
  const VectorXd chi_b = s.eigenvectors().col(b);
  const VectorXd& sw = s.grid().sqrt_weights();
  DerivativeCheck out;
  for (const auto& smp : fam.samples) {
    VectorXd v = smp.q.cwiseProduct(sw);
    double dp = rel_step * smp.param;
    NewtonResult hi = solve_stationary(s, fam.lambda, chi_b, smp.param + dp, v + dp * smp.dq.cwiseProduct(sw),
                                       smp.energy + dp * smp.de);
    NewtonResult lo = solve_stationary(s, fam.lambda, chi_b, smp.param - dp, v - dp * smp.dq.cwiseProduct(sw),
                                       smp.energy - dp * smp.de);
    if (!hi.converged || !lo.converged)
      fail(ErrorCode::DerivativeFailed, "auxiliary solve failed at parameter " + std::to_string(smp.param));
    VectorXd rfd = (hi.v - lo.v) / (hi.energy - lo.energy);
    VectorXd rlin = smp.r.cwiseProduct(sw);
    double mism = (rlin - rfd).norm() / rlin.norm();
    out.param.push_back(smp.param);
    out.c1.push_back(smp.c1);
    out.r_norm.push_back(rlin.norm());
    out.fd_mismatch.push_back(mism);
    out.max_mismatch = std::max(out.max_mismatch, mism);
    if (!(fam.lambda * smp.c1 > 0)) out.sign_ok = false;
  }
  return out;
}

}  // namespace nlsprof
