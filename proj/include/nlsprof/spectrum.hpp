#pragma once

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "nlsprof/grid.hpp"
#include "nlsprof/potential.hpp"

namespace nlsprof {

// -d^2/dr^2 + V acting on v = sqrt(w) u (equivalently on r u up to a constant),
// Dirichlet at both ends. Symmetric tridiagonal.
struct Hamiltonian {
  GridPtr grid;
  Potential potential;
  VectorXd v;     // potential on nodes
  VectorXd diag;  // 2/h^2 + V
  double off = 0; // -1/h^2

  // H applied in reduced coordinates.
  template <class Vec>
  Vec apply_reduced(const Vec& x) const {
    const int n = grid->size();
    Vec y(n);
    for (int i = 0; i < n; ++i) {
      auto s = diag[i] * x[i];
      if (i > 0) s += off * x[i - 1];
      if (i + 1 < n) s += off * x[i + 1];
      y[i] = s;
    }
    return y;
  }

  // H applied to a field u (u-coordinates in and out).
  RadialField apply(const RadialField& f) const {
    const VectorXd& sw = grid->sqrt_weights();
    VectorXcd x = f.values().cwiseProduct(sw.cast<cplx>());
    VectorXcd y = apply_reduced(x);
    return RadialField(f.grid_ptr(), VectorXcd(y.cwiseQuotient(sw.cast<cplx>())));
  }

  MatrixXd dense() const {
    const int n = grid->size();
    MatrixXd m = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      m(i, i) = diag[i];
      if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = off;
    }
    return m;
  }
};

inline Hamiltonian assemble_hamiltonian(GridPtr grid, const Potential& pot) {
  Hamiltonian h;
  h.grid = grid;
  h.potential = pot;
  h.v = pot.on(*grid);
  require(h.v.allFinite(), ErrorCode::InvalidPotential, "potential has non-finite values on the grid");
  const double dx = grid->spacing();
  h.diag = h.v.array() + 2.0 / (dx * dx);
  h.off = -1.0 / (dx * dx);
  return h;
}

struct SpectrumOptions {
  bool require_two_bound_states = true;
  double residual_tolerance = 1e-10;
};

// Full eigen-decomposition of the discrete H0 plus the two lowest modes.
class LinearSpectrum {
 public:
  LinearSpectrum(Hamiltonian h, VectorXd eps, MatrixXd chi)
      : h_(std::move(h)), eps_(std::move(eps)), chi_(std::move(chi)) {}

  const Hamiltonian& hamiltonian() const { return h_; }
  const GridPtr& grid_ptr() const { return h_.grid; }
  const RadialGrid& grid() const { return *h_.grid; }
  const VectorXd& eigenvalues() const { return eps_; }
  const MatrixXd& eigenvectors() const { return chi_; }  // columns, reduced coordinates
  int size() const { return static_cast<int>(eps_.size()); }

  double e0() const { return eps_[0]; }
  double e1() const { return eps_[1]; }
  double e_res() const { return 2 * eps_[1] - eps_[0]; }
  int bound_state_count() const { return static_cast<int>((eps_.array() < 0).count()); }
  bool resonance() const { return eps_[0] < 2 * eps_[1]; }

  const RadialField& phi0() const { return phi0_; }
  const RadialField& phi1() const { return phi1_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  double max_residual() const { return max_residual_; }

  // Mode k as a normalized field in u-coordinates.
  RadialField mode(int k) const {
    VectorXd u = chi_.col(k).cwiseQuotient(grid().sqrt_weights());
    return RadialField(grid_ptr(), u);
  }

  // c_k = <chi_k, f>.
  VectorXcd coefficients(const RadialField& f) const {
    require(f.grid().same_as(grid()), ErrorCode::GridMismatch, "field grid differs from spectrum grid");
    const VectorXd& sw = grid().sqrt_weights();
    MatrixXd p(size(), 2);
    p.col(0) = f.values().real().cwiseProduct(sw);
    p.col(1) = f.values().imag().cwiseProduct(sw);
    MatrixXd c = chi_.transpose() * p;
    VectorXcd out(size());
    out.real() = c.col(0);
    out.imag() = c.col(1);
    return out;
  }

  RadialField synthesize(const VectorXcd& c) const {
    MatrixXd p(size(), 2);
    p.col(0) = c.real();
    p.col(1) = c.imag();
    MatrixXd v = chi_ * p;
    const VectorXd& sw = grid().sqrt_weights();
    VectorXcd u(size());
    u.real() = v.col(0).cwiseQuotient(sw);
    u.imag() = v.col(1).cwiseQuotient(sw);
    return RadialField(grid_ptr(), u);
  }

 private:
  friend LinearSpectrum solve_bound_spectrum(const Hamiltonian&, const SpectrumOptions&);

  Hamiltonian h_;
  VectorXd eps_;
  MatrixXd chi_;
  RadialField phi0_, phi1_;
  std::vector<std::string> warnings_;
  double max_residual_ = 0;
};

using SpectrumPtr = std::shared_ptr<const LinearSpectrum>;

inline LinearSpectrum solve_bound_spectrum(const Hamiltonian& h, const SpectrumOptions& opt = {}) {
  const int n = h.grid->size();
  VectorXd d = h.diag;
  VectorXd e = VectorXd::Constant(std::max(n - 1, 1), h.off);
  MatrixXd z(n, n);
  lapack_int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, d.data(), e.data(), z.data(), n);
  require(info == 0, ErrorCode::InvalidPotential, "tridiagonal eigensolver failed, info = " + std::to_string(info));

  // Fix the sign so each mode starts positive near the origin.
  for (int k = 0; k < n; ++k) {
    int i0 = 0;
    while (i0 < n - 1 && std::abs(z(i0, k)) < 1e-3 * z.col(k).cwiseAbs().maxCoeff()) ++i0;
    if (z(i0, k) < 0) z.col(k) *= -1.0;
  }

  LinearSpectrum s(h, d, z);
  int nneg = s.bound_state_count();
  if (opt.require_two_bound_states && nneg < 2)
    fail(ErrorCode::AssumptionViolated,
         "two negative eigenvalues required, found " + std::to_string(nneg) + " (assumption A0)");
  if (nneg > 2) s.warnings_.push_back("more than two bound states: " + std::to_string(nneg));
  if (n >= 2 && !s.resonance()) s.warnings_.push_back("e0 >= 2 e1: resonance channel closed (assumption A1)");

  double worst = 0;
  for (int k = 0; k < n; ++k) {
    VectorXd col = z.col(k);
    VectorXd r = h.apply_reduced(col) - d[k] * col;
    worst = std::max(worst, r.norm());
  }
  s.max_residual_ = worst;
  if (worst > opt.residual_tolerance)
    s.warnings_.push_back("eigenresidual " + std::to_string(worst) + " above tolerance");

  if (n >= 2) {
    s.phi0_ = s.mode(0);
    s.phi1_ = s.mode(1);
  }
  return s;
}

inline RadialField project_continuous(const LinearSpectrum& s, const RadialField& f) {
  require(f.grid().same_as(s.grid()), ErrorCode::GridMismatch, "field grid differs from spectrum grid");
  RadialField g = f;
  g -= inner(s.phi0(), f) * s.phi0();
  g -= inner(s.phi1(), f) * s.phi1();
  return g;
}

// exp(-i t H0) f by eigenbasis synthesis.
inline RadialField apply_free_flow(const LinearSpectrum& s, const RadialField& f, double t) {
  require(std::isfinite(t), ErrorCode::InvalidArgument, "time must be finite");
  VectorXcd c = s.coefficients(f);
  for (int k = 0; k < s.size(); ++k) c[k] *= std::exp(cplx(0, -s.eigenvalues()[k] * t));
  return s.synthesize(c);
}

// (H0 - z)^{-1} P_c f.
inline RadialField resolvent_apply(const LinearSpectrum& s, cplx z, const RadialField& f) {
  VectorXcd c = s.coefficients(f);
  const VectorXd& eps = s.eigenvalues();
  double scale = std::max(1.0, eps.cwiseAbs().maxCoeff());
  c[0] = 0;
  c[1] = 0;
  for (int k = 2; k < s.size(); ++k) {
    cplx den = eps[k] - z;
    if (std::abs(den) <= 1e-13 * scale)
      fail(ErrorCode::SingularResolvent, "z coincides with a discrete eigenvalue");
    c[k] /= den;
  }
  return s.synthesize(c);
}

}  // namespace nlsprof
