#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nlsprof/decomposition.hpp"

namespace nlsprof {

// Quartic ramp W(r) = strength ((r - r_c)/(r_max - r_c))^4 on the outer fraction of the box.
struct AbsorbingLayer {
  double fraction = 0.2;
  double strength = 5.0;

  VectorXd profile(const RadialGrid& g) const {
    double rc = (1 - fraction) * g.r_max();
    VectorXd w = VectorXd::Zero(g.size());
    for (int i = 0; i < g.size(); ++i) {
      double r = g.nodes()[i];
      if (r > rc) w[i] = strength * std::pow((r - rc) / (g.r_max() - rc), 4);
    }
    return w;
  }
};

struct PDEState {
  double t = 0;
  RadialField psi;
  double dt = 0;
  std::string scheme = "strang";
};

// Strang splitting: nonlinear half step, exact linear step in the eigenbasis, nonlinear half step.
// The absorbing layer enters as a damping factor inside the nonlinear half steps.
class Propagator {
 public:
  Propagator(SpectrumPtr spec, double lambda, std::optional<AbsorbingLayer> cap = std::nullopt)
      : spec_(std::move(spec)), lambda_(lambda), cap_(cap) {
    require(lambda == 0 || lambda == 1 || lambda == -1, ErrorCode::InvalidArgument, "lambda must be 0 or +-1");
    if (cap_) {
      require(cap_->fraction > 0 && cap_->fraction < 1 && cap_->strength >= 0, ErrorCode::InvalidArgument,
              "absorbing layer needs fraction in (0,1) and nonnegative strength");
      damping_ = cap_->profile(spec_->grid());
    }
  }

  const LinearSpectrum& spectrum() const { return *spec_; }
  const SpectrumPtr& spectrum_ptr() const { return spec_; }
  double lambda() const { return lambda_; }
  const std::optional<AbsorbingLayer>& absorbing_layer() const { return cap_; }

  void advance(PDEState& st, double dt) const {
    require(std::isfinite(dt) && dt != 0, ErrorCode::InvalidArgument, "time step must be finite and nonzero");
    VectorXcd& u = st.psi.values();
    half_nonlinear(u, dt);
    linear(u, dt);
    half_nonlinear(u, dt);
    if (!u.allFinite()) fail(ErrorCode::BlowUp, "non-finite field at t = " + std::to_string(st.t + dt));
    st.t += dt;
    st.dt = dt;
  }

  PDEState step(PDEState st, double dt) const {
    advance(st, dt);
    return st;
  }

 private:
  void half_nonlinear(VectorXcd& u, double dt) const {
    if (lambda_ == 0 && !cap_) return;
    const double a = -0.5 * lambda_ * dt;
    for (int i = 0; i < u.size(); ++i) {
      cplx f = std::exp(cplx(0, a * std::norm(u[i])));
      if (cap_) f *= std::exp(-0.5 * damping_[i] * std::abs(dt));
      u[i] *= f;
    }
  }

  void linear(VectorXcd& u, double dt) const {
    const LinearSpectrum& s = *spec_;
    const int n = s.size();
    const VectorXd& sw = s.grid().sqrt_weights();
    for (int i = 0; i < n; ++i) u[i] *= sw[i];
    // A complex vector is laid out as a 2 x n real matrix.
    Eigen::Map<Eigen::Matrix<double, 2, Eigen::Dynamic>> p(reinterpret_cast<double*>(u.data()), 2, n);
    Eigen::Matrix<double, 2, Eigen::Dynamic> c = p * s.eigenvectors();
    for (int k = 0; k < n; ++k) {
      double ph = -s.eigenvalues()[k] * dt;
      double cs = std::cos(ph), sn = std::sin(ph);
      double re = c(0, k), im = c(1, k);
      c(0, k) = cs * re - sn * im;
      c(1, k) = sn * re + cs * im;
    }
    p.noalias() = c * s.eigenvectors().transpose();
    for (int i = 0; i < n; ++i) u[i] /= sw[i];
  }

  SpectrumPtr spec_;
  double lambda_;
  std::optional<AbsorbingLayer> cap_;
  VectorXd damping_;
};

struct Conserved {
  double mass = 0;
  double energy = 0;
};

// mass = int |psi|^2, energy = int 1/2 |grad psi|^2 + 1/2 V |psi|^2 + 1/4 lambda |psi|^4.
inline Conserved conserved_quantities(const LinearSpectrum& s, const RadialField& psi, double lambda) {
  const RadialGrid& g = s.grid();
  const VectorXd& w = g.weights();
  const VectorXd& sw = g.sqrt_weights();
  const VectorXd& v = s.hamiltonian().v;
  const double h = g.spacing();
  Conserved c;
  double kin = 0, pot = 0, quart = 0;
  cplx prev = 0;
  for (int i = 0; i < psi.size(); ++i) {
    cplx red = sw[i] * psi[i];
    double a2 = std::norm(psi[i]);
    c.mass += w[i] * a2;
    kin += std::norm(red - prev);
    pot += v[i] * std::norm(red);
    quart += w[i] * a2 * a2;
    prev = red;
  }
  kin += std::norm(prev);
  c.energy = 0.5 * kin / (h * h) + 0.5 * pot + 0.25 * lambda * quart;
  return c;
}

// Speed bound from the energy below which 99.9% of the dispersive mass sits.
inline double dispersive_speed(const LinearSpectrum& s, const RadialField& psi, double fraction = 0.999) {
  VectorXcd c = s.coefficients(psi);
  double total = 0;
  for (int k = 2; k < s.size(); ++k) total += std::norm(c[k]);
  if (total <= 0) return 0;
  double acc = 0, cut = 0;
  for (int k = 2; k < s.size(); ++k) {
    acc += std::norm(c[k]);
    cut = s.eigenvalues()[k];
    if (acc >= fraction * total) break;
  }
  return 2 * std::sqrt(std::max(cut, 0.0));
}

}  // namespace nlsprof
