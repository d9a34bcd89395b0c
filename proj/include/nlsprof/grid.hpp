#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>

#include "nlsprof/error.hpp"

namespace nlsprof {

using cplx = std::complex<double>;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Uniform radial grid r_i = i*h, i = 1..N, with Dirichlet ends at 0 and r_max.
class RadialGrid {
 public:
  RadialGrid(double r_max, int n) : r_max_(r_max), n_(n) {
    require(n >= 3, ErrorCode::InvalidArgument, "grid needs at least 3 interior nodes");
    require(std::isfinite(r_max) && r_max > 0, ErrorCode::InvalidArgument, "r_max must be positive");
    h_ = r_max / (n + 1);
    r_.resize(n);
    w_.resize(n);
    sw_.resize(n);
    for (int i = 0; i < n; ++i) {
      r_[i] = (i + 1) * h_;
      w_[i] = 4.0 * std::numbers::pi * r_[i] * r_[i] * h_;
      sw_[i] = std::sqrt(w_[i]);
    }
  }

  double r_max() const { return r_max_; }
  int size() const { return n_; }
  double spacing() const { return h_; }
  const VectorXd& nodes() const { return r_; }
  const VectorXd& weights() const { return w_; }
  const VectorXd& sqrt_weights() const { return sw_; }

  bool same_as(const RadialGrid& o) const { return n_ == o.n_ && r_max_ == o.r_max_; }

  // Integral of a radial function over the ball of radius R.
  double integrate_ball(const VectorXd& f, double R) const {
    double s = 0;
    for (int i = 0; i < n_ && r_[i] <= R; ++i) s += w_[i] * f[i];
    return s;
  }

 private:
  double r_max_;
  int n_;
  double h_;
  VectorXd r_, w_, sw_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(double r_max, int n) { return std::make_shared<const RadialGrid>(r_max, n); }

// Complex radial function u(r) sampled on the grid nodes.
class RadialField {
 public:
  RadialField() = default;
  explicit RadialField(GridPtr g) : grid_(std::move(g)), v_(VectorXcd::Zero(grid_->size())) {}
  RadialField(GridPtr g, VectorXcd v) : grid_(std::move(g)), v_(std::move(v)) {
    require(v_.size() == grid_->size(), ErrorCode::GridMismatch, "field length differs from grid size");
  }
  RadialField(GridPtr g, const VectorXd& v) : RadialField(g, VectorXcd(v.cast<cplx>())) {}

  const RadialGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int size() const { return static_cast<int>(v_.size()); }
  VectorXcd& values() { return v_; }
  const VectorXcd& values() const { return v_; }
  cplx operator[](int i) const { return v_[i]; }

  bool compatible(const RadialField& o) const { return grid_ && o.grid_ && grid_->same_as(*o.grid_); }

  RadialField& operator+=(const RadialField& o) {
    check(o);
    v_ += o.v_;
    return *this;
  }
  RadialField& operator-=(const RadialField& o) {
    check(o);
    v_ -= o.v_;
    return *this;
  }
  RadialField& operator*=(cplx a) {
    v_ *= a;
    return *this;
  }

  void check(const RadialField& o) const {
    require(compatible(o), ErrorCode::GridMismatch, "fields live on different grids");
  }

 private:
  GridPtr grid_;
  VectorXcd v_;
};

inline RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
inline RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }
inline RadialField operator*(cplx s, RadialField a) { return a *= s; }
inline RadialField operator*(RadialField a, cplx s) { return a *= s; }

// <f,g> = sum_i w_i conj(f_i) g_i, conjugate-linear in the first slot.
inline cplx inner(const RadialField& f, const RadialField& g) {
  f.check(g);
  const VectorXd& w = f.grid().weights();
  cplx s = 0;
  for (int i = 0; i < f.size(); ++i) s += w[i] * std::conj(f[i]) * g[i];
  return s;
}

inline double l2_norm(const RadialField& f) {
  const VectorXd& w = f.grid().weights();
  double s = 0;
  for (int i = 0; i < f.size(); ++i) s += w[i] * std::norm(f[i]);
  return std::sqrt(s);
}

struct LocalNorms {
  double l2loc = 0;
  double l1loc = 0;
  double l4 = 0;
  double l2 = 0;
};

// Norms with the weights <r>^{-r1} (L2loc) and <r>^{-2 r1} (L1loc), <r> = 1 + r.
inline LocalNorms local_norms(const RadialField& f, double r1 = 4.0) {
  require(r1 > 3.0, ErrorCode::InvalidArgument, "local weight exponent must exceed 3");
  const VectorXd& w = f.grid().weights();
  const VectorXd& r = f.grid().nodes();
  double s2l = 0, s1l = 0, s4 = 0, s2 = 0;
  for (int i = 0; i < f.size(); ++i) {
    double a2 = std::norm(f[i]);
    double jw = std::pow(1.0 + r[i], -r1);
    s2l += w[i] * a2 * jw * jw;
    s1l += w[i] * std::sqrt(a2) * jw * jw;
    s4 += w[i] * a2 * a2;
    s2 += w[i] * a2;
  }
  return {std::sqrt(s2l), s1l, std::pow(s4, 0.25), std::sqrt(s2)};
}

}  // namespace nlsprof
