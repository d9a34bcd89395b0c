#pragma once

#include <algorithm>
#include <vector>

#include "nlsprof/grid.hpp"

namespace nlsprof {

// Natural cubic spline through vector-valued knots (one column per knot).
class VectorSpline {
 public:
  VectorSpline() = default;
  VectorSpline(std::vector<double> x, MatrixXd y) : x_(std::move(x)), y_(std::move(y)) {
    const int k = static_cast<int>(x_.size());
    require(k >= 2 && y_.cols() == k, ErrorCode::InvalidArgument, "spline needs matching knots and values");
    for (int i = 1; i < k; ++i) require(x_[i] > x_[i - 1], ErrorCode::InvalidArgument, "spline knots must increase");
    m_ = MatrixXd::Zero(y_.rows(), k);
    if (k == 2) return;
    // Thomas algorithm on the interior second derivatives.
    std::vector<double> c(k, 0.0);
    MatrixXd d = MatrixXd::Zero(y_.rows(), k);
    for (int i = 1; i < k - 1; ++i) {
      double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
      double a = hl / 6, b = (hl + hr) / 3, cc = hr / 6;
      VectorXd rhs = (y_.col(i + 1) - y_.col(i)) / hr - (y_.col(i) - y_.col(i - 1)) / hl;
      if (i > 1) {
        double den = b - a * c[i - 1];
        c[i] = cc / den;
        d.col(i) = (rhs - a * d.col(i - 1)) / den;
      } else {
        c[i] = cc / b;
        d.col(i) = rhs / b;
      }
    }
    m_.col(k - 2) = d.col(k - 2);
    for (int i = k - 3; i >= 1; --i) m_.col(i) = d.col(i) - c[i] * m_.col(i + 1);
  }

  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }

  VectorXd operator()(double t) const {
    int i = interval(t);
    double h = x_[i + 1] - x_[i];
    double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return a * y_.col(i) + b * y_.col(i + 1) +
           ((a * a * a - a) * m_.col(i) + (b * b * b - b) * m_.col(i + 1)) * (h * h / 6);
  }

  VectorXd derivative(double t) const {
    int i = interval(t);
    double h = x_[i + 1] - x_[i];
    double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return (y_.col(i + 1) - y_.col(i)) / h +
           (-(3 * a * a - 1) * m_.col(i) + (3 * b * b - 1) * m_.col(i + 1)) * (h / 6);
  }

 private:
  int interval(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    int i = static_cast<int>(it - x_.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(x_.size()) - 2);
  }

  std::vector<double> x_;
  MatrixXd y_, m_;
};

}  // namespace nlsprof
