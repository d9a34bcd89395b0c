#pragma once

#include <cmath>
#include <string>

#include "nlsprof/grid.hpp"

namespace nlsprof {

// V(r) = -depth * exp(-r^2/width^2) for the Gaussian well; "zero" is the free case;
// "tabulated" takes node values directly.
struct Potential {
  std::string form = "gaussian";
  double depth = 0.0;
  double width = 1.0;
  VectorXd table;

  static Potential gaussian(double depth, double width) { return {"gaussian", depth, width, {}}; }
  static Potential zero() { return {"zero", 0.0, 1.0, {}}; }
  static Potential tabulated(VectorXd v) { return {"tabulated", 0.0, 1.0, std::move(v)}; }

  double operator()(double r) const {
    if (form == "gaussian") return -depth * std::exp(-(r * r) / (width * width));
    if (form == "zero") return 0.0;
    fail(ErrorCode::InvalidPotential, "potential form '" + form + "' has no closed-form evaluation");
  }

  VectorXd on(const RadialGrid& g) const {
    if (form == "tabulated") {
      require(table.size() == g.size(), ErrorCode::InvalidPotential, "tabulated potential length differs from grid");
      return table;
    }
    require(form == "gaussian" || form == "zero", ErrorCode::InvalidPotential, "unknown potential form '" + form + "'");
    require(form == "zero" || (std::isfinite(width) && width > 0), ErrorCode::InvalidPotential,
            "Gaussian width must be positive");
    VectorXd v(g.size());
    for (int i = 0; i < g.size(); ++i) v[i] = (*this)(g.nodes()[i]);
    return v;
  }
};

}  // namespace nlsprof
