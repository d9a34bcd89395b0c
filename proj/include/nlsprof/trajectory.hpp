#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nlsprof/propagator.hpp"

namespace nlsprof {

struct TrajectorySample {
  double t = 0;
  cplx x = 0, y = 0;
  double theta = 0;
  double xi_l2loc = 0, xi_l4 = 0, xi_l2 = 0;
  double g_l1loc = 0, remainder_l1loc = 0;
  double psi_l2loc = 0;
  double mass = 0, energy = 0;
  double m_dot = std::numeric_limits<double>::quiet_NaN();
  double theta_dot = std::numeric_limits<double>::quiet_NaN();
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
  std::map<std::string, std::string> metadata;

  double horizon() const { return samples.empty() ? 0.0 : samples.back().t; }

  double meta_number(const std::string& key, double fallback = std::numeric_limits<double>::quiet_NaN()) const {
    auto it = metadata.find(key);
    return it == metadata.end() ? fallback : std::strtod(it->second.c_str(), nullptr);
  }

  // Every k-th sample (plus the last), for sampling-density checks.
  TrajectoryRecord thinned(int k) const {
    TrajectoryRecord r;
    r.metadata = metadata;
    for (size_t i = 0; i < samples.size(); i += k) r.samples.push_back(samples[i]);
    if (!samples.empty() && (samples.size() - 1) % k != 0) r.samples.push_back(samples.back());
    return r;
  }
};

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline const char* trajectory_header() {
  return "t,re_x,im_x,re_y,im_y,abs_x,abs_y,theta,xi_L2loc,xi_L4,xi_L2,G_L1loc,"
         "G_minus_G3_L1loc,psi_L2loc,mass,energy,m_dot,theta_dot";
}

inline void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& os) {
  for (const auto& [k, v] : rec.metadata) os << "# " << k << " = " << v << '\n';
  os << trajectory_header() << '\n';
  for (const auto& s : rec.samples) {
    double vals[] = {s.t, s.x.real(), s.x.imag(), s.y.real(), s.y.imag(), std::abs(s.x), std::abs(s.y),
                     s.theta, s.xi_l2loc, s.xi_l4, s.xi_l2, s.g_l1loc, s.remainder_l1loc, s.psi_l2loc,
                     s.mass, s.energy, s.m_dot, s.theta_dot};
    bool first = true;
    for (double v : vals) {
      if (!first) os << ',';
      os << format_number(v);
      first = false;
    }
    os << '\n';
  }
}

inline void write_trajectory_csv(const TrajectoryRecord& rec, const std::string& path) {
  std::ofstream os(path);
  require(bool(os), ErrorCode::IoError, "cannot write " + path);
  write_trajectory_csv(rec, os);
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n"), b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

inline TrajectoryRecord read_trajectory_csv(std::istream& is) {
  TrajectoryRecord rec;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      require(eq != std::string::npos, ErrorCode::IoError, "malformed metadata line: " + line);
      rec.metadata[trim(line.substr(1, eq - 1))] = trim(line.substr(eq + 1));
      continue;
    }
    if (!header) {
      require(trim(line) == trajectory_header(), ErrorCode::IoError, "unexpected trajectory header");
      header = true;
      continue;
    }
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
    require(v.size() == 18, ErrorCode::IoError, "trajectory row with wrong column count");
    TrajectorySample s;
    s.t = v[0];
    s.x = {v[1], v[2]};
    s.y = {v[3], v[4]};
    s.theta = v[7];
    s.xi_l2loc = v[8];
    s.xi_l4 = v[9];
    s.xi_l2 = v[10];
    s.g_l1loc = v[11];
    s.remainder_l1loc = v[12];
    s.psi_l2loc = v[13];
    s.mass = v[14];
    s.energy = v[15];
    s.m_dot = v[16];
    s.theta_dot = v[17];
    rec.samples.push_back(s);
  }
  require(header, ErrorCode::IoError, "trajectory file has no header");
  return rec;
}

inline TrajectoryRecord read_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), ErrorCode::IoError, "cannot read " + path);
  return read_trajectory_csv(is);
}

struct RecordOptions {
  double r1 = 4;
  bool allow_reflections = false;
  std::function<void(const PDEState&, const Decomposition&)> observer;
};

inline double reflection_budget(const Propagator& prop, const RadialField& psi0) {
  const LinearSpectrum& s = prop.spectrum();
  double v = dispersive_speed(s, psi0);
  if (prop.lambda() != 0 && s.resonance()) v = std::max(v, 2 * std::sqrt(std::max(s.e_res(), 0.0)));
  return v > 0 ? s.grid().r_max() / (2 * v) : std::numeric_limits<double>::infinity();
}

inline TrajectorySample make_sample(const Propagator& prop, const BoundStateFamily& fam, const PDEState& st,
                                    const Decomposition& d, double r1) {
  TrajectorySample s;
  s.t = st.t;
  s.x = d.x;
  s.y = d.y;
  s.theta = d.theta;
  LocalNorms xn = local_norms(d.xi, r1);
  s.xi_l2loc = xn.l2loc;
  s.xi_l4 = xn.l4;
  s.xi_l2 = xn.l2;
  s.psi_l2loc = local_norms(st.psi, r1).l2loc;
  DiagnosticOptions dopt;
  dopt.r1 = r1;
  NonlinearityDiagnostics nd = nonlinearity_terms(fam, d, prop.lambda(), dopt);
  s.g_l1loc = nd.g_l1loc;
  s.remainder_l1loc = nd.remainder_l1loc;
  if (nd.rates) {
    s.m_dot = nd.rates->m_dot;
    s.theta_dot = nd.rates->theta_dot;
  }
  Conserved c = conserved_quantities(prop.spectrum(), st.psi, prop.lambda());
  s.mass = c.mass;
  s.energy = c.energy;
  return s;
}

// Propagates to T, decomposing every `stride` steps and at the final step.
inline TrajectoryRecord evolve_and_record(const Propagator& prop, const BoundStateFamily& fam, const RadialField& psi0,
                                          double T, double dt, int stride, const RecordOptions& opt = {}) {
  require(T >= 0 && std::isfinite(T), ErrorCode::InvalidArgument, "horizon must be finite and nonnegative");
  require(dt > 0 && std::isfinite(dt), ErrorCode::InvalidArgument, "time step must be positive");
  require(stride >= 1, ErrorCode::InvalidArgument, "sample stride must be at least 1");
  long steps = T > 0 ? static_cast<long>(std::ceil(T / dt - 1e-9)) : 0;
  double dt_eff = steps > 0 ? T / steps : dt;
  double budget = reflection_budget(prop, psi0);
  bool cap = prop.absorbing_layer().has_value();
  if (!cap && !opt.allow_reflections && T > budget)
    fail(ErrorCode::InvalidArgument, "horizon " + format_number(T) + " exceeds the reflection budget " +
                                         format_number(budget) + "; enable the absorbing layer or enlarge r_max");

  TrajectoryRecord rec;
  const LinearSpectrum& s = prop.spectrum();
  rec.metadata["grid.N"] = std::to_string(s.size());
  rec.metadata["grid.r_max"] = format_number(s.grid().r_max());
  rec.metadata["potential.form"] = s.hamiltonian().potential.form;
  rec.metadata["potential.depth"] = format_number(s.hamiltonian().potential.depth);
  rec.metadata["potential.width"] = format_number(s.hamiltonian().potential.width);
  rec.metadata["spectrum.e0"] = format_number(s.e0());
  rec.metadata["spectrum.e1"] = format_number(s.e1());
  rec.metadata["lambda"] = format_number(prop.lambda());
  rec.metadata["run.T"] = format_number(T);
  rec.metadata["run.dt"] = format_number(dt_eff);
  rec.metadata["run.steps"] = std::to_string(steps);
  rec.metadata["run.stride"] = std::to_string(stride);
  rec.metadata["run.scheme"] = "strang";
  rec.metadata["run.r1"] = format_number(opt.r1);
  rec.metadata["run.cap"] = cap ? "on" : "off";
  if (cap) {
    rec.metadata["run.cap_fraction"] = format_number(prop.absorbing_layer()->fraction);
    rec.metadata["run.cap_strength"] = format_number(prop.absorbing_layer()->strength);
    rec.metadata["run.caveat"] = "absorbing layer active: mass decreases through the outer boundary region";
  }
  rec.metadata["run.reflection_budget"] = std::isfinite(budget) ? format_number(budget) : "unbounded";
  if (!cap && T > budget) rec.metadata["run.caveat"] = "horizon exceeds reflection budget";

  PDEState st{0.0, psi0, dt_eff, "strang"};
  std::optional<double> theta;
  auto sample = [&]() {
    Decomposition d = decompose(fam, st.psi, theta);
    theta = d.theta;
    rec.samples.push_back(make_sample(prop, fam, st, d, opt.r1));
    if (opt.observer) opt.observer(st, d);
  };
  sample();
  for (long k = 1; k <= steps; ++k) {
    prop.advance(st, dt_eff);
    st.t = k * dt_eff;
    if (k % stride == 0 || k == steps) sample();
  }
  if (!rec.samples.empty()) {
    const auto& a = rec.samples.front();
    const auto& b = rec.samples.back();
    rec.metadata["drift.mass"] = format_number(a.mass > 0 ? std::abs(b.mass - a.mass) / a.mass : 0.0);
    rec.metadata["drift.energy"] =
        format_number(a.energy != 0 ? std::abs(b.energy - a.energy) / std::abs(a.energy) : 0.0);
  }
  return rec;
}

}  // namespace nlsprof
