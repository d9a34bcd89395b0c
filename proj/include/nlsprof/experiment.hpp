#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "nlsprof/classifier.hpp"
#include "nlsprof/config.hpp"
#include "nlsprof/fits.hpp"
#include "nlsprof/normal_form.hpp"
#include "nlsprof/report.hpp"
#include "nlsprof/resonance.hpp"
#include "nlsprof/trajectory.hpp"

namespace nlsprof {

// Number of eigenvalues of the tridiagonal matrix (diag, off) below x (Sturm count).
inline int count_below(const VectorXd& diag, double off, double x) {
  int c = 0;
  double q = 1;
  for (int i = 0; i < diag.size(); ++i) {
    q = diag[i] - x - (i > 0 ? off * off / q : 0.0);
    if (q == 0) q = -1e-300;
    if (q < 0) ++c;
  }
  return c;
}

// k-th eigenvalue (0-based) by bisection on the Sturm count.
inline double eigenvalue_bisection(const VectorXd& diag, double off, int k, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    if (count_below(diag, off, mid) > k) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

struct DesignResult {
  Potential potential;
  double e0 = 0, e1 = 0;
  double depth_second = 0;  // second s-state appears
  double depth_third = 0;   // third s-state appears
  double depth_limit = 0;   // upper end of the admissible depths
  double margin = 0;
  double achieved_margin = 0;  // (2e1 - e0)/|e0|
};

struct DesignOptions {
  double max_depth_factor = 1e6;  // depths searched up to factor * (1 + 1/width^2)
};

// Gaussian depth with exactly two bound states and 2e1 - e0 >= margin |e0|: the midpoint of the
// admissible depth interval.
inline DesignResult design_potential(const GridPtr& grid, double margin, double width = 1.0,
                                     const DesignOptions& opt = {}) {
  require(margin > 0 && margin < 0.5, ErrorCode::InvalidArgument, "design margin must lie in (0, 0.5)");
  require(width > 0, ErrorCode::InvalidArgument, "well width must be positive");
  const double h = grid->spacing();
  const double off = -1 / (h * h);
  auto diag_for = [&](double depth) {
    return assemble_hamiltonian(grid, Potential::gaussian(depth, width)).diag;
  };
  auto count = [&](double depth) { return count_below(diag_for(depth), off, 0.0); };
  auto energies = [&](double depth) {
    VectorXd d = diag_for(depth);
    double lo = d.minCoeff() + 2 * off;
    return std::pair{eigenvalue_bisection(d, off, 0, lo, 0.0), eigenvalue_bisection(d, off, 1, lo, 0.0)};
  };
  auto ratio = [&](double depth) {
    auto [a, b] = energies(depth);
    return (2 * b - a) / std::abs(a);
  };
  const double cap = opt.max_depth_factor * (1 + 1 / (width * width));
  auto threshold = [&](int states, double start) {
    double lo = start, hi = std::max(start, 1.0);
    while (count(hi) < states) {
      lo = hi;
      hi *= 2;
      if (hi > cap)
        fail(ErrorCode::DesignFailed, "no depth up to " + format_number(cap) + " binds " + std::to_string(states) +
                                          " s-states on this grid (width " + format_number(width) + ")");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      if (count(mid) >= states) hi = mid;
      else lo = mid;
    }
    return hi;
  };
  DesignResult r;
  r.margin = margin;
  r.depth_second = threshold(2, 0.0);
  r.depth_third = threshold(3, r.depth_second);
  double top = r.depth_third * (1 - 1e-9);
  if (ratio(top) >= margin) {
    r.depth_limit = top;
  } else {
    double lo = r.depth_second * (1 + 1e-9), hi = top;
    if (ratio(lo) < margin)
      fail(ErrorCode::DesignFailed, "no two-state depth reaches the margin " + format_number(margin));
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      if (ratio(mid) >= margin) lo = mid;
      else hi = mid;
    }
    r.depth_limit = lo;
  }
  double depth = 0.5 * (r.depth_second + r.depth_limit);
  if (count(depth) != 2 || ratio(depth) < margin)
    fail(ErrorCode::DesignFailed, "designed depth " + format_number(depth) + " violates the two-state margin");
  r.potential = Potential::gaussian(depth, width);
  std::tie(r.e0, r.e1) = energies(depth);
  r.achieved_margin = (2 * r.e1 - r.e0) / std::abs(r.e0);
  return r;
}

// ---- initial data -------------------------------------------------------------------------

inline RadialField dispersive_packet(const LinearSpectrum& s, double amplitude, double center, double width,
                                     double momentum) {
  const VectorXd& r = s.grid().nodes();
  VectorXcd f(s.size());
  for (int i = 0; i < s.size(); ++i) {
    double z = (r[i] - center) / width;
    f[i] = std::exp(-0.5 * z * z) * std::exp(cplx(0, momentum * r[i]));
  }
  RadialField g = project_continuous(s, RadialField(s.grid_ptr(), f));
  double nrm = l2_norm(g);
  require(nrm > 0, ErrorCode::InvalidArgument, "packet has no continuous-spectrum component");
  return (amplitude / nrm) * g;
}

// Smooth localized random field in Range(P_c): random complex Gaussian bumps.
inline RadialField localized_noise(const LinearSpectrum& s, double size, double width, std::mt19937_64& rng) {
  RadialField out(s.grid_ptr());
  if (size == 0) return out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> where(0.0, 3 * width);
  const VectorXd& r = s.grid().nodes();
  for (int j = 0; j < 6; ++j) {
    double rc = where(rng);
    cplx c(gauss(rng), gauss(rng));
    for (int i = 0; i < s.size(); ++i) {
      double z = (r[i] - rc) / width;
      out.values()[i] += c * std::exp(-0.5 * z * z);
    }
  }
  out = project_continuous(s, out);
  return (size / l2_norm(out)) * out;
}

struct FreeDecayResult {
  std::vector<double> t, l2loc;
  LineFit fit;
  Window window;
  double speed = 0;   // group-velocity bound of the packet
  double budget = 0;  // r_max / (2 speed)
};

// Linear evolution of a continuous-spectrum packet, sampled log-uniformly, with the L2loc exponent
// fitted on the window.
inline FreeDecayResult free_decay(const LinearSpectrum& s, const RadialField& packet, Window w, int samples = 64,
                                  double r1 = 4) {
  require(samples >= 8, ErrorCode::TooFewSamples, "free decay needs at least 8 samples");
  FreeDecayResult out;
  out.window = w;
  RadialField p = project_continuous(s, packet);
  out.speed = dispersive_speed(s, p);
  out.budget = out.speed > 0 ? s.grid().r_max() / (2 * out.speed) : INFINITY;
  for (int j = 0; j < samples; ++j) {
    double t = w.lo * std::pow(w.hi / w.lo, j / double(samples - 1));
    out.t.push_back(t);
    out.l2loc.push_back(local_norms(apply_free_flow(s, p, t), r1).l2loc);
  }
  out.fit = fit_decay_exponent(out.t, out.l2loc, w);
  return out;
}

// ---- pipeline -----------------------------------------------------------------------------

struct PreparedModel {
  GridPtr grid;
  Potential potential;
  std::optional<DesignResult> design;
  SpectrumPtr spectrum;
  ResonanceData resonance;
};

inline PreparedModel prepare_model(const ExperimentConfig& c) {
  PreparedModel m;
  m.grid = make_grid(c.r_max, c.N);
  if (c.depth) {
    m.potential = Potential::gaussian(*c.depth, c.width);
  } else {
    m.design = design_potential(m.grid, c.margin, c.width);
    m.potential = m.design->potential;
  }
  m.spectrum = std::make_shared<const LinearSpectrum>(solve_bound_spectrum(assemble_hamiltonian(m.grid, m.potential)));
  m.resonance = fermi_constant(*m.spectrum);
  return m;
}

struct ExperimentResult {
  TrajectoryRecord record;
  ClassificationReport classification;
  Report report;
  std::vector<std::string> files;
};

inline double initial_scale(const ExperimentConfig& c) {
  switch (c.tag) {
    case InitialTag::ExcitedGroundSeed: return c.amplitude;
    case InitialTag::CustomCoefficients: return std::max(std::abs(c.y0), std::abs(c.x0));
    default: return 0.0;
  }
}

inline double family_range(const ExperimentConfig& c) {
  return c.family_max.value_or(std::max(1.25 * initial_scale(c), 0.25));
}

inline Report model_report(const PreparedModel& m) {
  Report r;
  auto& p = r.section("potential");
  p.add("form", m.potential.form);
  p.add("depth", m.potential.depth);
  p.add("width", m.potential.width);
  p.add("designed", m.design.has_value());
  if (m.design) {
    p.add("margin", m.design->margin);
    p.add("achieved_margin", m.design->achieved_margin);
    p.add("depth_second_state", m.design->depth_second);
    p.add("depth_third_state", m.design->depth_third);
    p.add("depth_limit", m.design->depth_limit);
  }
  const LinearSpectrum& s = *m.spectrum;
  auto& sp = r.section("spectrum");
  sp.add("N", s.size());
  sp.add("r_max", s.grid().r_max());
  sp.add("e0", s.e0());
  sp.add("e1", s.e1());
  sp.add("e_res", s.e_res());
  sp.add("bound_states", s.bound_state_count());
  sp.add("resonance_condition", s.resonance());
  sp.add("max_eigenresidual", s.max_residual());
  for (size_t i = 0; i < s.warnings().size(); ++i) sp.add("warning_" + std::to_string(i), s.warnings()[i]);
  const ResonanceData& d = m.resonance;
  auto& rs = r.section("resonance");
  rs.add("gamma0", d.gamma0);
  rs.add("gamma0_resolvent", d.gamma0_raw);
  rs.add("gamma0_density", d.gamma0_density);
  rs.add("relative_difference", d.relative_difference);
  rs.add("level_spacing", d.level_spacing);
  rs.add("sigma_min", d.resolvent.sigma.front());
  rs.add("sigma_max", d.resolvent.sigma.back());
  rs.add("s0", d.s0);
  rs.add("window_min", d.window_min);
  rs.add("window_pass", d.window_pass);
  return r;
}

inline ExperimentResult run_experiment(const ExperimentConfig& c, const std::string& out_dir = "") {
  c.validate();
  PreparedModel m = prepare_model(c);
  const LinearSpectrum& s = *m.spectrum;

  double emax = family_range(c);
  std::vector<double> knots = interpolation_grid(emax);
  if (c.tag == InitialTag::ExcitedGroundSeed) {
    require(c.amplitude <= emax, ErrorCode::ConfigError, "excited amplitude exceeds families.max");
    if (c.amplitude > 0) knots.push_back(c.amplitude);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  BoundStateFamily excited = continue_excited_family(m.spectrum, c.lambda, knots);

  std::mt19937_64 rng(c.rng_seed);
  RadialField psi0(m.grid);
  switch (c.tag) {
    case InitialTag::GroundNoise: {
      require(c.amplitude > 0, ErrorCode::ConfigError, "ground+noise needs a positive amplitude");
      BoundStateFamily ground = continue_ground_family(m.spectrum, c.lambda, geometric_grid(c.amplitude, 12));
      psi0 = RadialField(m.grid, ground.profile(c.amplitude)) + localized_noise(s, c.noise, c.noise_width, rng);
      break;
    }
    case InitialTag::ExcitedGroundSeed:
      psi0 = eval_excited(excited, c.amplitude) + cplx(c.seed_ratio * c.amplitude) * s.phi0();
      break;
    case InitialTag::DispersivePacket:
      psi0 = dispersive_packet(s, c.amplitude, c.packet_center, c.packet_width, c.packet_momentum);
      break;
    case InitialTag::CustomCoefficients:
      psi0 = c.x0 * s.phi0() + eval_excited(excited, c.y0);
      if (c.packet_amplitude > 0)
        psi0 += dispersive_packet(s, c.packet_amplitude, c.packet_center, c.packet_width, c.packet_momentum);
      break;
  }

  std::optional<AbsorbingLayer> cap;
  if (c.cap) cap = AbsorbingLayer{c.cap_fraction, c.cap_strength};
  Propagator prop(m.spectrum, c.lambda, cap);
  double dt = c.dt.value_or(0.5 / std::abs(s.e0()));
  long steps = c.T > 0 ? static_cast<long>(std::ceil(c.T / dt - 1e-9)) : 0;
  int stride = c.stride.value_or(static_cast<int>(std::max<long>(1, std::lround(steps / 1000.0))));
  RecordOptions ro;
  ro.r1 = c.r1;
  ro.allow_reflections = c.allow_reflections;

  ExperimentResult res;
  res.record = evolve_and_record(prop, excited, psi0, c.T, dt, stride, ro);
  for (const auto& [k, v] : c.to_map()) res.record.metadata["config." + k] = v;
  res.record.metadata["resonance.gamma0"] = format_number(m.resonance.gamma0);
  res.record.metadata["potential.designed"] = m.design ? "true" : "false";
  res.record.metadata["rng.name"] = "mt19937_64";
  res.record.metadata["rng.seed"] = std::to_string(c.rng_seed);
  res.record.metadata["initial.tag"] = to_string(c.tag);

  ClassifierParams cp = c.classifier;
  cp.gamma0 = m.resonance.gamma0;
  res.classification = classify(res.record, cp);

  Report& r = res.report;
  auto& e = r.section("experiment");
  e.add("initial", to_string(c.tag));
  e.add("case", res.classification.label);
  e.add("rng", "mt19937_64");
  e.add("seed", std::to_string(c.rng_seed));
  e.add("dt", res.record.meta_number("run.dt"));
  e.add("steps", res.record.metadata["run.steps"]);
  e.add("stride", stride);
  e.add("cap", c.cap);
  e.add("reflection_budget", res.record.metadata["run.reflection_budget"]);
  r.append(model_report(m));
  auto& cons = r.section("conservation");
  cons.add("mass_initial", res.record.samples.front().mass);
  cons.add("mass_final", res.record.samples.back().mass);
  cons.add("energy_initial", res.record.samples.front().energy);
  cons.add("energy_final", res.record.samples.back().energy);
  cons.add("mass_drift", res.record.metadata["drift.mass"]);
  cons.add("energy_drift", res.record.metadata["drift.energy"]);
  r.append(res.classification.to_report());

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::string tp = out_dir + "/trajectory.csv", rp = out_dir + "/report.txt";
    write_trajectory_csv(res.record, tp);
    r.write(rp);
    res.files = {tp, rp};
  }
  return res;
}

// ---- sweeps -------------------------------------------------------------------------------

struct SweepRow {
  std::string value;
  std::string label;
  std::string error;
  double t1 = NAN, t2 = NAN, t3 = NAN, t4 = NAN;
  double decay_exponent = NAN, growth_ratio = NAN, horizon = NAN;
};

inline std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::string& axis,
                                   const std::vector<std::string>& values, int threads = 1,
                                   const std::string& out_dir = "") {
  base.get(axis);  // validates the axis name
  std::vector<SweepRow> rows(values.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next++; i < values.size(); i = next++) {
      SweepRow& row = rows[i];
      row.value = values[i];
      try {
        ExperimentConfig c = base;
        c.set(axis, values[i]);
        c.validate();
        std::string dir = out_dir.empty() ? "" : out_dir + "/run_" + std::to_string(i);
        ExperimentResult r = run_experiment(c, dir);
        const auto& th = r.classification.thresholds;
        row.label = r.classification.label;
        auto val = [](const Threshold& t) { return t.finite ? t.t : INFINITY; };
        if (r.classification.samples >= c.classifier.min_samples) {
          row.t1 = val(th.t1);
          row.t2 = val(th.t2);
          row.t3 = val(th.t3);
          row.t4 = val(th.t4);
        }
        if (r.classification.decay) row.decay_exponent = r.classification.decay->slope;
        if (r.classification.growth) row.growth_ratio = r.classification.growth->ratio;
        row.horizon = r.classification.horizon;
      } catch (const std::exception& e) {
        row.label = "error";
        row.error = e.what();
      }
    }
  };
  int nt = std::max(1, std::min<int>(threads, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < nt; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& axis, std::ostream& os) {
  os << "value,case,t1,t2,t3,t4,decay_exponent,growth_ratio,horizon,error\n";
  auto num = [](double v) { return std::isnan(v) ? std::string("") : format_number(v); };
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << r.value << ',' << r.label << ',' << num(r.t1) << ',' << num(r.t2) << ',' << num(r.t3) << ','
       << num(r.t4) << ',' << num(r.decay_exponent) << ',' << num(r.growth_ratio) << ',' << num(r.horizon) << ','
       << err << '\n';
  }
  (void)axis;
}

}  // namespace nlsprof
