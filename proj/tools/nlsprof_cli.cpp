#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nlsprof/nlsprof.hpp"

using namespace nlsprof;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<uint64_t> seed;
  int threads = 1;
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument: return 2;
    case ErrorCode::DesignFailed: return 3;
    case ErrorCode::BlowUp: return 4;
    case ErrorCode::ResolutionInsufficient: return 5;
    case ErrorCode::AssumptionViolated: return 6;
    default: return 1;
  }
}

ExperimentConfig load_config(const Common& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(o.config);
  if (o.seed) c.rng_seed = *o.seed;
  c.validate();
  return c;
}

std::string out_file(const Common& o, const std::string& name) {
  std::filesystem::create_directories(o.out);
  return o.out + "/" + name;
}

void emit(const Report& r, const Common& o, const std::string& name) {
  r.write(std::cout);
  r.write(out_file(o, name));
}

std::ofstream open_csv(const Common& o, const std::string& name) {
  std::string p = out_file(o, name);
  std::ofstream os(p);
  require(bool(os), ErrorCode::IoError, "cannot write " + p);
  os << std::setprecision(17);
  return os;
}

int cmd_design(const Common& o) {
  ExperimentConfig c = load_config(o);
  DesignResult d = design_potential(make_grid(c.r_max, c.N), c.margin, c.width);
  Report r;
  auto& s = r.section("design");
  s.add("N", c.N);
  s.add("r_max", c.r_max);
  s.add("width", c.width);
  s.add("margin", d.margin);
  s.add("depth", d.potential.depth);
  s.add("e0", d.e0);
  s.add("e1", d.e1);
  s.add("achieved_margin", d.achieved_margin);
  s.add("depth_second_state", d.depth_second);
  s.add("depth_third_state", d.depth_third);
  s.add("depth_limit", d.depth_limit);
  emit(r, o, "design.txt");
  return 0;
}

int cmd_spectrum(const Common& o) {
  PreparedModel m = prepare_model(load_config(o));
  auto os = open_csv(o, "spectrum.csv");
  os << "k,energy\n";
  for (int k = 0; k < m.spectrum->size(); ++k) os << k << ',' << m.spectrum->eigenvalues()[k] << '\n';
  emit(model_report(m), o, "spectrum.txt");
  return 0;
}

int cmd_families(const Common& o) {
  ExperimentConfig c = load_config(o);
  PreparedModel m = prepare_model(c);
  double top = family_range(c);
  BoundStateFamily g = continue_ground_family(m.spectrum, c.lambda, interpolation_grid(top));
  BoundStateFamily e = continue_excited_family(m.spectrum, c.lambda, interpolation_grid(top));
  g.write_csv(out_file(o, "ground_family.csv"));
  e.write_csv(out_file(o, "excited_family.csv"));
  Report r;
  for (const auto* f : {&g, &e}) {
    auto& s = r.section(f->branch == Branch::Ground ? "ground_family" : "excited_family");
    s.add("lambda", f->lambda);
    s.add("samples", static_cast<int>(f->samples.size()));
    s.add("param_max", f->samples.back().param);
    s.add("e2_fit", f->e2_fit);
    s.add("e4_fit", f->e4_fit);
    s.add("e2_perturbative", f->e2_perturbative);
    s.add("quadratic_fit_residual", f->quadratic_fit_residual);
    s.add("remainder_constant", f->remainder_constant);
    double worst = 0, minc = INFINITY;
    for (const auto& x : f->samples) {
      worst = std::max(worst, x.residual);
      if (x.param > 0) minc = std::min(minc, f->lambda * x.c1);
    }
    s.add("max_residual", worst);
    s.add("min_lambda_c1", minc);
  }
  emit(r, o, "families.txt");
  return 0;
}

int cmd_gamma0(const Common& o) {
  PreparedModel m = prepare_model(load_config(o));
  const ResonanceData& d = m.resonance;
  auto os = open_csv(o, "gamma0.csv");
  os << "estimator,sigma,value\n";
  for (size_t i = 0; i < d.resolvent.sigma.size(); ++i)
    os << "resolvent," << d.resolvent.sigma[i] << ',' << d.resolvent.samples[i] << '\n';
  for (size_t i = 0; i < d.density.sigma.size(); ++i)
    os << "density," << d.density.sigma[i] << ',' << d.density.samples[i] << '\n';
  for (size_t i = 0; i < d.window_s.size(); ++i) os << "window," << d.window_s[i] << ',' << d.window_gamma[i] << '\n';
  Report r = model_report(m);
  emit(r, o, "gamma0.txt");
  return 0;
}

int cmd_evolve(const Common& o) {
  ExperimentResult r = run_experiment(load_config(o), o.out);
  r.report.write(std::cout);
  return 0;
}

int cmd_classify(const Common& o, const std::string& trajectory) {
  TrajectoryRecord rec = read_trajectory_csv(trajectory);
  ClassifierParams p = o.config.empty() ? ClassifierParams{} : load_config(o).classifier;
  if (!p.gamma0 && rec.metadata.count("resonance.gamma0")) p.gamma0 = rec.meta_number("resonance.gamma0");
  emit(classify(rec, p).to_report(), o, "classification.txt");
  return 0;
}

int cmd_sweep(const Common& o, const std::string& axis, const std::vector<std::string>& values) {
  ExperimentConfig c = load_config(o);
  std::vector<SweepRow> rows = sweep(c, axis, values, o.threads, o.out);
  auto os = open_csv(o, "sweep.csv");
  write_sweep_csv(rows, axis, os);
  write_sweep_csv(rows, axis, std::cout);
  return 0;
}

int cmd_inequalities(const Common& o, int samples) {
  InequalityOptions opt;
  opt.samples = samples;
  if (o.seed) opt.seed = *o.seed;
  auto res = verify_integral_inequalities(opt);
  auto os = open_csv(o, "inequalities.csv");
  os << "name,samples,constant,constant_doubled,worst_a,worst_b,stable,bounded\n";
  Report r;
  bool ok = true;
  for (const auto& x : res) {
    os << x.name << ',' << x.samples << ',' << x.constant << ',' << x.constant_doubled << ',' << x.worst_a << ','
       << x.worst_b << ',' << x.stable << ',' << x.bounded << '\n';
    auto& s = r.section(x.name);
    s.add("samples", x.samples);
    s.add("constant", x.constant);
    s.add("constant_doubled", x.constant_doubled);
    s.add("stable", x.stable);
    s.add("bounded", x.bounded);
    ok = ok && x.pass();
  }
  emit(r, o, "inequalities.txt");
  return ok ? 0 : 1;
}

int cmd_free_decay(const Common& o) {
  ExperimentConfig c = load_config(o);
  PreparedModel m = prepare_model(c);
  RadialField packet = dispersive_packet(*m.spectrum, c.amplitude, c.packet_center, c.packet_width, c.packet_momentum);
  Window w{c.classifier.decay_window_start, c.T};
  FreeDecayResult f = free_decay(*m.spectrum, packet, w, 64, c.r1);
  auto os = open_csv(o, "free_decay.csv");
  os << "t,psi_L2loc\n";
  for (size_t i = 0; i < f.t.size(); ++i) os << f.t[i] << ',' << f.l2loc[i] << '\n';
  Report r;
  auto& s = r.section("free_decay");
  s.add("window_lo", w.lo);
  s.add("window_hi", w.hi);
  s.add("exponent", f.fit.slope);
  s.add("exponent_ci_lo", f.fit.ci_lo);
  s.add("exponent_ci_hi", f.fit.ci_hi);
  s.add("r2", f.fit.r2);
  s.add("packet_speed", f.speed);
  s.add("reflection_budget", f.budget);
  s.add("window_within_budget", w.hi <= f.budget);
  r.append(model_report(m));
  emit(r, o, "free_decay.txt");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Excited-state relaxation experiments for the radial cubic NLS"};
  Common o;
  app.add_option("--config", o.config, "experiment config (INI)");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "RNG seed override");
  app.add_option("--threads", o.threads, "sweep worker threads")->check(CLI::PositiveNumber);
  app.require_subcommand(1);

  std::string trajectory, axis;
  std::vector<std::string> values;
  int samples = 1000;
  auto* design = app.add_subcommand("design-potential", "design a two-state Gaussian well");
  auto* spectrum = app.add_subcommand("spectrum", "linear spectrum and resonance data");
  auto* families = app.add_subcommand("families", "continue the ground and excited families");
  auto* gamma0 = app.add_subcommand("gamma0", "Fermi constant estimators");
  auto* evolve = app.add_subcommand("evolve", "run, record and classify one experiment");
  auto* cls = app.add_subcommand("classify", "classify a stored trajectory");
  cls->add_option("--trajectory", trajectory, "trajectory CSV")->required();
  auto* sw = app.add_subcommand("sweep", "independent runs over one config key");
  sw->add_option("--axis", axis, "config key, e.g. initial.seed_ratio")->required();
  sw->add_option("--values", values, "comma-separated values")->delimiter(',');
  auto* ineq = app.add_subcommand("verify-inequalities", "empirical constants of the time-integral bounds");
  ineq->add_option("--samples", samples, "random samples per inequality");
  auto* decay = app.add_subcommand("free-decay", "linear L2loc decay of a dispersive packet");
  for (auto* s : app.get_subcommands({})) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (design->parsed()) return cmd_design(o);
    if (spectrum->parsed()) return cmd_spectrum(o);
    if (families->parsed()) return cmd_families(o);
    if (gamma0->parsed()) return cmd_gamma0(o);
    if (evolve->parsed()) return cmd_evolve(o);
    if (cls->parsed()) return cmd_classify(o, trajectory);
    if (sw->parsed()) return cmd_sweep(o, axis, values);
    if (ineq->parsed()) return cmd_inequalities(o, samples);
    if (decay->parsed()) return cmd_free_decay(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
