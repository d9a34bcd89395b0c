#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "nlsprof/classifier.hpp"
#include "nlsprof/trajectory.hpp"

namespace nlsprof {

enum class InitialTag { GroundNoise, ExcitedGroundSeed, DispersivePacket, CustomCoefficients };

inline const char* to_string(InitialTag t) {
  switch (t) {
    case InitialTag::GroundNoise: return "ground+noise";
    case InitialTag::ExcitedGroundSeed: return "excited+ground-seed";
    case InitialTag::DispersivePacket: return "dispersive-packet";
    case InitialTag::CustomCoefficients: return "custom-coefficients";
  }
  return "?";
}

inline InitialTag parse_initial_tag(const std::string& s) {
  for (InitialTag t : {InitialTag::GroundNoise, InitialTag::ExcitedGroundSeed, InitialTag::DispersivePacket,
                       InitialTag::CustomCoefficients})
    if (s == to_string(t)) return t;
  fail(ErrorCode::ConfigError, "unknown initial-data tag '" + s + "'");
}

struct ExperimentConfig {
  // [potential]
  std::string potential_form = "gaussian";
  std::optional<double> depth;  // empty: designed
  double width = 1.0;
  double margin = 0.1;
  // [grid]
  double r_max = 100;
  int N = 1000;
  // [model]
  double lambda = 1;
  // [families]
  std::optional<double> family_max;  // empty: from the initial amplitudes
  // [initial]
  InitialTag tag = InitialTag::ExcitedGroundSeed;
  double amplitude = 1.0;     // m, n, or the packet L2 norm
  double seed_ratio = 0.1;    // x0 / m for excited+ground-seed
  double noise = 1e-3;        // L2 norm of the localized noise for ground+noise
  double noise_width = 2.0;
  double packet_center = 0.0;
  double packet_width = 3.0;
  double packet_momentum = 0.0;
  double packet_amplitude = 0.0;  // extra packet for custom-coefficients
  cplx x0 = 0, y0 = 0;
  uint64_t rng_seed = 1;
  // [run]
  double T = 100;
  std::optional<double> dt;   // empty: 0.5 / |e0|
  std::optional<int> stride;  // empty: about 1000 samples
  bool cap = false;
  double cap_fraction = 0.2;
  double cap_strength = 5.0;
  bool allow_reflections = false;
  double r1 = 4;
  // [classifier]
  ClassifierParams classifier;
  // [resonance]
  double sigma_spacings = 2.0;

  void validate() const {
    require(potential_form == "gaussian", ErrorCode::ConfigError, "only the Gaussian well is configurable");
    require(!depth || *depth > 0, ErrorCode::ConfigError, "potential depth must be positive");
    require(width > 0, ErrorCode::ConfigError, "potential width must be positive");
    require(margin > 0 && margin < 0.5, ErrorCode::ConfigError, "design margin must lie in (0, 0.5)");
    require(r_max > 0 && N >= 10, ErrorCode::ConfigError, "grid needs r_max > 0 and N >= 10");
    require(lambda == 1 || lambda == -1, ErrorCode::ConfigError, "lambda must be +1 or -1");
    require(!family_max || *family_max > 0, ErrorCode::ConfigError, "family range must be positive");
    require(amplitude >= 0 && noise >= 0 && packet_width > 0 && noise_width > 0, ErrorCode::ConfigError,
            "initial-data sizes must be nonnegative and widths positive");
    require(T >= 0 && std::isfinite(T), ErrorCode::ConfigError, "horizon must be nonnegative");
    require(!dt || *dt > 0, ErrorCode::ConfigError, "time step must be positive");
    require(!stride || *stride >= 1, ErrorCode::ConfigError, "stride must be >= 1");
    require(cap_fraction > 0 && cap_fraction < 1 && cap_strength >= 0, ErrorCode::ConfigError,
            "absorbing layer needs fraction in (0,1) and strength >= 0");
    require(r1 > 3, ErrorCode::ConfigError, "local weight exponent must exceed 3");
    require(sigma_spacings > 0, ErrorCode::ConfigError, "sigma_spacings must be positive");
    try {
      classifier.validate();
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, e.what());
    }
  }

  // Flat key = value view, "section.key" names; used for metadata, sweeps and round trips.
  std::map<std::string, std::string> to_map() const {
    std::map<std::string, std::string> m;
    auto num = [](double v) { return format_number(v); };
    auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string("auto"); };
    m["potential.form"] = potential_form;
    m["potential.depth"] = opt(depth);
    m["potential.width"] = num(width);
    m["potential.margin"] = num(margin);
    m["grid.r_max"] = num(r_max);
    m["grid.N"] = std::to_string(N);
    m["model.lambda"] = num(lambda);
    m["families.max"] = opt(family_max);
    m["initial.tag"] = to_string(tag);
    m["initial.amplitude"] = num(amplitude);
    m["initial.seed_ratio"] = num(seed_ratio);
    m["initial.noise"] = num(noise);
    m["initial.noise_width"] = num(noise_width);
    m["initial.packet_center"] = num(packet_center);
    m["initial.packet_width"] = num(packet_width);
    m["initial.packet_momentum"] = num(packet_momentum);
    m["initial.packet_amplitude"] = num(packet_amplitude);
    m["initial.x0_re"] = num(x0.real());
    m["initial.x0_im"] = num(x0.imag());
    m["initial.y0_re"] = num(y0.real());
    m["initial.y0_im"] = num(y0.imag());
    m["initial.seed"] = std::to_string(rng_seed);
    m["run.T"] = num(T);
    m["run.dt"] = opt(dt);
    m["run.stride"] = stride ? std::to_string(*stride) : "auto";
    m["run.cap"] = cap ? "on" : "off";
    m["run.cap_fraction"] = num(cap_fraction);
    m["run.cap_strength"] = num(cap_strength);
    m["run.allow_reflections"] = allow_reflections ? "true" : "false";
    m["run.r1"] = num(r1);
    m["classifier.alpha"] = opt(classifier.alpha);
    m["classifier.delta"] = num(classifier.delta);
    m["classifier.iota"] = num(classifier.iota);
    m["classifier.eps0"] = num(classifier.eps0);
    m["classifier.eps"] = opt(classifier.eps);
    m["classifier.x_collapse_fraction"] = num(classifier.x_collapse_fraction);
    m["classifier.y_collapse_fraction"] = num(classifier.y_collapse_fraction);
    m["classifier.decay_window_start"] = num(classifier.decay_window_start);
    m["classifier.min_samples"] = std::to_string(classifier.min_samples);
    m["resonance.sigma_spacings"] = num(sigma_spacings);
    return m;
  }

  void set(const std::string& key, const std::string& raw) {
    std::string v = trim(raw);
    auto number = [&]() -> double {
      char* end = nullptr;
      double d = std::strtod(v.c_str(), &end);
      require(end && end != v.c_str() && trim(end).empty() && std::isfinite(d), ErrorCode::ConfigError,
              "key '" + key + "' expects a number, got '" + v + "'");
      return d;
    };
    auto opt = [&]() -> std::optional<double> {
      if (v == "auto") return std::nullopt;
      return number();
    };
    auto integer = [&]() -> long long {
      double d = number();
      require(d == std::floor(d), ErrorCode::ConfigError, "key '" + key + "' expects an integer");
      return static_cast<long long>(d);
    };
    auto flag = [&]() -> bool {
      if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
      if (v == "off" || v == "false" || v == "no" || v == "0") return false;
      fail(ErrorCode::ConfigError, "key '" + key + "' expects on/off, got '" + v + "'");
    };
    if (key == "potential.form") potential_form = v;
    else if (key == "potential.depth") depth = opt();
    else if (key == "potential.width") width = number();
    else if (key == "potential.margin") margin = number();
    else if (key == "grid.r_max") r_max = number();
    else if (key == "grid.N") N = static_cast<int>(integer());
    else if (key == "model.lambda") lambda = number();
    else if (key == "families.max") family_max = opt();
    else if (key == "initial.tag") tag = parse_initial_tag(v);
    else if (key == "initial.amplitude") amplitude = number();
    else if (key == "initial.seed_ratio") seed_ratio = number();
    else if (key == "initial.noise") noise = number();
    else if (key == "initial.noise_width") noise_width = number();
    else if (key == "initial.packet_center") packet_center = number();
    else if (key == "initial.packet_width") packet_width = number();
    else if (key == "initial.packet_momentum") packet_momentum = number();
    else if (key == "initial.packet_amplitude") packet_amplitude = number();
    else if (key == "initial.x0_re") x0.real(number());
    else if (key == "initial.x0_im") x0.imag(number());
    else if (key == "initial.y0_re") y0.real(number());
    else if (key == "initial.y0_im") y0.imag(number());
    else if (key == "initial.seed") rng_seed = static_cast<uint64_t>(std::stoull(v));
    else if (key == "run.T") T = number();
    else if (key == "run.dt") dt = opt();
    else if (key == "run.stride") stride = v == "auto" ? std::nullopt : std::optional<int>(static_cast<int>(integer()));
    else if (key == "run.cap") cap = flag();
    else if (key == "run.cap_fraction") cap_fraction = number();
    else if (key == "run.cap_strength") cap_strength = number();
    else if (key == "run.allow_reflections") allow_reflections = flag();
    else if (key == "run.r1") r1 = number();
    else if (key == "classifier.alpha") classifier.alpha = opt();
    else if (key == "classifier.delta") classifier.delta = number();
    else if (key == "classifier.iota") classifier.iota = number();
    else if (key == "classifier.eps0") classifier.eps0 = number();
    else if (key == "classifier.eps") classifier.eps = opt();
    else if (key == "classifier.x_collapse_fraction") classifier.x_collapse_fraction = number();
    else if (key == "classifier.y_collapse_fraction") classifier.y_collapse_fraction = number();
    else if (key == "classifier.decay_window_start") classifier.decay_window_start = number();
    else if (key == "classifier.min_samples") classifier.min_samples = static_cast<int>(integer());
    else if (key == "resonance.sigma_spacings") sigma_spacings = number();
    else fail(ErrorCode::ConfigError, "unknown configuration key '" + key + "'");
  }

  std::string get(const std::string& key) const {
    auto m = to_map();
    auto it = m.find(key);
    require(it != m.end(), ErrorCode::ConfigError, "unknown configuration key '" + key + "'");
    return it->second;
  }

  // INI text with [section] headers, one key = value per line.
  std::string to_ini() const {
    std::ostringstream os;
    std::string cur;
    for (const auto& [k, v] : to_map()) {
      auto dot = k.find('.');
      std::string sec = k.substr(0, dot);
      if (sec != cur) {
        if (!cur.empty()) os << '\n';
        os << '[' << sec << "]\n";
        cur = sec;
      }
      os << k.substr(dot + 1) << " = " << v << '\n';
    }
    return os.str();
  }

  static ExperimentConfig parse(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
      pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
      fail(ErrorCode::ConfigError, e.what());
    }
    ExperimentConfig c;
    for (const auto& [sec, body] : tree) {
      require(body.data().empty(), ErrorCode::ConfigError, "key '" + sec + "' outside of any section");
      for (const auto& [key, val] : body) c.set(sec + "." + key, val.data());
    }
    c.validate();
    return c;
  }

  static ExperimentConfig parse_string(const std::string& s) {
    std::istringstream is(s);
    return parse(is);
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), ErrorCode::ConfigError, "cannot open configuration file " + path);
    return parse(is);
  }
};

}  // namespace nlsprof
