#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include <json.hpp>

#include "hmimo/hmimo.hpp"

namespace hmimo::cli {

using json = nlohmann::ordered_json;

enum class ScenarioKind { GainSweep, NearFieldGain, CapacityQuasiStatic, CapacityErgodic, CapacityNearField };

inline std::string to_string(ScenarioKind s) {
  switch (s) {
    case ScenarioKind::GainSweep: return "gain-sweep";
    case ScenarioKind::NearFieldGain: return "nearfield-gain";
    case ScenarioKind::CapacityQuasiStatic: return "capacity-quasi-static";
    case ScenarioKind::CapacityErgodic: return "capacity-ergodic";
    case ScenarioKind::CapacityNearField: return "capacity-near-field";
  }
  return "unknown";
}

// Subcommand that owns a scenario.
inline std::string command_of(ScenarioKind s) {
  switch (s) {
    case ScenarioKind::GainSweep: return "gain";
    case ScenarioKind::NearFieldGain: return "nearfield";
    default: return "capacity";
  }
}

struct Diagnostic {
  enum class Kind { Parse, Semantic } kind = Kind::Semantic;
  std::string path;
  std::string message;

  std::string str() const {
    return std::string(kind == Kind::Parse ? "parse error" : "error") +
           (path.empty() ? "" : " at '" + path + "'") + ": " + message;
  }
};

struct TopologyConfig {
  std::vector<ArrayKind> kinds;
  double L_x = 5.0;
  double L_y = 5.0;
  double dy = 0.5;
  double dz_offset = 1.0;
  HeightPattern pattern = HeightPattern::Checkerboard;
  std::vector<int> N_x;
};

struct GainConfig {
  std::vector<GainMethod> methods{GainMethod::ClosedForm, GainMethod::Quadrature, GainMethod::Physical};
  std::vector<double> theta_deg{0.0};
  double phi_deg = 0.0;
  ElementPattern element = ElementPattern::cosine(2.0);
  bool realized = false;
  bool average = false;
  AngularSpread spread{};
  int n_steer = 7;
  QuadratureOptions quadrature{};
};

struct NearFieldConfig {
  double L = 5.0;
  int N_x = 11;
  std::vector<double> R;
  Pol polarization = Pol::x;
};

struct CapacitySection {
  double snr_dB = 10.0;
  int n_realizations = 0;  // 0 until resolved per scenario
  int users = 0;
  std::vector<std::string> policies;
  int n_steer = 7;
  AngularSpread spread{};
  ElementPattern element = ElementPattern::cosine(2.0);
  SectorSpectrum spectrum{};
  double kappa = 1.0;
  EfficiencyMode efficiency_mode = EfficiencyMode::SchurLoss;
  double gain_scale = 1.0 / pi;
  CorrelationQuadrature correlation{};
  bool export_correlation = false;
};

struct NearFieldCapacityConfig {
  std::vector<double> R;
  std::vector<ArrayKind> rx_kinds{ArrayKind::Planar, ArrayKind::Volumetric};
  int rx_N_x = 0;
  int tx_N_x = 11;
  double L = 5.0;
  double dz_offset = 1.0;
  HeightPattern pattern = HeightPattern::Checkerboard;
};

struct ExperimentConfig {
  ScenarioKind scenario = ScenarioKind::GainSweep;
  std::uint64_t seed = 1;
  bool charts = true;
  unsigned threads = 1;  // execution only, never part of the resolved config
  TopologyConfig topology;
  GainConfig gain;
  EfficiencyModel efficiency;
  NearFieldConfig nearfield;
  CapacitySection capacity;
  NearFieldCapacityConfig nf_capacity;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<Diagnostic> diagnostics;

  bool has_parse_error() const {
    for (const auto& d : diagnostics)
      if (d.kind == Diagnostic::Kind::Parse) return true;
    return false;
  }
};

namespace detail {

inline std::string join(const std::string& a, const std::string& b) {
  return a.empty() ? b : a + "." + b;
}

template <class T>
struct Name;
template <> struct Name<double> { static constexpr const char* v = "a number"; };
template <> struct Name<int> { static constexpr const char* v = "an integer"; };
template <> struct Name<std::uint64_t> { static constexpr const char* v = "a non-negative integer"; };
template <> struct Name<bool> { static constexpr const char* v = "true or false"; };
template <> struct Name<std::string> { static constexpr const char* v = "a string"; };

// A YAML mapping with its key path; records diagnostics and flags unknown keys.
class Section {
 public:
  Section(YAML::Node node, std::string path, std::vector<Diagnostic>& diags)
      : node_(std::move(node)), path_(std::move(path)), diags_(&diags) {}

  bool valid() const { return node_ && node_.IsMap(); }

  // Const lookup: indexing a mutable node would insert the key.
  YAML::Node at(const std::string& key) const {
    const YAML::Node& n = node_;
    return n[key];
  }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return valid() && at(key) && !at(key).IsNull();
  }

  void error(const std::string& key, const std::string& msg) {
    diags_->push_back({Diagnostic::Kind::Semantic, key.empty() ? path_ : join(path_, key), msg});
  }

  template <class T>
  std::optional<T> scalar(const YAML::Node& n, const std::string& at) {
    if (!n.IsScalar()) {
      diags_->push_back({Diagnostic::Kind::Semantic, at, std::string("expected ") + Name<T>::v});
      return std::nullopt;
    }
    try {
      T v = n.as<T>();
      if constexpr (std::is_same_v<T, double>) {
        if (!std::isfinite(v)) throw YAML::BadConversion(n.Mark());
      }
      return v;
    } catch (const YAML::Exception&) {
      diags_->push_back({Diagnostic::Kind::Semantic, at,
                         std::string("expected ") + Name<T>::v + ", got '" + n.Scalar() + "'"});
      return std::nullopt;
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return scalar<T>(at(key), join(path_, key)).value_or(fallback);
  }

  template <class T>
  std::optional<T> need(const std::string& key) {
    if (!has(key)) {
      error(key, "missing required key");
      return std::nullopt;
    }
    return scalar<T>(at(key), join(path_, key));
  }

  template <class T>
  std::vector<T> list(const std::string& key, std::vector<T> fallback) {
    if (!has(key)) return fallback;
    const YAML::Node n = at(key);
    const std::string at = join(path_, key);
    std::vector<T> out;
    if (n.IsScalar()) {
      if (auto v = scalar<T>(n, at)) out.push_back(*v);
      return out;
    }
    if (!n.IsSequence()) {
      error(key, std::string("expected a list of ") + Name<T>::v);
      return fallback;
    }
    for (std::size_t i = 0; i < n.size(); ++i)
      if (auto v = scalar<T>(n[i], at + "[" + std::to_string(i) + "]")) out.push_back(*v);
    return out;
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return valid() ? at(key) : YAML::Node();
  }

  Section child(const std::string& key, bool required) {
    seen_.insert(key);
    YAML::Node n = valid() ? at(key) : YAML::Node();
    if (!n || n.IsNull()) {
      if (required) error(key, "missing required section");
      return {YAML::Node(), join(path_, key), *diags_};
    }
    if (!n.IsMap()) {
      error(key, "expected a section of key/value pairs");
      return {YAML::Node(), join(path_, key), *diags_};
    }
    return {n, join(path_, key), *diags_};
  }

  void finish() {
    if (!valid()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!seen_.count(k)) error(k, "unknown key");
    }
  }

  std::vector<Diagnostic>& diags() { return *diags_; }

 private:
  YAML::Node node_;
  std::string path_;
  std::vector<Diagnostic>* diags_;
  std::set<std::string> seen_;
};

inline std::optional<ArrayKind> parse_kind(const std::string& s) {
  if (s == "linear") return ArrayKind::Linear;
  if (s == "planar") return ArrayKind::Planar;
  if (s == "volumetric") return ArrayKind::Volumetric;
  return std::nullopt;
}

inline std::optional<HeightPattern> parse_pattern(const std::string& s) {
  if (s == "checkerboard") return HeightPattern::Checkerboard;
  if (s == "columns") return HeightPattern::Columns;
  if (s == "rows") return HeightPattern::Rows;
  return std::nullopt;
}

inline std::string to_string(HeightPattern p) {
  switch (p) {
    case HeightPattern::Checkerboard: return "checkerboard";
    case HeightPattern::Columns: return "columns";
    case HeightPattern::Rows: return "rows";
  }
  return "unknown";
}

inline std::optional<GainMethod> parse_method(const std::string& s) {
  if (s == "analytical-closed") return GainMethod::ClosedForm;
  if (s == "analytical-quadrature") return GainMethod::Quadrature;
  if (s == "physical") return GainMethod::Physical;
  return std::nullopt;
}

inline std::optional<Pol> parse_pol(const std::string& s) {
  if (s == "x") return Pol::x;
  if (s == "y") return Pol::y;
  if (s == "z") return Pol::z;
  return std::nullopt;
}

inline std::vector<ArrayKind> kinds(Section& s, const std::string& key, std::vector<ArrayKind> fallback,
                                    bool required) {
  if (!s.has(key)) {
    if (required) s.error(key, "missing required key");
    return fallback;
  }
  std::vector<ArrayKind> out;
  for (const auto& n : s.list<std::string>(key, {})) {
    if (auto k = parse_kind(n)) out.push_back(*k);
    else s.error(key, "unknown topology '" + n + "' (expected linear, planar or volumetric)");
  }
  if (out.empty()) s.error(key, "empty topology list");
  return out;
}

// Integer list, or an inclusive range {from, to, step}.
inline std::vector<int> int_sweep(Section& s, const std::string& key) {
  if (!s.has(key)) {
    s.error(key, "missing required key");
    return {};
  }
  const YAML::Node n = s.raw(key);
  if (n.IsMap()) {
    Section r(n, join(s.path(), key), s.diags());
    const auto from = r.need<int>("from");
    const auto to = r.need<int>("to");
    const int step = r.get<int>("step", 1);
    r.finish();
    if (!from || !to) return {};
    if (step < 1) {
      r.error("step", "must be at least 1");
      return {};
    }
    if (*to < *from) {
      r.error("to", "must not be below 'from'");
      return {};
    }
    std::vector<int> out;
    for (int v = *from; v <= *to; v += step) out.push_back(v);
    return out;
  }
  return s.list<int>(key, {});
}

// Number list, or {from, to, count, spacing: log|linear} (endpoints included).
inline std::vector<double> real_sweep(Section& s, const std::string& key) {
  if (!s.has(key)) {
    s.error(key, "missing required key");
    return {};
  }
  const YAML::Node n = s.raw(key);
  if (n.IsMap()) {
    Section r(n, join(s.path(), key), s.diags());
    const auto from = r.need<double>("from");
    const auto to = r.need<double>("to");
    const auto count = r.need<int>("count");
    const std::string spacing = r.get<std::string>("spacing", "linear");
    r.finish();
    if (!from || !to || !count) return {};
    if (*count < 1) {
      r.error("count", "must be at least 1");
      return {};
    }
    if (spacing != "log" && spacing != "linear") {
      r.error("spacing", "expected 'log' or 'linear'");
      return {};
    }
    if (spacing == "log" && (*from <= 0.0 || *to <= 0.0)) {
      r.error("from", "log spacing needs positive endpoints");
      return {};
    }
    std::vector<double> out;
    for (int i = 0; i < *count; ++i) {
      const double t = *count == 1 ? 0.0 : double(i) / double(*count - 1);
      out.push_back(spacing == "log" ? std::exp(std::log(*from) + t * (std::log(*to) - std::log(*from)))
                                     : *from + t * (*to - *from));
    }
    return out;
  }
  return s.list<double>(key, {});
}

inline ElementPattern element(Section& parent, const std::string& key, ElementPattern fallback) {
  Section e = parent.child(key, false);
  if (!e.valid()) return fallback;
  ElementPattern p;
  p.u = e.get<double>("u", fallback.u);
  p.v = e.get<double>("v", fallback.v);
  p.board_factor = e.get<double>("board_factor", fallback.board_factor);
  if (p.u <= -1.0) e.error("u", "must exceed -1");
  if (p.v <= -0.5) e.error("v", "must exceed -1/2");
  if (p.board_factor != 1.0 && p.board_factor != 2.0) e.error("board_factor", "must be 1 or 2");
  e.finish();
  return p;
}

inline AngularSpread spread(Section& parent, const std::string& key, bool averaging) {
  Section s = parent.child(key, false);
  AngularSpread a{};
  if (!s.valid()) return a;
  const double t0 = s.get<double>("theta0_deg", rad2deg(a.theta_0));
  const double p0 = s.get<double>("phi0_deg", rad2deg(a.phi_0));
  if (averaging && !(t0 > 0.0)) s.error("theta0_deg", "degenerate angular spread: must be positive");
  else if (t0 > 90.0) s.error("theta0_deg", "must not exceed 90");
  if (p0 < 0.0 || p0 > 360.0) s.error("phi0_deg", "must lie in [0, 360]");
  a.theta_0 = deg2rad(t0);
  a.phi_0 = deg2rad(p0);
  s.finish();
  return a;
}

inline bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

}  // namespace detail

inline ParseResult parse_config_text(const std::string& text) {
  ParseResult res;
  auto& diags = res.diagnostics;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    diags.push_back({Diagnostic::Kind::Parse, "",
                     "line " + std::to_string(e.mark.line + 1) + ": " + e.msg});
    return res;
  }
  if (!root || !root.IsMap()) {
    diags.push_back({Diagnostic::Kind::Parse, "", "config must be a key/value mapping"});
    return res;
  }

  using detail::Section;
  const YAML::Node& croot = root;
  Section top(root, "", diags);
  ExperimentConfig c;

  const auto scen = top.need<std::string>("scenario");
  bool scen_ok = false;
  if (scen) {
    for (auto k : {ScenarioKind::GainSweep, ScenarioKind::NearFieldGain, ScenarioKind::CapacityQuasiStatic,
                   ScenarioKind::CapacityErgodic, ScenarioKind::CapacityNearField})
      if (*scen == to_string(k)) {
        c.scenario = k;
        scen_ok = true;
      }
    if (!scen_ok)
      top.error("scenario", "unknown scenario '" + *scen +
                                "' (expected gain-sweep, nearfield-gain, capacity-quasi-static, "
                                "capacity-ergodic or capacity-near-field)");
  }
  c.seed = top.get<std::uint64_t>("seed", 1);
  c.charts = top.get<bool>("charts", true);
  const int threads = top.get<int>("threads", 1);
  if (threads < 1) top.error("threads", "must be at least 1");
  c.threads = unsigned(std::max(threads, 1));

  if (!scen_ok) {
    // The remaining schema depends on the scenario.
    return res;
  }

  const bool far_topology = c.scenario == ScenarioKind::GainSweep ||
                            c.scenario == ScenarioKind::CapacityQuasiStatic ||
                            c.scenario == ScenarioKind::CapacityErgodic;
  if (far_topology) {
    Section t = top.child("topology", true);
    if (t.valid()) {
      c.topology.kinds = detail::kinds(t, "kinds", {}, true);
      c.topology.L_x = t.get<double>("L_x", 5.0);
      c.topology.L_y = t.get<double>("L_y", 5.0);
      c.topology.dy = t.get<double>("dy", 0.5);
      c.topology.dz_offset = t.get<double>("dz_offset", 1.0);
      const std::string pat = t.get<std::string>("height_pattern", "checkerboard");
      if (auto p = detail::parse_pattern(pat)) c.topology.pattern = *p;
      else t.error("height_pattern", "expected checkerboard, columns or rows");
      c.topology.N_x = detail::int_sweep(t, "N_x");
      if (!(c.topology.L_x > 0.0)) t.error("L_x", "must be positive");
      if (!(c.topology.L_y > 0.0)) t.error("L_y", "must be positive");
      if (!(c.topology.dy > 0.0)) t.error("dy", "must be positive");
      if (c.topology.dz_offset < 0.0) t.error("dz_offset", "must be non-negative");
      for (int n : c.topology.N_x)
        if (n < 1) {
          t.error("N_x", "element counts must be at least 1");
          break;
        }
      if (c.topology.N_x.empty() && t.has("N_x")) t.error("N_x", "empty sweep");
      t.finish();
    }
  } else {
    top.raw("topology");
    if (croot["topology"]) top.error("topology", "not used by scenario '" + to_string(c.scenario) + "'");
  }

  {
    Section e = top.child("efficiency", false);
    c.efficiency.D_e = e.get<double>("D_e", 3.28);
    c.efficiency.a_l = e.get<double>("a_l", 0.77);
    c.efficiency.S_v = e.get<double>("S_v", 0.065);
    if (!(c.efficiency.D_e > 0.0)) e.error("D_e", "must be positive");
    if (!(c.efficiency.a_l > 0.0)) e.error("a_l", "must be positive");
    if (!(c.efficiency.S_v > 0.0)) e.error("S_v", "must be positive");
    e.finish();
  }

  if (c.scenario == ScenarioKind::GainSweep) {
    Section g = top.child("gain", true);
    if (g.valid()) {
      if (g.has("methods")) {
        c.gain.methods.clear();
        for (const auto& m : g.list<std::string>("methods", {})) {
          if (auto k = detail::parse_method(m)) c.gain.methods.push_back(*k);
          else
            g.error("methods", "unknown method '" + m +
                                   "' (expected analytical-closed, analytical-quadrature or physical)");
        }
        if (c.gain.methods.empty()) g.error("methods", "empty method list");
      }
      c.gain.average = g.get<bool>("average", false);
      c.gain.realized = g.get<bool>("realized", false);
      c.gain.theta_deg = g.list<double>("theta_deg", {0.0});
      c.gain.phi_deg = g.get<double>("phi_deg", 0.0);
      for (double t : c.gain.theta_deg)
        if (!detail::within(t, 0.0, 90.0)) {
          g.error("theta_deg", "steering angles must lie in [0, 90]");
          break;
        }
      c.gain.element = detail::element(g, "element", c.gain.element);
      c.gain.spread = detail::spread(g, "spread", c.gain.average);
      c.gain.n_steer = g.get<int>("n_steer", 7);
      if (c.gain.n_steer < 1) g.error("n_steer", "must be at least 1");
      Section q = g.child("quadrature", false);
      c.gain.quadrature.rule.n_theta = q.get<int>("n_theta", 256);
      c.gain.quadrature.rule.n_phi = q.get<int>("n_phi", 512);
      c.gain.quadrature.refine = q.get<bool>("refine", true);
      c.gain.quadrature.tol = q.get<double>("tol", 1e-6);
      if (c.gain.quadrature.rule.n_theta < 2) q.error("n_theta", "must be at least 2");
      if (c.gain.quadrature.rule.n_phi < 2) q.error("n_phi", "must be at least 2");
      if (!(c.gain.quadrature.tol > 0.0)) q.error("tol", "must be positive");
      q.finish();
      g.finish();
    }
  } else {
    top.raw("gain");
    if (croot["gain"]) top.error("gain", "not used by scenario '" + to_string(c.scenario) + "'");
  }

  if (c.scenario == ScenarioKind::NearFieldGain) {
    Section n = top.child("nearfield", true);
    if (n.valid()) {
      c.nearfield.L = n.get<double>("L", 5.0);
      c.nearfield.N_x = n.get<int>("N_x", 11);
      c.nearfield.R = detail::real_sweep(n, "R");
      const std::string p = n.get<std::string>("polarization", "x");
      if (auto q = detail::parse_pol(p)) c.nearfield.polarization = *q;
      else n.error("polarization", "expected x, y or z");
      if (!(c.nearfield.L > 0.0)) n.error("L", "must be positive");
      if (c.nearfield.N_x < 1) n.error("N_x", "must be at least 1");
      for (double r : c.nearfield.R)
        if (!(r > 0.0)) {
          n.error("R", "distances must be positive");
          break;
        }
      n.finish();
    }
  } else {
    top.raw("nearfield");
    if (croot["nearfield"]) top.error("nearfield", "not used by scenario '" + to_string(c.scenario) + "'");
  }

  const bool capacity = c.scenario == ScenarioKind::CapacityQuasiStatic ||
                        c.scenario == ScenarioKind::CapacityErgodic ||
                        c.scenario == ScenarioKind::CapacityNearField;
  if (capacity) {
    Section k = top.child("capacity", false);
    auto& cap = c.capacity;
    cap.snr_dB = k.get<double>("snr_dB", 10.0);
    const int n_default = c.scenario == ScenarioKind::CapacityErgodic ? 2000
                          : c.scenario == ScenarioKind::CapacityQuasiStatic ? 100 : 1;
    cap.n_realizations = k.get<int>("n_realizations", n_default);
    if (cap.n_realizations < 1) k.error("n_realizations", "must be at least 1");
    const std::vector<std::string> default_pol =
        c.scenario == ScenarioKind::CapacityNearField
            ? std::vector<std::string>{"nf-far-field", "nf-focus-scalar", "nf-focus-dyadic", "nf-steer-dyadic"}
            : std::vector<std::string>{"traditional", "em-physical", "em-analytical"};
    cap.policies = k.list<std::string>("policies", default_pol);
    const std::set<std::string> allowed =
        c.scenario == ScenarioKind::CapacityNearField
            ? std::set<std::string>{"nf-far-field", "nf-focus-scalar", "nf-focus-dyadic", "nf-steer-dyadic"}
            : std::set<std::string>{"traditional", "em-physical", "em-analytical", "em-quadrature"};
    for (const auto& p : cap.policies)
      if (!allowed.count(p)) k.error("policies", "policy '" + p + "' not available for this scenario");
    if (cap.policies.empty()) k.error("policies", "empty policy list");
    cap.gain_scale = k.get<double>("gain_scale", 1.0 / pi);
    if (!(cap.gain_scale > 0.0)) k.error("gain_scale", "must be positive");
    if (c.scenario == ScenarioKind::CapacityNearField) {
      if (k.has("n_realizations") && cap.n_realizations != 1)
        k.error("n_realizations", "the near-field channel is deterministic; use 1");
    } else {
      cap.users = k.get<int>("users", 0);
      if (cap.users < 0) k.error("users", "must be non-negative (0 selects the topology default)");
      cap.n_steer = k.get<int>("n_steer", 7);
      if (cap.n_steer < 1) k.error("n_steer", "must be at least 1");
      cap.spread = detail::spread(k, "spread", true);
      cap.element = detail::element(k, "element", cap.element);
      const std::string mode = k.get<std::string>("efficiency_mode", "schur-loss");
      if (mode == "schur-loss") cap.efficiency_mode = EfficiencyMode::SchurLoss;
      else if (mode == "realized-gain-target") cap.efficiency_mode = EfficiencyMode::RealizedGainTarget;
      else k.error("efficiency_mode", "expected schur-loss or realized-gain-target");
      cap.export_correlation = k.get<bool>("export_correlation", false);
      Section s = k.child("spectrum", false);
      const double tmin = s.get<double>("theta_min_deg", 0.0);
      const double tmax = s.get<double>("theta_max_deg", 60.0);
      const double pmin = s.get<double>("phi_min_deg", 0.0);
      const double pmax = s.get<double>("phi_max_deg", 360.0);
      cap.spectrum.P_theta = s.get<double>("P_theta", 1.0);
      cap.spectrum.P_phi = s.get<double>("P_phi", 1.0);
      cap.kappa = s.get<double>("kappa", 1.0);
      if (!(tmin >= 0.0 && tmax <= 180.0 && tmax > tmin)) s.error("theta_max_deg", "need 0 <= theta_min < theta_max <= 180");
      if (!(pmax > pmin && pmax - pmin <= 360.0)) s.error("phi_max_deg", "need phi_min < phi_max within one turn");
      if (cap.spectrum.P_theta < 0.0) s.error("P_theta", "must be non-negative");
      if (cap.spectrum.P_phi < 0.0) s.error("P_phi", "must be non-negative");
      if (!(cap.kappa > 0.0)) s.error("kappa", "must be positive");
      cap.spectrum.theta_min = deg2rad(tmin);
      cap.spectrum.theta_max = deg2rad(tmax);
      cap.spectrum.phi_min = deg2rad(pmin);
      // Keep the full turn exact so the symmetric fast path is used.
      cap.spectrum.phi_max = (pmin == 0.0 && pmax == 360.0) ? 2.0 * pi : deg2rad(pmax);
      s.finish();
      Section q = k.child("correlation_quadrature", false);
      cap.correlation.n_theta = q.get<int>("n_theta", 128);
      cap.correlation.n_phi = q.get<int>("n_phi", 128);
      if (cap.correlation.n_theta < 2) q.error("n_theta", "must be at least 2");
      if (cap.correlation.n_phi < 2) q.error("n_phi", "must be at least 2");
      q.finish();
    }
    k.finish();
  } else {
    top.raw("capacity");
    if (croot["capacity"]) top.error("capacity", "not used by scenario '" + to_string(c.scenario) + "'");
  }

  if (c.scenario == ScenarioKind::CapacityNearField) {
    Section n = top.child("near_field", true);
    if (n.valid()) {
      auto& nf = c.nf_capacity;
      nf.R = detail::real_sweep(n, "R");
      nf.rx_kinds = detail::kinds(n, "rx_kinds", nf.rx_kinds, false);
      for (auto kind : nf.rx_kinds)
        if (kind == ArrayKind::Linear) n.error("rx_kinds", "receiver must be planar or volumetric");
      nf.rx_N_x = n.get<int>("rx_N_x", 0);
      nf.tx_N_x = n.get<int>("tx_N_x", 11);
      nf.L = n.get<double>("L", 5.0);
      nf.dz_offset = n.get<double>("dz_offset", 1.0);
      const std::string pat = n.get<std::string>("height_pattern", "checkerboard");
      if (auto p = detail::parse_pattern(pat)) nf.pattern = *p;
      else n.error("height_pattern", "expected checkerboard, columns or rows");
      if (nf.rx_N_x < 0) n.error("rx_N_x", "must be non-negative (0 selects the topology default)");
      if (nf.tx_N_x < 1) n.error("tx_N_x", "must be at least 1");
      if (!(nf.L > 0.0)) n.error("L", "must be positive");
      if (nf.dz_offset < 0.0) n.error("dz_offset", "must be non-negative");
      for (double r : nf.R)
        if (!(r > 0.0)) {
          n.error("R", "distances must be positive");
          break;
        }
      n.finish();
    }
  } else {
    top.raw("near_field");
    if (croot["near_field"]) top.error("near_field", "not used by scenario '" + to_string(c.scenario) + "'");
  }

  top.finish();
  if (diags.empty()) res.config = c;
  return res;
}

inline ParseResult parse_config_file(const std::string& path, std::string* text_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ParseResult r;
    r.diagnostics.push_back({Diagnostic::Kind::Parse, "", "cannot read config file '" + path + "'"});
    return r;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  if (text_out) *text_out = ss.str();
  return parse_config_text(ss.str());
}

inline json angular_spread_json(const AngularSpread& s) {
  return {{"theta0_deg", rad2deg(s.theta_0)}, {"phi0_deg", rad2deg(s.phi_0)}};
}

inline json element_json(const ElementPattern& p) {
  return {{"u", p.u}, {"v", p.v}, {"board_factor", p.board_factor}};
}

inline json kinds_json(const std::vector<ArrayKind>& ks) {
  json a = json::array();
  for (auto k : ks) a.push_back(to_string(k));
  return a;
}

// Every parameter the run depends on, defaults included.
inline json resolved_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["seed"] = c.seed;
  j["charts"] = c.charts;
  const bool far_topology = c.scenario == ScenarioKind::GainSweep ||
                            c.scenario == ScenarioKind::CapacityQuasiStatic ||
                            c.scenario == ScenarioKind::CapacityErgodic;
  if (far_topology) {
    j["topology"] = {{"kinds", kinds_json(c.topology.kinds)},
                     {"L_x", c.topology.L_x},
                     {"L_y", c.topology.L_y},
                     {"dy", c.topology.dy},
                     {"dz_offset", c.topology.dz_offset},
                     {"height_pattern", detail::to_string(c.topology.pattern)},
                     {"N_x", c.topology.N_x}};
  }
  j["efficiency"] = {{"D_e", c.efficiency.D_e}, {"a_l", c.efficiency.a_l}, {"S_v", c.efficiency.S_v}};
  if (c.scenario == ScenarioKind::GainSweep) {
    json m = json::array();
    for (auto k : c.gain.methods) m.push_back(to_string(k));
    j["gain"] = {{"methods", m},
                 {"theta_deg", c.gain.theta_deg},
                 {"phi_deg", c.gain.phi_deg},
                 {"element", element_json(c.gain.element)},
                 {"realized", c.gain.realized},
                 {"average", c.gain.average},
                 {"spread", angular_spread_json(c.gain.spread)},
                 {"n_steer", c.gain.n_steer},
                 {"quadrature",
                  {{"n_theta", c.gain.quadrature.rule.n_theta},
                   {"n_phi", c.gain.quadrature.rule.n_phi},
                   {"refine", c.gain.quadrature.refine},
                   {"tol", c.gain.quadrature.tol}}}};
  }
  if (c.scenario == ScenarioKind::NearFieldGain) {
    j["nearfield"] = {{"L", c.nearfield.L},
                      {"N_x", c.nearfield.N_x},
                      {"R", c.nearfield.R},
                      {"polarization", to_string(c.nearfield.polarization)},
                      {"series", {{"rel_tol", SeriesControl{}.rel_tol}, {"max_terms", SeriesControl{}.max_terms}}},
                      {"loss_coefficients",
                       {{"polarization", loss_coefficient_polarization},
                        {"illumination", loss_coefficient_illumination},
                        {"beamforming", loss_coefficient_beamforming}}}};
  }
  if (c.scenario == ScenarioKind::CapacityNearField) {
    const auto& nf = c.nf_capacity;
    j["capacity"] = {{"snr_dB", c.capacity.snr_dB},
                     {"n_realizations", c.capacity.n_realizations},
                     {"policies", c.capacity.policies},
                     {"gain_scale", c.capacity.gain_scale},
                     {"normalization", "TxC_RxC"},
                     {"block", "xx"}};
    j["near_field"] = {{"R", nf.R},
                       {"rx_kinds", kinds_json(nf.rx_kinds)},
                       {"rx_N_x", nf.rx_N_x},
                       {"tx_N_x", nf.tx_N_x},
                       {"L", nf.L},
                       {"dz_offset", nf.dz_offset},
                       {"height_pattern", detail::to_string(nf.pattern)}};
  } else if (c.scenario == ScenarioKind::CapacityQuasiStatic || c.scenario == ScenarioKind::CapacityErgodic) {
    const auto& k = c.capacity;
    j["capacity"] = {
        {"snr_dB", k.snr_dB},
        {"n_realizations", k.n_realizations},
        {"users", k.users},
        {"policies", k.policies},
        {"n_steer", k.n_steer},
        {"spread", angular_spread_json(k.spread)},
        {"element", element_json(k.element)},
        {"spectrum",
         {{"theta_min_deg", rad2deg(k.spectrum.theta_min)},
          {"theta_max_deg", rad2deg(k.spectrum.theta_max)},
          {"phi_min_deg", rad2deg(k.spectrum.phi_min)},
          {"phi_max_deg", rad2deg(k.spectrum.phi_max)},
          {"P_theta", k.spectrum.P_theta},
          {"P_phi", k.spectrum.P_phi},
          {"kappa", k.kappa}}},
        {"efficiency_mode", k.efficiency_mode == EfficiencyMode::SchurLoss ? "schur-loss" : "realized-gain-target"},
        {"gain_scale", k.gain_scale},
        {"correlation_quadrature", {{"n_theta", k.correlation.n_theta}, {"n_phi", k.correlation.n_phi}}},
        {"export_correlation", k.export_correlation}};
  }
  return j;
}

}  // namespace hmimo::cli
