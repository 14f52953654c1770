#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hmimo/hmimo.hpp"
#include "hmimo_cli/config.hpp"
#include "hmimo_cli/output.hpp"

namespace hmimo::cli {

inline constexpr const char* tool_version = "1.0.0";

struct Artifacts {
  std::vector<Table> tables;
  std::vector<Chart> charts;
};

struct LabeledGeometry {
  std::string label;
  ArrayGeometry geometry;
};

inline std::vector<LabeledGeometry> geometries(const ExperimentConfig& c) {
  std::vector<LabeledGeometry> out;
  switch (c.scenario) {
    case ScenarioKind::GainSweep:
    case ScenarioKind::CapacityQuasiStatic:
    case ScenarioKind::CapacityErgodic:
      for (auto k : c.topology.kinds)
        for (int n : c.topology.N_x)
          out.push_back({to_string(k) + " N_x=" + std::to_string(n),
                         build_geometry(k, c.topology.L_x, c.topology.L_y, n, c.topology.dz_offset,
                                        c.topology.pattern, c.topology.dy)});
      break;
    case ScenarioKind::NearFieldGain:
      out.push_back({"transmitter", build_geometry(ArrayKind::Planar, c.nearfield.L, c.nearfield.L,
                                                   c.nearfield.N_x)});
      break;
    case ScenarioKind::CapacityNearField: {
      const auto& nf = c.nf_capacity;
      out.push_back({"transmitter",
                     build_geometry(ArrayKind::Planar, nf.L, nf.L, nf.tx_N_x).centered()});
      for (auto k : nf.rx_kinds) {
        const int n = nf.rx_N_x > 0 ? nf.rx_N_x : (k == ArrayKind::Planar ? 11 : 21);
        out.push_back({"receiver " + to_string(k),
                       build_geometry(k, nf.L, nf.L, n, nf.dz_offset, nf.pattern)});
      }
      break;
    }
  }
  return out;
}

inline void dump_geometry(std::ostream& os, const ExperimentConfig& c) {
  for (const auto& g : geometries(c)) {
    os << "# " << g.label << "\n";
    write_geometry_table(os, g.geometry);
  }
}

namespace detail {

inline Artifacts gain_sweep(const ExperimentConfig& c) {
  const auto& t = c.topology;
  const auto& gc = c.gain;
  struct Point {
    ArrayKind kind;
    int N_x;
  };
  std::vector<Point> points;
  for (auto k : t.kinds)
    for (int n : t.N_x) points.push_back({k, n});
  std::vector<std::vector<std::vector<std::string>>> rows(points.size());
  std::vector<std::vector<double>> dbi(points.size());

  parallel_for(points.size(), c.threads, [&](std::size_t i) {
    const ArrayGeometry g = build_geometry(points[i].kind, t.L_x, t.L_y, points[i].N_x, t.dz_offset,
                                           t.pattern, t.dy);
    const double eff = embedded_efficiency(g, c.efficiency);
    const bool needs_kernel =
        std::find(gc.methods.begin(), gc.methods.end(), GainMethod::ClosedForm) != gc.methods.end();
    Eigen::MatrixXd K;
    if (needs_kernel && !gc.average) K = power_kernel(g, gc.element);
    const std::vector<double> thetas =
        gc.average ? std::vector<double>{rad2deg(gc.spread.theta_0)} : gc.theta_deg;
    for (double th_deg : thetas) {
      for (GainMethod m : gc.methods) {
        double value = 0.0;
        std::string name = to_string(m);
        if (gc.average) {
          value = average_realized_gain(g, gc.element, c.efficiency, gc.spread, gc.n_steer, m,
                                        gc.realized, gc.quadrature)
                      .value;
          name += "-average";
        } else {
          const double th = deg2rad(th_deg), ph = deg2rad(gc.phi_deg);
          if (m == GainMethod::Physical) {
            value = physical_gain(g, th, ph);
          } else {
            const Excitation e = steer_excitation(g, th, ph);
            value = m == GainMethod::ClosedForm
                        ? gain_from_kernel(g, e, gc.element, K, th, ph).value
                        : gain_quadrature(g, e, gc.element, th, ph, gc.quadrature).value;
          }
          if (gc.realized) value *= eff;
        }
        rows[i].push_back({to_string(points[i].kind), name, std::to_string(points[i].N_x),
                           fmt(g.x_spacing()), fmt(th_deg), fmt(value), fmt(to_db(value)), fmt(eff),
                           gc.realized ? "true" : "false"});
        dbi[i].push_back(to_db(value));
      }
    }
  });

  Artifacts a;
  Table tab{"gain_sweep.csv",
            {"topology", "method", "N_x", "spacing_lambda", "theta_deg", "gain_lin", "gain_dBi",
             "efficiency", "realized"},
            {}};
  for (auto& r : rows)
    for (auto& row : r) tab.rows.push_back(std::move(row));
  a.tables.push_back(std::move(tab));

  for (auto k : t.kinds) {
    Chart ch{"gain_sweep_" + to_string(k) + ".svg", "Array gain, " + to_string(k), "N_x",
             "gain (dBi)", false, {}};
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].kind != k) continue;
      std::size_t j = 0;
      const std::vector<double> thetas =
          gc.average ? std::vector<double>{rad2deg(gc.spread.theta_0)} : gc.theta_deg;
      for (double th : thetas)
        for (GainMethod m : gc.methods) {
          const std::string label = to_string(m) + (gc.average ? " average" : "") + " " + fmt(th) + " deg";
          auto it = idx.find(label);
          if (it == idx.end()) {
            it = idx.emplace(label, ch.series.size()).first;
            ch.series.push_back({label, {}, {}});
          }
          ch.series[it->second].x.push_back(points[i].N_x);
          ch.series[it->second].y.push_back(dbi[i][j++]);
        }
    }
    a.charts.push_back(std::move(ch));
  }
  return a;
}

inline Artifacts nearfield_gain(const ExperimentConfig& c) {
  const auto& n = c.nearfield;
  const ArrayGeometry tx = build_geometry(ArrayKind::Planar, n.L, n.L, n.N_x);
  std::vector<LossDecomposition> d(n.R.size());
  parallel_for(n.R.size(), c.threads,
               [&](std::size_t i) { d[i] = gain_loss_decomposition(tx, n.R[i], n.polarization); });

  Artifacts a;
  Table tab{"nearfield_gain.csv",
            {"R_lambda", "mode", "source_pol", "field_pol", "gain_lin", "gain_dB", "loss_polarization",
             "loss_illumination", "loss_beamforming"},
            {}};
  const std::string pol = to_string(n.polarization);
  Chart gains{"nearfield_gain.svg", "Broadside near-field gain", "R (wavelengths)", "gain (dB)", true, {}};
  Chart losses{"nearfield_loss.svg", "Near-field loss factors", "R (wavelengths)", "loss (dB)", true, {}};
  const std::vector<std::string> modes{"dyadic-focus", "scalar-focus", "dyadic-steer",
                                       "far-field",    "model-focus",  "model-steer"};
  for (const auto& m : modes) gains.series.push_back({m, {}, {}});
  for (const auto& m : {"polarization", "illumination", "beamforming", "model polarization",
                        "model illumination", "model beamforming"})
    losses.series.push_back({m, {}, {}});
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double R = n.R[i];
    const double mp = loss_factor_uniform(loss_sigma(loss_coefficient_polarization, n.L, R));
    const double mi = loss_factor_uniform(loss_sigma(loss_coefficient_illumination, n.L, R));
    const double mb = loss_factor_uniform(loss_sigma(loss_coefficient_beamforming, n.L, R));
    const double vals[] = {d[i].gain_dyadic_focus, d[i].gain_scalar_focus, d[i].gain_dyadic_steer,
                           d[i].gain_far,          d[i].gain_far * mp * mi, d[i].gain_far * mp * mi * mb};
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const bool model = k >= 4;
      tab.rows.push_back({fmt(R), modes[k], pol, pol, fmt(vals[k]), fmt(to_db(vals[k])),
                          fmt(model ? mp : d[i].polarization), fmt(model ? mi : d[i].illumination),
                          fmt(model ? mb : d[i].beamforming)});
      gains.series[k].x.push_back(R);
      gains.series[k].y.push_back(to_db(vals[k]));
    }
    const double lv[] = {d[i].polarization, d[i].illumination, d[i].beamforming, mp, mi, mb};
    for (std::size_t k = 0; k < 6; ++k) {
      losses.series[k].x.push_back(R);
      losses.series[k].y.push_back(to_db(lv[k]));
    }
  }
  a.tables.push_back(std::move(tab));
  a.charts.push_back(std::move(gains));
  a.charts.push_back(std::move(losses));
  return a;
}

inline Table capacity_table(const std::string& name, const std::vector<CapacityRow>& rows) {
  Table t{name,
          {"scenario", "topology", "policy", "N_x", "spacing_lambda", "R_lambda", "snr_dB", "capacity_mean",
           "capacity_stderr", "seed"},
          {}};
  for (const auto& r : rows)
    t.rows.push_back({r.scenario, r.topology, r.policy, std::to_string(r.N_x), fmt(r.spacing_lambda),
                      fmt(r.R_lambda), fmt(r.snr_dB), fmt(r.capacity_mean), fmt(r.capacity_stderr),
                      std::to_string(r.seed)});
  return t;
}

inline Chart capacity_chart(const std::string& name, const std::string& title,
                            const std::vector<CapacityRow>& rows, bool near) {
  Chart ch{name, title, near ? "R (wavelengths)" : "N_x", "capacity (bit/s/Hz)", near, {}};
  std::map<std::string, std::size_t> idx;
  for (const auto& r : rows) {
    const std::string label = r.topology + " " + r.policy;
    auto it = idx.find(label);
    if (it == idx.end()) {
      it = idx.emplace(label, ch.series.size()).first;
      ch.series.push_back({label, {}, {}});
    }
    ch.series[it->second].x.push_back(near ? r.R_lambda : double(r.N_x));
    ch.series[it->second].y.push_back(r.capacity_mean);
  }
  return ch;
}

inline Table correlation_table(const std::string& name, const Eigen::MatrixXcd& C) {
  Table t{name, {}, {}};
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    t.header.push_back("re" + std::to_string(j));
    t.header.push_back("im" + std::to_string(j));
  }
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < C.cols(); ++j) {
      row.push_back(fmt(C(i, j).real()));
      row.push_back(fmt(C(i, j).imag()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Artifacts capacity_far(const ExperimentConfig& c) {
  const bool ergodic = c.scenario == ScenarioKind::CapacityErgodic;
  const auto& k = c.capacity;
  std::vector<CapacityRow> rows;
  Artifacts a;
  for (auto kind : c.topology.kinds) {
    FarFieldSweepSpec s;
    s.scenario = ergodic ? Scenario::Ergodic : Scenario::QuasiStatic;
    s.kind = kind;
    s.L_x = c.topology.L_x;
    s.L_y = c.topology.L_y;
    s.dz_offset = c.topology.dz_offset;
    s.pattern = c.topology.pattern;
    s.dy = c.topology.dy;
    s.N_x = c.topology.N_x;
    s.n_users = k.users;
    s.snr_dB = k.snr_dB;
    s.n_realizations = k.n_realizations;
    s.seed = c.seed;
    s.policies = k.policies;
    s.spread = k.spread;
    s.n_steer = k.n_steer;
    s.spectrum = k.spectrum;
    s.kappa = k.kappa;
    s.element = k.element;
    s.efficiency = c.efficiency;
    s.efficiency_mode = k.efficiency_mode;
    s.gain_scale = k.gain_scale;
    s.quadrature = k.correlation;
    s.threads = c.threads;
    const auto r = capacity_sweep(s);
    rows.insert(rows.end(), r.begin(), r.end());
    if (k.export_correlation) {
      std::vector<Eigen::MatrixXcd> mats(s.N_x.size());
      parallel_for(s.N_x.size(), c.threads, [&](std::size_t i) {
        const ArrayGeometry g = build_geometry(kind, s.L_x, s.L_y, s.N_x[i], s.dz_offset, s.pattern, s.dy);
        mats[i] = correlation_matrix(g, s.element, s.spectrum, s.kappa, s.quadrature).matrix();
      });
      for (std::size_t i = 0; i < mats.size(); ++i)
        a.tables.push_back(correlation_table(
            "correlation/" + to_string(kind) + "_Nx" + std::to_string(s.N_x[i]) + ".csv", mats[i]));
    }
  }
  const std::string base = ergodic ? "capacity_ergodic" : "capacity_quasi_static";
  a.tables.insert(a.tables.begin(), capacity_table(base + ".csv", rows));
  a.charts.push_back(capacity_chart(base + ".svg",
                                    ergodic ? "Ergodic capacity" : "Quasi-static capacity", rows, false));
  return a;
}

inline Artifacts capacity_near(const ExperimentConfig& c) {
  const auto& nf = c.nf_capacity;
  std::vector<CapacityRow> rows;
  for (auto kind : nf.rx_kinds) {
    NearFieldSweepSpec s;
    s.R = nf.R;
    s.rx_kind = kind;
    s.L = nf.L;
    s.rx_N_x = nf.rx_N_x;
    s.dz_offset = nf.dz_offset;
    s.pattern = nf.pattern;
    s.tx_N_x = nf.tx_N_x;
    s.snr_dB = c.capacity.snr_dB;
    s.policies = c.capacity.policies;
    s.gain_scale = c.capacity.gain_scale;
    s.seed = c.seed;
    s.threads = c.threads;
    const auto r = nearfield_capacity_sweep(s);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  Artifacts a;
  a.tables.push_back(capacity_table("capacity_near_field.csv", rows));
  a.charts.push_back(capacity_chart("capacity_near_field.svg", "Near-field capacity", rows, true));
  return a;
}

}  // namespace detail

inline Artifacts compute(const ExperimentConfig& c) {
  switch (c.scenario) {
    case ScenarioKind::GainSweep: return detail::gain_sweep(c);
    case ScenarioKind::NearFieldGain: return detail::nearfield_gain(c);
    case ScenarioKind::CapacityQuasiStatic:
    case ScenarioKind::CapacityErgodic: return detail::capacity_far(c);
    case ScenarioKind::CapacityNearField: return detail::capacity_near(c);
  }
  return {};
}

inline json tolerances_json(const ExperimentConfig& c) {
  json t;
  t["series_rel_tol"] = SeriesControl{}.rel_tol;
  t["series_max_terms"] = SeriesControl{}.max_terms;
  t["eigenvalue_clip"] = 1e-10;
  if (c.scenario == ScenarioKind::GainSweep) t["quadrature_refine_tol"] = c.gain.quadrature.tol;
  if (c.scenario == ScenarioKind::NearFieldGain) t["surface_quadrature_tol"] = SphereSurface{}.tol;
  return t;
}

// Runs one experiment and writes CSV, metadata and charts into `out`.
inline std::vector<std::string> run(const ExperimentConfig& c, const std::string& config_text,
                                    const std::string& config_path, const fs::path& out) {
  StagedOutput stage(out);
  const json resolved = resolved_json(c);
  const std::string resolved_text = resolved.dump(2);
  const Artifacts a = compute(c);

  json outputs = json::array();
  for (const auto& t : a.tables) {
    const std::string body = render_csv(t, "hmimo " + std::string(tool_version) + " resolved config:\n" +
                                               resolved_text);
    stage.write(t.name, body);
    outputs.push_back({{"file", t.name}, {"git_blob_sha1", git_blob_sha1(body)}});
  }
  if (c.charts)
    for (const auto& ch : a.charts) {
      const std::string body = render_svg(ch);
      stage.write(ch.name, body);
      outputs.push_back({{"file", ch.name}, {"git_blob_sha1", git_blob_sha1(body)}});
    }

  json meta;
  meta["tool"] = "hmimo";
  meta["version"] = tool_version;
  meta["command"] = command_of(c.scenario);
  meta["config"] = resolved;
  meta["inputs"] = {{"config_file", config_path},
                    {"config_git_blob_sha1", git_blob_sha1(config_text)},
                    {"resolved_config_git_blob_sha1", git_blob_sha1(resolved_text)}};
  meta["seeds"] = {{"root", c.seed},
                   {"scheme", "splitmix64 counter derivation: point seed from (root, point index, topology "
                              "stream), realization seed from (point seed, realization index)"}};
  meta["tolerances"] = tolerances_json(c);
  meta["units"] = {{"length", "wavelengths"}, {"gain", "linear and dBi"}, {"capacity", "bit/s/Hz"}};
  meta["execution"] = {{"threads", c.threads}};
  meta["outputs"] = outputs;
  stage.write("metadata.json", meta.dump(2) + "\n");
  stage.commit();
  return stage.files();
}

}  // namespace hmimo::cli
