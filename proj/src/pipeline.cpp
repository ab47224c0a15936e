#include "windcoh/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <nlohmann/json.hpp>

#include "windcoh/csv.hpp"

namespace windcoh::pipeline {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<std::pair<std::string, double>>& sink)
      : sink_(sink) {}
  template <typename F>
  auto run(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      sink_.push_back({name, elapsed(t0)});
    } else {
      auto out = f();
      sink_.push_back({name, elapsed(t0)});
      return out;
    }
  }

 private:
  static double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
  std::vector<std::pair<std::string, double>>& sink_;
};

ordered_json partition_json(const CoherencyResult& res) {
  ordered_json j;
  j["r"] = res.partition.r;
  ordered_json areas = ordered_json::array();
  for (const auto& area : res.partition.areas) {
    ordered_json a = ordered_json::array();
    for (int i : area) a.push_back(i + 1);
    areas.push_back(a);
  }
  j["areas"] = areas;
  ordered_json refs = ordered_json::array();
  for (int i : res.partition.reference_machines) refs.push_back(i + 1);
  j["reference_machines"] = refs;
  ordered_json freqs = ordered_json::array();
  for (Eigen::Index i = 0; i < res.eigenspace.frequencies_hz.size(); ++i)
    freqs.push_back(res.eigenspace.frequencies_hz[i]);
  j["slow_frequencies_hz"] = freqs;
  ordered_json eigs = ordered_json::array();
  for (Eigen::Index i = 0; i < res.eigenspace.eigenvalues.size(); ++i)
    eigs.push_back({res.eigenspace.eigenvalues[i].real(),
                    res.eigenspace.eigenvalues[i].imag()});
  j["eigenvalues"] = eigs;
  ordered_json margins = ordered_json::array();
  for (Eigen::Index i = 0; i < res.partition.margins.size(); ++i)
    margins.push_back(res.partition.margins[i]);
  j["assignment_margins"] = margins;
  j["eigen_gap_ratio"] = res.eigenspace.gap_ratio;
  j["degenerate_gap"] = res.eigenspace.degenerate_gap;
  return j;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

void dump_ledger(const fs::path& dir, const PerturbationLedger& led,
                 const ReducedSwingModel& swing,
                 const EquivalentLaplacian& eq) {
  fs::create_directories(dir);
  ordered_json norms;
  auto put = [&](const std::string& name, const Mat& m) {
    if (m.size() == 0) return;
    csv::write_matrix((dir / (name + ".csv")).string(), m);
    norms[name] = m.norm();
  };
  put("delta_k11", led.delta_k11);
  put("delta_k12", led.delta_k12);
  put("delta_k21", led.delta_k21);
  put("delta_k22", led.delta_k22);
  put("delta_a1", led.delta_a1);
  put("delta_a3", led.delta_a3);
  for (size_t i = 0; i < led.a3_terms.size(); ++i)
    put("a3_term_" + std::to_string(i + 1), led.a3_terms[i]);
  put("x_shift", led.x_shift);
  put("inv_correction_X", led.inv_correction);
  put("kappa_L", led.kappa_l);
  put("delta_L0", led.delta_l0);
  put("L_direct", led.l_direct);
  put("L_assembled", led.l_assembled);
  put("P_a", led.p_a);
  put("P_b", led.p_b);
  put("delta_L_int", led.delta_l_int);
  put("delta_L_ext", led.delta_l_ext);
  put("L0", swing.l0);
  put("L0_int", swing.l0_int);
  put("L0_ext", swing.l0_ext);
  put("L_eq", eq.l_eq);
  put("delta_Leq_int", eq.delta_eq_int);
  put("delta_Leq_ext", eq.delta_eq_ext);
  ordered_json meta;
  meta["two_path_rel_error"] = led.two_path_rel_error;
  meta["series_order"] = led.series_order;
  meta["series_converged"] = led.series_converged;
  meta["epsilon"] = swing.epsilon;
  meta["frobenius_norms"] = norms;
  write_text(dir / "ledger_manifest.json", meta.dump(2) + "\n");
}

}  // namespace

NetworkCase attach_farms(const NetworkCase& base,
                         const std::vector<FarmOverride>& farms,
                         const std::string& registry_path) {
  NetworkCase c = base;
  if (!farms.empty()) {
    c.wind_farms.clear();
    const auto registry = load_wind_registry(registry_path, c.base_mva);
    for (const auto& f : farms) {
      auto it = registry.find(f.model);
      if (it == registry.end())
        throw ValidationError("wind model '" + f.model + "' not in registry");
      c.wind_farms.push_back(
          make_farm(it->second, f.bus, f.gamma, f.wind_speed, f.q_setpoint));
    }
  }
  for (auto& b : c.buses) {
    b.kind = BusKind::NonGen;
    for (const auto& g : c.generators)
      if (g.bus == b.id) b.kind = BusKind::SyncGen;
    for (const auto& w : c.wind_farms)
      if (w.bus == b.id && b.kind == BusKind::NonGen) b.kind = BusKind::WindGen;
  }
  return c;
}

NetworkCase zero_wind(const NetworkCase& c) {
  NetworkCase z = c;
  for (auto& f : z.wind_farms) f.gamma = 0;
  return z;
}

Scenario scenario_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  Scenario sc;
  sc.case_path = j.value("case", std::string{});
  sc.registry_path = j.value("registry", std::string{});
  if (j.contains("farms"))
    for (const auto& f : j["farms"]) {
      FarmOverride fo;
      fo.bus = f.at("bus").get<int>();
      fo.gamma = f.at("gamma").get<int>();
      fo.wind_speed = f.value("wind_speed", 12.0);
      fo.model = f.value("model", std::string("wt1760"));
      fo.q_setpoint = f.value("q_setpoint", 0.0);
      sc.farms.push_back(fo);
    }
  sc.r = j.value("r", 5);
  sc.run_coherency = j.value("coherency", true);
  sc.run_perturb = j.value("perturb", true);
  sc.run_modal = j.value("modal", true);
  sc.run_simulate = j.value("simulate", true);
  sc.run_pca = j.value("pca", true);
  if (j.contains("disturbance")) {
    sc.disturb_machine = j["disturbance"].value("machine", 1);
    sc.disturb_magnitude = j["disturbance"].value("magnitude", 1.0);
  }
  sc.horizon_s = j.value("horizon_s", 100.0);
  sc.dt_s = j.value("dt_s", 0.01);
  sc.pca_center = j.value("center", true);
  sc.out_dir = j.value("out", std::string{});
  sc.seed = j.value("seed", 0u);
  sc.label = j.value("label", std::string{});
  return sc;
}

RunResult run_pipeline(const Scenario& sc) {
  RunResult res;
  StageClock clock(res.stage_seconds);

  NetworkCase wind_case = clock.run("load", [&] {
    NetworkCase base = load_case(sc.case_path, sc.registry_path);
    return attach_farms(base, sc.farms, sc.registry_path);
  });
  {
    const auto findings = validate_case(wind_case);
    if (!findings.empty()) {
      std::ostringstream os;
      os << "scenario case invalid:";
      for (const auto& f : findings) os << " [" << f.code << "] " << f.message;
      throw ValidationError(os.str());
    }
  }
  bool any_wind = false;
  for (const auto& f : wind_case.wind_farms) any_wind |= f.gamma > 0;
  res.wind = any_wind;
  const NetworkCase nom_case = zero_wind(wind_case);
  const CaseIndex idx = make_index(nom_case);

  // nominal chain
  const OperatingPoint op0 =
      clock.run("powerflow_nominal", [&] { return solve_power_flow(nom_case); });
  const JacobianSet j0 = clock.run("linearize_nominal",
                                   [&] { return network_jacobians(nom_case, op0); });
  ReducedSwingModel swing = reduced_swing_model(nom_case, j0);
  res.nominal = clock.run("coherency_nominal", [&] {
    return identify_coherency(swing.m_diag, swing.l0, sc.r);
  });
  split_internal_external(swing.l0, res.nominal.partition, swing.l0_int,
                          swing.l0_ext, swing.epsilon);
  res.epsilon = swing.epsilon;

  std::optional<PerturbationLedger> ledger;
  std::optional<EquivalentLaplacian> eqlap;
  std::optional<OperatingPoint> op1;
  std::optional<JacobianSet> j1;
  if (any_wind) {
    op1 = clock.run("powerflow_wind", [&] { return solve_power_flow(wind_case); });
    j1 = clock.run("linearize_wind",
                   [&] { return network_jacobians(wind_case, *op1); });
    if (sc.run_perturb) {
      ledger = clock.run("perturb", [&] {
        PerturbationLedger led = build_ledger(j0, *j1);
        const auto areas = bus_areas(nom_case, idx, res.nominal.partition);
        epsilon_split_perturbation(led, j0, areas, swing.epsilon);
        return led;
      });
      res.two_path_rel_error = ledger->two_path_rel_error;
      if (!ledger->series_converged)
        res.warnings.push_back(
            "epsilon expansion did not converge; internal/external split "
            "fell back to the unsplit perturbation");
    }
    const Mat l = ledger ? ledger->l_direct : kron_reduce(*j1);
    eqlap = equivalent_laplacian(l);
    split_equivalent(*eqlap, swing, res.nominal.partition);
    res.perturbed = clock.run("coherency_wind", [&] {
      return identify_coherency(swing.m_diag, eqlap->l_eq, sc.r);
    });
    res.moved = partition_distance(res.nominal.partition, res.perturbed->partition);
  }

  const JacobianSet& j_sim = any_wind ? *j1 : j0;
  const NetworkCase& c_sim = any_wind ? wind_case : nom_case;
  std::optional<StateSpaceModel> model;
  std::optional<TrajectoryMatrix> traj;
  if (sc.run_modal || sc.run_simulate || sc.run_pca) {
    model = clock.run("assemble_model", [&] {
      return assemble_full_model(c_sim, j_sim, DampingMode::UniformSlow);
    });
    if (sc.run_modal)
      res.modes = clock.run("modal", [&] { return modal_table(*model, sc.r); });
    if (sc.run_simulate || sc.run_pca) {
      traj = clock.run("simulate", [&] {
        return simulate(*model, {sc.disturb_machine - 1, sc.disturb_magnitude},
                        sc.horizon_s, sc.dt_s);
      });
      if (traj->instability_flag)
        res.warnings.push_back("trajectory norm exceeded 1e6 (unstable model?)");
    }
  }

  std::optional<PCAResult> pca;
  if (sc.run_pca && traj) {
    clock.run("pca", [&] {
      const TrajectoryMatrix ang = angle_rows(*traj, idx.n);
      pca = pca_weightings(ang.data, std::max(1, sc.r - 1), sc.pca_center);
      res.pca_labels = cluster_coords(pca->coords, sc.r);
      const auto& model_part =
          res.perturbed ? res.perturbed->partition : res.nominal.partition;
      res.pca_vs_model =
          compare_partitions(res.pca_labels, partition_labels(model_part));
    });
  }

  if (!sc.out_dir.empty()) {
    clock.run("write", [&] {
      const fs::path out(sc.out_dir);
      fs::create_directories(out);

      ordered_json pj;
      pj["label"] = sc.label;
      pj["wind"] = any_wind;
      pj["epsilon"] = swing.epsilon;
      pj["nominal"] = partition_json(res.nominal);
      if (res.perturbed) {
        pj["perturbed"] = partition_json(*res.perturbed);
        ordered_json moved = ordered_json::array();
        for (int i : res.moved->moved) moved.push_back(i + 1);
        pj["moved_generators"] = moved;
        ordered_json rc = ordered_json::array();
        for (auto [a, b] : res.moved->reference_changes)
          rc.push_back({a + 1, b + 1});
        pj["reference_changes"] = rc;
        pj["two_path_rel_error"] = res.two_path_rel_error;
      }
      if (res.pca_vs_model) {
        ordered_json pp;
        ordered_json labels = ordered_json::array();
        for (int l : res.pca_labels) labels.push_back(l + 1);
        pp["labels"] = labels;
        pp["agreement"] = res.pca_vs_model->agreement;
        ordered_json moved = ordered_json::array();
        for (int i : res.pca_vs_model->moved) moved.push_back(i + 1);
        pp["moved_vs_model"] = moved;
        pj["pca"] = pp;
      }
      ordered_json warn = ordered_json::array();
      for (const auto& w : res.warnings) warn.push_back(w);
      pj["warnings"] = warn;
      write_text(out / "partition.json", pj.dump(2) + "\n");

      csv::write_matrix((out / "vl_nominal.csv").string(),
                        res.nominal.partition.grouping);
      if (res.perturbed)
        csv::write_matrix((out / "vl_perturbed.csv").string(),
                          res.perturbed->partition.grouping);

      if (!res.modes.empty()) {
        Mat table(static_cast<Eigen::Index>(res.modes.size()), 6);
        for (size_t i = 0; i < res.modes.size(); ++i) {
          const auto& mo = res.modes[i];
          table(i, 0) = mo.eigenvalue.real();
          table(i, 1) = mo.eigenvalue.imag();
          table(i, 2) = mo.frequency_hz;
          table(i, 3) = mo.damping_ratio;
          table(i, 4) = mo.oscillatory ? 1 : 0;
          table(i, 5) = mo.slow ? 1 : 0;
        }
        csv::write_table((out / "modes.csv").string(),
                         {"re", "im", "frequency_hz", "damping_ratio",
                          "oscillatory", "slow"},
                         table);
      }

      if (ledger) dump_ledger(out / "ledger", *ledger, swing, *eqlap);

      if (traj) {
        const int samples = static_cast<int>(traj->data.cols());
        Mat cols(samples, traj->data.rows() + 1);
        for (int k = 0; k < samples; ++k) cols(k, 0) = k * traj->dt;
        cols.rightCols(traj->data.rows()) = traj->data.transpose();
        std::vector<std::string> header{"time_s"};
        header.insert(header.end(), traj->labels.begin(), traj->labels.end());
        csv::write_table((out / "traj.csv").string(), header, cols);
      }

      if (pca) {
        const int nmach = static_cast<int>(pca->coords.rows());
        Mat cols(nmach, pca->coords.cols() + 2);
        for (int i = 0; i < nmach; ++i) {
          cols(i, 0) = i + 1;
          cols(i, cols.cols() - 1) = res.pca_labels[i] + 1;
        }
        cols.block(0, 1, nmach, pca->coords.cols()) = pca->coords;
        std::vector<std::string> header{"machine"};
        for (size_t a = 0; a < pca->selected_axes.size(); ++a)
          header.push_back("axis_" + std::to_string(a + 1));
        header.push_back("cluster");
        csv::write_table((out / "pca.csv").string(), header, cols);
      }

      // manifest: deterministic content only; timings go to timing.log
      ordered_json man;
      man["tool_version"] = kToolVersion;
      man["case_digest"] = fnv1a64_file(sc.case_path);
      man["registry_digest"] =
          sc.registry_path.empty() ? "" : fnv1a64_file(sc.registry_path);
      ordered_json cfg;
      cfg["r"] = sc.r;
      cfg["disturb_machine"] = sc.disturb_machine;
      cfg["disturb_magnitude"] = sc.disturb_magnitude;
      cfg["horizon_s"] = sc.horizon_s;
      cfg["dt_s"] = sc.dt_s;
      cfg["center"] = sc.pca_center;
      cfg["seed"] = sc.seed;
      ordered_json farms = ordered_json::array();
      for (const auto& f : sc.farms) {
        ordered_json fj;
        fj["bus"] = f.bus;
        fj["gamma"] = f.gamma;
        fj["wind_speed"] = f.wind_speed;
        fj["model"] = f.model;
        fj["q_setpoint"] = f.q_setpoint;
        farms.push_back(fj);
      }
      cfg["farms"] = farms;
      man["config"] = cfg;
      man["warnings"] = warn;
      ordered_json digests;
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(out))
        if (e.is_regular_file() && e.path().filename() != "manifest.json" &&
            e.path().filename() != "timing.log")
          files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files)
        digests[fs::relative(f, out).generic_string()] = fnv1a64_file(f.string());
      man["artifact_digests"] = digests;
      man["timing_file"] = "timing.log";
      write_text(out / "manifest.json", man.dump(2) + "\n");
    });

    std::ostringstream tl;
    for (const auto& [stage, sec] : res.stage_seconds)
      tl << stage << " " << sec << "\n";
    write_text(fs::path(sc.out_dir) / "timing.log", tl.str());
  }
  return res;
}

SweepSummary sweep(const Scenario& base, const std::vector<SweepPoint>& points,
                   int jobs) {
  SweepSummary summary;
  summary.rows.resize(points.size());
  jobs = std::max(1, jobs);

  auto run_point = [&](size_t i) {
    SweepRow row;
    row.name = points[i].name;
    try {
      Scenario sc = base;
      sc.farms = points[i].farms;
      sc.label = points[i].name;
      if (!base.out_dir.empty())
        sc.out_dir = (fs::path(base.out_dir) / points[i].name).string();
      const RunResult r = run_pipeline(sc);
      row.ok = true;
      const auto& part = r.perturbed ? r.perturbed->partition : r.nominal.partition;
      const auto& eig = r.perturbed ? r.perturbed->eigenspace : r.nominal.eigenspace;
      for (int m : part.reference_machines) row.reference_machines.push_back(m + 1);
      row.slow_freqs_hz = eig.frequencies_hz;
      if (r.moved)
        for (int m : r.moved->moved) row.moved.push_back(m + 1);
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    summary.rows[i] = std::move(row);
  };

  if (jobs == 1) {
    for (size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::vector<std::future<void>> futs;
    size_t next = 0;
    while (next < points.size() || !futs.empty()) {
      while (next < points.size() && futs.size() < static_cast<size_t>(jobs))
        futs.push_back(std::async(std::launch::async, run_point, next++));
      futs.front().get();
      futs.erase(futs.begin());
    }
  }
  for (const auto& r : summary.rows)
    if (!r.ok) ++summary.failures;

  if (!base.out_dir.empty() && !points.empty()) {
    fs::create_directories(base.out_dir);
    std::ostringstream os;
    os << "name,ok,moved,references,slow_freqs_hz,error\n";
    for (const auto& r : summary.rows) {
      os << r.name << "," << (r.ok ? 1 : 0) << ",";
      for (size_t i = 0; i < r.moved.size(); ++i)
        os << (i ? " " : "") << r.moved[i];
      os << ",";
      for (size_t i = 0; i < r.reference_machines.size(); ++i)
        os << (i ? " " : "") << r.reference_machines[i];
      os << ",";
      for (Eigen::Index i = 0; i < r.slow_freqs_hz.size(); ++i)
        os << (i ? " " : "") << csv::format_double(r.slow_freqs_hz[i]);
      os << "," << r.error << "\n";
    }
    write_text(fs::path(base.out_dir) / "sweep_summary.csv", os.str());
  }
  return summary;
}

std::string fnv1a64_bytes(const std::string& bytes) {
  unsigned long long h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot digest missing file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64_bytes(ss.str());
}

}  // namespace windcoh::pipeline
