// Batch front-end: case validation, power flow, coherency/perturbation
// analysis, simulation, PCA, and scenario sweeps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "windcoh/csv.hpp"
#include "windcoh/pipeline.hpp"

namespace {

using namespace windcoh;
namespace pl = windcoh::pipeline;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPartialSweep = 4;

struct CommonArgs {
  std::string case_path;
  std::string config_path;
  std::string registry_path;
  std::string out_dir;
  int jobs = 1;
  unsigned seed = 0;
  int r = 5;
};

pl::Scenario make_scenario(const CommonArgs& a,
                           const std::vector<std::string>& farm_args) {
  pl::Scenario sc;
  if (!a.config_path.empty()) sc = pl::scenario_from_json_file(a.config_path);
  if (!a.case_path.empty()) sc.case_path = a.case_path;
  if (!a.registry_path.empty()) sc.registry_path = a.registry_path;
  if (!a.out_dir.empty()) sc.out_dir = a.out_dir;
  if (a.r > 0) sc.r = a.r;
  sc.seed = a.seed;
  for (const auto& f : farm_args) {
    // bus:gamma[:wind_speed[:model]]
    pl::FarmOverride fo;
    std::stringstream ss(f);
    std::string tok;
    int field = 0;
    while (std::getline(ss, tok, ':')) {
      switch (field++) {
        case 0: fo.bus = std::stoi(tok); break;
        case 1: fo.gamma = std::stoi(tok); break;
        case 2: fo.wind_speed = std::stod(tok); break;
        case 3: fo.model = tok; break;
        default: break;
      }
    }
    sc.farms.push_back(fo);
  }
  return sc;
}

void print_partition(const CoherencyResult& res, const std::string& title) {
  std::cout << title << "\n";
  for (int a = 0; a < res.partition.r; ++a) {
    std::cout << "  A" << a + 1 << ": ";
    const auto& area = res.partition.areas[a];
    for (size_t i = 0; i < area.size(); ++i)
      std::cout << (i ? "," : "") << area[i] + 1;
    std::cout << "  (reference " << res.partition.reference_machines[a] + 1
              << ")\n";
  }
  std::cout << "  slow frequencies (Hz):";
  for (Eigen::Index i = 0; i < res.eigenspace.frequencies_hz.size(); ++i)
    std::cout << " " << res.eigenspace.frequencies_hz[i];
  std::cout << "\n";
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wind-penetration coherency analysis"};
  app.require_subcommand(1);

  CommonArgs args;
  app.add_option("--case", args.case_path, "case file (JSON)");
  app.add_option("--config", args.config_path, "scenario config (JSON)");
  app.add_option("--registry", args.registry_path, "wind unit registry");
  app.add_option("--out", args.out_dir, "output directory");
  app.add_option("--jobs", args.jobs, "parallel sweep points");
  app.add_option("--seed", args.seed,
                 "reserved; outputs are deterministic regardless");
  app.add_option("-r,--areas", args.r, "coherent area count");

  std::vector<std::string> farm_args;
  app.add_option("--farm", farm_args,
                 "wind farm override bus:gamma[:wind_speed[:model]]");

  auto* cmd_validate = app.add_subcommand("validate", "check case invariants");
  auto* cmd_powerflow = app.add_subcommand("powerflow", "solve the steady state");
  auto* cmd_coherency =
      app.add_subcommand("coherency", "slow-coherency partition (Algorithm 1)");
  auto* cmd_perturb =
      app.add_subcommand("perturb", "wind perturbation ledger and L_eq");
  auto* cmd_simulate = app.add_subcommand("simulate", "step-response trajectory");
  auto* cmd_pca = app.add_subcommand("pca", "PCA clustering cross-validation");
  auto* cmd_sweep = app.add_subcommand("sweep", "run a gamma or bus grid");
  auto* cmd_report = app.add_subcommand("report", "summarize a run directory");

  int sweep_bus = 0;
  std::vector<int> sweep_gammas;
  std::vector<int> sweep_buses;
  int sweep_gamma = 0;
  cmd_sweep->add_option("--bus", sweep_bus, "farm bus for a gamma sweep");
  cmd_sweep->add_option("--gammas", sweep_gammas, "gamma grid");
  cmd_sweep->add_option("--buses", sweep_buses, "bus grid at fixed gamma");
  cmd_sweep->add_option("--gamma", sweep_gamma, "gamma for a bus sweep");

  std::string report_dir;
  cmd_report->add_option("dir", report_dir, "scenario output directory");

  int disturb_machine = 1;
  double disturb_magnitude = 1.0, horizon = 100.0, dt = 0.01;
  cmd_simulate->add_option("--machine", disturb_machine, "stepped machine (1-based)");
  cmd_simulate->add_option("--magnitude", disturb_magnitude, "step size, pu");
  cmd_simulate->add_option("--horizon", horizon, "seconds");
  cmd_simulate->add_option("--dt", dt, "step, seconds");
  bool no_center = false;
  cmd_pca->add_flag("--no-center", no_center, "raw SVD without row centering");

  CLI11_PARSE(app, argc, argv);

  return run_guarded([&]() -> int {
    if (cmd_validate->parsed()) {
      pl::Scenario sc = make_scenario(args, farm_args);
      NetworkCase c = pl::attach_farms(load_case(sc.case_path, sc.registry_path),
                                       sc.farms, sc.registry_path);
      const auto findings = validate_case(c);
      for (const auto& f : findings)
        std::cout << "[" << f.code << "] " << f.message << "\n";
      std::cout << (findings.empty() ? "case ok" : "case invalid") << "\n";
      return findings.empty() ? kExitOk : kExitValidation;
    }

    if (cmd_report->parsed()) {
      std::ifstream in(std::filesystem::path(report_dir) / "partition.json");
      if (!in) throw ValidationError("no partition.json in " + report_dir);
      nlohmann::json j;
      in >> j;
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }

    pl::Scenario sc = make_scenario(args, farm_args);

    if (cmd_powerflow->parsed()) {
      NetworkCase c = pl::attach_farms(load_case(sc.case_path, sc.registry_path),
                                       sc.farms, sc.registry_path);
      const OperatingPoint op = solve_power_flow(c);
      std::cout << "converged in " << op.iterations
                << " iterations, mismatch " << op.mismatch << "\n";
      std::cout << "slack mechanical power " << op.slack_p_mech << " pu\n";
      if (!sc.out_dir.empty()) {
        std::filesystem::create_directories(sc.out_dir);
        Mat table(c.buses.size(), 5);
        for (size_t i = 0; i < c.buses.size(); ++i) {
          table(i, 0) = c.buses[i].id;
          table(i, 1) = op.v_re0[i];
          table(i, 2) = op.v_im0[i];
          table(i, 3) = op.p_inj[i];
          table(i, 4) = op.q_inj[i];
        }
        csv::write_table(
            (std::filesystem::path(sc.out_dir) / "powerflow.csv").string(),
            {"bus", "v_re", "v_im", "p_net", "q_net"}, table);
      }
      return kExitOk;
    }

    if (cmd_sweep->parsed()) {
      std::vector<pl::SweepPoint> points;
      if (!sweep_gammas.empty()) {
        for (int g : sweep_gammas) {
          pl::SweepPoint p;
          p.name = "bus" + std::to_string(sweep_bus) + "_g" + std::to_string(g);
          if (g > 0) p.farms.push_back({sweep_bus, g, 12.0, "wt1760", 0.0});
          points.push_back(p);
        }
      }
      for (int b : sweep_buses) {
        pl::SweepPoint p;
        p.name = "bus" + std::to_string(b) + "_g" + std::to_string(sweep_gamma);
        if (sweep_gamma > 0) p.farms.push_back({b, sweep_gamma, 12.0, "wt1760", 0.0});
        points.push_back(p);
      }
      const auto summary = pl::sweep(sc, points, args.jobs);
      for (const auto& row : summary.rows) {
        std::cout << row.name << ": " << (row.ok ? "ok" : row.error);
        if (row.ok && !row.moved.empty()) {
          std::cout << " moved:";
          for (int m : row.moved) std::cout << " " << m;
        }
        std::cout << "\n";
      }
      return summary.failures == 0 ? kExitOk : kExitPartialSweep;
    }

    // single-scenario analysis subcommands share the pipeline
    sc.run_perturb = cmd_perturb->parsed() || cmd_coherency->parsed() ||
                     cmd_pca->parsed() || cmd_simulate->parsed();
    sc.run_modal = cmd_simulate->parsed() || cmd_perturb->parsed() ||
                   cmd_coherency->parsed();
    sc.run_simulate = cmd_simulate->parsed() || cmd_pca->parsed();
    sc.run_pca = cmd_pca->parsed();
    if (cmd_simulate->parsed()) {
      sc.disturb_machine = disturb_machine;
      sc.disturb_magnitude = disturb_magnitude;
      sc.horizon_s = horizon;
      sc.dt_s = dt;
    }
    if (cmd_pca->parsed()) sc.pca_center = !no_center;

    const pl::RunResult res = pl::run_pipeline(sc);
    print_partition(res.nominal, "nominal partition");
    if (res.perturbed) {
      print_partition(*res.perturbed, "wind-integrated partition");
      std::cout << "moved generators:";
      for (int m : res.moved->moved) std::cout << " " << m + 1;
      std::cout << "\ntwo-path relative error " << res.two_path_rel_error << "\n";
    }
    if (res.pca_vs_model)
      std::cout << "pca agreement with model partition "
                << res.pca_vs_model->agreement << "\n";
    for (const auto& w : res.warnings) std::cout << "warning: " << w << "\n";
    return kExitOk;
  });
}
