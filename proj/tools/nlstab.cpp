#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nls/harness.hpp"

namespace {

using json = nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitMeasurementFail = 2;
constexpr int kExitError = 1;

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_override, "override the output directory");
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->trigger_on_parse()
      ->each([&args](const std::string&) { args.seed_set = true; });
}

nls::ExperimentConfig load_with_overrides(const CommonArgs& args) {
  nls::ExperimentConfig cfg = nls::load_config_file(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_override.empty()) cfg.output_dir = args.out_override;
  return cfg;
}

void print_exponent_table(const nls::TheoremReport& rep) {
  std::printf("%10s %12s %12s %12s %12s %12s %8s %6s\n", "p", "probe",
              "predicted_B", "fitted_B", "halfwidth", "fitted_A", "window",
              "pass");
  for (const nls::ExponentRow& r : rep.rows) {
    if (!r.present) {
      std::printf("%10.4g %12s %12.4g %12s %12s %12s %8s %6s\n", r.p,
                  r.probe.c_str(), r.predicted_B, "-", "-", "-", "-", "absent");
      continue;
    }
    std::printf("%10.4g %12s %12.4g %12.4g %12.4g %12.4g %8s %6s\n", r.p,
                r.probe.c_str(), r.predicted_B, r.fitted_B, r.b_halfwidth,
                r.fitted_A, r.window_valid ? "valid" : "tainted",
                r.pass ? "pass" : "FAIL");
  }
}

int cmd_build_branch(const CommonArgs& args) {
  nls::ExperimentConfig cfg = load_with_overrides(args);
  const nls::NonlinearitySpec nl = nls::resolve_nonlinearity(cfg);
  const nls::GridPtr g = nls::Grid::make(cfg.grid_n, cfg.grid_length);
  const nls::Potential pot = nls::build_potential(
      cfg.potential_kind, cfg.potential_depth, cfg.potential_width, g);
  const nls::Hamiltonian h = nls::assemble_hamiltonian(pot);
  std::printf("ground state: e0 = %.12g\n", h.e0);

  nls::FamilyOptions opt;
  opt.a_min = cfg.a_min;
  opt.a_max = cfg.a_max;
  opt.ratio = cfg.ratio;
  const nls::BoundStateFamily fam = nls::BoundStateFamily::build(h, nl, opt);
  const std::string dir =
      (std::filesystem::path(cfg.output_dir) / "branch").string();
  std::filesystem::create_directories(cfg.output_dir);
  fam.save(dir);
  std::printf("branch: %d nodes on [%g, %g], saved to %s\n", fam.nodes(),
              cfg.a_min, cfg.a_max, dir.c_str());
  for (int i = 0; i < fam.nodes(); ++i)
    std::printf("  a = %-12.6g E = %-18.12g residual = %.3g\n", fam.node_a(i),
                fam.node_e(i), fam.node_residual(i));
  return kExitPass;
}

int cmd_run(const CommonArgs& args, bool resume) {
  nls::ExperimentConfig cfg = load_with_overrides(args);
  const nls::RunArtifacts art = nls::run_experiment(cfg, resume);
  if (!art.ok) {
    std::fprintf(stderr, "run failed at stage %s: %s\n", art.stage.c_str(),
                 art.message.c_str());
    std::fprintf(stderr, "partial outputs in %s\n", art.dir.c_str());
    return kExitError;
  }
  if (art.traj.truncated)
    std::printf("trajectory truncated: %s\n", art.traj.truncation_reason.c_str());
  std::printf("bundle: %s\n", art.dir.c_str());
  std::printf("asymptotic: |a_plus| = %.6g, e_plus = %.12g, %s\n",
              std::abs(art.asym.a_plus), art.asym.e_plus,
              art.asym.settled ? "settled" : "not settled");
  print_exponent_table(art.report);
  std::printf(art.report.all_pass ? "all exponent checks passed\n"
                                  : "exponent checks FAILED\n");
  return art.report.all_pass ? kExitPass : kExitMeasurementFail;
}

int cmd_probe_linear(const CommonArgs& args) {
  nls::ExperimentConfig cfg = load_with_overrides(args);
  const nls::LinearProbeArtifacts art = nls::probe_linear(cfg);
  if (!art.ok) {
    std::fprintf(stderr, "probe failed at stage %s: %s\n", art.stage.c_str(),
                 art.message.c_str());
    return kExitError;
  }
  std::printf("%12s %12s %12s %12s %8s\n", "probe", "predicted_B", "fitted_B",
              "halfwidth", "window");
  for (const nls::DecayRecord& r : art.records)
    std::printf("%12s %12.4g %12.4g %12.4g %8s\n", r.probe.c_str(),
                r.predicted_B, r.fit_pure.B, r.fit_pure.b_halfwidth,
                r.valid ? "valid" : "tainted");
  std::printf(art.all_pass ? "all linear decay checks passed\n"
                           : "linear decay checks FAILED\n");
  return art.all_pass ? kExitPass : kExitMeasurementFail;
}

int cmd_probe_omega(const CommonArgs& args) {
  nls::ExperimentConfig cfg = load_with_overrides(args);
  const nls::OmegaProbeArtifacts art = nls::probe_omega(cfg);
  if (!art.ok) {
    std::fprintf(stderr, "probe failed at stage %s: %s\n", art.stage.c_str(),
                 art.message.c_str());
    return kExitError;
  }
  std::printf("reduction defect    %.3e  %s\n", art.reduction_defect,
              art.pass_reduction ? "pass" : "FAIL");
  std::printf("composition defect  %.3e  %s\n", art.composition_defect,
              art.pass_composition ? "pass" : "FAIL");
  std::printf("difference-operator bound per separation:\n");
  for (std::size_t k = 0; k < art.separations.size(); ++k)
    std::printf("  t - s = %-8.4g ||T|| <= %.6g\n", art.separations[k],
                art.t_norms[k]);
  std::printf("bound drift         %.4f      %s\n", art.t_bound_drift,
              art.pass_bound ? "pass" : "FAIL");
  for (std::size_t k = 0; k < art.kato_windows.size(); ++k)
    std::printf("  kato T = %-8.4g ratio = %.6g\n", art.kato_windows[k],
                art.kato_values[k]);
  std::printf("kato doubling       %.4f      %s\n", art.kato_ratio_max,
              art.pass_kato ? "pass" : "FAIL");
  std::printf("weighted decay      B = %.4g (predicted %.4g, %s)  %s\n",
              art.weighted.fit_pure.B, art.weighted.predicted_B,
              art.weighted.valid ? "valid" : "tainted",
              art.pass_decay ? "pass" : "FAIL");
  std::printf(art.all_pass ? "all linearized-flow checks passed\n"
                           : "linearized-flow checks FAILED\n");
  return art.all_pass ? kExitPass : kExitMeasurementFail;
}

int cmd_report(const std::string& dir) {
  const std::filesystem::path base(dir);
  for (const char* name : {"report.json", "linear_report.json", "omega_report.json"}) {
    const std::filesystem::path path = base / name;
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const json j = json::parse(ss.str());
    std::printf("%s: status %s, stage %s\n", name,
                j.value("status", "?").c_str(), j.value("stage", "?").c_str());
    const std::string msg = j.value("message", "");
    if (!msg.empty()) std::printf("message: %s\n", msg.c_str());
    if (j.contains("exponents")) {
      nls::TheoremReport rep;
      for (const json& row : j.at("exponents")) {
        nls::ExponentRow r;
        r.p = row.value("p", 0.0);
        r.probe = row.value("probe", "");
        r.present = row.value("present", false);
        r.predicted_B = row.value("predicted_B", 0.0);
        r.predicted_A = row.value("predicted_A", 0.0);
        r.fitted_B = row.value("fitted_B", 0.0);
        r.fitted_A = row.value("fitted_A", 0.0);
        r.b_halfwidth = row.value("b_halfwidth", 0.0);
        r.window_valid = row.value("window_valid", false);
        r.pass = row.value("pass", false);
        rep.rows.push_back(r);
      }
      print_exponent_table(rep);
    }
    const bool all_pass = j.value("all_pass", false);
    std::printf("all_pass: %s\n", all_pass ? "true" : "false");
    if (j.value("status", "") != "ok") return kExitError;
    return all_pass ? kExitPass : kExitMeasurementFail;
  }
  std::fprintf(stderr, "no report found in %s\n", dir.c_str());
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dressed-bound-state dispersive decay experiments on a periodic 2d "
      "grid"};
  app.require_subcommand(1);

  CommonArgs args;
  bool resume = false;
  std::string report_dir;

  CLI::App* build = app.add_subcommand(
      "build-branch", "build and save the bound-state branch only");
  add_common(build, args);

  CLI::App* run = app.add_subcommand(
      "run", "tracked nonlinear evolution with decay fits and exponent table");
  add_common(run, args);
  run->add_flag("--resume", resume, "reuse a previously saved branch");

  CLI::App* plin = app.add_subcommand(
      "probe-linear", "decay rates of the projected linear flow");
  add_common(plin, args);

  CLI::App* pom = app.add_subcommand(
      "probe-omega", "linearized-flow battery around a frozen state");
  add_common(pom, args);

  CLI::App* rep = app.add_subcommand("report", "reprint a bundle's report");
  rep->add_option("--dir", report_dir, "bundle directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build_branch(args);
    if (run->parsed()) return cmd_run(args, resume);
    if (plin->parsed()) return cmd_probe_linear(args);
    if (pom->parsed()) return cmd_probe_omega(args);
    if (rep->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
