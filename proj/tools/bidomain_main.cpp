#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "bidomain/experiments.hpp"
#include "bidomain/theory.hpp"

using namespace bidomain;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset_name;
  std::string geometry;
  std::string scaling;
  std::string primal;
  std::string precond;
  std::string out_dir;
  int threads = 0;
  int seed = -1;
};

void add_common(CLI::App* cmd, CommonFlags* f) {
  cmd->add_option("--config", f->config_path, "JSON run-config file");
  cmd->add_option("--preset", f->preset_name, "named preset (slab-paper, ellipsoid-paper)");
  cmd->add_option("--geometry", f->geometry, "slab|ellipsoid")
      ->check(CLI::IsMember({"slab", "ellipsoid"}));
  cmd->add_option("--scaling", f->scaling, "rho|deluxe")
      ->check(CLI::IsMember({"rho", "deluxe"}));
  cmd->add_option("--primal", f->primal, "v|ve|vef")
      ->check(CLI::IsMember({"v", "ve", "vef"}));
  cmd->add_option("--preconditioner", f->precond, "bddc|bj|none")
      ->check(CLI::IsMember({"bddc", "bj", "none"}));
  cmd->add_option("--threads", f->threads, "subdomain-level worker threads");
  cmd->add_option("--out", f->out_dir, "output directory");
  cmd->add_option("--seed", f->seed, "random seed for diagnostics");
}

RunConfig resolve(const CommonFlags& f, const std::string& experiment) {
  RunConfig cfg;
  if (!f.config_path.empty())
    cfg = load_config_file(f.config_path);
  else if (!f.preset_name.empty())
    cfg = preset(f.preset_name);
  else
    cfg = preset("slab-paper");
  if (!f.geometry.empty()) {
    if (f.geometry == "ellipsoid" && cfg.geometry.kind != "ellipsoid")
      cfg = preset("ellipsoid-paper");
    cfg.geometry.kind = f.geometry;
  }
  if (!f.scaling.empty()) cfg.scaling = f.scaling;
  if (!f.primal.empty()) cfg.primal = f.primal;
  if (!f.precond.empty()) cfg.preconditioner = f.precond;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (f.threads > 0) cfg.threads = f.threads;
  if (f.seed >= 0) cfg.seed = unsigned(f.seed);
  cfg.experiment = experiment;
  return cfg;
}

void print_reports(const ExperimentOutputs& outputs, bool deterministic) {
  for (const auto& rep : outputs.reports) {
    std::cout << "== " << rep.name << " ==\n";
    write_csv(std::cout, rep.to_csv(deterministic));
  }
}

int run_tables(const CommonFlags& flags, const std::string& experiment) {
  const RunConfig cfg = resolve(flags, experiment);
  const ExperimentOutputs outputs = run_experiment(cfg);
  export_outputs(cfg, outputs);
  print_reports(outputs, cfg.deterministic);
  std::cout << "outputs written to " << cfg.out_dir << "\n";
  return 0;
}

int run_diagnose(const CommonFlags& flags) {
  RunConfig cfg = resolve(flags, "single");
  if (cfg.geometry.nx * cfg.geometry.ny * cfg.geometry.nz > 32768)
    std::cerr << "warning: diagnostics store residual vectors; large meshes are slow\n";
  const Problem pb = make_problem(cfg);
  const SolverOptions opts = make_solver_options(cfg);
  const StimulusProtocol stim = make_protocol(cfg);
  const DiagnosticsResult diag = run_convergence_diagnostics(
      pb, State::rest(pb.n()), cfg.tau, stim, opts, 100, cfg.seed);

  const TheoryConstants& tc = diag.constants;
  std::cout << "H = " << tc.H << "  h = " << tc.h << "  tau = " << tc.tau << "\n"
            << "nodal dI/dv in [" << tc.k_min_i << ", " << tc.k_max_i << "]\n"
            << "K^2 = " << tc.k2 << "  Phi = " << tc.phi << "  c0 = " << tc.c0 << "\n"
            << "analytic c = " << tc.c_lower() << "  C = " << tc.c_upper() << "\n"
            << "sampled  c = " << diag.envelope.c_emp
            << "  C = " << diag.envelope.C_emp << "\n"
            << "gmres iterations = " << diag.iterations
            << "  envelope violations = " << diag.envelope.violations
            << (diag.envelope.uninformative ? " (uninformative)" : "") << "\n"
            << "max |<u,u>_Z| / <u,u>_B = " << diag.max_skew_ratio << "\n";

  std::filesystem::create_directories(cfg.out_dir);
  CsvTable table;
  table.header = {"m", "ratio", "bound"};
  for (size_t m = 0; m < diag.envelope.ratios.size(); ++m)
    table.rows.push_back({std::to_string(m), format_sig(diag.envelope.ratios[m]),
                          format_sig(diag.envelope.bound[m])});
  export_csv_file(cfg.out_dir + "/diagnostic.csv", table);
  std::cout << "envelope written to " << cfg.out_dir << "/diagnostic.csv\n";
  return diag.envelope.violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fully implicit cardiac Bidomain solver with dual-primal preconditioning"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* run = app.add_subcommand("run", "single time-loop run");
  auto* weak = app.add_subcommand("weak", "weak scaling sweep (1 to 8 subdomains)");
  auto* strong = app.add_subcommand("strong", "strong scaling sweep on a fixed mesh");
  auto* opt = app.add_subcommand("optimality", "local-size sweep over scalings and primal sets");
  auto* heart = app.add_subcommand("heartbeat", "long run with per-step iteration series");
  auto* diag = app.add_subcommand("diagnose", "convergence-bound diagnostics");
  for (CLI::App* cmd : {run, weak, strong, opt, heart, diag}) add_common(cmd, &flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_tables(flags, "single");
    if (weak->parsed()) return run_tables(flags, "weak");
    if (strong->parsed()) return run_tables(flags, "strong");
    if (opt->parsed()) return run_tables(flags, "optimality");
    if (heart->parsed()) return run_tables(flags, "heartbeat");
    if (diag->parsed()) return run_diagnose(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
