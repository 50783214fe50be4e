#include "chainctl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "chainctl/config.hpp"
#include "chainctl/csv.hpp"
#include "chainctl/kalman.hpp"
#include "chainctl/plot.hpp"

namespace chainctl::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Raw CLI override values; appended to the config document so that the
/// ordinary parser does all validation.
struct Overrides {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string config_path;

  void add_option(CLI::App* app, const std::string& flag,
                  const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::string>();
    app->add_option_function<std::string>(
           flag,
           [this, key, value](const std::string& v) {
             pairs.emplace_back(key, v);
           },
           help)
        ->expected(1);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_config(read_file(config_path));
    std::ostringstream doc;
    for (const auto& [key, value] : pairs) doc << key << " = " << value << "\n";
    return parse_config(doc.str(), cfg);
  }
};

void add_common_options(CLI::App* app, Overrides& ov) {
  app->add_option("--config", ov.config_path, "flat key = value config file");
  ov.add_option(app, "--out", "outdir", "output directory name");
  ov.add_option(app, "--n", "n", "number of agents");
  ov.add_option(app, "--T", "T", "rescaled-frame horizon");
  ov.add_option(app, "--beta", "beta", "control energy penalty");
  ov.add_option(app, "--flavor", "flavor", "neumann|dirichlet");
  ov.add_option(app, "--layout", "layout",
                "two-boundary|interior-block|extension-block");
  ov.add_option(app, "--block-start", "block_start", "interior block start");
  ov.add_option(app, "--block-size", "block_size", "interior block size");
  ov.add_option(app, "--nonlinearity", "nonlinearity", "zero|gauss|tanh|linear");
  ov.add_option(app, "--nl-param", "nl_param", "linear nonlinearity slope");
  ov.add_option(app, "--scaling", "scaling", "inv-n2|inv-n|unscaled");
  ov.add_option(app, "--frame", "frame", "rescaled|physical");
  ov.add_option(app, "--steps", "n_steps", "integrator steps (0 = auto)");
  ov.add_option(app, "--max-iters", "max_iters", "optimizer iteration budget");
  ov.add_option(app, "--grad-tol", "grad_tol", "optimizer gradient tolerance");
  ov.add_option(app, "--memory", "memory", "quasi-Newton memory");
  ov.add_option(app, "--seed", "seed", "RNG seed");
  ov.add_option(app, "--y0", "y0", "sine|random|ones");
}

fs::path resolve_outdir(const RunConfig& cfg, const std::string& fallback) {
  const char* root_env = std::getenv("CHAINCTL_OUT_ROOT");
  fs::path dir = root_env ? fs::path(root_env) : fs::path(".");
  dir /= cfg.outdir.empty() ? fallback : cfg.outdir;
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "'");
  out << text;
}

ordered_json result_json(const SynthesisResult& res) {
  ordered_json j;
  j["iterations"] = res.iterations;
  j["objective_value"] = res.objective_value;
  j["terminal_norm"] = res.terminal_norm;
  j["control_cost"] = res.control_cost;
  j["gradient_norm"] = res.gradient_norm;
  j["converged"] = res.converged;
  return j;
}

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  const auto range_pos = text.find("..");
  if (range_pos != std::string::npos) {
    const int lo = std::stoi(text.substr(0, range_pos));
    const int hi = std::stoi(text.substr(range_pos + 2));
    if (lo < 2 || hi < lo) throw ConfigError("bad n range '" + text + "'");
    for (int n = lo; n <= hi; ++n) out.push_back(n);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const int n = std::stoi(item);
    if (n < 2) throw ConfigError("range error: chain needs n >= 2");
    out.push_back(n);
  }
  if (out.empty()) throw ConfigError("empty n list");
  return out;
}

int cmd_simulate(const Overrides& ov, const std::string& control_path) {
  const RunConfig cfg = ov.resolve();
  const fs::path dir = resolve_outdir(cfg, "chainctl-simulate");
  write_text(dir / "config.txt", render_config(cfg));

  const ChainOperatord op = make_operator(cfg);
  const NonlinearitySpec spec = make_spec(cfg);
  const TimeFrame frame = make_frame(cfg);
  const VectorXd y0 = make_y0(cfg);
  const int n_steps = resolved_n_steps(cfg);

  const Trajectory free_run =
      integrate(op, spec, y0, frame, {.n_steps = n_steps});
  write_trajectory_csv((dir / "free.csv").string(), free_run);
  emit_agent_lines_svg((dir / "free_agents.svg").string(), free_run);
  emit_heatline_svg((dir / "free_heat.svg").string(), free_run);

  if (!control_path.empty()) {
    const ControlLayout layout = make_layout(cfg);
    const ControlSignal control = read_control_csv(control_path, frame);
    const Trajectory controlled = integrate(op, spec, &layout, &control, y0,
                                            frame, {.n_steps = n_steps});
    write_trajectory_csv((dir / "controlled.csv").string(), controlled);
    emit_agent_lines_svg((dir / "controlled_agents.svg").string(), controlled);
    emit_heatline_svg((dir / "controlled_heat.svg").string(), controlled);
  }
  std::cout << "simulate: wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_control(const Overrides& ov) {
  const RunConfig cfg = ov.resolve();
  const fs::path dir = resolve_outdir(cfg, "chainctl-control");
  write_text(dir / "config.txt", render_config(cfg));

  const ControlProblem problem = make_problem(cfg);
  ObjectiveSpec obj;
  obj.beta = cfg.beta;
  const ControlSignal init = make_control_signal(
      problem.frame, problem.layout.channels(), problem.n_steps);
  const SynthesisResult res =
      minimize(problem, obj, init, make_minimize_options(cfg));

  write_control_csv((dir / "control.csv").string(), res.control);
  write_trajectory_csv((dir / "trajectory.csv").string(), res.trajectory);
  write_text(dir / "result.json", result_json(res).dump(2) + "\n");
  std::cout << "control: J = " << format_double(res.objective_value)
            << ", terminal norm = " << format_double(res.terminal_norm)
            << ", iterations = " << res.iterations << "\n";
  return res.converged ? kExitOk : kExitNotConverged;
}

int cmd_extend(const Overrides& ov) {
  RunConfig cfg = ov.resolve();
  cfg.layout = LayoutKind::ExtensionBlock;  // the construction fixes it
  const fs::path dir = resolve_outdir(cfg, "chainctl-extend");
  write_text(dir / "config.txt", render_config(cfg));

  NonlinearitySpec spec = make_spec(cfg);
  ObjectiveSpec obj;
  obj.beta = cfg.beta;
  ExtensionOptions opts;
  opts.minimize = make_minimize_options(cfg);
  opts.n_steps = cfg.n_steps;
  const ExtensionSynthesis ext = synthesize_boundary_via_extension(
      cfg.n, spec, make_y0(cfg), cfg.T, obj, opts);

  write_control_csv((dir / "boundary_control.csv").string(),
                    ext.boundary_control);
  write_trajectory_csv((dir / "inner.csv").string(), ext.inner_trajectory);
  write_trajectory_csv((dir / "reintegrated.csv").string(), ext.reintegrated);
  write_trajectory_csv((dir / "extended.csv").string(),
                       ext.extended_result.trajectory);
  ordered_json j = result_json(ext.extended_result);
  j["restriction_mismatch"] = ext.restriction_mismatch;
  j["flux_norm"] = ext.flux_norm;
  write_text(dir / "result.json", j.dump(2) + "\n");
  std::cout << "extend: restriction mismatch = "
            << format_double(ext.restriction_mismatch)
            << ", flux norm = " << format_double(ext.flux_norm) << "\n";
  return ext.extended_result.converged ? kExitOk : kExitNotConverged;
}

int cmd_sweep(const Overrides& ov) {
  const RunConfig cfg = ov.resolve();
  const fs::path dir = resolve_outdir(cfg, "chainctl-sweep");
  write_text(dir / "config.txt", render_config(cfg));

  const SweepPlan plan = make_sweep_plan(cfg);
  const std::vector<SweepRecord> records = run_scaling_sweep(plan);
  write_sweep_csv((dir / "sweep.csv").string(), records);

  ordered_json fits = ordered_json::object();
  for (Scaling regime : plan.regimes) {
    std::vector<SweepRecord> column;
    std::vector<std::pair<int, double>> points;
    for (const auto& r : records)
      if (r.regime == regime && r.status == "ok") {
        column.push_back(r);
        points.emplace_back(r.n, r.cost_physical);
      }
    ordered_json entry;
    try {
      const CostFit fit = fit_cost_growth(column);
      entry["model"] = to_string(fit.model);
      entry["rate"] = fit.rate;
      entry["r_squared"] = fit.r_squared;
      emit_cost_vs_n_svg(
          (dir / ("cost_vs_n_" + to_string(regime) + ".svg")).string(), points,
          fit);
    } catch (const std::invalid_argument& e) {
      entry["error"] = e.what();
    }
    fits[to_string(regime)] = entry;
  }
  write_text(dir / "fits.json", fits.dump(2) + "\n");
  std::cout << "sweep: " << records.size() << " runs, wrote " << dir.string()
            << "\n";
  return kExitOk;
}

int cmd_kalman(const std::string& n_text, const Overrides& ov) {
  RunConfig cfg = ov.resolve();
  const std::vector<int> n_values = parse_n_list(n_text);
  const fs::path dir = resolve_outdir(cfg, "chainctl-kalman");
  write_text(dir / "config.txt", render_config(cfg));

  std::ostringstream csv;
  csv << "N,method,rank,satisfied\n";
  std::cout << "N\tmethod\trank\tsatisfied\n";
  for (int n : n_values) {
    RunConfig one = cfg;
    one.n = n;
    const KalmanRank r = kalman_rank(make_operator(one), make_layout(one));
    const std::string method =
        r.method == RankMethod::ExactRational ? "exact" : "hautus";
    csv << n << ',' << method << ',' << r.rank << ','
        << (r.satisfied ? "true" : "false") << "\n";
    std::cout << n << '\t' << method << '\t' << r.rank << '\t'
              << (r.satisfied ? "true" : "false") << "\n";
  }
  write_text(dir / "kalman.csv", csv.str());
  return kExitOk;
}

int cmd_bounds(double ginf, bool ginf_given, double T, int n, double C0,
               double C1, double Cbeta, const Overrides& ov) {
  // bounds.csv records the full formula inputs; the config echo adds the
  // nonlinearity context the default --ginf derivation uses
  const RunConfig cfg = ov.resolve();
  const fs::path dir = resolve_outdir(cfg, "chainctl-bounds");
  write_text(dir / "config.txt", render_config(cfg));
  if (!ginf_given) {
    // fall back to the configured nonlinearity's bound, estimating it over
    // the states reachable from the configured initial condition
    ginf = resolved_lipschitz(make_spec(cfg), make_y0(cfg));
  }
  const BoundEvaluation b = evaluate_bounds(ginf, T, n, {C0, C1, Cbeta});

  std::ostringstream csv;
  csv << "g_inf,T,n,C0,C1,C_beta,K,C_alpha,cost_bound,K_N,N_min\n"
      << format_double(b.g_inf) << ',' << format_double(b.T) << ',' << b.n
      << ',' << format_double(C0) << ',' << format_double(C1) << ','
      << format_double(Cbeta) << ',' << format_double(b.K) << ','
      << format_double(b.C_alpha) << ',' << format_double(b.cost_bound) << ','
      << format_double(b.K_N) << ',' << format_double(b.N_min) << "\n";
  write_text(dir / "bounds.csv", csv.str());

  std::cout << "K = " << format_double(b.K)
            << "\nC_alpha = " << format_double(b.C_alpha)
            << "\ncost_bound = " << format_double(b.cost_bound)
            << "\nK_N = " << format_double(b.K_N)
            << "\nN_min = " << format_double(b.N_min) << "\n";
  return kExitOk;
}

int cmd_reproduce(const Overrides& ov) {
  const RunConfig base = ov.resolve();
  // The experiment pins its own parameters; only output and budget knobs
  // come from the command line.
  RunConfig cfg = base;
  cfg.n = 45;
  cfg.flavor = Flavor::Neumann;
  cfg.layout = LayoutKind::TwoBoundary;
  cfg.nonlinearity = "gauss";
  cfg.scaling = Scaling::InverseNSquared;
  cfg.frame = Frame::Rescaled;
  cfg.T = 2.0;
  cfg.beta = 1e-15;
  cfg.y0 = "sine";

  const fs::path dir = resolve_outdir(cfg, "chainctl-reproduce");
  write_text(dir / "config.txt", render_config(cfg));

  ReproduceOptions opts;
  opts.n_steps = cfg.n_steps;
  opts.optimizer = make_minimize_options(cfg);
  const ReproduceResult rep = reproduce_experiment(opts);

  write_trajectory_csv((dir / "free.csv").string(), rep.free_run);
  write_trajectory_csv((dir / "controlled.csv").string(),
                       rep.controlled.trajectory);
  write_control_csv((dir / "control.csv").string(), rep.controlled.control);
  emit_heatline_svg((dir / "free_heat.svg").string(), rep.free_run);
  emit_agent_lines_svg((dir / "free_agents.svg").string(), rep.free_run);
  emit_heatline_svg((dir / "controlled_heat.svg").string(),
                    rep.controlled.trajectory);
  emit_agent_lines_svg((dir / "controlled_agents.svg").string(),
                       rep.controlled.trajectory);

  ordered_json j = result_json(rep.controlled);
  j["n"] = opts.n;
  j["T"] = opts.T;
  j["beta"] = opts.beta;
  j["initial_norm"] = rep.initial_norm;
  j["free_terminal_norm"] = rep.free_terminal_norm;
  j["controlled_terminal_norm"] = rep.controlled_terminal_norm;
  write_text(dir / "result.json", j.dump(2) + "\n");

  std::cout << "reproduce-experiment: N=45 beta=1e-15 T=2"
            << "\n  initial norm      = " << format_double(rep.initial_norm)
            << "\n  free terminal     = "
            << format_double(rep.free_terminal_norm)
            << "\n  controlled terminal = "
            << format_double(rep.controlled_terminal_norm) << "\n";
  return rep.controlled.converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"nonlinear opinion dynamics on a chain: simulation and "
               "consensus control synthesis"};
  app.require_subcommand(1);

  Overrides sim_ov, ctl_ov, ext_ov, swp_ov, kal_ov, bnd_ov, rep_ov;
  std::string sim_control_path;
  std::string kalman_n = "2..8";
  double b_ginf = 1.0, b_T = 1.0, b_C0 = 1.0, b_C1 = 1.0, b_Cbeta = 1.0;
  int b_n = 16;

  CLI::App* sim = app.add_subcommand("simulate", "free (and optionally "
                                     "controlled) trajectory dump");
  add_common_options(sim, sim_ov);
  sim->add_option("--control", sim_control_path,
                  "control CSV to replay (step,tau,u_1..u_m)");

  CLI::App* ctl = app.add_subcommand("control", "synthesize a control by "
                                     "minimizing the terminal+energy objective");
  add_common_options(ctl, ctl_ov);

  CLI::App* ext = app.add_subcommand("extend", "boundary controls via the "
                                     "extended-chain interior problem");
  add_common_options(ext, ext_ov);

  CLI::App* swp = app.add_subcommand("sweep", "scaling-regime cost sweep");
  add_common_options(swp, swp_ov);
  swp_ov.add_option(swp, "--n-values", "n_values", "comma list of chain sizes");
  swp_ov.add_option(swp, "--regimes", "regimes", "comma list of scalings");
  swp_ov.add_option(swp, "--horizon-mode", "horizon_mode", "grow-n2|fixed-t");
  swp_ov.add_option(swp, "--interior-ratio", "interior_ratio",
                    "controlled fraction M/n");

  CLI::App* kal = app.add_subcommand("kalman", "controllability rank report");
  kal->add_option("--n", kalman_n, "size, list or range, e.g. 2..8");
  kal_ov.add_option(kal, "--flavor", "flavor", "neumann|dirichlet");
  kal_ov.add_option(kal, "--layout", "layout",
                    "two-boundary|interior-block|extension-block");
  kal_ov.add_option(kal, "--block-start", "block_start", "interior block start");
  kal_ov.add_option(kal, "--block-size", "block_size", "interior block size");
  kal_ov.add_option(kal, "--out", "outdir", "output directory name");

  CLI::App* bnd = app.add_subcommand("bounds", "cost and target-ball formulas");
  CLI::Option* bnd_ginf =
      bnd->add_option("--ginf", b_ginf, "sup |G(s)/s|; defaults to the "
                      "configured nonlinearity's bound");
  bnd->add_option("--T", b_T, "rescaled horizon");
  bnd->add_option("--n", b_n, "chain size for the unscaled-cost comparison");
  bnd->add_option("--C0", b_C0, "target-ball constant");
  bnd->add_option("--C1", b_C1, "cost exponent constant");
  bnd->add_option("--Cbeta", b_Cbeta, "cost prefactor constant");
  bnd_ov.add_option(bnd, "--nonlinearity", "nonlinearity",
                    "zero|gauss|tanh|linear");
  bnd_ov.add_option(bnd, "--nl-param", "nl_param", "linear nonlinearity slope");
  bnd_ov.add_option(bnd, "--y0", "y0", "sine|random|ones");
  bnd_ov.add_option(bnd, "--seed", "seed", "RNG seed");
  bnd_ov.add_option(bnd, "--out", "outdir", "output directory name");

  CLI::App* rep = app.add_subcommand("reproduce-experiment",
                                     "the N=45 optimal-control experiment");
  rep_ov.add_option(rep, "--out", "outdir", "output directory name");
  rep_ov.add_option(rep, "--max-iters", "max_iters", "optimizer budget");
  rep_ov.add_option(rep, "--grad-tol", "grad_tol", "gradient tolerance");
  rep_ov.add_option(rep, "--steps", "n_steps", "integrator steps (0 = auto)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return kExitOk;
    }
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_ov, sim_control_path);
    if (ctl->parsed()) return cmd_control(ctl_ov);
    if (ext->parsed()) return cmd_extend(ext_ov);
    if (swp->parsed()) return cmd_sweep(swp_ov);
    if (kal->parsed()) return cmd_kalman(kalman_n, kal_ov);
    if (bnd->parsed())
      return cmd_bounds(b_ginf, bnd_ginf->count() > 0, b_T, b_n, b_C0, b_C1,
                        b_Cbeta, bnd_ov);
    if (rep->parsed()) return cmd_reproduce(rep_ov);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return kExitNumerical;
  }
  std::cerr << "error: usage: no subcommand\n";
  return kExitConfig;
}

}  // namespace chainctl::cli
