// Command-line front end: lift, solve, simulate, benchmark, beam build, generate.
//
// Exit codes: 0 ok, 1 usage, 2 infeasible, 3 budget exhausted, 4 I/O.

#include "rfempc/io.hpp"
#include "rfempc/oracle.hpp"
#include "rfempc/random_problem.hpp"
#include "rfempc/sim.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace rfempc;

namespace {

enum Exit
{
  kOk         = 0,
  kUsage      = 1,
  kInfeasible = 2,
  kBudget     = 3,
  kIo         = 4,
};

int exit_for(SolveStatus s)
{
  switch (s) {
    case SolveStatus::Optimal: return kOk;
    case SolveStatus::Infeasible: return kInfeasible;
    case SolveStatus::BudgetExhausted: return kBudget;
  }
  return kUsage;
}

struct TolFlags
{
  double violation = -1;
  double lambda    = -1;
  double singular  = -1;
  long budget      = -1;

  void add(CLI::App * app)
  {
    app->add_option("--tol-violation", violation, "slack threshold (default 1e-9 (1 + |W|_inf))");
    app->add_option("--tol-lambda", lambda, "multiplier threshold (default 1e-9 (1 + |W|_inf))");
    app->add_option("--tol-singular", singular, "relative eigenvalue threshold of the LICQ test (default 1e-10)");
    app->add_option("--budget", budget, "maximum KKT solves per solve (default 10000)");
  }

  Tolerances resolve(const LiftedQP & qp) const
  {
    Tolerances t = Tolerances::defaults_for(qp);
    if (violation > 0) { t.tol_violation = violation; }
    if (lambda > 0) { t.tol_lambda = lambda; }
    if (singular > 0) { t.tol_singular = singular; }
    if (budget > 0) { t.max_kkt_solves = budget; }
    return t;
  }
};

std::ofstream open_out(const std::string & path)
{
  std::ofstream out(path);
  if (!out) { throw io::IoError(path + ": cannot open for writing"); }
  return out;
}

std::string fmt(const Vector & v)
{
  std::ostringstream os;
  os << std::setprecision(12);
  for (Index i = 0; i < v.size(); ++i) { os << (i ? " " : "") << v(i); }
  return os.str();
}

// ---- lift

struct LiftCmd
{
  std::string problem;
  std::string out;
};

int run_lift(const LiftCmd & c)
{
  const auto file = io::read_problem(c.problem);
  const LiftedQP qp = LiftedQP::build(file.problem);
  const auto & k    = qp.constraints();
  std::cout << "N " << qp.dims().horizon << "  n_x " << qp.dims().state_dim << "  n_u " << qp.dims().input_dim
            << "  p_tilde " << k.p_tilde() << "  eps " << std::setprecision(6) << qp.cost().eps
            << "  easy_slater " << (check_easy_slater(qp) ? "yes" : "no") << "\n";
  if (c.out.empty()) { return kOk; }
  std::filesystem::create_directories(c.out);
  const std::pair<const char *, Matrix> dumps[] = {
    {"H", qp.cost().H}, {"F", qp.cost().F}, {"G", k.G}, {"S", k.S}, {"W", k.W}};
  for (const auto & [name, m] : dumps) {
    auto os = open_out((std::filesystem::path(c.out) / (std::string(name) + ".txt")).string());
    io::write_matrix(os, m);
  }
  std::cout << "wrote H, F, G, S, W to " << c.out << "\n";
  return kOk;
}

// ---- solve

struct SolveCmd
{
  std::string problem;
  std::string theta;
  std::string warm;
  bool no_visited = false;
  std::string oracle;
  TolFlags tol;
};

int run_solve(const SolveCmd & c)
{
  const auto file   = io::read_problem(c.problem);
  const LiftedQP qp = LiftedQP::build(file.problem);
  const Index nx = qp.dims().state_dim, nu = qp.dims().input_dim;

  Vector theta;
  if (!c.theta.empty()) {
    theta = io::parse_vector(c.theta);
  } else if (file.theta) {
    theta = *file.theta;
  } else if (file.initial_state) {
    theta = Parameter::initial(*file.initial_state, nu).stacked();
  } else {
    throw CLI::ValidationError("--theta", "no theta given and the problem file has none");
  }
  if (theta.size() == nx) { theta = Parameter::initial(theta, nu).stacked(); }
  if (theta.size() != nx + nu) {
    throw CLI::ValidationError("--theta", "expected n_x or n_x + n_u = " + std::to_string(nx + nu) + " entries");
  }

  const Tolerances tol = c.tol.resolve(qp);
  const int p          = static_cast<int>(qp.constraints().p_tilde());
  SolveResult res;
  if (c.oracle == "enumerate") {
    res = oracle::enumerate(qp, theta, tol);
  } else if (c.oracle == "dual") {
    res.z_star     = oracle::dual_ascent(qp, theta);
    res.status     = SolveStatus::Optimal;
    res.u_seq      = from_z(qp, res.z_star, theta);
    res.u_first    = res.u_seq.head(nu);
    res.active_set = ActiveSet(p);
  } else {
    const ActiveSet warm = c.warm.empty() ? ActiveSet(p) : ActiveSet::from_hex(c.warm, p);
    res = solve(qp, theta, warm, tol, SolveOptions{!c.no_visited});
  }

  std::cout << "status " << to_string(res.status) << "\n";
  if (res.status == SolveStatus::Optimal) {
    std::cout << "u_n " << fmt(res.u_first) << "\n";
    std::cout << "u_seq " << fmt(res.u_seq) << "\n";
    std::cout << "z* " << fmt(res.z_star) << "\n";
    std::cout << "active_set " << res.active_set.hex() << "\n";
    std::cout << "cost " << std::setprecision(12) << evaluate_lifted_cost(qp, res.u_seq, theta) << "\n";
  }
  std::cout << "candidates_visited " << res.stats.candidates_visited << "\n"
            << "licq_failures " << res.stats.licq_failures << "\n"
            << "kkt_solves " << res.stats.kkt_solves << "\n";
  return exit_for(res.status);
}

// ---- beam build

struct BeamCmd
{
  int horizon = 10;
  double h    = 1.0 / 128.0;
  std::string scaling  = "physical";
  std::string terminal = "stage";
  std::string out;
};

BenchmarkSettings beam_settings(int horizon, double h, const std::string & scaling, const std::string & terminal)
{
  BenchmarkSettings s;
  s.horizon  = horizon;
  s.h        = h;
  s.scaling  = scaling == "literal" ? BoundScaling::Literal : BoundScaling::Physical;
  s.terminal = terminal == "zero" ? TerminalWeight::Zero : TerminalWeight::Stage;
  return s;
}

int run_beam(const BeamCmd & c)
{
  const BeamBenchmark bench = build_benchmark_problem(beam_settings(c.horizon, c.h, c.scaling, c.terminal));
  io::ProblemFile f;
  f.problem         = bench.problem;
  f.initial_state   = bench.initial_state;
  f.input_scale     = 1.0 / std::sqrt(c.h);
  f.sampling_period = c.h;
  f.monitor         = std::make_pair(bench.mean_x1, bench.mean_x4);
  const std::string text = io::to_json(f);
  if (c.out.empty()) {
    std::cout << text;
  } else {
    io::write_text(c.out, text);
    std::cerr << "beam problem: N " << c.horizon << ", n_x " << bench.problem.state_dim() << ", p_tilde "
              << bench.problem.constraints.total_rows() << " -> " << c.out << "\n";
  }
  return kOk;
}

// ---- simulate

struct SimCmd
{
  std::string problem;
  int horizon = 10;
  std::string mode = "perfect";
  double t_end = 6.0;
  double h     = 1.0 / 128.0;
  std::string algorithm = "empc";
  bool no_visited = false;
  bool cold       = false;
  std::string on_infeasible = "abort";
  std::string out;
  std::string profiles;
  bool timing = false;
  unsigned long long seed = 0;
  std::string scaling  = "physical";
  std::string terminal = "stage";
  TolFlags tol;
};

Algorithm parse_algorithm(const std::string & s)
{
  if (s == "empc") { return Algorithm::EMPC; }
  if (s == "empcf") { return Algorithm::EMPCF; }
  if (s == "dual") { return Algorithm::DualAscent; }
  throw CLI::ValidationError("--algorithm", "unknown algorithm " + s);
}

void write_fd_profiles(const std::string & path, const Plant & plant)
{
  const auto * fd = dynamic_cast<const FdBeamPlant *>(&plant);
  if (!fd) { return; }
  const Vector & X = fd->grid_state();
  const Index n    = X.size() / 4;
  Matrix values(n, 4);
  for (int l = 0; l < 4; ++l) { values.col(l) = X.segment(l * n, n); }
  auto os = open_out(path);
  io::write_profiles(os, Vector::LinSpaced(n, 0.0, 1.0), values);
}

void write_galerkin_profiles(const std::string & path, const Basis & basis, const Vector & alpha)
{
  const Index n = 101;
  const Vector xi = Vector::LinSpaced(n, 0.0, 1.0);
  Matrix values(n, 4);
  for (Index i = 0; i < n; ++i) {
    for (int l = 0; l < 4; ++l) { values(i, l) = basis.evaluate(alpha, l, xi(i)); }
  }
  auto os = open_out(path);
  io::write_profiles(os, xi, values);
}

int run_simulate(const SimCmd & c)
{
  SimulationConfig cfg;
  cfg.t_end     = c.t_end;
  cfg.h         = c.h;
  cfg.mode      = c.mode == "fd" ? PlantMode::FiniteDifference : PlantMode::Perfect;
  cfg.algorithm = c.no_visited ? Algorithm::EMPCF : parse_algorithm(c.algorithm);
  cfg.cold_start    = c.cold;
  cfg.seed          = c.seed;
  cfg.on_infeasible = c.on_infeasible == "shift" ? InfeasibilityPolicy::ShiftedTail : InfeasibilityPolicy::Abort;

  SimulationResult r;
  std::unique_ptr<Plant> plant;
  std::optional<BeamBenchmark> bench;
  if (!c.problem.empty()) {
    if (cfg.mode != PlantMode::Perfect) {
      throw CLI::ValidationError("--mode", "fd mode builds the beam itself; omit the problem file");
    }
    const auto file = io::read_problem(c.problem);
    if (!file.initial_state) { throw io::IoError(c.problem + ": initial_state is required for simulate"); }
    if (file.sampling_period) { cfg.h = *file.sampling_period; }
    cfg.input_scale = file.input_scale.value_or(1.0);
    cfg.horizon     = file.problem.horizon;
    auto lp         = std::make_unique<LinearPlant>(file.problem.true_plant(), *file.initial_state);
    if (file.monitor) { lp->set_monitor_rows(file.monitor->first, file.monitor->second); }
    plant                = std::move(lp);
    const LiftedQP qp    = LiftedQP::build(file.problem);
    cfg.tolerances       = c.tol.resolve(qp);
    r                    = run_closed_loop(cfg, qp, file.problem, *plant);
  } else {
    bench.emplace(build_benchmark_problem(beam_settings(c.horizon, c.h, c.scaling, c.terminal)));
    cfg.horizon     = c.horizon;
    cfg.input_scale = 1.0 / std::sqrt(c.h);
    plant           = make_beam_plant(*bench, cfg.mode, c.h);
    const LiftedQP qp = LiftedQP::build(bench->problem);
    cfg.tolerances    = c.tol.resolve(qp);
    r                 = run_closed_loop(cfg, qp, bench->problem, *plant);
  }

  if (c.out.empty()) {
    io::write_step_log(std::cout, r.steps, c.timing);
  } else {
    auto os = open_out(c.out);
    io::write_step_log(os, r.steps, c.timing);
  }
  if (!c.profiles.empty()) {
    if (cfg.mode == PlantMode::FiniteDifference) {
      write_fd_profiles(c.profiles, *plant);
    } else if (bench) {
      write_galerkin_profiles(c.profiles, bench->galerkin.basis, plant->observe());
    }
  }
  std::cerr << "steps " << r.steps.size() << "  J_d " << std::setprecision(10) << r.J_d << "  fallback_steps "
            << r.fallback_steps << "  final_norm/initial " << r.final_norm / r.initial_norm << "\n";
  if (r.aborted) {
    std::cerr << "aborted: " << r.diagnostic << "\n";
    return exit_for(r.abort_status);
  }
  return kOk;
}

// ---- benchmark

struct BenchCmd
{
  std::vector<int> horizons{10, 20, 30, 40, 50};
  std::vector<std::string> algorithms{"empc"};
  std::string mode = "perfect";
  double t_end     = 6.0;
  double h         = 1.0 / 128.0;
  std::string on_infeasible = "shift";
  std::string out;
};

int run_benchmark(const BenchCmd & c)
{
  SimulationConfig cfg;
  cfg.t_end         = c.t_end;
  cfg.h             = c.h;
  cfg.mode          = c.mode == "fd" ? PlantMode::FiniteDifference : PlantMode::Perfect;
  cfg.on_infeasible = c.on_infeasible == "abort" ? InfeasibilityPolicy::Abort : InfeasibilityPolicy::ShiftedTail;
  std::vector<Algorithm> algs;
  for (const auto & a : c.algorithms) { algs.push_back(parse_algorithm(a)); }
  const auto rows = benchmark_sweep(c.horizons, algs, cfg);
  if (c.out.empty()) {
    io::write_benchmark(std::cout, rows);
  } else {
    auto os = open_out(c.out);
    io::write_benchmark(os, rows);
  }
  return kOk;
}

// ---- generate

struct GenCmd
{
  unsigned long long seed = 1;
  std::string kind = "random";
  std::string out;
};

int run_generate(const GenCmd & c)
{
  Rng rng(c.seed);
  RandomInstance inst;
  if (c.kind == "infeasible") {
    inst = infeasible_instance(rng);
  } else if (c.kind == "degenerate") {
    inst = degenerate_instance(rng).instance;
  } else {
    inst = random_instance(rng);
  }
  io::ProblemFile f;
  f.problem = inst.problem;
  f.theta   = inst.theta;
  const std::string text = io::to_json(f);
  if (c.out.empty()) {
    std::cout << text;
  } else {
    io::write_text(c.out, text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Region-free explicit MPC: condensing, active-set search, beam benchmark"};
  app.require_subcommand(1);

  LiftCmd lift;
  auto * lift_app = app.add_subcommand("lift", "condense a problem and dump H, F, G, S, W");
  lift_app->add_option("problem", lift.problem, "problem JSON")->required()->check(CLI::ExistingFile);
  lift_app->add_option("--out", lift.out, "directory for the matrix dumps");

  SolveCmd sol;
  auto * solve_app = app.add_subcommand("solve", "solve one pQP instance");
  solve_app->add_option("problem", sol.problem, "problem JSON")->required()->check(CLI::ExistingFile);
  solve_app->add_option("--theta", sol.theta, "[x; u_prev] or x, comma separated (default: from the file)");
  solve_app->add_option("--warm", sol.warm, "warm-start active set as hex bitmask");
  solve_app->add_flag("--no-visited", sol.no_visited, "do not track visited candidates (budget-limited)");
  solve_app->add_option("--oracle", sol.oracle, "use a reference solver instead")
    ->check(CLI::IsMember({"enumerate", "dual"}))
    ->group("");
  sol.tol.add(solve_app);

  SimCmd sim;
  auto * sim_app = app.add_subcommand("simulate", "closed-loop run (beam benchmark unless a problem file is given)");
  sim_app->add_option("problem", sim.problem, "problem JSON with initial_state (perfect mode)")->check(CLI::ExistingFile);
  sim_app->add_option("--horizon", sim.horizon, "prediction horizon N for the beam")->check(CLI::PositiveNumber);
  sim_app->add_option("--mode", sim.mode, "plant: perfect or fd")->check(CLI::IsMember({"perfect", "fd"}));
  sim_app->add_option("--t-end", sim.t_end, "simulated time");
  sim_app->add_option("--period", sim.h, "sampling period");
  sim_app->add_option("--algorithm", sim.algorithm, "empc, empcf or dual")->check(CLI::IsMember({"empc", "empcf", "dual"}));
  sim_app->add_flag("--no-visited", sim.no_visited, "same as --algorithm empcf");
  sim_app->add_flag("--cold", sim.cold, "start every solve from the empty set");
  sim_app->add_option("--on-infeasible", sim.on_infeasible, "abort or shift (apply the previous plan)")
    ->check(CLI::IsMember({"abort", "shift"}));
  sim_app->add_option("--bounds-scaling", sim.scaling, "physical or literal")->check(CLI::IsMember({"physical", "literal"}));
  sim_app->add_option("--terminal", sim.terminal, "terminal weight: stage (P = Q) or zero")
    ->check(CLI::IsMember({"stage", "zero"}));
  sim_app->add_option("--out", sim.out, "CSV log path (default stdout)");
  sim_app->add_option("--profiles", sim.profiles, "CSV of the final x1..x4 profiles");
  sim_app->add_flag("--timing", sim.timing, "write solve wall times (otherwise 0 for reproducible output)");
  sim_app->add_option("--seed", sim.seed, "seed (the loop itself is deterministic)");
  sim.tol.add(sim_app);

  BenchCmd bench;
  auto * bench_app = app.add_subcommand("benchmark", "closed-loop cost and solve time over horizons");
  bench_app->add_option("--horizons", bench.horizons, "list of N")->delimiter(',');
  bench_app->add_option("--algorithms", bench.algorithms, "empc, empcf, dual")->delimiter(',');
  bench_app->add_option("--mode", bench.mode, "perfect or fd")->check(CLI::IsMember({"perfect", "fd"}));
  bench_app->add_option("--t-end", bench.t_end, "simulated time");
  bench_app->add_option("--period", bench.h, "sampling period");
  bench_app->add_option("--on-infeasible", bench.on_infeasible, "abort or shift")->check(CLI::IsMember({"abort", "shift"}));
  bench_app->add_option("--out", bench.out, "CSV table path (default stdout)");

  BeamCmd beam;
  auto * beam_app  = app.add_subcommand("beam", "beam benchmark utilities");
  beam_app->require_subcommand(1);
  auto * build_app = beam_app->add_subcommand("build", "write the beam benchmark problem JSON");
  build_app->add_option("--horizon", beam.horizon, "prediction horizon N")->check(CLI::PositiveNumber);
  build_app->add_option("--period", beam.h, "sampling period");
  build_app->add_option("--bounds-scaling", beam.scaling, "physical or literal")->check(CLI::IsMember({"physical", "literal"}));
  build_app->add_option("--terminal", beam.terminal, "stage (P = Q) or zero")->check(CLI::IsMember({"stage", "zero"}));
  build_app->add_option("--out", beam.out, "output path (default stdout)");

  GenCmd gen;
  auto * gen_app = app.add_subcommand("generate", "write a seeded random test problem");
  gen_app->add_option("--seed", gen.seed, "RNG seed");
  gen_app->add_option("--kind", gen.kind, "random, infeasible or degenerate")
    ->check(CLI::IsMember({"random", "infeasible", "degenerate"}));
  gen_app->add_option("--out", gen.out, "output path (default stdout)");

  if (argc < 2) {
    std::cout << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*lift_app) { return run_lift(lift); }
    if (*solve_app) { return run_solve(sol); }
    if (*sim_app) { return run_simulate(sim); }
    if (*bench_app) { return run_benchmark(bench); }
    if (*build_app) { return run_beam(beam); }
    if (*gen_app) { return run_generate(gen); }
  } catch (const io::IoError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const CLI::ValidationError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
