#include "qosppc/cli.hpp"

#include "qosppc/diagnostics.hpp"
#include "qosppc/errors.hpp"
#include "qosppc/io.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace qosppc {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

struct Options {
  std::string scenario;
  std::string schedule;
  std::string trace;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> dt;
  bool oracle = false;
  bool no_initial_leg = false;
  bool tight_edges = false;
};

void report_error(std::ostream& err, const Error& e) {
  err << "error: " << e.what() << "\n";
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    for (const auto& violation : v->violations()) {
      err << "  " << to_string(violation.code) << ": " << violation.message << "\n";
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  out << text;
}

fs::path prepare_out(const std::string& dir) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::ParseError, "cannot create output directory " + dir);
  return out;
}

// The schedule must name every task once, use valid levels and respect the
// ordering constraint on estimated completions.
void check_schedule_against(const Schedule& s, const Scenario& scenario, const SchedulerConfig& config) {
  const std::size_t m = scenario.task_count();
  std::vector<int> sorted = s.order;
  std::sort(sorted.begin(), sorted.end());
  bool permutation = sorted.size() == m;
  for (std::size_t l = 0; permutation && l < m; ++l) permutation = sorted[l] == static_cast<int>(l + 1);
  if (!permutation || s.qos.size() != m) {
    throw Error(ErrorCode::InfeasibleInstance, "schedule does not list each scenario task exactly once");
  }
  for (std::size_t l = 0; l < m; ++l) {
    if (s.qos[l] < 0 || s.qos[l] >= scenario.tasks[l].levels()) {
      throw Error(ErrorCode::QosOutOfRange, "schedule assigns an unknown QoS level to task " + std::to_string(l + 1));
    }
  }
  const Schedule rebuilt = make_schedule(s.order, s.qos, compute_epsilon(scenario.tasks), scenario, config);
  if (!check_feasible(rebuilt)) {
    throw Error(ErrorCode::InfeasibleInstance, "estimated completions are not increasing along the schedule");
  }
}

int cmd_schedule(const Options& opt, std::ostream& err) {
  const std::uint64_t seed = opt.seed.value_or(kDefaultSeed);
  ScenarioDescription desc;
  Scenario scenario;
  try {
    desc = load_scenario(opt.scenario, seed);
    scenario = validate_scenario(desc);
  } catch (const Error& e) {
    report_error(err, e);
    return kExitInvalidInput;
  }
  ScheduleDocument doc;
  doc.seed = seed;
  doc.scenario_hash = scenario_hash(desc);
  doc.config.alpha = opt.alpha.value_or(scenario.alpha);
  doc.config.include_initial_leg = !opt.no_initial_leg;
  if (doc.config.alpha < 0.0 || doc.config.alpha > 1.0) {
    err << "error: --alpha must lie in [0, 1]\n";
    return kExitUsage;
  }
  try {
    doc.schedule = opt.oracle ? brute_force_oracle(scenario, doc.config) : solve_exact(scenario, doc.config);
    const fs::path out = prepare_out(opt.out);
    write_text(out / "schedule.json", schedule_to_json(doc).dump(2) + "\n");
    write_text(out / "schedule_summary.txt", schedule_summary(doc, scenario));
    err << "wrote " << (out / "schedule.json").string() << "\n";
  } catch (const Error& e) {
    report_error(err, e);
    return kExitInvalidInput;
  }
  return kExitOk;
}

int cmd_simulate(const Options& opt, std::ostream& err) {
  if (opt.dt && !(*opt.dt > 0.0)) {
    err << "error: --dt must be positive\n";
    return kExitUsage;
  }
  ScheduleDocument sched;
  ScenarioDescription desc;
  Scenario scenario;
  std::uint64_t seed = 0;
  try {
    sched = load_schedule(opt.schedule);
    seed = opt.seed.value_or(sched.seed);
    desc = load_scenario(opt.scenario, seed);
    scenario = validate_scenario(desc);
    check_schedule_against(sched.schedule, scenario, sched.config);
  } catch (const Error& e) {
    report_error(err, e);
    return kExitInvalidInput;
  }

  SimConfig config;
  config.seed = seed;
  if (opt.dt) config.dt = *opt.dt;
  if (opt.tight_edges) config.synthesis.edge_width = EdgeWidth::Tight;
  TraceDocument doc;
  doc.seed = seed;
  doc.scenario_hash = scenario_hash(desc);
  doc.trace = run_mission(scenario, sched.schedule, config);
  try {
    const fs::path out = prepare_out(opt.out);
    write_trace(doc, scenario.graph, out / "trace.csv");
    write_text(out / "mission_summary.txt", mission_summary(doc));
    err << "wrote " << (out / "trace.csv").string() << "\n";
  } catch (const Error& e) {
    report_error(err, e);
    return kExitInvalidInput;
  }
  if (doc.trace.status != RunStatus::Completed) {
    err << "mission failed: " << to_string(doc.trace.status) << " in task " << doc.trace.failed_task << " at t = "
        << doc.trace.failure_time << "\n";
    if (!doc.trace.message.empty()) err << "  " << doc.trace.message << "\n";
    return kExitMissionFailed;
  }
  return kExitOk;
}

int cmd_verify(const Options& opt, std::ostream& err) {
  TraceDocument trace;
  ScheduleDocument sched;
  ScenarioDescription desc;
  Scenario scenario;
  try {
    trace = read_trace(opt.trace);
    sched = load_schedule(opt.schedule);
    desc = load_scenario(opt.scenario, opt.seed.value_or(trace.seed));
  } catch (const Error& e) {
    report_error(err, e);
    return kExitInvalidInput;
  }
  const std::string hash = scenario_hash(desc);
  if (hash != trace.scenario_hash || hash != sched.scenario_hash) {
    err << "error: scenario hash mismatch (scenario " << hash << ", schedule " << sched.scenario_hash << ", trace "
        << trace.scenario_hash << ")\n";
    return kExitHashMismatch;
  }
  CertificateReport report;
  try {
    scenario = validate_scenario(desc);
    report = verify_trace(trace.trace, scenario, sched.schedule);
    const fs::path out = prepare_out(opt.out);
    write_text(out / "certificate.json", report_to_json(report, hash).dump(2) + "\n");
    err << "wrote " << (out / "certificate.json").string() << "\n";
  } catch (const Error& e) {
    report_error(err, e);
    return kExitInvalidInput;
  }
  if (!report.pass) {
    err << "verification failed:\n";
    for (const auto& f : report.failures) err << "  " << f << "\n";
    return kExitVerifyFailed;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& err) {
  CLI::App app{"Deadline-aware multi-agent task scheduling and prescribed-performance execution", "qosppc"};
  app.require_subcommand(1);
  Options opt;

  auto* schedule = app.add_subcommand("schedule", "Compute the optimal order and QoS assignment");
  schedule->add_option("scenario", opt.scenario, "Scenario document")->required();
  schedule->add_flag("--oracle", opt.oracle, "Use exhaustive enumeration instead of branch and bound");
  schedule->add_flag("--no-initial-leg", opt.no_initial_leg, "Leave the leg from the initial positions out of the cost");
  schedule->add_option("--alpha", opt.alpha, "Reward weight in [0, 1]; defaults to the scenario value");
  schedule->add_option("--seed", opt.seed, "Seed for sampled initial positions");
  schedule->add_option("--out", opt.out, "Output directory");

  auto* simulate = app.add_subcommand("simulate", "Execute a schedule and record the trace");
  simulate->add_option("scenario", opt.scenario, "Scenario document")->required();
  simulate->add_option("schedule", opt.schedule, "Schedule document")->required();
  simulate->add_option("--seed", opt.seed, "Seed; defaults to the one stored in the schedule");
  simulate->add_option("--dt", opt.dt, "Integration step");
  simulate->add_flag("--tight-edges", opt.tight_edges, "Start each edge funnel just above its current length");
  simulate->add_option("--out", opt.out, "Output directory");

  auto* verify = app.add_subcommand("verify", "Audit a recorded trace");
  verify->add_option("trace", opt.trace, "Trace CSV")->required();
  verify->add_option("scenario", opt.scenario, "Scenario document")->required();
  verify->add_option("schedule", opt.schedule, "Schedule document")->required();
  verify->add_option("--seed", opt.seed, "Seed; defaults to the one stored in the trace");
  verify->add_option("--out", opt.out, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    err << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  if (schedule->parsed()) return cmd_schedule(opt, err);
  if (simulate->parsed()) return cmd_simulate(opt, err);
  return cmd_verify(opt, err);
}

}  // namespace qosppc
