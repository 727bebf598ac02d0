#include "rses/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rses/csv.hpp"
#include "rses/harness.hpp"

namespace rses::cli {

namespace {

using nlohmann::json;

std::string joined(std::span<const std::string_view> names) {
  std::string s;
  for (std::string_view n : names) s += (s.empty() ? "" : ", ") + std::string(n);
  return s;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw csv::IoError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config '" + path + "': " + e.what());
  }
}

// Applies a config value only when the flag was not given on the command line.
template <typename T>
void merge(const json& config, const char* key, const CLI::Option* opt, T& target) {
  if (opt->count() > 0 || !config.contains(key)) return;
  try {
    target = config.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
  }
}

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("--values: '" + item + "' is not a number");
    }
  }
  if (values.empty()) throw InvalidArgument("--values: empty list");
  return values;
}

struct RunArgs {
  std::string problem;
  std::string solver;
  std::int64_t budget = harness::kDefaultBudget;
  int trials = harness::kDefaultTrials;
  std::uint64_t seed = 0;
  std::uint64_t problem_seed = 0;
  std::string out;
  int k = 0;
  double sigma = 0.0;
  double beta = 0.0;
  double time_cap_s = EvaluationMeter::kDefaultWallClockCapS;
  bool no_wall_time = false;
  std::string config;
};

struct AblateArgs {
  std::string param;
  std::string values;
  std::string out;
  int trials = harness::kDefaultTrials;
  std::uint64_t seed = 0;
  std::uint64_t problem_seed = 0;
  std::int64_t budget = harness::kDefaultBudget;
  std::string problem = "deconv-intact";
  bool no_wall_time = false;
  std::string config;
};

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::string config;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

int do_run(const RunArgs& args, const std::map<std::string, const CLI::Option*>& given,
           std::ostream& out) {
  require(harness::is_problem_name(args.problem),
          "unknown problem '" + args.problem + "'; valid: " + joined(harness::kProblemNames));
  require(harness::is_solver_name(args.solver),
          "unknown solver '" + args.solver + "'; valid: " + joined(harness::kSolverNames));
  require(args.budget >= 1, "--budget must be at least 1");
  require(args.trials >= 1, "--trials must be at least 1");
  require(!args.out.empty(), "--out is required");
  require(args.time_cap_s > 0.0, "--time-cap-s must be positive");

  harness::ProblemSpec problem{args.problem, args.problem_seed};
  harness::SolverSpec solver;
  solver.name = args.solver;
  solver.time_cap_s = args.time_cap_s;
  solver.record_time = !args.no_wall_time;
  if (given.at("k")->count() > 0 || args.k != 0) {
    require(args.k >= 1, "--k must be at least 1");
    solver.probe_count = args.k;
  }
  if (given.at("sigma")->count() > 0 || args.sigma != 0.0) {
    require(args.sigma > 0.0, "--sigma must be positive");
    solver.probe_scale = args.sigma;
  }
  if (given.at("beta")->count() > 0 || args.beta != 0.0) {
    require(args.beta > 0.0, "--beta must be positive");
    solver.ridge_scale = args.beta;
  }

  const harness::TrialSet set =
      harness::run_trials(problem, solver, args.trials, args.budget, args.seed);
  const harness::TrialAggregate agg = harness::aggregate_trials(set);
  csv::write_traces(args.out, std::span(&set, 1));
  csv::write_aggregates(aggregate_path_for(args.out), std::span(&agg, 1));

  out << "problem " << set.problem << ", solver " << set.solver << ", " << set.traces.size()
      << " trials, budget " << set.budget << " (" << to_string(set.counter) << " evaluations)\n";
  if (agg.length() > 0) {
    const auto rows = harness::build_report(std::span(&agg, 1));
    out << harness::format_report_text(rows);
  }
  out << "traces: " << args.out << "\naggregate: " << aggregate_path_for(args.out).string() << "\n";
  if (set.failed_trials() == static_cast<int>(set.traces.size())) {
    out << "all trials ended in numerical failure\n";
    return kNumericalFailure;
  }
  return kSuccess;
}

int do_ablate(const AblateArgs& args, std::ostream& out) {
  require(harness::is_problem_name(args.problem),
          "unknown problem '" + args.problem + "'; valid: " + joined(harness::kProblemNames));
  require(args.trials >= 1, "--trials must be at least 1");
  require(args.budget >= 1, "--budget must be at least 1");
  require(!args.out.empty(), "--out is required");
  harness::AblationGrid grid;
  grid.param = harness::parse_ablation_param(args.param);
  grid.values = parse_value_list(args.values);
  grid.validate();
  const auto rows = harness::ablation_sweep(grid, {args.problem, args.problem_seed}, args.trials,
                                            args.budget, args.seed, !args.no_wall_time);
  csv::write_ablation(args.out, rows);
  for (const harness::AblationRow& row : rows) {
    out << to_string(row.param) << " = " << row.value << ": mean terminal residual "
        << row.mean_terminal_residual << (row.is_min ? "  <- minimum" : "") << "\n";
  }
  return kSuccess;
}

int do_report(const ReportArgs& args, std::ostream& out) {
  require(!args.inputs.empty(), "--inputs needs at least one file");
  require(!args.out.empty(), "--out is required");
  std::vector<harness::TrialAggregate> aggregates;
  for (const std::string& input : args.inputs) {
    auto loaded = csv::read_any(input);
    aggregates.insert(aggregates.end(), std::make_move_iterator(loaded.begin()),
                      std::make_move_iterator(loaded.end()));
  }
  const auto rows = harness::build_report(aggregates);
  csv::write_report(args.out, rows);
  const std::string text = harness::format_report_text(rows);
  const std::string text_path = args.out + ".txt";
  std::ofstream txt(text_path);
  if (!txt) throw csv::IoError("cannot open '" + text_path + "' for writing");
  txt << text;
  if (!txt) throw csv::IoError("failed writing '" + text_path + "'");
  out << text;
  return kSuccess;
}

}  // namespace

std::filesystem::path aggregate_path_for(const std::filesystem::path& out) {
  std::filesystem::path path = out;
  path.replace_extension(".aggregate.csv");
  return path;
}

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Budget-metered benchmark harness for residual subspace evolution strategies"};
  app.require_subcommand(1);
  app.footer(
      "Subcommands:\n"
      "  run --problem {linear|brownian|mlp8|mlp16|mlp32|mlp64|deconv-intact|deconv-perturbed}\n"
      "      --solver {rses|gn|eki|adam|xnes|external} --budget INT --trials INT --seed INT\n"
      "      --out PATH [--k INT] [--sigma REAL] [--beta REAL] [--time-cap-s REAL]\n"
      "      [--problem-seed INT] [--no-wall-time] [--config JSON]\n"
      "  ablate --param {k|sigma|beta} --values CSV_LIST --out PATH [--trials INT] [--seed INT]\n"
      "      [--budget INT] [--problem NAME] [--problem-seed INT] [--no-wall-time] [--config JSON]\n"
      "  report --inputs PATH... --out PATH [--config JSON]\n"
      "Exit codes: 0 success, 2 invalid arguments, 3 numerical failure in all trials, 4 I/O error.\n"
      "Config files are JSON objects keyed by flag name (dashes as underscores); flags win.");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run seeded trials of one solver on one problem");
  std::map<std::string, const CLI::Option*> run_opts;
  run_opts["problem"] = run_cmd->add_option("--problem", run.problem, "Benchmark: " + joined(harness::kProblemNames));
  run_opts["solver"] = run_cmd->add_option("--solver", run.solver, "Solver: " + joined(harness::kSolverNames));
  run_opts["budget"] = run_cmd->add_option("--budget", run.budget, "Evaluation budget per trial")->capture_default_str();
  run_opts["trials"] = run_cmd->add_option("--trials", run.trials, "Number of trials")->capture_default_str();
  run_opts["seed"] = run_cmd->add_option("--seed", run.seed, "Master seed")->capture_default_str();
  run_opts["out"] = run_cmd->add_option("--out", run.out, "Trace CSV path (aggregate goes to *.aggregate.csv)");
  run_opts["k"] = run_cmd->add_option("--k", run.k, "RSES probe count (default: prescribed from m)");
  run_opts["sigma"] = run_cmd->add_option("--sigma", run.sigma, "RSES probe scale");
  run_opts["beta"] = run_cmd->add_option("--beta", run.beta, "RSES ridge scale");
  run_opts["time_cap_s"] = run_cmd->add_option("--time-cap-s", run.time_cap_s, "Wall-clock cap per trial")->capture_default_str();
  run_opts["problem_seed"] = run_cmd->add_option("--problem-seed", run.problem_seed, "Benchmark instance seed")->capture_default_str();
  run_opts["no_wall_time"] = run_cmd->add_flag("--no-wall-time", run.no_wall_time, "Record zero wall time (byte-reproducible output)");
  run_cmd->add_option("--config", run.config, "JSON file with values for any of the flags above");

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Sweep one RSES hyperparameter");
  std::map<std::string, const CLI::Option*> ablate_opts;
  ablate_opts["param"] = ablate_cmd->add_option("--param", ablate.param, "Parameter to sweep: k, sigma or beta");
  ablate_opts["values"] = ablate_cmd->add_option("--values", ablate.values, "Comma-separated values");
  ablate_opts["out"] = ablate_cmd->add_option("--out", ablate.out, "Sweep CSV path");
  ablate_opts["trials"] = ablate_cmd->add_option("--trials", ablate.trials, "Trials per value")->capture_default_str();
  ablate_opts["seed"] = ablate_cmd->add_option("--seed", ablate.seed, "Master seed")->capture_default_str();
  ablate_opts["budget"] = ablate_cmd->add_option("--budget", ablate.budget, "Evaluation budget per trial")->capture_default_str();
  ablate_opts["problem"] = ablate_cmd->add_option("--problem", ablate.problem, "Benchmark")->capture_default_str();
  ablate_opts["problem_seed"] = ablate_cmd->add_option("--problem-seed", ablate.problem_seed, "Benchmark instance seed")->capture_default_str();
  ablate_opts["no_wall_time"] = ablate_cmd->add_flag("--no-wall-time", ablate.no_wall_time, "Record zero wall time");
  ablate_cmd->add_option("--config", ablate.config, "JSON file with values for any of the flags above");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Compare aggregates at the shared stopping index");
  auto* inputs_opt = report_cmd->add_option("--inputs", report.inputs, "Aggregate or trace CSV files");
  auto* report_out_opt = report_cmd->add_option("--out", report.out, "Comparison CSV (text table at PATH.txt)");
  report_cmd->add_option("--config", report.config, "JSON file with 'inputs' and 'out'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInvalidArguments;
  }

  try {
    if (run_cmd->parsed()) {
      if (!run.config.empty()) {
        const json config = load_config(run.config);
        merge(config, "problem", run_opts["problem"], run.problem);
        merge(config, "solver", run_opts["solver"], run.solver);
        merge(config, "budget", run_opts["budget"], run.budget);
        merge(config, "trials", run_opts["trials"], run.trials);
        merge(config, "seed", run_opts["seed"], run.seed);
        merge(config, "out", run_opts["out"], run.out);
        merge(config, "k", run_opts["k"], run.k);
        merge(config, "sigma", run_opts["sigma"], run.sigma);
        merge(config, "beta", run_opts["beta"], run.beta);
        merge(config, "time_cap_s", run_opts["time_cap_s"], run.time_cap_s);
        merge(config, "problem_seed", run_opts["problem_seed"], run.problem_seed);
        merge(config, "no_wall_time", run_opts["no_wall_time"], run.no_wall_time);
      }
      require(!run.problem.empty(), "--problem is required; valid: " + joined(harness::kProblemNames));
      require(!run.solver.empty(), "--solver is required; valid: " + joined(harness::kSolverNames));
      return do_run(run, run_opts, out);
    }
    if (ablate_cmd->parsed()) {
      if (!ablate.config.empty()) {
        const json config = load_config(ablate.config);
        merge(config, "param", ablate_opts["param"], ablate.param);
        if (ablate_opts["values"]->count() == 0 && config.contains("values") && config["values"].is_array()) {
          std::string list;
          for (const auto& v : config["values"]) list += (list.empty() ? "" : ",") + csv::format_double(v.get<double>());
          ablate.values = list;
        } else {
          merge(config, "values", ablate_opts["values"], ablate.values);
        }
        merge(config, "out", ablate_opts["out"], ablate.out);
        merge(config, "trials", ablate_opts["trials"], ablate.trials);
        merge(config, "seed", ablate_opts["seed"], ablate.seed);
        merge(config, "budget", ablate_opts["budget"], ablate.budget);
        merge(config, "problem", ablate_opts["problem"], ablate.problem);
        merge(config, "problem_seed", ablate_opts["problem_seed"], ablate.problem_seed);
        merge(config, "no_wall_time", ablate_opts["no_wall_time"], ablate.no_wall_time);
      }
      require(!ablate.param.empty(), "--param is required (k, sigma, beta)");
      require(!ablate.values.empty(), "--values is required");
      return do_ablate(ablate, out);
    }
    if (report_cmd->parsed()) {
      if (!report.config.empty()) {
        const json config = load_config(report.config);
        merge(config, "inputs", inputs_opt, report.inputs);
        merge(config, "out", report_out_opt, report.out);
      }
      return do_report(report, out);
    }
  } catch (const csv::IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    // InvalidArgument and UnsupportedProblem.
    err << "invalid arguments: " << e.what() << "\n";
    return kInvalidArguments;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kInvalidArguments;
}

}  // namespace rses::cli
