// Command-line driver: Monte-Carlo experiment campaigns over the register
// backends and schedulers, plus the exhaustive round-0 schedule search.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "regsim/regsim.hpp"

namespace {

int run_minimax(int n, const std::string& backend_name, std::optional<long> bound) {
  auto backend = regsim::parse_backend_kind(backend_name);
  if (!backend) {
    std::cerr << "unknown backend: " << backend_name << "\n";
    return 2;
  }
  regsim::MinimaxResult r = regsim::minimax_round_value(n, *backend, bound);
  nlohmann::json j;
  j["backend"] = regsim::backend_kind_str(r.backend);
  j["n"] = r.n;
  j["bound"] = r.step_bound;
  j["value"] = {{"num", r.value.numerator()}, {"den", r.value.denominator()}};
  j["states"] = r.states;
  std::cout << j.dump() << "\n";
  return 0;
}

int dump_first_trial(const regsim::ExperimentSpec& spec, const std::string& trace_path,
                     const std::string& verdicts_path) {
  regsim::SimConfig cfg = spec.config;
  cfg.steps_cap = std::max<long>(1, spec.config.steps_cap);
  regsim::Simulation sim(cfg);
  auto sched = regsim::make_scheduler(spec.scheduler, cfg);
  regsim::RunResult r =
      sim.run(*sched, regsim::RunLimits{spec.config.steps_cap, spec.config.rounds_cap});
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) {
      std::cerr << "cannot write " << trace_path << "\n";
      return 2;
    }
    out << regsim::export_trace(r.trace);
  }
  if (!verdicts_path.empty()) {
    std::ofstream out(verdicts_path);
    if (!out) {
      std::cerr << "cannot write " << verdicts_path << "\n";
      return 2;
    }
    regsim::History h = regsim::History::from_events(r.trace);
    for (regsim::RegisterId reg : h.registers()) {
      try {
        out << regsim::verdict_to_json(h, regsim::check_register(h, reg, spec.lin_check_bound))
                   .dump()
            << "\n";
      } catch (const regsim::BoundExceeded&) {
        nlohmann::json j;
        j["register"] = reg.str();
        j["verdict"] = "bound-exceeded";
        out << j.dump() << "\n";
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Deterministic simulator of a round-based shared-register algorithm under atomic, "
      "strongly-linearizable and merely-linearizable register backends"};

  int n = 3;
  std::string backend = "atomic";
  std::string scheduler = "fair";
  std::string program = "weakener";
  long trials = 1;
  std::uint64_t seed = 0;
  long steps_cap = 1'000'000;
  std::optional<long> rounds_cap;
  bool record_history = false;
  std::string out_format = "json";
  bool minimax = false;
  std::optional<long> bound;
  std::string trace_out;
  std::string verdicts_out;
  bool csv_header = false;

  app.add_option("--n", n, "process count (>= 3)");
  app.add_option("--backend", backend, "register backend")
      ->check(CLI::IsMember({"atomic", "strong", "linearizable"}));
  app.add_option("--scheduler", scheduler, "scheduler")
      ->check(CLI::IsMember({"weakener-adversary", "fair"}));
  app.add_option("--program", program, "process program family")
      ->check(CLI::IsMember({"weakener", "weakener+trivial", "trivial"}));
  app.add_option("--trials", trials, "independent runs to aggregate");
  app.add_option("--seed", seed, "base seed; trial t runs with seed + t");
  app.add_option("--steps-cap", steps_cap, "max scheduler decisions per run");
  app.add_option("--rounds-cap", rounds_cap, "stop a run once any process enters this round");
  app.add_flag("--record-history", record_history,
               "run the linearizability and prefix checkers per trial");
  app.add_option("--out", out_format, "summary format")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--minimax", minimax, "exhaustive round-0 value search instead of simulation");
  app.add_option("--bound", bound, "step bound for --minimax");
  app.add_option("--trace-out", trace_out, "also write the first trial's trace to this file");
  app.add_option("--verdicts-out", verdicts_out,
                 "also write per-register checker verdicts for the first trial");
  app.add_flag("--csv-header", csv_header, "print the CSV column header and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (csv_header) {
      std::cout << regsim::Summary::csv_header() << "\n";
      return 0;
    }
    if (minimax) return run_minimax(n, backend, bound);

    regsim::ExperimentSpec spec;
    spec.config.n = n;
    auto bk = regsim::parse_backend_kind(backend);
    if (!bk) {
      std::cerr << "unknown backend: " << backend << "\n";
      return 2;
    }
    spec.config.backend = *bk;
    spec.config.seed = seed;
    spec.config.steps_cap = steps_cap;
    spec.config.rounds_cap = rounds_cap;
    spec.config.program = program;
    spec.scheduler = scheduler;
    spec.trials = trials;
    spec.record_history = record_history;
    spec.validate();

    regsim::Summary sum = regsim::run_experiment(spec);
    if (out_format == "json")
      std::cout << sum.to_json().dump() << "\n";
    else
      std::cout << sum.to_csv_row() << "\n";
    if (!trace_out.empty() || !verdicts_out.empty())
      return dump_first_trial(spec, trace_out, verdicts_out);
    return 0;
  } catch (const regsim::SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
