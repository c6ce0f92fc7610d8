#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "regsim/adversary.hpp"
#include "regsim/errors.hpp"
#include "regsim/histories.hpp"
#include "regsim/sim.hpp"
#include "regsim/trace.hpp"

namespace regsim {

// Decouples the scheduler's random stream from the simulation's coin stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct ExperimentSpec {
  SimConfig config;
  std::string scheduler = "fair";  // "fair" | "weakener-adversary"
  long trials = 1;
  bool record_history = false;
  std::size_t lin_check_bound = 10;

  // config.steps_cap acts as a run limit here, so 0 (empty runs) is allowed.
  void validate() const {
    SimConfig probe = config;
    probe.steps_cap = std::max<long>(1, config.steps_cap);
    probe.validate();
    if (config.steps_cap < 0) throw InvalidConfig("steps_cap must be nonnegative");
    if (trials < 1) throw InvalidConfig("trials must be at least 1");
    if (scheduler != "fair" && scheduler != "weakener-adversary")
      throw InvalidConfig("unknown scheduler: " + scheduler);
  }
};

// Everything the harness aggregates is derived from the exported trace, so
// recomputation from trace files reproduces a Summary exactly.
//
// A process's highest entered round is the highest round any of its events
// carries; for the programs here that also counts its fully completed rounds.
struct TrialStats {
  bool all_returned = false;
  long max_round = 0;           // highest round any process visibly entered
  long min_rounds_completed = 0;  // min over processes of highest entered round
  long rounds_to_exit = 1;      // 1 + max_round: loop iterations begun
  long events = 0;
  long lin_pass = 0, lin_fail = 0, lin_skipped = 0;
  long prefix_pass = 0, prefix_fail = 0;
};

inline TrialStats trial_stats_from_trace(const std::vector<Event>& trace, int n) {
  TrialStats ts;
  std::vector<long> max_round(static_cast<std::size_t>(n), 0);
  std::vector<bool> returned(static_cast<std::size_t>(n), false);
  for (const Event& e : trace) {
    if (e.pid < 0 || e.pid >= n) throw SimError("trace event with pid out of range");
    auto idx = static_cast<std::size_t>(e.pid);
    max_round[idx] = std::max(max_round[idx], e.round);
    if (e.kind == EventKind::Return) returned[idx] = true;
  }
  ts.all_returned = true;
  ts.min_rounds_completed = trace.empty() ? 0 : max_round[0];
  for (int i = 0; i < n; ++i) {
    auto idx = static_cast<std::size_t>(i);
    ts.all_returned = ts.all_returned && returned[idx];
    ts.max_round = std::max(ts.max_round, max_round[idx]);
    ts.min_rounds_completed = std::min(ts.min_rounds_completed, max_round[idx]);
  }
  ts.rounds_to_exit = ts.max_round + 1;
  ts.events = static_cast<long>(trace.size());
  return ts;
}

inline void add_checker_stats(TrialStats& ts, const std::vector<Event>& trace,
                              std::size_t bound) {
  History h = History::from_events(trace);
  for (RegisterId reg : h.registers()) {
    try {
      if (is_linearizable(h, reg, bound))
        ++ts.lin_pass;
      else
        ++ts.lin_fail;
    } catch (const BoundExceeded&) {
      ++ts.lin_skipped;
    }
    auto snaps = h.commit_snapshots().find(reg);
    bool ok = snaps == h.commit_snapshots().end() || check_prefix_property(snaps->second);
    if (ok)
      ++ts.prefix_pass;
    else
      ++ts.prefix_fail;
  }
}

struct Summary {
  std::string backend, scheduler, program;
  int n = 0;
  long trials = 0;
  std::uint64_t seed = 0;
  double all_returned_frac = 0.0;
  double mean_rounds = 0.0;  // mean of rounds_to_exit over trials
  long max_rounds = 0;       // max of rounds_to_exit over trials
  long min_rounds_completed = 0;
  std::vector<double> continuation;  // [j] = P(enter j+1 | reached j), observed
  std::vector<long> reached;         // [j] = trials that reached round j
  bool history_recorded = false;
  long lin_pass = 0, lin_fail = 0, lin_skipped = 0;
  long prefix_pass = 0, prefix_fail = 0;

  double lin_pass_frac() const {
    long run = lin_pass + lin_fail;
    return run == 0 ? -1.0 : static_cast<double>(lin_pass) / static_cast<double>(run);
  }
  double prefix_pass_frac() const {
    long run = prefix_pass + prefix_fail;
    return run == 0 ? -1.0 : static_cast<double>(prefix_pass) / static_cast<double>(run);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["backend"] = backend;
    j["scheduler"] = scheduler;
    j["program"] = program;
    j["n"] = n;
    j["trials"] = trials;
    j["seed"] = seed;
    j["all_returned_frac"] = all_returned_frac;
    j["mean_rounds"] = mean_rounds;
    j["max_rounds"] = max_rounds;
    j["min_rounds_completed"] = min_rounds_completed;
    j["per_round_continuation"] = continuation;
    j["trials_reaching_round"] = reached;
    if (history_recorded) {
      j["lin_check"] = {{"pass", lin_pass}, {"fail", lin_fail}, {"skipped", lin_skipped}};
      j["prefix_check"] = {{"pass", prefix_pass}, {"fail", prefix_fail}};
    }
    j["lin_check_pass"] = lin_pass_frac();
    j["prefix_check_pass"] = prefix_pass_frac();
    return j;
  }

  // Fixed column order; checker columns are -1 when no checks ran.
  static std::string csv_header() {
    return "backend,scheduler,n,trials,seed,all_returned_frac,mean_rounds,max_rounds,"
           "lin_check_pass,prefix_check_pass";
  }

  std::string to_csv_row() const {
    std::ostringstream os;
    os << backend << ',' << scheduler << ',' << n << ',' << trials << ',' << seed << ','
       << all_returned_frac << ',' << mean_rounds << ',' << max_rounds << ',' << lin_pass_frac()
       << ',' << prefix_pass_frac();
    return os.str();
  }
};

// Observed frequency, per round j, of some process entering round j+1 among
// trials that reached round j. Rounds no trial reached are omitted.
inline std::vector<double> per_round_continuation(const std::vector<TrialStats>& stats,
                                                  std::vector<long>* reached_out = nullptr) {
  if (stats.empty()) throw NoTraces("no recorded trials");
  long top = 0;
  for (const TrialStats& t : stats) top = std::max(top, t.max_round);
  std::vector<long> reached(static_cast<std::size_t>(top) + 1, 0);
  for (const TrialStats& t : stats)
    for (long j = 0; j <= t.max_round; ++j) ++reached[static_cast<std::size_t>(j)];
  std::vector<double> freq;
  for (long j = 0; j < top; ++j) {
    double denom = static_cast<double>(reached[static_cast<std::size_t>(j)]);
    double numer = static_cast<double>(reached[static_cast<std::size_t>(j) + 1]);
    freq.push_back(numer / denom);
  }
  if (reached_out) *reached_out = reached;
  return freq;
}

inline std::unique_ptr<Scheduler> make_scheduler(const std::string& name, const SimConfig& cfg) {
  if (name == "fair") return fair_scheduler(splitmix64(cfg.seed));
  if (name == "weakener-adversary") return weakener_adversary(cfg.n);
  throw InvalidConfig("unknown scheduler: " + name);
}

// Runs `trials` independent simulations with seeds config.seed + trial index
// and aggregates them. With record_history set, both checkers run per trial.
inline Summary run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<TrialStats> stats;
  stats.reserve(static_cast<std::size_t>(spec.trials));
  for (long t = 0; t < spec.trials; ++t) {
    SimConfig cfg = spec.config;
    cfg.seed = spec.config.seed + static_cast<std::uint64_t>(t);
    cfg.steps_cap = std::max<long>(1, spec.config.steps_cap);
    Simulation sim(cfg);
    auto sched = make_scheduler(spec.scheduler, cfg);
    RunResult r = sim.run(*sched, RunLimits{spec.config.steps_cap, spec.config.rounds_cap});
    TrialStats ts = trial_stats_from_trace(r.trace, cfg.n);
    if (spec.record_history) add_checker_stats(ts, r.trace, spec.lin_check_bound);
    stats.push_back(ts);
  }

  Summary s;
  s.backend = backend_kind_str(spec.config.backend);
  s.scheduler = spec.scheduler;
  s.program = spec.config.program;
  s.n = spec.config.n;
  s.trials = spec.trials;
  s.seed = spec.config.seed;
  s.history_recorded = spec.record_history;
  long returned = 0;
  double rounds_sum = 0.0;
  s.min_rounds_completed = stats.front().min_rounds_completed;
  for (const TrialStats& t : stats) {
    returned += t.all_returned ? 1 : 0;
    rounds_sum += static_cast<double>(t.rounds_to_exit);
    s.max_rounds = std::max(s.max_rounds, t.rounds_to_exit);
    s.min_rounds_completed = std::min(s.min_rounds_completed, t.min_rounds_completed);
    s.lin_pass += t.lin_pass;
    s.lin_fail += t.lin_fail;
    s.lin_skipped += t.lin_skipped;
    s.prefix_pass += t.prefix_pass;
    s.prefix_fail += t.prefix_fail;
  }
  s.all_returned_frac = static_cast<double>(returned) / static_cast<double>(spec.trials);
  s.mean_rounds = rounds_sum / static_cast<double>(spec.trials);
  s.continuation = per_round_continuation(stats, &s.reached);
  return s;
}

// 3-sigma binomial half-width for an expected proportion p over `trials`.
inline double binomial_3sigma(double p, long trials) {
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace regsim
