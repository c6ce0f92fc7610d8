#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "regsim/errors.hpp"
#include "regsim/program.hpp"
#include "regsim/registers.hpp"
#include "regsim/trace.hpp"
#include "regsim/values.hpp"

namespace regsim {

struct SimConfig {
  int n = 3;
  BackendKind backend = BackendKind::Atomic;
  std::uint64_t seed = 0;
  long steps_cap = 1'000'000;
  std::optional<long> rounds_cap;  // stop once any process enters this round
  std::string program = "weakener";

  void validate() const {
    if (n < 3) throw InvalidConfig("need at least 3 processes, got " + std::to_string(n));
    if (steps_cap < 1) throw InvalidConfig("steps_cap must be at least 1");
  }
};

// The adversary's next move: step a process, or respond a pending operation
// (with a chosen insertion point on the merely-linearizable backend).
struct SchedulerDecision {
  enum class Kind : std::uint8_t { StepProcess, RespondOp };

  Kind kind = Kind::StepProcess;
  int pid = -1;                             // StepProcess
  OpId op = -1;                             // RespondOp
  std::optional<InsertionChoice> insertion; // RespondOp, MerelyLin only

  static SchedulerDecision step(int pid) {
    SchedulerDecision d;
    d.kind = Kind::StepProcess;
    d.pid = pid;
    return d;
  }
  static SchedulerDecision respond(OpId op, std::optional<InsertionChoice> ins = std::nullopt) {
    SchedulerDecision d;
    d.kind = Kind::RespondOp;
    d.op = op;
    d.insertion = ins;
    return d;
  }
};

struct StepOutcome {
  std::size_t first_event = 0;
  std::size_t event_count = 0;
};

struct CoinRecord {
  long clock = 0;
  int pid = -1;
  long round = 0;
  int outcome = 0;
};

enum class StopReason : std::uint8_t { AllReturned, StepsExhausted, RoundsCapped };

inline std::string stop_reason_str(StopReason r) {
  switch (r) {
    case StopReason::AllReturned:
      return "all-returned";
    case StopReason::StepsExhausted:
      return "steps-exhausted";
    case StopReason::RoundsCapped:
      return "rounds-capped";
  }
  return "?";
}

struct RunResult {
  StopReason stop = StopReason::AllReturned;
  long decisions = 0;
  std::vector<ProcessStatus> statuses;
  std::vector<long> max_round;  // per process: highest round entered
  std::vector<Event> trace;
  std::vector<LinearizationLog> logs;  // final logs including snapshot history

  bool all_returned() const {
    for (ProcessStatus s : statuses)
      if (s != ProcessStatus::Returned) return false;
    return true;
  }
};

struct RunLimits {
  long steps_cap = 0;
  std::optional<long> rounds_cap;
};

class Simulation;

// Full-visibility, read-only view handed to schedulers: every process state,
// pending operation, committed log and past coin flip. Future randomness is
// not reachable from here.
class Observation {
 public:
  explicit Observation(const Simulation* sim) : sim_(sim) {}

  int n() const;
  BackendKind backend() const;
  long clock() const;
  const ProcessState& process(int pid) const;
  const std::vector<ProcessState>& processes() const;
  const RegisterStore& registers() const;
  std::vector<OpId> pending_ops() const;
  const std::vector<CoinRecord>& coins() const;
  std::vector<LegalInsertion> legal_insertions(OpId id) const;
  // The instruction the process would execute next; null if returned or
  // blocked on a pending operation.
  const Instr* next_instr(int pid) const;
  std::vector<SchedulerDecision> enabled_decisions() const;

 private:
  const Simulation* sim_;
};

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual SchedulerDecision next_decision(const Observation& obs) = 0;
};

// Owns the entire state of one run and advances it one scheduler decision at
// a time. Single-threaded; copyable so searches can fork states. The seeded
// rng is the sole source of coin flips, so a (config, decision sequence)
// pair replays to a bit-identical trace.
class Simulation {
 public:
  explicit Simulation(SimConfig cfg)
      : cfg_(validated(std::move(cfg))),
        programs_(program_family(cfg_.program, cfg_.n)),
        regs_(cfg_.backend, cfg_.n),
        rng_(cfg_.seed) {
    procs_.resize(static_cast<std::size_t>(cfg_.n));
    for (int i = 0; i < cfg_.n; ++i) procs_[static_cast<std::size_t>(i)].pid = i;
  }

  const SimConfig& config() const { return cfg_; }
  long clock() const { return clock_; }
  const std::vector<Event>& trace() const { return trace_; }
  const RegisterStore& registers() const { return regs_; }
  const std::vector<CoinRecord>& coins() const { return coins_; }
  const ProcessState& process(int pid) const { return procs_.at(static_cast<std::size_t>(pid)); }
  const std::vector<ProcessState>& processes() const { return procs_; }
  const ProcessProgram& program(int pid) const {
    return programs_.at(static_cast<std::size_t>(pid));
  }

  Observation observe() const { return Observation(this); }

  // Searches fork thousands of states; they switch the trace off since they
  // only inspect semantic state.
  void set_trace_recording(bool on) { trace_recording_ = on; }

  bool all_returned() const {
    for (const ProcessState& p : procs_)
      if (p.status != ProcessStatus::Returned) return false;
    return true;
  }

  long max_round_entered() const {
    long m = 0;
    for (const ProcessState& p : procs_) m = std::max(m, p.round);
    return m;
  }

  const Instr* next_instr(int pid) const {
    const ProcessState& st = process(pid);
    if (st.status == ProcessStatus::Returned || st.pending_op) return nullptr;
    return &programs_[static_cast<std::size_t>(pid)].at(st.line);
  }

  bool decision_enabled(const SchedulerDecision& d) const {
    if (d.kind == SchedulerDecision::Kind::StepProcess) {
      if (d.pid < 0 || d.pid >= cfg_.n) return false;
      const ProcessState& st = procs_[static_cast<std::size_t>(d.pid)];
      if (st.status == ProcessStatus::Returned) return true;  // NOP step
      if (st.pending_op) {
        // Only a strongly-linearizable op has an internal (commit) step.
        return cfg_.backend == BackendKind::StrongLin && !regs_.op(*st.pending_op).committed;
      }
      return true;
    }
    // RespondOp
    if (d.op < 0 || static_cast<std::size_t>(d.op) >= regs_.op_count()) return false;
    const OperationRecord& rec = regs_.op(d.op);
    if (!rec.pending) return false;
    switch (cfg_.backend) {
      case BackendKind::Atomic:
        return false;
      case BackendKind::StrongLin:
        return rec.committed && !d.insertion;
      case BackendKind::MerelyLin:
        return d.insertion.has_value();
    }
    return false;
  }

  // Every enabled decision. RespondOp entries on the merely-linearizable
  // backend are listed without an insertion point; the caller picks one.
  void enabled_decisions(std::vector<SchedulerDecision>& out) const {
    out.clear();
    for (int pid = 0; pid < cfg_.n; ++pid) {
      const ProcessState& st = procs_[static_cast<std::size_t>(pid)];
      if (st.status == ProcessStatus::Returned || !st.pending_op ||
          (cfg_.backend == BackendKind::StrongLin && !regs_.op(*st.pending_op).committed))
        out.push_back(SchedulerDecision::step(pid));
    }
    for (OpId id : regs_.pending_ops()) {
      const OperationRecord& rec = regs_.op(id);
      if (cfg_.backend == BackendKind::StrongLin && rec.committed)
        out.push_back(SchedulerDecision::respond(id));
      else if (cfg_.backend == BackendKind::MerelyLin)
        out.push_back(SchedulerDecision::respond(id));
    }
  }

  std::vector<SchedulerDecision> enabled_decisions() const {
    std::vector<SchedulerDecision> out;
    enabled_decisions(out);
    return out;
  }

  StepOutcome apply(const SchedulerDecision& d) { return apply_impl(d, std::nullopt); }

  // Search hook: identical to apply(), but a coin-flip step lands on the
  // given outcome instead of drawing from the rng.
  StepOutcome apply_with_forced_coin(const SchedulerDecision& d, int coin) {
    return apply_impl(d, coin);
  }

  RunResult run(Scheduler& sched) { return run(sched, RunLimits{cfg_.steps_cap, cfg_.rounds_cap}); }

  RunResult run(Scheduler& sched, RunLimits limits) {
    RunResult res;
    while (true) {
      if (all_returned()) {
        res.stop = StopReason::AllReturned;
        break;
      }
      if (limits.rounds_cap && max_round_entered() >= *limits.rounds_cap) {
        res.stop = StopReason::RoundsCapped;
        break;
      }
      if (res.decisions >= limits.steps_cap) {
        res.stop = StopReason::StepsExhausted;
        break;
      }
      apply(sched.next_decision(observe()));
      ++res.decisions;
    }
    res.statuses.reserve(procs_.size());
    res.max_round.reserve(procs_.size());
    for (const ProcessState& p : procs_) {
      res.statuses.push_back(p.status);
      res.max_round.push_back(p.round);
    }
    res.trace = trace_;
    for (RegisterId reg : regs_.touched_registers()) res.logs.push_back(*regs_.log(reg));
    return res;
  }

 private:
  static SimConfig validated(SimConfig cfg) {
    cfg.validate();
    return cfg;
  }

  StepOutcome apply_impl(const SchedulerDecision& d, std::optional<int> forced_coin) {
    if (!decision_enabled(d))
      throw DisabledDecision(d.kind == SchedulerDecision::Kind::StepProcess
                                 ? "step of process " + std::to_string(d.pid) + " is not enabled"
                                 : "response of operation " + std::to_string(d.op) +
                                       " is not enabled");
    StepOutcome out{trace_.size(), 0};
    if (d.kind == SchedulerDecision::Kind::StepProcess)
      step_process(d.pid, forced_coin);
    else
      respond_op(d.op, d.insertion);
    ++clock_;
    out.event_count = trace_.size() - out.first_event;
    return out;
  }

  void step_process(int pid, std::optional<int> forced_coin) {
    ProcessState& st = procs_[static_cast<std::size_t>(pid)];
    if (st.status == ProcessStatus::Returned) {
      emit(EventKind::Nop, st, std::nullopt, std::nullopt, std::nullopt);
      return;
    }
    if (st.pending_op) {
      // StrongLin internal step: commit the pending operation.
      const OperationRecord& rec = regs_.op(*st.pending_op);
      RegisterId reg = rec.reg;
      int pos = regs_.advance_internal(*st.pending_op);
      const OperationRecord& after = regs_.op(*st.pending_op);
      emit(EventKind::Commit, st, reg,
           after.kind == OpKind::Read ? after.returned : after.argument, pos);
      return;
    }
    const Instr& in = programs_[static_cast<std::size_t>(pid)].at(st.line);
    switch (in.op) {
      case Instr::Op::WriteReg:
        start_op(st, in, OpKind::Write, in.argument(st));
        break;
      case Instr::Op::CoinWrite: {
        int c = forced_coin ? *forced_coin : static_cast<int>(rng_() & 1u);
        coins_.push_back({clock_, pid, st.round, c});
        emit(EventKind::Coin, st, std::nullopt, Value::integer(c), std::nullopt);
        start_op(st, in, OpKind::Write, Value::integer(c));
        break;
      }
      case Instr::Op::ReadReg:
        start_op(st, in, OpKind::Read, std::nullopt);
        break;
      case Instr::Op::Guard: {
        GuardOutcome g = eval_guard(programs_[static_cast<std::size_t>(pid)], st);
        emit(EventKind::Guard, st, std::nullopt, Value::boolean(g == GuardOutcome::Exit),
             std::nullopt);
        if (g == GuardOutcome::Exit) {
          st.line = in.exit_to;
        } else {
          st.line = in.next;
          if (in.next_bumps_round) ++st.round;
        }
        break;
      }
      case Instr::Op::Exit:
        emit(EventKind::Exit, st, std::nullopt, std::nullopt, std::nullopt);
        st.line = in.next;
        break;
      case Instr::Op::Return:
        emit(EventKind::Return, st, std::nullopt, std::nullopt, std::nullopt);
        st.status = ProcessStatus::Returned;
        break;
    }
  }

  void start_op(ProcessState& st, const Instr& in, OpKind kind, std::optional<Value> arg) {
    RegisterId reg = in.register_id(st);
    OpId id = regs_.invoke(st.pid, reg, kind, arg, clock_);
    emit(EventKind::Invoke, st, reg, kind == OpKind::Write ? arg : std::nullopt, std::nullopt);
    const OperationRecord& rec = regs_.op(id);
    if (cfg_.backend == BackendKind::Atomic) {
      // invoke/commit/respond fused into this decision
      emit(EventKind::Commit, st, reg, rec.kind == OpKind::Read ? rec.returned : rec.argument,
           rec.commit_index);
      emit(EventKind::Respond, st, reg, rec.kind == OpKind::Read ? rec.returned : std::nullopt,
           std::nullopt);
      deliver(st, in, rec.kind == OpKind::Read ? rec.returned : std::nullopt);
    } else {
      st.pending_op = id;
    }
  }

  void respond_op(OpId id, std::optional<InsertionChoice> choice) {
    const OperationRecord& before = regs_.op(id);
    int pid = before.pid;
    RegisterId reg = before.reg;
    OpKind kind = before.kind;
    ProcessState& st = procs_[static_cast<std::size_t>(pid)];
    Value v = regs_.respond(id, choice, clock_);  // IllegalInsertion guards the adversary
    const OperationRecord& rec = regs_.op(id);
    if (cfg_.backend == BackendKind::MerelyLin)
      emit(EventKind::Commit, st, reg, kind == OpKind::Read ? rec.returned : rec.argument,
           rec.commit_index);
    emit(EventKind::Respond, st, reg, kind == OpKind::Read ? std::optional<Value>(v) : std::nullopt,
         std::nullopt);
    const Instr& in = programs_[static_cast<std::size_t>(pid)].at(st.line);
    st.pending_op.reset();
    deliver(st, in, kind == OpKind::Read ? std::optional<Value>(v) : std::nullopt);
  }

  void deliver(ProcessState& st, const Instr& in, std::optional<Value> read_value) {
    if (in.op == Instr::Op::ReadReg && read_value) st.set_local(in.dst, *read_value);
    st.line = in.next;
    if (in.next_bumps_round) ++st.round;
  }

  void emit(EventKind kind, const ProcessState& st, std::optional<RegisterId> reg,
            std::optional<Value> value, std::optional<int> insertion) {
    if (!trace_recording_) return;
    Event e;
    e.clock = clock_;
    e.pid = st.pid;
    e.kind = kind;
    e.reg = reg;
    e.round = st.round;
    e.value = value;
    e.insertion_index = insertion;
    trace_.push_back(e);
  }

  SimConfig cfg_;
  ProgramFamily programs_;
  std::vector<ProcessState> procs_;
  RegisterStore regs_;
  std::vector<Event> trace_;
  std::vector<CoinRecord> coins_;
  long clock_ = 0;
  bool trace_recording_ = true;
  std::mt19937_64 rng_;
};

inline int Observation::n() const { return sim_->config().n; }
inline BackendKind Observation::backend() const { return sim_->config().backend; }
inline long Observation::clock() const { return sim_->clock(); }
inline const ProcessState& Observation::process(int pid) const { return sim_->process(pid); }
inline const std::vector<ProcessState>& Observation::processes() const {
  return sim_->processes();
}
inline const RegisterStore& Observation::registers() const { return sim_->registers(); }
inline std::vector<OpId> Observation::pending_ops() const { return sim_->registers().pending_ops(); }
inline const std::vector<CoinRecord>& Observation::coins() const { return sim_->coins(); }
inline std::vector<LegalInsertion> Observation::legal_insertions(OpId id) const {
  return sim_->registers().legal_insertions(id);
}
inline const Instr* Observation::next_instr(int pid) const { return sim_->next_instr(pid); }
inline std::vector<SchedulerDecision> Observation::enabled_decisions() const {
  return sim_->enabled_decisions();
}

inline Simulation new_simulation(const SimConfig& cfg) { return Simulation(cfg); }

inline Observation observe(const Simulation& sim) { return sim.observe(); }

inline StepOutcome apply(Simulation& sim, const SchedulerDecision& d) { return sim.apply(d); }

inline RunResult run(Simulation& sim, Scheduler& sched, RunLimits limits) {
  return sim.run(sched, limits);
}

inline RunResult run(Simulation& sim, Scheduler& sched) { return sim.run(sched); }

}  // namespace regsim
