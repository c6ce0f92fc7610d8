#include "regsim/sim.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "regsim/adversary.hpp"
#include "regsim/errors.hpp"
#include "regsim/histories.hpp"
#include "regsim/trace.hpp"

namespace regsim {
namespace {

SimConfig config(int n, BackendKind backend, std::uint64_t seed) {
  SimConfig c;
  c.n = n;
  c.backend = backend;
  c.seed = seed;
  return c;
}

TEST(NewSimulation, FreshStateAtClockZero) {
  Simulation sim(config(3, BackendKind::Atomic, 0));
  EXPECT_EQ(sim.clock(), 0);
  EXPECT_TRUE(sim.trace().empty());
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(sim.process(i).status, ProcessStatus::Running);
    EXPECT_EQ(sim.process(i).round, 0);
    EXPECT_EQ(sim.process(i).line, 0);
  }
}

TEST(NewSimulation, TooFewProcessesRejected) {
  EXPECT_THROW(Simulation{config(2, BackendKind::Atomic, 0)}, InvalidConfig);
  SimConfig c = config(3, BackendKind::Atomic, 0);
  c.steps_cap = 0;
  EXPECT_THROW(Simulation{c}, InvalidConfig);
}

TEST(NewSimulation, RegistersStartAtInitialValues) {
  Simulation sim(config(8, BackendKind::MerelyLin, 7));
  EXPECT_EQ(sim.registers().current_value({RegName::R1, 0}), kBot);
  EXPECT_EQ(sim.registers().current_value({RegName::C1, 0}), kMinusOne);
  EXPECT_EQ(sim.registers().current_value({RegName::R2, 0}), kFalse);
}

TEST(Observe, PureAndCoinAware) {
  Simulation sim(config(3, BackendKind::Atomic, 42));
  Observation a = sim.observe();
  EXPECT_TRUE(a.coins().empty());
  Observation b = sim.observe();
  EXPECT_EQ(a.clock(), b.clock());
  EXPECT_EQ(sim.trace().size(), 0u);

  sim.apply(SchedulerDecision::step(0));  // write R1[0]
  sim.apply(SchedulerDecision::step(0));  // flip coin, write C1[0]
  Observation c = sim.observe();
  ASSERT_EQ(c.coins().size(), 1u);
  EXPECT_EQ(c.coins()[0].pid, 0);
  EXPECT_TRUE(c.coins()[0].outcome == 0 || c.coins()[0].outcome == 1);
}

TEST(Apply, FirstWriterStepInvokesWriteOfZero) {
  Simulation sim(config(3, BackendKind::MerelyLin, 0));
  StepOutcome out = sim.apply(SchedulerDecision::step(0));
  ASSERT_EQ(out.event_count, 1u);
  const Event& e = sim.trace()[out.first_event];
  EXPECT_EQ(e.kind, EventKind::Invoke);
  EXPECT_EQ(e.pid, 0);
  EXPECT_EQ(e.reg, (RegisterId{RegName::R1, 0}));
  EXPECT_EQ(e.value, kZero);
  EXPECT_EQ(e.round, 0);
  EXPECT_EQ(sim.clock(), 1);
}

TEST(Apply, RespondDeliversAndAppendsToLog) {
  Simulation sim(config(3, BackendKind::MerelyLin, 0));
  sim.apply(SchedulerDecision::step(0));
  OpId w = *sim.process(0).pending_op;
  StepOutcome out = sim.apply(SchedulerDecision::respond(w, InsertionChoice{0}));
  ASSERT_EQ(out.event_count, 2u);  // commit + respond
  EXPECT_EQ(sim.trace()[out.first_event].kind, EventKind::Commit);
  EXPECT_EQ(sim.trace()[out.first_event].insertion_index, 0);
  const Event& resp = sim.trace()[out.first_event + 1];
  EXPECT_EQ(resp.kind, EventKind::Respond);
  EXPECT_FALSE(resp.value.has_value());  // write responses carry no value
  ASSERT_NE(sim.registers().log({RegName::R1, 0}), nullptr);
  EXPECT_EQ(sim.registers().log({RegName::R1, 0})->order.size(), 1u);
  EXPECT_FALSE(sim.process(0).pending_op.has_value());
  EXPECT_EQ(sim.process(0).line, 1);  // moved on to the coin line
}

TEST(Apply, AtomicFusesInvokeCommitRespond) {
  Simulation sim(config(3, BackendKind::Atomic, 0));
  StepOutcome out = sim.apply(SchedulerDecision::step(1));
  ASSERT_EQ(out.event_count, 3u);
  EXPECT_EQ(sim.trace()[out.first_event].kind, EventKind::Invoke);
  EXPECT_EQ(sim.trace()[out.first_event + 1].kind, EventKind::Commit);
  EXPECT_EQ(sim.trace()[out.first_event + 2].kind, EventKind::Respond);
  EXPECT_FALSE(sim.process(1).pending_op.has_value());
}

TEST(Apply, ReturnedProcessStepsAreNops) {
  Simulation sim(config(3, BackendKind::Atomic, 1));
  // march the checker p2 to its return: u1 read sees bot, guard exits
  for (int i = 0; i < 6; ++i) sim.apply(SchedulerDecision::step(2));
  ASSERT_EQ(sim.process(2).status, ProcessStatus::Returned);
  StepOutcome out = sim.apply(SchedulerDecision::step(2));
  ASSERT_EQ(out.event_count, 1u);
  EXPECT_EQ(sim.trace()[out.first_event].kind, EventKind::Nop);
}

TEST(Apply, DisabledDecisionsRejected) {
  Simulation sim(config(3, BackendKind::MerelyLin, 0));
  EXPECT_THROW(sim.apply(SchedulerDecision::step(5)), DisabledDecision);
  EXPECT_THROW(sim.apply(SchedulerDecision::respond(0, InsertionChoice{0})), DisabledDecision);
  sim.apply(SchedulerDecision::step(0));
  // blocked awaiting a response: no internal step on this backend
  EXPECT_THROW(sim.apply(SchedulerDecision::step(0)), DisabledDecision);
  OpId w = *sim.process(0).pending_op;
  // merely-linearizable responses need an insertion point
  EXPECT_THROW(sim.apply(SchedulerDecision::respond(w)), DisabledDecision);
}

TEST(Apply, StrongLinInternalStepCommits) {
  Simulation sim(config(3, BackendKind::StrongLin, 0));
  sim.apply(SchedulerDecision::step(0));
  OpId w = *sim.process(0).pending_op;
  EXPECT_FALSE(sim.registers().op(w).committed);
  // respond before commit is not enabled
  EXPECT_THROW(sim.apply(SchedulerDecision::respond(w)), DisabledDecision);
  StepOutcome out = sim.apply(SchedulerDecision::step(0));  // internal step
  ASSERT_EQ(out.event_count, 1u);
  EXPECT_EQ(sim.trace()[out.first_event].kind, EventKind::Commit);
  EXPECT_TRUE(sim.registers().op(w).committed);
  // a second internal step is not enabled; the response is
  EXPECT_THROW(sim.apply(SchedulerDecision::step(0)), DisabledDecision);
  sim.apply(SchedulerDecision::respond(w));
  EXPECT_EQ(sim.process(0).line, 1);
}

TEST(Run, StepsCapZeroGivesEmptyRun) {
  Simulation sim(config(3, BackendKind::StrongLin, 3));
  FairScheduler sched(1);
  RunResult r = sim.run(sched, RunLimits{0, std::nullopt});
  EXPECT_EQ(r.stop, StopReason::StepsExhausted);
  EXPECT_TRUE(r.trace.empty());
  for (ProcessStatus s : r.statuses) EXPECT_EQ(s, ProcessStatus::Running);
}

TEST(Run, FairStrongLinTerminates) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Simulation sim(config(3, BackendKind::StrongLin, seed));
    FairScheduler sched(seed + 100);
    RunResult r = sim.run(sched, RunLimits{200000, std::nullopt});
    EXPECT_EQ(r.stop, StopReason::AllReturned) << "seed " << seed;
    EXPECT_TRUE(r.all_returned());
  }
}

TEST(Run, RoundsCapStopsNonTerminatingRuns) {
  Simulation sim(config(3, BackendKind::MerelyLin, 5));
  WeakenerAdversary adv(3);
  RunResult r = sim.run(adv, RunLimits{100000, 3});
  EXPECT_EQ(r.stop, StopReason::RoundsCapped);
  EXPECT_FALSE(r.all_returned());
  EXPECT_EQ(sim.max_round_entered(), 3);
}

// Replaying a recorded decision sequence on a fresh simulation with the same
// config reproduces the trace bit for bit.
TEST(Determinism, ReplayedDecisionsReproduceTrace) {
  struct Recorder : Scheduler {
    FairScheduler inner{99};
    std::vector<SchedulerDecision> decisions;
    SchedulerDecision next_decision(const Observation& obs) override {
      SchedulerDecision d = inner.next_decision(obs);
      decisions.push_back(d);
      return d;
    }
  };
  for (BackendKind backend :
       {BackendKind::Atomic, BackendKind::StrongLin, BackendKind::MerelyLin}) {
    Simulation first(config(4, backend, 11));
    Recorder rec;
    RunResult r1 = first.run(rec, RunLimits{5000, 2});
    Simulation second(config(4, backend, 11));
    for (const SchedulerDecision& d : rec.decisions) second.apply(d);
    EXPECT_EQ(export_trace(r1.trace), export_trace(second.trace()));
  }
}

TEST(Determinism, ClockAdvancesOncePerDecisionAndEventsCarryIt) {
  Simulation sim(config(3, BackendKind::StrongLin, 2));
  FairScheduler sched(7);
  RunResult r = sim.run(sched, RunLimits{3000, std::nullopt});
  long decisions = r.decisions;
  EXPECT_EQ(sim.clock(), decisions);
  long last = -1;
  for (const Event& e : r.trace) {
    EXPECT_GE(e.clock, last);  // same-decision events share a clock
    last = e.clock;
    EXPECT_LT(e.clock, decisions);
  }
}

TEST(Coins, OnlyProcessZeroFlips) {
  for (BackendKind backend :
       {BackendKind::Atomic, BackendKind::StrongLin, BackendKind::MerelyLin}) {
    Simulation sim(config(4, backend, 13));
    FairScheduler sched(13);
    RunResult r = sim.run(sched, RunLimits{4000, 2});
    for (const Event& e : r.trace)
      if (e.kind == EventKind::Coin) EXPECT_EQ(e.pid, 0);
    for (const CoinRecord& c : sim.coins()) EXPECT_EQ(c.pid, 0);
  }
}

// Reference interpreter of the two roles' control flow: checks that each
// process's visible step sequence follows its program line by line, with
// guard outcomes steering exits and round advances.
void check_line_order(const std::vector<Event>& trace, int n) {
  for (int pid = 0; pid < n; ++pid) {
    std::vector<Event> steps;
    for (const Event& e : trace) {
      if (e.pid != pid) continue;
      if (e.kind == EventKind::Invoke || e.kind == EventKind::Coin ||
          e.kind == EventKind::Guard || e.kind == EventKind::Exit ||
          e.kind == EventKind::Return)
        steps.push_back(e);
    }
    std::size_t i = 0;
    long j = 0;
    bool done = false;
    // returns false once the trace is exhausted (truncated run)
    auto expect_invoke = [&](RegName reg, std::optional<Value> arg) {
      if (i >= steps.size()) return false;
      const Event& e = steps[i++];
      EXPECT_EQ(e.kind, EventKind::Invoke) << "pid " << pid << " step " << i;
      if (!e.reg) {
        ADD_FAILURE() << "invoke without a register, pid " << pid;
        return true;
      }
      EXPECT_EQ(e.reg->name, reg);
      EXPECT_EQ(e.reg->index, j);
      EXPECT_EQ(e.round, j);
      if (arg) EXPECT_EQ(e.value, arg);
      return true;
    };
    auto expect_kind = [&](EventKind k) -> const Event* {
      if (i >= steps.size()) return nullptr;
      const Event& e = steps[i++];
      EXPECT_EQ(e.kind, k) << "pid " << pid << " step " << i;
      return &e;
    };
    while (!done) {
      if (pid <= 1) {
        if (!expect_invoke(RegName::R1, Value::integer(pid))) break;
        if (pid == 0) {
          if (!expect_kind(EventKind::Coin)) break;
          if (!expect_invoke(RegName::C1, std::nullopt)) break;
        }
        if (!expect_invoke(RegName::R2, std::nullopt)) break;
        const Event* g = expect_kind(EventKind::Guard);
        if (!g) break;
        if (g->value == kTrue) {
          if (expect_kind(EventKind::Exit)) expect_kind(EventKind::Return);
          done = true;
        } else {
          ++j;
        }
      } else {
        if (!expect_invoke(RegName::R1, std::nullopt)) break;
        if (!expect_invoke(RegName::R1, std::nullopt)) break;
        if (!expect_invoke(RegName::C1, std::nullopt)) break;
        const Event* g = expect_kind(EventKind::Guard);
        if (!g) break;
        if (g->value == kTrue) {
          if (expect_kind(EventKind::Exit)) expect_kind(EventKind::Return);
          done = true;
        } else {
          if (!expect_invoke(RegName::R2, kTrue)) break;
          ++j;
        }
      }
    }
    if (done) EXPECT_EQ(i, steps.size()) << "pid " << pid << " has trailing steps";
  }
}

TEST(LineOrder, TraceFollowsProgramOrderUnderEveryBackend) {
  for (BackendKind backend :
       {BackendKind::Atomic, BackendKind::StrongLin, BackendKind::MerelyLin}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Simulation sim(config(4, backend, seed));
      FairScheduler sched(seed * 31 + 1);
      RunResult r = sim.run(sched, RunLimits{6000, 3});
      check_line_order(r.trace, 4);
    }
  }
}

// Atomic registers expose a single total write order per round: a checker
// can read (0 then 1) only if the write of 0 went first, and two checkers
// can never disagree on the order.
TEST(Backends, AtomicRoundsAgreeOnWriteOrder) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Simulation sim(config(5, BackendKind::Atomic, seed));
    FairScheduler sched(seed * 7 + 3);
    sim.run(sched, RunLimits{50000, 4});
    std::map<long, std::vector<std::pair<Value, Value>>> straddles;  // round -> (u1, u2)
    std::map<int, std::vector<Value>> open_reads;                    // pid -> r1 reads so far
    for (const Event& e : sim.trace()) {
      if (e.pid < 2 || e.kind != EventKind::Respond || !e.reg || e.reg->name != RegName::R1)
        continue;
      auto& reads = open_reads[e.pid];
      reads.push_back(*e.value);
      if (reads.size() == 2) {
        straddles[e.round].push_back({reads[0], reads[1]});
        reads.clear();
      }
    }
    for (const auto& [round, pairs] : straddles) {
      bool saw01 = false, saw10 = false;
      for (auto [u1, u2] : pairs) {
        if (u1 == kZero && u2 == kOne) saw01 = true;
        if (u1 == kOne && u2 == kZero) saw10 = true;
      }
      EXPECT_FALSE(saw01 && saw10) << "round " << round << " seed " << seed;
      if (saw01) {
        const LinearizationLog* log = sim.registers().log({RegName::R1, round});
        ASSERT_NE(log, nullptr);
        int first_write_pid = -1;
        for (OpId id : log->order)
          if (sim.registers().op(id).kind == OpKind::Write) {
            first_write_pid = sim.registers().op(id).pid;
            break;
          }
        EXPECT_EQ(first_write_pid, 0) << "round " << round << " seed " << seed;
      }
    }
  }
}

// The snapshot history replayed from a trace's commit events matches the
// snapshot history the backend recorded, register by register.
TEST(TraceReplay, CommitSnapshotsMatchBackendSnapshots) {
  for (BackendKind backend :
       {BackendKind::Atomic, BackendKind::StrongLin, BackendKind::MerelyLin}) {
    Simulation sim(config(4, backend, 21));
    FairScheduler sched(22);
    RunResult r = sim.run(sched, RunLimits{20000, 3});
    History h = History::from_events(r.trace);
    for (RegisterId reg : sim.registers().touched_registers()) {
      const auto& native = sim.registers().log(reg)->snapshots;
      auto it = h.commit_snapshots().find(reg);
      ASSERT_NE(it, h.commit_snapshots().end()) << reg.str();
      const auto& replayed = it->second;
      ASSERT_EQ(native.size(), replayed.size()) << reg.str();
      for (std::size_t s = 0; s < native.size(); ++s) {
        ASSERT_EQ(native[s].size(), replayed[s].size());
        for (std::size_t k = 0; k < native[s].size(); ++k) {
          const OperationRecord& a = sim.registers().op(native[s][k]);
          const HistOp& b = h.op(replayed[s][k]);
          EXPECT_EQ(a.pid, b.pid);
          EXPECT_EQ(a.kind, b.kind);
        }
      }
    }
  }
}

// Writers only move past a round whose R2 register someone started writing,
// under every backend and scheduler.
TEST(Run, WriterRoundEntryRequiresR2Invocation) {
  for (BackendKind backend :
       {BackendKind::Atomic, BackendKind::StrongLin, BackendKind::MerelyLin}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Simulation sim(config(3, backend, seed));
      FairScheduler sched(seed + 5);
      RunResult r = sim.run(sched, RunLimits{30000, 5});
      std::set<long> r2_invoked;
      std::set<long> writer_rounds;
      for (const Event& e : r.trace) {
        if (e.kind == EventKind::Invoke && e.reg && e.reg->name == RegName::R2 && e.value)
          r2_invoked.insert(e.reg->index);
        if (e.pid <= 1) writer_rounds.insert(e.round);
      }
      for (long round : writer_rounds)
        if (round >= 1)
          EXPECT_TRUE(r2_invoked.count(round - 1))
              << "backend " << backend_kind_str(backend) << " seed " << seed;
    }
  }
}

// With zero internal latency a strongly-linearizable run is indistinguishable
// from an atomic one: matched schedules produce identical logs and states.
TEST(Backends, StrongLinWithZeroLatencyMatchesAtomic) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::uint64_t seed = rng();
    Simulation atomic(config(4, BackendKind::Atomic, seed));
    Simulation strong(config(4, BackendKind::StrongLin, seed));
    for (int macro = 0; macro < 400 && !atomic.all_returned(); ++macro) {
      int pid = static_cast<int>(rng() % 4);
      atomic.apply(SchedulerDecision::step(pid));
      strong.apply(SchedulerDecision::step(pid));
      if (strong.process(pid).pending_op) {
        OpId id = *strong.process(pid).pending_op;
        strong.apply(SchedulerDecision::step(pid));  // commit
        strong.apply(SchedulerDecision::respond(id));
      }
    }
    ASSERT_TRUE(atomic.all_returned());
    ASSERT_TRUE(strong.all_returned());
    for (int pid = 0; pid < 4; ++pid) {
      EXPECT_EQ(atomic.process(pid).round, strong.process(pid).round);
      EXPECT_EQ(atomic.process(pid).u1, strong.process(pid).u1);
      EXPECT_EQ(atomic.process(pid).u2, strong.process(pid).u2);
      EXPECT_EQ(atomic.process(pid).c1, strong.process(pid).c1);
      EXPECT_EQ(atomic.process(pid).v1, strong.process(pid).v1);
    }
    auto regs_a = atomic.registers().touched_registers();
    auto regs_s = strong.registers().touched_registers();
    ASSERT_EQ(regs_a.size(), regs_s.size());
    for (std::size_t k = 0; k < regs_a.size(); ++k) {
      EXPECT_EQ(regs_a[k], regs_s[k]);
      const auto* la = atomic.registers().log(regs_a[k]);
      const auto* ls = strong.registers().log(regs_s[k]);
      ASSERT_EQ(la->order.size(), ls->order.size());
      for (std::size_t x = 0; x < la->order.size(); ++x) {
        const auto& oa = atomic.registers().op(la->order[x]);
        const auto& os = strong.registers().op(ls->order[x]);
        EXPECT_EQ(oa.pid, os.pid);
        EXPECT_EQ(oa.kind, os.kind);
        EXPECT_EQ(oa.argument, os.argument);
        EXPECT_EQ(oa.returned, os.returned);
      }
    }
  }
}

}  // namespace
}  // namespace regsim
