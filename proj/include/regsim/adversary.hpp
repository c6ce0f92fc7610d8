#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "regsim/errors.hpp"
#include "regsim/sim.hpp"

namespace regsim {

// Baseline non-adversarial scheduling: a uniformly random enabled decision
// each step; responses on the merely-linearizable backend pick a uniformly
// random legal insertion point. Deterministic given its seed.
class FairScheduler : public Scheduler {
 public:
  explicit FairScheduler(std::uint64_t seed) : rng_(seed) {}

  SchedulerDecision next_decision(const Observation& obs) override {
    buf_ = obs.enabled_decisions();
    if (buf_.empty()) throw SimError("scheduler queried with no enabled decision");
    SchedulerDecision d = buf_[pick(buf_.size())];
    if (d.kind == SchedulerDecision::Kind::RespondOp &&
        obs.backend() == BackendKind::MerelyLin) {
      auto choices = obs.legal_insertions(d.op);
      d.insertion = choices[pick(choices.size())].choice;
    }
    return d;
  }

 private:
  std::size_t pick(std::size_t k) { return static_cast<std::size_t>(rng_() % k); }

  std::mt19937_64 rng_;
  std::vector<SchedulerDecision> buf_;
};

// The strong adversary that keeps every process of the weakener looping
// forever on the merely-linearizable backend. Per round j it lets both
// writers and all checker reads of R1[j] start, completes the write of 0,
// lets process 0 flip and publish its coin, and only then fixes the
// linearization: the write of 1 goes after the write of 0 when the coin is
// 0 and before it when the coin is 1 (a retroactive insertion), with the
// checkers' first reads placed between the two writes. Every checker then
// observes exactly the value pair that defeats the phase-1 exit condition,
// R2[j] is set to true, and the round repeats one index higher.
class WeakenerAdversary : public Scheduler {
 public:
  // Schedule points of one round, in order.
  enum Stage : int {
    kInvokeWrite0,
    kInvokeWrite1,
    kInvokeFirstReads,  // per checker
    kRespondWrite0,
    kStepCoin,
    kRespondCoinWrite,
    kRespondWrite1,      // placement branches on the observed coin
    kRespondFirstReads,  // per checker, between the two writes
    kInvokeSecondReads,  // per checker
    kRespondSecondReads,
    kInvokeCoinReads,
    kRespondCoinReads,
    kStepGuards,  // per checker, all continue
    kInvokeR2Write,
    kRespondR2Write,
    kInvokeRead0,
    kRespondRead0,
    kStepGuard0,
    kInvokeRead1,
    kRespondRead1,
    kStepGuard1,
    kInvokeTrailWrites,  // per checker 3..n-1
    kRespondTrailWrites,
  };

  struct PhaseState {
    long round = 0;
    int stage = kInvokeWrite0;
    int k = 2;  // checker cursor within per-checker stages
    std::optional<int> coin;
  };

  explicit WeakenerAdversary(int n) : n_(n) {
    if (n < 3) throw BadIndex("the adversary needs at least 3 processes");
  }

  const PhaseState& phase() const { return phase_; }

  SchedulerDecision next_decision(const Observation& obs) override {
    if (obs.backend() != BackendKind::MerelyLin)
      throw WrongBackend(
          "this schedule needs retroactive insertions; only the merely-linearizable "
          "backend admits them");
    const RegisterId r1{RegName::R1, phase_.round};
    const RegisterId c1{RegName::C1, phase_.round};
    const RegisterId r2{RegName::R2, phase_.round};
    switch (phase_.stage) {
      case kInvokeWrite0:
        return step_then(obs, 0, kInvokeWrite1);
      case kInvokeWrite1:
        phase_.k = 2;
        return step_then(obs, 1, kInvokeFirstReads);
      case kInvokeFirstReads: {
        int pid = phase_.k;
        if (++phase_.k >= n_) advance(kRespondWrite0);
        return SchedulerDecision::step(pid);
      }
      case kRespondWrite0:
        advance(kStepCoin);
        return SchedulerDecision::respond(pending(obs, 0), append_at(obs, r1));
      case kStepCoin:
        return step_then(obs, 0, kRespondCoinWrite);
      case kRespondCoinWrite:
        phase_.coin = obs.coins().back().outcome;
        advance(kRespondWrite1);
        return SchedulerDecision::respond(pending(obs, 0), append_at(obs, c1));
      case kRespondWrite1: {
        phase_.k = 2;
        advance(kRespondFirstReads);
        // coin = 0: after the write of 0; coin = 1: before it.
        InsertionChoice pos = *phase_.coin == 0 ? append_at(obs, r1) : InsertionChoice{0};
        return SchedulerDecision::respond(pending(obs, 1), pos);
      }
      case kRespondFirstReads: {
        int pid = phase_.k;
        if (++phase_.k >= n_) {
          phase_.k = 2;
          advance(kInvokeSecondReads);
        }
        // Between the writes: immediately before whichever write went second.
        int second_writer = *phase_.coin == 0 ? 1 : 0;
        return SchedulerDecision::respond(pending(obs, pid),
                                          InsertionChoice{index_of_write(obs, r1, second_writer)});
      }
      case kInvokeSecondReads: {
        int pid = phase_.k;
        if (++phase_.k >= n_) {
          phase_.k = 2;
          advance(kRespondSecondReads);
        }
        return SchedulerDecision::step(pid);
      }
      case kRespondSecondReads: {
        int pid = phase_.k;
        if (++phase_.k >= n_) {
          phase_.k = 2;
          advance(kInvokeCoinReads);
        }
        return SchedulerDecision::respond(pending(obs, pid), append_at(obs, r1));
      }
      case kInvokeCoinReads: {
        int pid = phase_.k;
        if (++phase_.k >= n_) {
          phase_.k = 2;
          advance(kRespondCoinReads);
        }
        return SchedulerDecision::step(pid);
      }
      case kRespondCoinReads: {
        int pid = phase_.k;
        if (++phase_.k >= n_) {
          phase_.k = 2;
          advance(kStepGuards);
        }
        return SchedulerDecision::respond(pending(obs, pid), append_at(obs, c1));
      }
      case kStepGuards: {
        int pid = phase_.k;
        if (++phase_.k >= n_) advance(kInvokeR2Write);
        return SchedulerDecision::step(pid);
      }
      case kInvokeR2Write:
        return step_then(obs, 2, kRespondR2Write);
      case kRespondR2Write:
        advance(kInvokeRead0);
        return SchedulerDecision::respond(pending(obs, 2), append_at(obs, r2));
      case kInvokeRead0:
        return step_then(obs, 0, kRespondRead0);
      case kRespondRead0:
        advance(kStepGuard0);
        return SchedulerDecision::respond(pending(obs, 0), append_at(obs, r2));
      case kStepGuard0:
        return step_then(obs, 0, kInvokeRead1);
      case kInvokeRead1:
        return step_then(obs, 1, kRespondRead1);
      case kRespondRead1:
        advance(kStepGuard1);
        return SchedulerDecision::respond(pending(obs, 1), append_at(obs, r2));
      case kStepGuard1:
        phase_.k = 3;
        return step_then(obs, 1, n_ > 3 ? kInvokeTrailWrites : kInvokeWrite0);
      case kInvokeTrailWrites:
        return step_then(obs, phase_.k, kRespondTrailWrites);
      case kRespondTrailWrites: {
        int pid = phase_.k;
        SchedulerDecision d = SchedulerDecision::respond(pending(obs, pid), append_at(obs, r2));
        if (++phase_.k >= n_)
          advance(kInvokeWrite0);
        else
          advance(kInvokeTrailWrites);
        return d;
      }
    }
    throw SimError("adversary reached an unknown stage");
  }

 private:
  // Advance the stage; wrapping to the first stage opens the next round.
  void advance(int stage) {
    if (stage == kInvokeWrite0) {
      ++phase_.round;
      phase_.k = 2;
      phase_.coin.reset();
    }
    phase_.stage = stage;
  }

  SchedulerDecision step_then(const Observation&, int pid, int stage) {
    advance(stage);
    return SchedulerDecision::step(pid);
  }

  static OpId pending(const Observation& obs, int pid) {
    auto id = obs.registers().pending_op_of(pid);
    if (!id) throw SimError("expected a pending operation for process " + std::to_string(pid));
    return *id;
  }

  static InsertionChoice append_at(const Observation& obs, RegisterId reg) {
    const LinearizationLog* log = obs.registers().log(reg);
    return InsertionChoice{log ? static_cast<int>(log->order.size()) : 0};
  }

  static int index_of_write(const Observation& obs, RegisterId reg, int pid) {
    const LinearizationLog* log = obs.registers().log(reg);
    if (!log) throw SimError("no committed log for " + reg.str());
    for (std::size_t i = 0; i < log->order.size(); ++i) {
      const OperationRecord& rec = obs.registers().op(log->order[i]);
      if (rec.kind == OpKind::Write && rec.pid == pid) return static_cast<int>(i);
    }
    throw SimError("no committed write by process " + std::to_string(pid) + " on " + reg.str());
  }

  int n_;
  PhaseState phase_;
};

inline std::unique_ptr<Scheduler> fair_scheduler(std::uint64_t seed) {
  return std::make_unique<FairScheduler>(seed);
}

inline std::unique_ptr<Scheduler> weakener_adversary(int n) {
  return std::make_unique<WeakenerAdversary>(n);
}

}  // namespace regsim
