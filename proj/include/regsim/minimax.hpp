#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/rational.hpp>

#include "regsim/errors.hpp"
#include "regsim/sim.hpp"

namespace regsim {

using Rational = boost::rational<long long>;

struct MinimaxResult {
  BackendKind backend = BackendKind::Atomic;
  int n = 0;
  long step_bound = 0;
  Rational value{0};
  std::size_t states = 0;  // distinct states evaluated
};

// Decisions needed for every process to finish round 0 plus slack; the game
// below always resolves within this many steps, so the bound only guards
// against runaway (a violation raises SearchBudgetExceeded rather than
// silently truncating the value).
inline long default_minimax_bound(int n, BackendKind backend) {
  long per_op = backend == BackendKind::Atomic ? 1 : backend == BackendKind::StrongLin ? 3 : 2;
  long ops = 3 + 2 + 4L * (n - 2);
  long local_steps = 3L * n;
  return per_op * ops + local_steps + 8L * n;
}

namespace detail {

inline void key_value(std::string& k, const std::optional<Value>& v) {
  if (!v) {
    k += 'n';
    return;
  }
  switch (v->tag()) {
    case Value::Tag::Bot:
      k += 'b';
      break;
    case Value::Tag::Bool:
      k += v->as_bool() ? 'T' : 'F';
      break;
    case Value::Tag::Int:
      k += 'i';
      k += std::to_string(v->as_int());
      break;
  }
  k += ',';
}

// Semantic state only: everything that determines future behaviour. Clock
// values are omitted; their only forward effect, the real-time floor of each
// pending operation, is captured as a log index.
inline std::string state_key(const Simulation& sim) {
  std::string k;
  k.reserve(256);
  const RegisterStore& regs = sim.registers();
  for (const ProcessState& p : sim.processes()) {
    k += p.status == ProcessStatus::Returned ? 'R' : 'r';
    k += std::to_string(p.line);
    k += '@';
    k += std::to_string(p.round);
    k += ':';
    key_value(k, p.u1);
    key_value(k, p.u2);
    key_value(k, p.c1);
    key_value(k, p.v1);
    if (!p.pending_op) {
      k += "-;";
      continue;
    }
    const OperationRecord& rec = regs.op(*p.pending_op);
    k += rec.reg.str();
    k += rec.kind == OpKind::Write ? 'w' : 'r';
    key_value(k, rec.argument);
    k += rec.committed ? 'C' : 'u';
    if (sim.config().backend == BackendKind::MerelyLin) {
      k += std::to_string(regs.insertion_lower_bound(*p.pending_op));
    }
    k += ';';
  }
  for (RegisterId reg : regs.touched_registers()) {
    const LinearizationLog* log = regs.log(reg);
    k += reg.str();
    k += '[';
    for (OpId id : log->order) {
      const OperationRecord& rec = regs.op(id);
      k += std::to_string(rec.pid);
      k += rec.kind == OpKind::Write ? 'w' : 'r';
      key_value(k, rec.argument);
      key_value(k, rec.returned);
    }
    k += ']';
  }
  return k;
}

struct RoundGameSearch {
  long bound;
  std::unordered_map<std::string, Rational> memo;

  Rational value(const Simulation& sim, long depth) {
    if (sim.max_round_entered() >= 1) return Rational(1);
    if (sim.all_returned()) return Rational(0);
    if (depth >= bound)
      throw SearchBudgetExceeded("schedule search passed " + std::to_string(bound) + " steps");
    std::string key = state_key(sim);
    auto hit = memo.find(key);
    if (hit != memo.end()) return hit->second;

    Rational best(0);
    std::vector<SchedulerDecision> decisions;
    sim.enabled_decisions(decisions);
    for (const SchedulerDecision& d : decisions) {
      if (d.kind == SchedulerDecision::Kind::StepProcess) {
        const ProcessState& p = sim.process(d.pid);
        if (p.status == ProcessStatus::Returned) continue;  // NOP steps never help
        const Instr* in = sim.next_instr(d.pid);
        if (in && in->op == Instr::Op::CoinWrite) {
          // Chance node: the adversary schedules the flip, nature resolves it.
          Rational v(0);
          for (int coin : {0, 1}) {
            Simulation next = sim;
            next.apply_with_forced_coin(d, coin);
            v += value(next, depth + 1);
          }
          best = std::max(best, v / 2);
        } else {
          Simulation next = sim;
          next.apply(d);
          best = std::max(best, value(next, depth + 1));
        }
      } else if (sim.config().backend == BackendKind::MerelyLin) {
        for (const LegalInsertion& ins : sim.registers().legal_insertions(d.op)) {
          Simulation next = sim;
          next.apply(SchedulerDecision::respond(d.op, ins.choice));
          best = std::max(best, value(next, depth + 1));
        }
      } else {
        Simulation next = sim;
        next.apply(d);
        best = std::max(best, value(next, depth + 1));
      }
      if (best == Rational(1)) break;
    }
    memo.emplace(std::move(key), best);
    return best;
  }
};

}  // namespace detail

// Exhaustive game value of round 0: the highest probability, over every
// adversary decision tree (coin flips weighted 1/2 each), that some process
// enters round 1. Exact rational arithmetic.
inline MinimaxResult minimax_round_value(int n, BackendKind backend,
                                         std::optional<long> step_bound = std::nullopt) {
  SimConfig cfg;
  cfg.n = n;
  cfg.backend = backend;
  cfg.seed = 0;
  cfg.program = "weakener";
  Simulation root(cfg);
  root.set_trace_recording(false);
  detail::RoundGameSearch search{step_bound ? *step_bound : default_minimax_bound(n, backend), {}};
  MinimaxResult res;
  res.backend = backend;
  res.n = n;
  res.step_bound = search.bound;
  res.value = search.value(root, 0);
  res.states = search.memo.size();
  return res;
}

}  // namespace regsim
