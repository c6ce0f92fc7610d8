#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "regsim/errors.hpp"
#include "regsim/registers.hpp"
#include "regsim/values.hpp"

namespace regsim {

enum class LocalVar : std::uint8_t { U1, U2, C1, V1 };
enum class ProcessStatus : std::uint8_t { Running, Returned };
enum class GuardKind : std::uint8_t { Phase1, Phase2 };
enum class GuardOutcome : std::uint8_t { Exit, Continue };

// Snapshot of one process: program counter, round, locals, pending op.
struct ProcessState {
  int pid = -1;
  long round = 0;
  int line = 0;
  std::optional<Value> u1, u2, c1, v1;
  ProcessStatus status = ProcessStatus::Running;
  std::optional<OpId> pending_op;

  const std::optional<Value>& local(LocalVar v) const {
    switch (v) {
      case LocalVar::U1:
        return u1;
      case LocalVar::U2:
        return u2;
      case LocalVar::C1:
        return c1;
      case LocalVar::V1:
        return v1;
    }
    return u1;
  }

  void set_local(LocalVar which, Value v) {
    switch (which) {
      case LocalVar::U1:
      case LocalVar::U2:
        if (v != kBot && v != kZero && v != kOne)
          throw DomainError("u1/u2 must be bot, 0 or 1, got " + v.str());
        (which == LocalVar::U1 ? u1 : u2) = v;
        break;
      case LocalVar::C1:
        if (v != kMinusOne && v != kZero && v != kOne)
          throw DomainError("c1 must be -1, 0 or 1, got " + v.str());
        c1 = v;
        break;
      case LocalVar::V1:
        if (!v.is_bool()) throw DomainError("v1 must be a boolean, got " + v.str());
        v1 = v;
        break;
    }
  }
};

// One program line. Successor lines are explicit so loops and exits are
// plain jumps; `next_bumps_round` marks the back edge into the next round.
struct Instr {
  enum class Op : std::uint8_t { WriteReg, CoinWrite, ReadReg, Guard, Exit, Return };
  enum class RegIndex : std::uint8_t { Round, Pid };
  enum class WriteArg : std::uint8_t { Fixed, Pid };

  Op op = Op::Return;
  RegName reg = RegName::R1;
  RegIndex index = RegIndex::Round;
  WriteArg arg_kind = WriteArg::Fixed;
  Value write_arg = kBot;
  LocalVar dst = LocalVar::U1;
  GuardKind guard = GuardKind::Phase1;
  int next = -1;               // successor (guards: taken on Continue)
  bool next_bumps_round = false;
  int exit_to = -1;            // guards: taken on Exit

  RegisterId register_id(const ProcessState& st) const {
    return {reg, index == RegIndex::Round ? st.round : st.pid};
  }
  Value argument(const ProcessState& st) const {
    return arg_kind == WriteArg::Pid ? Value::integer(st.pid) : write_arg;
  }
};

enum class Role : std::uint8_t { Writer, Checker, None };

// An immutable per-process program; all mutable state lives in ProcessState.
struct ProcessProgram {
  Role role = Role::None;
  std::vector<Instr> instrs;

  const Instr& at(int line) const {
    if (line < 0 || static_cast<std::size_t>(line) >= instrs.size())
      throw BadIndex("program counter " + std::to_string(line) + " out of range");
    return instrs[static_cast<std::size_t>(line)];
  }
};

using ProgramFamily = std::vector<ProcessProgram>;

// Inputs of the phase-1 exit condition; domains enforced at construction.
struct GuardInputsP1 {
  Value u1, u2, c1;

  GuardInputsP1(Value u1_, Value u2_, Value c1_) : u1(u1_), u2(u2_), c1(c1_) {
    auto u_ok = [](Value v) { return v == kBot || v == kZero || v == kOne; };
    if (!u_ok(u1) || !u_ok(u2))
      throw DomainError("u1/u2 must be bot, 0 or 1");
    if (c1 != kMinusOne && c1 != kZero && c1 != kOne)
      throw DomainError("c1 must be -1, 0 or 1");
  }
};

// Exit iff u1 != c1 or u2 != 1 - c1. The sentinel `bot` is unequal to every
// integer, and 1 - c1 is plain integer arithmetic (so c1 = -1 gives 2, which
// no u2 can match).
inline GuardOutcome phase1_guard(const GuardInputsP1& g) {
  Value one_minus_c1 = Value::integer(1 - g.c1.as_int());
  bool exit = g.u1 != g.c1 || g.u2 != one_minus_c1;
  return exit ? GuardOutcome::Exit : GuardOutcome::Continue;
}

// Exit iff v1 = false.
inline GuardOutcome phase2_guard(Value v1) {
  if (!v1.is_bool()) throw DomainError("v1 must be a boolean, got " + v1.str());
  return v1 == kFalse ? GuardOutcome::Exit : GuardOutcome::Continue;
}

inline GuardOutcome eval_guard(const ProcessProgram& prog, const ProcessState& st) {
  const Instr& in = prog.at(st.line);
  if (in.op != Instr::Op::Guard) throw SimError("eval_guard at a non-guard line");
  auto need = [&](const std::optional<Value>& v, const char* name) -> Value {
    if (!v) throw SimError(std::string("guard reads unset local ") + name);
    return *v;
  };
  if (in.guard == GuardKind::Phase1)
    return phase1_guard({need(st.u1, "u1"), need(st.u2, "u2"), need(st.c1, "c1")});
  return phase2_guard(need(st.v1, "v1"));
}

// The round-based gadget the simulator studies. Processes 0 and 1 write
// their id into R1[j] (process 0 then writes a coin flip into C1[j]) and
// keep looping while R2[j] reads true. Every other process reads R1[j]
// twice and C1[j] once, exits unless the two reads straddle the two writes
// in the order matching the coin, and otherwise writes true into R2[j].
inline ProcessProgram weakener_program(int i, int n) {
  if (n < 3) throw BadIndex("weakener needs at least 3 processes");
  if (i < 0 || i >= n) throw BadIndex("process id " + std::to_string(i) + " out of range");
  ProcessProgram p;
  auto wr = [](RegName reg, Value arg, int next, bool bump = false) {
    Instr in;
    in.op = Instr::Op::WriteReg;
    in.reg = reg;
    in.write_arg = arg;
    in.next = next;
    in.next_bumps_round = bump;
    return in;
  };
  auto rd = [](RegName reg, LocalVar dst, int next) {
    Instr in;
    in.op = Instr::Op::ReadReg;
    in.reg = reg;
    in.dst = dst;
    in.next = next;
    return in;
  };
  auto guard = [](GuardKind g, int exit_to, int next, bool bump) {
    Instr in;
    in.op = Instr::Op::Guard;
    in.guard = g;
    in.exit_to = exit_to;
    in.next = next;
    in.next_bumps_round = bump;
    return in;
  };
  auto exit_ = [](int next) {
    Instr in;
    in.op = Instr::Op::Exit;
    in.next = next;
    return in;
  };
  auto ret = [] {
    Instr in;
    in.op = Instr::Op::Return;
    return in;
  };
  if (i == 0) {
    p.role = Role::Writer;
    Instr coin;
    coin.op = Instr::Op::CoinWrite;
    coin.reg = RegName::C1;
    coin.next = 2;
    p.instrs = {
        wr(RegName::R1, kZero, 1),                     // 0: R1[j] <- 0
        coin,                                          // 1: C1[j] <- flip coin
        rd(RegName::R2, LocalVar::V1, 3),              // 2: v1 <- R2[j]
        guard(GuardKind::Phase2, 4, 0, true),          // 3: exit iff v1 = false
        exit_(5),                                      // 4: exit for loop
        ret(),                                         // 5: return
    };
  } else if (i == 1) {
    p.role = Role::Writer;
    p.instrs = {
        wr(RegName::R1, kOne, 1),                      // 0: R1[j] <- 1
        rd(RegName::R2, LocalVar::V1, 2),              // 1: v1 <- R2[j]
        guard(GuardKind::Phase2, 3, 0, true),          // 2: exit iff v1 = false
        exit_(4),                                      // 3: exit for loop
        ret(),                                         // 4: return
    };
  } else {
    p.role = Role::Checker;
    p.instrs = {
        rd(RegName::R1, LocalVar::U1, 1),              // 0: u1 <- R1[j]
        rd(RegName::R1, LocalVar::U2, 2),              // 1: u2 <- R1[j]
        rd(RegName::C1, LocalVar::C1, 3),              // 2: c1 <- C1[j]
        guard(GuardKind::Phase1, 5, 4, false),         // 3: exit iff u1 != c1 or u2 != 1-c1
        wr(RegName::R2, kTrue, 0, true),               // 4: R2[j] <- true
        exit_(6),                                      // 5: exit for loop
        ret(),                                         // 6: return
    };
  }
  return p;
}

// A terminating placeholder task: write your id into a scratch register,
// then return.
inline ProcessProgram trivial_program(int i, int n) {
  if (n < 1 || i < 0 || i >= n) throw BadIndex("process id out of range");
  ProcessProgram p;
  p.role = Role::None;
  Instr w;
  w.op = Instr::Op::WriteReg;
  w.reg = RegName::T;
  w.index = Instr::RegIndex::Pid;
  w.arg_kind = Instr::WriteArg::Pid;
  w.next = 1;
  Instr ret;
  ret.op = Instr::Op::Return;
  p.instrs = {w, ret};
  return p;
}

// A program whose entry point is already the return statement.
inline ProcessProgram empty_program() {
  ProcessProgram p;
  Instr ret;
  ret.op = Instr::Op::Return;
  p.instrs = {ret};
  return p;
}

inline ProgramFamily weakener_family(int n) {
  ProgramFamily f;
  for (int i = 0; i < n; ++i) f.push_back(weakener_program(i, n));
  return f;
}

inline ProgramFamily trivial_family(int n) {
  ProgramFamily f;
  for (int i = 0; i < n; ++i) f.push_back(trivial_program(i, n));
  return f;
}

inline ProgramFamily empty_family(int n) {
  return ProgramFamily(static_cast<std::size_t>(n), empty_program());
}

namespace detail {

inline std::set<RegName> registers_used(const ProcessProgram& p) {
  std::set<RegName> out;
  for (const Instr& in : p.instrs)
    if (in.op == Instr::Op::WriteReg || in.op == Instr::Op::CoinWrite ||
        in.op == Instr::Op::ReadReg)
      out.insert(in.reg);
  return out;
}

}  // namespace detail

// Splices two programs: the prefix's single return statement is replaced by
// the main program's entry, so control transfers without an extra step and
// the composed process returns only when main does. Register families of the
// two parts must be disjoint.
inline ProcessProgram compose(const ProcessProgram& prefix, const ProcessProgram& main) {
  int ret_at = -1;
  for (std::size_t i = 0; i < prefix.instrs.size(); ++i) {
    if (prefix.instrs[i].op == Instr::Op::Return) {
      if (ret_at >= 0) throw SimError("compose expects a single return in the prefix");
      ret_at = static_cast<int>(i);
    }
  }
  if (ret_at < 0) throw SimError("prefix has no return statement");
  for (RegName r : detail::registers_used(prefix))
    if (detail::registers_used(main).count(r))
      throw SimError("prefix and main must use disjoint registers");

  const int plen = static_cast<int>(prefix.instrs.size());
  // main pc m maps to the prefix's return slot for m = 0, else past the prefix.
  auto remap = [&](int m) { return m == 0 ? ret_at : plen + m - 1; };
  ProcessProgram out;
  out.role = prefix.role;
  out.instrs = prefix.instrs;
  auto remapped = [&](Instr in) {
    if (in.next >= 0) in.next = remap(in.next);
    if (in.exit_to >= 0) in.exit_to = remap(in.exit_to);
    return in;
  };
  out.instrs[static_cast<std::size_t>(ret_at)] = remapped(main.instrs.at(0));
  for (std::size_t m = 1; m < main.instrs.size(); ++m)
    out.instrs.push_back(remapped(main.instrs[m]));
  return out;
}

inline ProgramFamily compose(const ProgramFamily& prefix, const ProgramFamily& main) {
  if (prefix.size() != main.size())
    throw ArityMismatch("prefix defines " + std::to_string(prefix.size()) +
                        " processes, main " + std::to_string(main.size()));
  ProgramFamily out;
  for (std::size_t i = 0; i < prefix.size(); ++i) out.push_back(compose(prefix[i], main[i]));
  return out;
}

// Family names accepted by SimConfig::program.
inline ProgramFamily program_family(const std::string& name, int n) {
  if (name == "weakener") return weakener_family(n);
  if (name == "trivial") return trivial_family(n);
  if (name == "weakener+trivial") return compose(weakener_family(n), trivial_family(n));
  throw InvalidConfig("unknown program family: " + name);
}

}  // namespace regsim
