#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "regsim/errors.hpp"
#include "regsim/values.hpp"

namespace regsim {

// Register consistency backends.
//
//   Atomic:    operations take effect instantaneously; invoke, commit and
//              response are fused into the invoking decision.
//   StrongLin: the linearization order is fixed prospectively. An operation
//              commits (is appended to the log, value fixed) at its first
//              internal step after invocation and responds at a later
//              decision. The log is append-only.
//   MerelyLin: commitment is deferred to the response, and the responder
//              chooses the operation's position in the committed log. Any
//              placement that keeps the log a valid linearization is
//              accepted; this is what gives a strong adversary retroactive
//              control over the order.
enum class BackendKind : std::uint8_t { Atomic, StrongLin, MerelyLin };

inline std::string backend_kind_str(BackendKind k) {
  switch (k) {
    case BackendKind::Atomic:
      return "atomic";
    case BackendKind::StrongLin:
      return "strong";
    case BackendKind::MerelyLin:
      return "linearizable";
  }
  return "?";
}

inline std::optional<BackendKind> parse_backend_kind(const std::string& s) {
  if (s == "atomic") return BackendKind::Atomic;
  if (s == "strong") return BackendKind::StrongLin;
  if (s == "linearizable") return BackendKind::MerelyLin;
  return std::nullopt;
}

enum class OpKind : std::uint8_t { Read, Write };

using OpId = long;

// Lifecycle record of one register operation.
struct OperationRecord {
  OpId id = -1;
  int pid = -1;
  RegisterId reg;
  OpKind kind = OpKind::Read;
  std::optional<Value> argument;  // writes only
  long invoked_at = -1;
  std::optional<long> responded_at;
  std::optional<Value> returned;    // reads: fixed when the op commits
  std::optional<int> commit_index;  // log position at commit time
  bool committed = false;
  bool pending = false;  // invoked, not yet responded
};

// Position in a register's committed log: 0 inserts before every committed
// operation, size() appends.
struct InsertionChoice {
  int position = 0;
  friend bool operator==(InsertionChoice a, InsertionChoice b) { return a.position == b.position; }
};

// An insertion point the backend will accept, together with the value a
// read would return there.
struct LegalInsertion {
  InsertionChoice choice;
  std::optional<Value> read_value;  // reads only
};

// Committed sequential order of one register plus the history of log states
// after each commit. The snapshot sequence is what the prefix-property
// checker consumes.
struct LinearizationLog {
  RegisterId reg;
  std::vector<OpId> order;
  std::vector<std::vector<OpId>> snapshots;
};

// All register state owned by one simulation: operation records, per-register
// committed logs, and the per-process pending operation.
class RegisterStore {
 public:
  explicit RegisterStore(BackendKind kind, int nprocs) : kind_(kind), pending_of_(nprocs, -1) {}

  BackendKind backend() const { return kind_; }

  const OperationRecord& op(OpId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= records_.size())
      throw UnknownOp("no operation with id " + std::to_string(id));
    return records_[static_cast<std::size_t>(id)];
  }

  // Invokes a register operation for `pid`. Atomic backend: the operation
  // commits and responds within this call; otherwise it is left pending.
  OpId invoke(int pid, RegisterId reg, OpKind kind, std::optional<Value> argument, long clock) {
    if (pending_of_.at(static_cast<std::size_t>(pid)) >= 0)
      throw PendingOpExists("process " + std::to_string(pid) +
                            " already has a pending operation");
    if (kind == OpKind::Write) {
      if (!argument) throw SimError("write invoked without an argument on " + reg.str());
      check_write_domain(reg, *argument);
    }
    OperationRecord rec;
    rec.id = static_cast<OpId>(records_.size());
    rec.pid = pid;
    rec.reg = reg;
    rec.kind = kind;
    rec.argument = kind == OpKind::Write ? argument : std::nullopt;
    rec.invoked_at = clock;
    rec.pending = true;
    records_.push_back(rec);
    pending_order_.push_back(rec.id);
    pending_of_[static_cast<std::size_t>(pid)] = rec.id;
    if (kind_ == BackendKind::Atomic) {
      commit_append(records_.back());
      finish_response(records_.back(), clock);
    }
    return rec.id;
  }

  // Every log position at which the pending operation could commit without
  // breaking linearizability, with the value a read would return there.
  // Position lower bound comes from real-time order: the op cannot be placed
  // before any committed op that responded before this op was invoked.
  // A write additionally must not change which write most recently precedes
  // any committed read. MerelyLin only.
  std::vector<LegalInsertion> legal_insertions(OpId id) const {
    if (kind_ != BackendKind::MerelyLin)
      throw WrongBackend("legal_insertions applies to the merely-linearizable backend");
    const OperationRecord& rec = op(id);
    if (!rec.pending) throw NotPending("operation " + std::to_string(id) + " is not pending");
    const LinearizationLog& log = log_for(rec.reg);
    int lb = insertion_lower_bound(rec, log);
    std::vector<LegalInsertion> out;
    const int len = static_cast<int>(log.order.size());
    for (int pos = lb; pos <= len; ++pos) {
      if (rec.kind == OpKind::Read) {
        out.push_back({InsertionChoice{pos}, value_before(log, pos)});
      } else if (write_insertion_legal(log, pos)) {
        out.push_back({InsertionChoice{pos}, std::nullopt});
      }
    }
    return out;
  }

  int insertion_lower_bound(OpId id) const {
    const OperationRecord& rec = op(id);
    return insertion_lower_bound(rec, log_for(rec.reg));
  }

  // StrongLin commit: appends the pending operation to its register's log and
  // fixes a read's value. The operation stays pending until it responds.
  int advance_internal(OpId id) {
    if (kind_ != BackendKind::StrongLin)
      throw WrongBackend("advance_internal applies to the strongly-linearizable backend");
    OperationRecord& rec = mutable_op(id);
    if (!rec.pending) throw NotPending("operation " + std::to_string(id) + " is not pending");
    if (rec.committed)
      throw AlreadyCommitted("operation " + std::to_string(id) + " is already committed");
    return commit_append(rec);
  }

  // Responds the pending operation and returns the delivered value (a read's
  // fixed value; writes return their argument). MerelyLin requires an
  // insertion choice and commits there; StrongLin requires the operation to
  // be already committed and no choice.
  Value respond(OpId id, std::optional<InsertionChoice> choice, long clock) {
    if (kind_ == BackendKind::Atomic)
      throw WrongBackend("atomic operations respond within their invoking decision");
    OperationRecord& rec = mutable_op(id);
    if (!rec.pending) throw NotPending("operation " + std::to_string(id) + " is not pending");
    if (kind_ == BackendKind::StrongLin) {
      if (choice)
        throw IllegalInsertion("the strongly-linearizable backend fixes positions at commit");
      if (!rec.committed)
        throw NotPending("operation " + std::to_string(id) + " has not committed yet");
    } else {
      if (!choice) throw IllegalInsertion("merely-linearizable response needs an insertion point");
      commit_at(rec, choice->position);
    }
    return finish_response(rec, clock);
  }

  bool has_pending(int pid) const { return pending_of_.at(static_cast<std::size_t>(pid)) >= 0; }

  std::optional<OpId> pending_op_of(int pid) const {
    OpId id = pending_of_.at(static_cast<std::size_t>(pid));
    return id >= 0 ? std::optional<OpId>(id) : std::nullopt;
  }

  // Pending operation ids in invocation order.
  std::vector<OpId> pending_ops() const {
    std::vector<OpId> out;
    for (OpId id : pending_order_)
      if (records_[static_cast<std::size_t>(id)].pending) out.push_back(id);
    return out;
  }

  // Last committed write's argument, or the register's initial value.
  Value current_value(RegisterId reg) const {
    auto it = logs_.find(reg);
    if (it == logs_.end()) return initial_value(reg);
    return value_before(it->second, static_cast<int>(it->second.order.size()));
  }

  const LinearizationLog* log(RegisterId reg) const {
    auto it = logs_.find(reg);
    return it == logs_.end() ? nullptr : &it->second;
  }

  std::vector<RegisterId> touched_registers() const {
    std::vector<RegisterId> out;
    out.reserve(logs_.size());
    for (const auto& [reg, lg] : logs_) out.push_back(reg);
    return out;
  }

  std::size_t op_count() const { return records_.size(); }

 private:
  // R1[j] and C1[j] take 0 or 1, R2[j] only true, T[k] any integer.
  static void check_write_domain(RegisterId reg, Value arg) {
    bool ok = true;
    switch (reg.name) {
      case RegName::R1:
      case RegName::C1:
        ok = arg == kZero || arg == kOne;
        break;
      case RegName::R2:
        ok = arg == kTrue;
        break;
      case RegName::T:
        ok = arg.is_int();
        break;
    }
    if (!ok) throw DomainError("cannot write " + arg.str() + " into " + reg.str());
  }

  OperationRecord& mutable_op(OpId id) {
    return const_cast<OperationRecord&>(static_cast<const RegisterStore*>(this)->op(id));
  }

  const LinearizationLog& log_for(RegisterId reg) const {
    auto it = logs_.find(reg);
    if (it != logs_.end()) return it->second;
    static const LinearizationLog empty{};
    return empty;
  }

  LinearizationLog& materialize(RegisterId reg) {
    auto it = logs_.find(reg);
    if (it == logs_.end()) {
      it = logs_.emplace(reg, LinearizationLog{reg, {}, {}}).first;
    }
    return it->second;
  }

  // Value a read would return if linearized just before `pos`.
  Value value_before(const LinearizationLog& log, int pos) const {
    for (int i = pos - 1; i >= 0; --i) {
      const OperationRecord& r = records_[static_cast<std::size_t>(log.order[i])];
      if (r.kind == OpKind::Write) return *r.argument;
    }
    return initial_value(log.reg);
  }

  int insertion_lower_bound(const OperationRecord& rec, const LinearizationLog& log) const {
    int lb = 0;
    for (int i = 0; i < static_cast<int>(log.order.size()); ++i) {
      const OperationRecord& c = records_[static_cast<std::size_t>(log.order[i])];
      if (c.responded_at && *c.responded_at < rec.invoked_at) lb = i + 1;
    }
    return lb;
  }

  // A write may land at `pos` only if it does not become the most recent
  // preceding write of any committed read.
  bool write_insertion_legal(const LinearizationLog& log, int pos) const {
    for (int q = pos; q < static_cast<int>(log.order.size()); ++q) {
      const OperationRecord& r = records_[static_cast<std::size_t>(log.order[q])];
      if (r.kind != OpKind::Read) continue;
      bool shielded = false;
      for (int i = pos; i < q; ++i) {
        if (records_[static_cast<std::size_t>(log.order[i])].kind == OpKind::Write) {
          shielded = true;
          break;
        }
      }
      if (!shielded) return false;
    }
    return true;
  }

  int commit_append(OperationRecord& rec) {
    LinearizationLog& log = materialize(rec.reg);
    return do_commit(rec, log, static_cast<int>(log.order.size()));
  }

  void commit_at(OperationRecord& rec, int pos) {
    LinearizationLog& log = materialize(rec.reg);
    const int len = static_cast<int>(log.order.size());
    if (pos < 0 || pos > len)
      throw IllegalInsertion("position " + std::to_string(pos) + " outside [0, " +
                             std::to_string(len) + "] on " + rec.reg.str());
    if (pos < insertion_lower_bound(rec, log))
      throw IllegalInsertion("position " + std::to_string(pos) +
                             " violates real-time order on " + rec.reg.str());
    if (rec.kind == OpKind::Write && !write_insertion_legal(log, pos))
      throw IllegalInsertion("write at position " + std::to_string(pos) +
                             " would change a committed read on " + rec.reg.str());
    do_commit(rec, log, pos);
  }

  int do_commit(OperationRecord& rec, LinearizationLog& log, int pos) {
    if (rec.kind == OpKind::Read) rec.returned = value_before(log, pos);
    log.order.insert(log.order.begin() + pos, rec.id);
    log.snapshots.push_back(log.order);
    rec.committed = true;
    rec.commit_index = pos;
    return pos;
  }

  Value finish_response(OperationRecord& rec, long clock) {
    rec.responded_at = clock;
    rec.pending = false;
    pending_of_[static_cast<std::size_t>(rec.pid)] = -1;
    return rec.kind == OpKind::Read ? *rec.returned : *rec.argument;
  }

  BackendKind kind_;
  std::vector<OperationRecord> records_;
  std::vector<OpId> pending_order_;
  std::vector<OpId> pending_of_;  // per pid, -1 if none
  std::map<RegisterId, LinearizationLog> logs_;
};

}  // namespace regsim
