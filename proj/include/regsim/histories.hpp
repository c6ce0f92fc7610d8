#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "regsim/errors.hpp"
#include "regsim/registers.hpp"
#include "regsim/trace.hpp"
#include "regsim/values.hpp"

namespace regsim {

// One register operation reconstructed from a trace.
struct HistOp {
  int id = -1;  // index into History::ops()
  int pid = -1;
  RegisterId reg;
  OpKind kind = OpKind::Read;
  std::optional<Value> argument;  // writes
  std::optional<Value> returned;  // reads, once known
  long invoked_at = -1;
  std::optional<long> responded_at;
  bool committed = false;

  bool is_pending() const { return !responded_at.has_value(); }
};

// A complete recorded history: the raw event list plus the per-register
// operation subhistories derived from it. Operations are recovered by
// pairing each process's invoke/commit/respond events in order, which is
// sound because each process runs at most one operation at a time.
class History {
 public:
  static History from_events(std::vector<Event> events) {
    History h;
    h.events_ = std::move(events);
    // Canonical order inside a clock tick: an operation's invoke, commit and
    // respond may share a decision (fused atomic ops), so shuffled
    // representations of the same history parse identically.
    auto rank = [](EventKind k) {
      switch (k) {
        case EventKind::Invoke:
          return 0;
        case EventKind::Commit:
          return 1;
        case EventKind::Respond:
          return 2;
        default:
          return 3;
      }
    };
    std::stable_sort(h.events_.begin(), h.events_.end(), [&](const Event& a, const Event& b) {
      if (a.clock != b.clock) return a.clock < b.clock;
      if (a.pid != b.pid) return a.pid < b.pid;
      return rank(a.kind) < rank(b.kind);
    });
    std::vector<int> open(64, -1);
    auto open_of = [&](int pid) -> int& {
      if (pid < 0) throw SimError("event with negative pid");
      if (static_cast<std::size_t>(pid) >= open.size()) open.resize(pid + 1, -1);
      return open[static_cast<std::size_t>(pid)];
    };
    for (const Event& e : h.events_) {
      switch (e.kind) {
        case EventKind::Invoke: {
          int& slot = open_of(e.pid);
          if (slot >= 0)
            throw SimError("process " + std::to_string(e.pid) +
                           " invoked while an operation is open (history not sequential)");
          if (!e.reg) throw SimError("invoke event without a register");
          HistOp op;
          op.id = static_cast<int>(h.ops_.size());
          op.pid = e.pid;
          op.reg = *e.reg;
          // Writes carry their argument on the invoke event; reads carry none.
          op.kind = e.value ? OpKind::Write : OpKind::Read;
          op.argument = e.value;
          op.invoked_at = e.clock;
          slot = op.id;
          h.ops_.push_back(op);
          break;
        }
        case EventKind::Commit: {
          int slot = open_of(e.pid);
          if (slot < 0)
            throw SimError("commit without an open operation for pid " + std::to_string(e.pid));
          HistOp& op = h.ops_[static_cast<std::size_t>(slot)];
          op.committed = true;
          if (op.kind == OpKind::Read) op.returned = e.value;
          if (!e.insertion_index) throw SimError("commit event without insertion_index");
          auto& log = h.commit_orders_[op.reg];
          int pos = *e.insertion_index;
          if (pos < 0 || pos > static_cast<int>(log.size()))
            throw SimError("commit insertion_index out of range on " + op.reg.str());
          log.insert(log.begin() + pos, op.id);
          h.commit_snapshots_[op.reg].push_back(log);
          break;
        }
        case EventKind::Respond: {
          int& slot = open_of(e.pid);
          if (slot < 0)
            throw SimError("respond without an open operation for pid " + std::to_string(e.pid));
          HistOp& op = h.ops_[static_cast<std::size_t>(slot)];
          op.responded_at = e.clock;
          if (op.kind == OpKind::Read && e.value) op.returned = e.value;
          slot = -1;
          break;
        }
        default:
          break;
      }
    }
    return h;
  }

  const std::vector<Event>& events() const { return events_; }
  const std::vector<HistOp>& ops() const { return ops_; }

  const HistOp& op(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= ops_.size())
      throw UnknownOp("no history operation with id " + std::to_string(id));
    return ops_[static_cast<std::size_t>(id)];
  }

  std::vector<int> ops_on(RegisterId reg) const {
    std::vector<int> out;
    for (const HistOp& o : ops_)
      if (o.reg == reg) out.push_back(o.id);
    return out;
  }

  std::vector<RegisterId> registers() const {
    std::set<RegisterId> seen;
    for (const HistOp& o : ops_) seen.insert(o.reg);
    return {seen.begin(), seen.end()};
  }

  // True iff `a` responded before `b` was invoked. Operations invoked and
  // responded at the same decision clock are concurrent.
  bool real_time_precedes(int a, int b) const {
    const HistOp& oa = op(a);
    const HistOp& ob = op(b);
    if (a == b) return false;
    return oa.responded_at.has_value() && *oa.responded_at < ob.invoked_at;
  }

  // Committed-log snapshot sequence per register, replayed from the commit
  // events. Matches the backend's own snapshot history on native runs.
  const std::map<RegisterId, std::vector<std::vector<int>>>& commit_snapshots() const {
    return commit_snapshots_;
  }

 private:
  std::vector<Event> events_;
  std::vector<HistOp> ops_;
  std::map<RegisterId, std::vector<int>> commit_orders_;
  std::map<RegisterId, std::vector<std::vector<int>>> commit_snapshots_;
};

// A sequential order over one register's operations that explains the
// history: it respects real-time precedence and read/write semantics.
struct LinearizationWitness {
  RegisterId reg;
  std::vector<int> order;  // History op ids
};

namespace detail {

// Closure of a register subhistory: pending reads are dropped; a pending
// write is completed (kept, never responding) when some completed read
// returned its value, otherwise dropped.
inline std::vector<const HistOp*> close_subhistory(const History& h, RegisterId reg) {
  std::vector<const HistOp*> kept;
  std::vector<const HistOp*> pending_writes;
  std::vector<Value> read_values;
  for (int id : h.ops_on(reg)) {
    const HistOp& o = h.op(id);
    if (!o.is_pending()) {
      kept.push_back(&o);
      if (o.kind == OpKind::Read && o.returned) read_values.push_back(*o.returned);
    } else if (o.kind == OpKind::Write) {
      pending_writes.push_back(&o);
    }
  }
  for (const HistOp* w : pending_writes) {
    if (std::find(read_values.begin(), read_values.end(), *w->argument) != read_values.end())
      kept.push_back(w);
  }
  return kept;
}

struct LinSearch {
  const std::vector<const HistOp*>& ops;
  Value initial;
  // precedes[a] = bitmask of ops that must come after a... stored inverted:
  // pred_mask[b] = mask of ops that really precede b.
  std::vector<std::uint32_t> pred_mask;
  std::set<std::pair<std::uint32_t, Value>> dead;
  std::vector<int> order;

  bool search(std::uint32_t remaining, Value cur) {
    if (remaining == 0) return true;
    auto key = std::make_pair(remaining, cur);
    if (dead.count(key)) return false;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      std::uint32_t bit = std::uint32_t{1} << i;
      if (!(remaining & bit)) continue;
      // Only ops with no unscheduled predecessor may come next.
      if (pred_mask[i] & remaining) continue;
      const HistOp& o = *ops[i];
      if (o.kind == OpKind::Read && o.returned != cur) continue;
      order.push_back(o.id);
      Value next = o.kind == OpKind::Write ? *o.argument : cur;
      if (search(remaining & ~bit, next)) return true;
      order.pop_back();
    }
    dead.insert(key);
    return false;
  }
};

}  // namespace detail

// Brute-force linearizability check of one register's subhistory: searches
// every interleaving consistent with real-time order for one that satisfies
// sequential read/write semantics. The subhistory is closed first (pending
// ops completed or dropped). Intended as an oracle at small scale; refuses
// subhistories larger than `bound` ops.
inline std::optional<LinearizationWitness> is_linearizable(const History& h, RegisterId reg,
                                                           std::size_t bound = 10) {
  std::vector<const HistOp*> ops = detail::close_subhistory(h, reg);
  if (ops.size() > bound || ops.size() > 32)
    throw BoundExceeded(reg.str() + " has " + std::to_string(ops.size()) +
                        " operations, above the brute-force bound of " + std::to_string(bound));
  for (const HistOp* o : ops) {
    if (o->kind == OpKind::Read && !o->returned)
      throw SimError("completed read without a returned value on " + reg.str());
  }
  detail::LinSearch s{ops, initial_value(reg), {}, {}, {}};
  s.pred_mask.assign(ops.size(), 0);
  for (std::size_t b = 0; b < ops.size(); ++b)
    for (std::size_t a = 0; a < ops.size(); ++a) {
      if (a == b) continue;
      if (ops[a]->responded_at && *ops[a]->responded_at < ops[b]->invoked_at)
        s.pred_mask[b] |= std::uint32_t{1} << a;
    }
  std::uint32_t all =
      ops.empty() ? 0 : (ops.size() == 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << ops.size()) - 1);
  if (!s.search(all, initial_value(reg))) return std::nullopt;
  return LinearizationWitness{reg, s.order};
}

// True iff every snapshot is a prefix of each later snapshot. Adjacent
// comparison suffices: the prefix relation is transitive.
template <class Order>
bool check_prefix_property(const std::vector<Order>& snapshots) {
  for (std::size_t i = 0; i + 1 < snapshots.size(); ++i) {
    const Order& a = snapshots[i];
    const Order& b = snapshots[i + 1];
    if (a.size() > b.size()) return false;
    if (!std::equal(a.begin(), a.end(), b.begin())) return false;
  }
  return true;
}

// First pair of snapshot indices violating the prefix property, if any.
template <class Order>
std::optional<std::pair<int, int>> prefix_counterexample(const std::vector<Order>& snapshots) {
  for (std::size_t i = 0; i + 1 < snapshots.size(); ++i) {
    const Order& a = snapshots[i];
    const Order& b = snapshots[i + 1];
    if (a.size() > b.size() || !std::equal(a.begin(), a.end(), b.begin()))
      return std::make_pair(static_cast<int>(i), static_cast<int>(i + 1));
  }
  return std::nullopt;
}

// Structured checker verdict for one register.
struct CheckVerdict {
  RegisterId reg;
  bool linearizable = false;
  std::vector<int> witness;  // History op ids when linearizable
  bool prefix_ok = false;
  std::optional<std::pair<int, int>> counterexample;
};

inline CheckVerdict check_register(const History& h, RegisterId reg, std::size_t bound = 10) {
  CheckVerdict v;
  v.reg = reg;
  auto w = is_linearizable(h, reg, bound);
  v.linearizable = w.has_value();
  if (w) v.witness = w->order;
  auto snaps = h.commit_snapshots().find(reg);
  if (snaps == h.commit_snapshots().end()) {
    v.prefix_ok = true;
  } else {
    v.prefix_ok = check_prefix_property(snaps->second);
    v.counterexample = prefix_counterexample(snaps->second);
  }
  return v;
}

// One verdict record per register: the linearizability verdict with its
// witness order, and the prefix-property verdict with the first offending
// snapshot pair.
inline nlohmann::json verdict_to_json(const History& h, const CheckVerdict& v) {
  nlohmann::json j;
  j["register"] = v.reg.str();
  j["verdict"] = v.linearizable ? "linearizable" : "not-linearizable";
  if (v.linearizable) {
    nlohmann::json order = nlohmann::json::array();
    for (int id : v.witness) {
      const HistOp& op = h.op(id);
      order.push_back({{"pid", op.pid},
                       {"kind", op.kind == OpKind::Write ? "write" : "read"},
                       {"value", op.kind == OpKind::Write ? op.argument->str()
                                                          : op.returned.value_or(kBot).str()}});
    }
    j["witness"] = order;
  }
  j["prefix_ok"] = v.prefix_ok;
  if (v.counterexample)
    j["counterexample"] = {{"earlier", v.counterexample->first},
                           {"later", v.counterexample->second}};
  return j;
}

}  // namespace regsim
