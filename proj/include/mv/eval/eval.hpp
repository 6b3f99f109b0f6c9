#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mv/calc/syntax.hpp"

namespace mv::eval {

using calc::DeclTable;
using calc::ExprPtr;

struct Configuration {
  ExprPtr heap;
  ExprPtr expr;
  DeclTable decls;
};

/// Child indices from the root down to the redex.  Empty means the whole
/// expression is the redex.
using Path = std::vector<std::size_t>;

/// nullopt when e is a value.
std::optional<Path> decompose(const calc::Expr& e);
const calc::Expr& at_path(const calc::Expr& e, const Path& path);
ExprPtr plug(const ExprPtr& e, const Path& path, ExprPtr replacement);

enum class StuckReason { crash_never_on_bottom, no_rule_applies };
const char* to_string(StuckReason r);

struct StepResult {
  enum class Kind { stepped, already_value, stuck } kind = Kind::already_value;
  Configuration next;  // stepped
  StuckReason reason = StuckReason::no_rule_applies;
  std::string rule;  // stepped
  ExprPtr redex;     // stepped or stuck
};

StepResult step(const Configuration& c);

struct TraceLine {
  std::uint64_t index;
  std::string rule;
  std::string redex;
};
std::string to_string(const TraceLine& t);

struct RunOutcome {
  enum class Kind { finished, crashed, budget_exhausted } kind = Kind::finished;
  Configuration config;  // final, crashed, or last reached configuration
  std::uint64_t steps = 0;
  StuckReason reason = StuckReason::no_rule_applies;  // crashed
  std::vector<TraceLine> trace;
};

constexpr std::uint64_t default_budget = 100000;

RunOutcome run(Configuration c, std::uint64_t budget = default_budget, bool record_trace = false);

/// Builds the snapshot program: a linear permission at `index` holding
/// `before`, a spec snapshot of it, an optional write of `after`, and a final
/// Probe(snapshot data, live read, permission).
struct ProbeProgram {
  DeclTable decls;
  ExprPtr expr;
};
ProbeProgram snapshot_probe_program(std::int64_t index, long before, std::optional<long> after);

struct ProbeEvidence {
  bool finished = false;
  std::optional<calc::BigInt> snapshot;  // pdata on the old snapshot
  std::optional<calc::BigInt> live;      // pread on the live permission
  std::uint64_t steps = 0;
};

/// Runs c and reads the first two fields of a final struct value.
ProbeEvidence spec_determinism_probe(const Configuration& c);

}  // namespace mv::eval
