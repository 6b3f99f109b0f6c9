#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mv/surface/ast.hpp"

namespace mv::surface {

enum class Op {
  add, sub, mul, div, mod, neg,
  eq, lt, le, gt, ge,
  and_, or_, not_, implies, ite,
  uinv,   // (uInv bits x)
  apply,  // spec function, req%f, ens%f
  fuel_zero, fuel_succ,
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  enum class Kind { int_lit, bool_lit, sym, app };
  Kind kind;
  BigInt value;
  bool flag = false;
  std::string name;  // sym name, applied function name
  Op op = Op::apply;
  std::vector<TermPtr> args;
};

TermPtr t_int(const BigInt& v);
TermPtr t_bool(bool b);
TermPtr t_sym(const std::string& name);
TermPtr t_app(Op op, std::vector<TermPtr> args);
TermPtr t_call(const std::string& fn, std::vector<TermPtr> args);
TermPtr t_and(std::vector<TermPtr> args);
TermPtr t_not(TermPtr a);
TermPtr t_implies(TermPtr a, TermPtr b);
TermPtr t_eq(TermPtr a, TermPtr b);
TermPtr t_uinv(int bits, TermPtr x);
TermPtr t_fuel(int k);

/// SMT-LIB rendering of a term.
std::string render(const Term& t);

enum class Sort { int_, bool_ };

/// A constant of the query together with the source type bounding it.
struct Const {
  std::string name;
  Sort sort = Sort::int_;
  Type range;  // uint(bits), nat, int or bool
};

/// Spec function, req%f or ens%f definition: name(params) = body.
struct FnDef {
  std::string name;
  std::vector<Const> params;  // fuel parameter excluded
  Sort result = Sort::bool_;
  Type result_range;
  TermPtr body;
  bool fueled = false;  // recursive spec function: first argument is fuel
  bool contract = false;
};

struct VCQuery {
  std::string name;      // <function>.<kind>.<index>
  std::string function;
  std::string kind;      // precondition, assert, invariant-init, invariant-preserve, postcondition, overflow, decreases, division, range
  Span span;
  std::string message;
  std::vector<Const> consts;
  std::vector<TermPtr> hypotheses;
  TermPtr goal;
};

struct Background {
  std::vector<FnDef> defs;  // ordered by name
  const FnDef* find(const std::string& name) const;
};

struct VCSet {
  Background background;
  std::vector<VCQuery> queries;
};

/// SSA lowering and query generation over a checked, flattened program.
VCSet generate_vcs(const Program& p, int fuel_default = 1);

/// Declarations, definition axioms, then the negated query inside a push/pop frame.
std::string emit_smtlib(const Background& bg, const VCQuery& q);

// ---------------------------------------------------------------- oracle

struct Value {
  bool is_bool = false;
  bool b = false;
  BigInt z;

  static Value of(bool v) { return Value{true, v, 0}; }
  static Value of(const BigInt& v) { return Value{false, false, v}; }
  bool operator==(const Value& o) const { return is_bool == o.is_bool && (is_bool ? b == o.b : z == o.z); }
  bool operator<(const Value& o) const;
};

std::string to_string(const Value& v);

struct Verdict {
  enum class Kind { valid, invalid, unknown };
  Kind kind = Kind::valid;
  std::vector<std::pair<std::string, Value>> counterexample;
  std::string reason;
  long long assignments = 0;
};

const char* to_string(Verdict::Kind k);

struct OracleOptions {
  int width = 8;
  int depth_cap = 4096;
  long long leaf_budget = 50'000'000;
};

Verdict bounded_verify(const Background& bg, const VCQuery& q, const OracleOptions& opts = {});

/// Evaluates hypotheses and goal under a full assignment: true iff every
/// hypothesis holds and the goal fails.
bool replay(const Background& bg, const VCQuery& q, const std::vector<std::pair<std::string, Value>>& assignment);

/// Evaluates a closed term (no free constants) against the background.
std::optional<Value> evaluate(const Background& bg, const Term& t, const std::map<std::string, Value>& env = {});

// ---------------------------------------------------------------- solver

struct SolverResult {
  std::string status;  // sat, unsat, unknown, error
  std::string output;
};

/// Runs `solver script-path`, reading the first line of its output.
SolverResult run_solver(const std::string& solver, const std::string& script, int timeout_seconds = 30);

nlohmann::json to_json(const VCQuery& q, const Verdict& v);

}  // namespace mv::surface
