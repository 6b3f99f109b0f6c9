#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mv/calc/syntax.hpp"
#include "mv/typing/diagnostic.hpp"

namespace mv::surface {

using calc::BigInt;
using calc::Mode;
using calc::Span;
using typing::Diagnostic;

struct Type {
  enum class Kind { bool_, int_, nat, uint, named, unit };
  Kind kind = Kind::unit;
  int bits = 0;      // uint
  std::string name;  // named

  static Type boolean() { return {Kind::bool_}; }
  static Type integer() { return {Kind::int_}; }
  static Type natural() { return {Kind::nat}; }
  static Type unsigned_(int bits) { return {Kind::uint, bits}; }
  static Type named(std::string n) { return {Kind::named, 0, std::move(n)}; }
  static Type unit() { return {Kind::unit}; }

  bool is_integral() const { return kind == Kind::int_ || kind == Kind::nat || kind == Kind::uint; }
  bool operator==(const Type&) const = default;
};

std::string to_string(const Type& t);
BigInt max_value(int bits);

enum class Passing { value, shared_ref, mut_ref };

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct Expr {
  enum class Kind { int_lit, bool_lit, var, deref, old, unary, binary, cast, call, if_, field, struct_lit };
  Kind kind;
  Span span;
  BigInt value;
  bool flag = false;  // bool_lit
  std::string name;   // var, old, call callee, field name, struct name
  std::string op;     // unary: "-" "!"; binary operators
  Type target;        // cast
  std::vector<ExprPtr> args;
  std::vector<Passing> passing;    // call
  std::vector<std::string> fields;  // struct_lit
  /// Filled by the type checker.
  Type ty;
};

struct Stmt;
using StmtPtr = std::shared_ptr<Stmt>;

struct Block {
  std::vector<StmtPtr> stmts;
  ExprPtr tail;
  Span span;
};

struct Stmt {
  enum class Kind { let_, assign, while_, assert_, return_, expr, reveal, if_ };
  Kind kind;
  Span span;
  std::string name;  // let / assign target ("x" or "x.f"), reveal function
  bool mut_ = false;
  bool ghost = false;   // let: #[spec] / #[proof]
  bool deref = false;   // assign: *x = e
  std::optional<Type> type;
  ExprPtr expr;  // let init, assign rhs, while/if condition, assert, return value, expression statement
  std::vector<ExprPtr> invariants;
  Block body;
  std::optional<Block> else_body;
  long fuel = 1;
};

struct Param {
  std::string name;
  Passing passing = Passing::value;
  Type type;
  Span span;
};

struct Function {
  Mode mode = Mode::exec;
  std::string name;
  Span span;
  bool is_pub = false;
  std::vector<Param> params;
  std::optional<Type> ret;
  std::string result_name;
  std::optional<Type> result_type;  // as written in the ensures binder
  std::vector<ExprPtr> requires_;
  std::vector<ExprPtr> ensures;
  ExprPtr decreases;
  Block body;

  const Param* param(const std::string& n) const;
};

struct StructDecl {
  std::string name;
  Span span;
  bool is_pub = false;
  std::vector<std::pair<std::string, Type>> fields;
};

struct Program {
  std::vector<StructDecl> structs;
  std::vector<Function> functions;

  const Function* find(const std::string& name) const;
  const StructDecl* find_struct(const std::string& name) const;
};

struct SyntaxError : std::runtime_error {
  Span span;
  SyntaxError(Span s, const std::string& msg);
};

Program parse_surface(std::string_view text);

/// Re-parseable rendering.
std::string print(const Program& p);
std::string print(const Expr& e);

/// Flattens struct-typed bindings and parameters into one scalar binding per
/// field named `x.f`; struct literals become one let per field.
Program flatten_structs(const Program& p, std::vector<Diagnostic>& diags);

/// Fills Expr::ty and the types of unannotated lets; reports type errors.
std::vector<Diagnostic> typecheck_surface(Program& p);

/// Call matrix, ghost data flow, old() placement, spec purity, decreases presence.
std::vector<Diagnostic> modecheck_surface(const Program& p);

/// Mutable-reference arguments must be distinct variables, distinct from the
/// shared-reference arguments of the same call.
std::vector<Diagnostic> alias_check(const Program& p);

/// Parse, alias check, flatten, type check and mode check.
struct Checked {
  Program program;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};
Checked check_surface(std::string_view text);

Program erase_ghost(const Program& p);

/// Direct recursion or mutual recursion through the call graph.
bool is_recursive(const Program& p, const std::string& fn);

/// Calls made by a block or expression, in source order.
void collect_calls(const Expr& e, std::vector<const Expr*>& out);
void collect_calls(const Block& b, std::vector<const Expr*>& out);

}  // namespace mv::surface
