#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mv/calc/syntax.hpp"

namespace mv::calc {

class ParseError : public std::runtime_error {
public:
  ParseError(Span span, const std::string& msg)
      : std::runtime_error(std::to_string(span.line) + ":" + std::to_string(span.col) + ": " + msg), span_(span) {}
  Span span() const { return span_; }

private:
  Span span_;
};

/// Raw s-expression tree.  Atoms keep their source text.
struct SNode {
  Span span;
  bool is_list = false;
  std::string atom;
  std::vector<SNode> items;
};

std::vector<SNode> read_sexprs(std::string_view text);

ExprPtr expr_from_sexpr(const SNode& n);
TypePtr type_from_sexpr(const SNode& n);
ModeUsage mode_usage_from_sexpr(const SNode& n);

ExprPtr parse_expr(std::string_view text);
TypePtr parse_type(std::string_view text);

/// Canonical form: single spaces, no trailing whitespace, no newlines.
std::string print(const Expr& e);
std::string print(const Type& t);
inline std::string print(const ExprPtr& e) { return print(*e); }
inline std::string print(const TypePtr& t) { return print(*t); }

/// A calculus source file: datatype declarations, the heap cell, the
/// permission environment, the access level, and the main expression.
struct CalcProgram {
  DeclTable decls;
  TypePtr heap_type;
  ExprPtr heap_value;
  std::map<std::int64_t, Usage> perms;
  Mode access = Mode::exec;
  std::optional<std::pair<ModeUsage, TypePtr>> expect;
  ExprPtr main;
};

CalcProgram parse_program(std::string_view text);
std::string print_program(const CalcProgram& p);

}  // namespace mv::calc
