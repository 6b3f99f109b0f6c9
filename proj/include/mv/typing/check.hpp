#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <set>
#include <string>
#include <vector>

#include "mv/calc/syntax.hpp"
#include "mv/typing/diagnostic.hpp"
#include "mv/typing/env.hpp"
#include "mv/typing/judgments.hpp"

namespace mv::typing {

enum class Strictness { strict, lax };

struct Typing {
  ModeUsage mu;
  TypePtr type;
};

bool typing_eq(const Typing& a, const Typing& b);
bool typing_less(const Typing& a, const Typing& b);
std::string to_string(const Typing& t);

/// Sorted, duplicate-free.
using TypingSet = std::vector<Typing>;
bool contains(const TypingSet& s, const Typing& t);

/// Results memoized across checker runs, keyed by printed subterm and
/// environment.  The declaration table and heap type must not change while a
/// cache is in use.  Root terms are never stored.
struct TypingCache {
  std::unordered_map<std::string, TypingSet> strict;
  std::unordered_map<std::string, TypingSet> lax;
  std::size_t hits = 0;
  std::size_t size() const { return strict.size() + lax.size(); }
};

struct DeclarativeOptions {
  std::size_t size_limit = 24;
  /// Restrict borrow sets to the explicit annotations (absent annotation = no
  /// borrowing).  Used to attribute algorithmic incompleteness.
  bool annotated_borrows_only = false;
  /// Optional memo; diagnostics are less precise when it is used.
  TypingCache* cache = nullptr;
};

struct DeclarativeVerdict {
  TypingSet results;
  std::vector<Diagnostic> diagnostics;
  bool size_exceeded = false;
  bool ok() const { return !results.empty(); }
};

DeclarativeVerdict typecheck_declarative(const DeclTable& d, const TypePtr& h, const PermEnv& p, const VarEnv& g,
                                         Mode m, Strictness s, const ExprPtr& e,
                                         const DeclarativeOptions& opts = {});

struct AlgorithmicVerdict {
  bool ok = false;
  Typing typing;
  std::set<std::string> consumed;
  std::set<std::int64_t> consumed_perms;
  /// Every typing the checker found, in preference order.
  std::vector<Typing> alternatives;
  std::optional<Diagnostic> diagnostic;
};

/// When `expected` is given, success means that typing was found.
AlgorithmicVerdict typecheck_algorithmic(const DeclTable& d, const TypePtr& h, const PermEnv& p, const VarEnv& g,
                                         Mode m, const ExprPtr& e, const std::optional<Typing>& expected = {});

/// The lax judgment, shared by both checkers: environment accounting is
/// vacuous and every result is closed under change of usage.
TypingSet infer_lax(const DeclTable& d, const TypePtr& h, const std::map<std::string, TypePtr>& vars, Mode m,
                    const ExprPtr& e);
TypingSet infer_lax(const DeclTable& d, const TypePtr& h, const std::map<std::string, TypePtr>& vars, Mode m,
                    const calc::Expr& e, TypingCache* cache, const calc::Expr* root = nullptr);
/// Lax weakening changes usages only: each variable keeps the mode of its binding.
TypingSet infer_lax(const DeclTable& d, const TypePtr& h, const VarEnv& vars, Mode m, const calc::Expr& e,
                    TypingCache* cache = nullptr, const calc::Expr* root = nullptr);

enum class Checker { declarative, algorithmic };

struct ConfigurationVerdict {
  bool heap_ok = false;
  bool expr_ok = false;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return heap_ok && expr_ok; }
};

ConfigurationVerdict check_configuration(const DeclTable& d, const TypePtr& h_type, const PermEnv& p,
                                         const VarEnv& g, Mode m, const ExprPtr& heap_value, const ExprPtr& e,
                                         const Typing& expected, Checker checker = Checker::declarative,
                                         const DeclarativeOptions& opts = {});

}  // namespace mv::typing
