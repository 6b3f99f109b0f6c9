#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "mv/calc/syntax.hpp"
#include "mv/typing/check.hpp"

namespace mv::meta {

using calc::ExprPtr;
using calc::Mode;
using calc::TypePtr;

struct LambdaHeader {
  Mode mode;
  calc::Callability callability;
  calc::Lifetime lifetime;
  calc::ModeUsage param_mu;
  TypePtr param_type;
};

struct EnumerationSpec {
  std::size_t max_size = 7;
  std::vector<long> literals{0, 1};
  std::vector<std::int64_t> perm_indices{0};
  calc::DeclTable decls;
  std::vector<Mode> access{Mode::exec, Mode::proof, Mode::spec};
  std::size_t max_count = std::numeric_limits<std::size_t>::max();
  /// Annotations for default, none, some.
  std::vector<TypePtr> types;
  std::vector<Mode> let_modes{Mode::exec, Mode::proof, Mode::spec};
  std::vector<LambdaHeader> lambdas;
  /// Leave out perm, pdata, pread, pwrite.
  bool permission_free = false;
};

/// The corpus used by the acceptance sweep: one two-field datatype S, index 0,
/// annotation type int, lambda headers exec-once-restricted and spec-many-static.
EnumerationSpec default_spec();

/// Wider leaf and lambda pools; affordable up to size 5.
EnumerationSpec rich_spec();

/// Closed terms of size 1..max_size in a fixed order (by size, then by
/// production).  Only terms the lax judgment accepts at some typing are kept;
/// strict typing implies lax typing, so no well-typed term is lost.  Stops
/// after max_count terms.
std::vector<ExprPtr> enumerate_terms(const EnumerationSpec& spec);

/// Streaming form of enumerate_terms: the largest size is never stored.
/// `fn` returns false to stop.  Returns the number of terms visited.
std::size_t for_each_term(const EnumerationSpec& spec, typing::TypingCache& cache,
                          const std::function<bool(const ExprPtr&)>& fn);

/// Terms of exactly `size` whose free variables are among the first `depth`
/// binder names, each bound at int.
std::vector<ExprPtr> enumerate_exact(const EnumerationSpec& spec, std::size_t size, std::size_t depth);

std::string binder_name(std::size_t depth);

}  // namespace mv::meta
