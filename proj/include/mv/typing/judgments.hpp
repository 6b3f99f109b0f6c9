#pragma once

#include <optional>
#include <string>

#include "mv/calc/syntax.hpp"
#include "mv/typing/diagnostic.hpp"
#include "mv/typing/env.hpp"

namespace mv::typing {

using calc::Callability;
using calc::DeclTable;
using calc::ExprPtr;
using calc::Lifetime;
using calc::Type;

bool is_copyable(const DeclTable& d, Mode m, const Type& t);

/// Throws std::invalid_argument on an unknown datatype name or a datatype
/// with no finite default.
ExprPtr default_value(const DeclTable& d, const TypePtr& t);

/// m ⊢ τ : static.  Spec data never reaches run time, so only proof and exec
/// positions care about lifetimes.
bool static_at(Mode m, const Type& t);
bool is_unrestricted(ModeUsage mu, const Type& t);

bool wf_type(const DeclTable& d, const DeclTable& d_r, const DeclTable& d_p, const Type& t);
/// ⊢_D τ, i.e. wf_type(d, ∅, ∅, τ).
bool wf_type(const DeclTable& d, const Type& t);

std::optional<Diagnostic> wf_decl_table(const DeclTable& d);

struct BodyContext {
  bool ok = false;
  PermEnv perms;
  VarEnv vars;
  /// Fixed result usage; empty when the rule leaves it free.
  std::optional<Usage> usage;
  std::string offending;  // binding or index that broke a side condition
  std::string message;
};

BodyContext function_body_context(Callability o, Lifetime l, const PermEnv& p, const VarEnv& g);

}  // namespace mv::typing
