#pragma once

#include <algorithm>

#include "mv/typing/check.hpp"

namespace mv::typing::detail {

using calc::Expr;
using calc::FnSig;
using EK = calc::Expr::Kind;
using TK = calc::Type::Kind;

inline void add(TypingSet& s, Typing t) {
  auto it = std::lower_bound(s.begin(), s.end(), t, typing_less);
  if (it != s.end() && typing_eq(*it, t)) return;
  s.insert(it, std::move(t));
}

inline void add_all_mus(TypingSet& s, const TypePtr& t) {
  for (const auto& mu : ModeUsage::all()) add(s, Typing{mu, t});
}

/// Adds the other usage for every proof/exec result.
inline TypingSet close_usage(const TypingSet& in) {
  TypingSet out = in;
  for (const auto& t : in) {
    if (!t.mu.is_spec()) {
      Usage other = t.mu.is_linear() ? Usage::shared : Usage::linear;
      add(out, Typing{ModeUsage::of(t.mu.mode(), other), t.type});
    }
  }
  return out;
}

inline bool is_fn(const TypePtr& t) { return t->kind == TK::fn; }

const char* rule_name(EK k);

void key_node(std::string& key, const Expr& e, Mode m);
void key_env(std::string& key, const VarEnv& g);
void key_perms(std::string& key, const PermEnv& p);

/// Side conditions on function literals shared by the main and dead-end rules.
inline bool nonspec_function_modes(Mode mf, ModeUsage mu_x, ModeUsage mu_b, const calc::Type& tau_b) {
  return is_unrestricted(mu_b, tau_b) && mf != Mode::spec && calc::mode_leq(mf, mu_x.mode()) &&
         calc::mode_leq(mf, mu_b.mode());
}

inline TypePtr fn_type(const calc::Lambda& l, ModeUsage mu_b, TypePtr tau_b) {
  return calc::Type::function(FnSig{l.mode, l.callability, l.lifetime, l.param_mu, l.param_type, mu_b, std::move(tau_b)});
}

}  // namespace mv::typing::detail
