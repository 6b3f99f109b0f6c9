#include <functional>
#include <map>

#include "internal.hpp"
#include "mv/calc/sexpr.hpp"

namespace mv::typing {

using namespace detail;

namespace {

struct NodeStat {
  int attempts = 0;
  int successes = 0;
};

bool has_linear(const VarEnv& g) {
  return std::any_of(g.begin(), g.end(), [](const auto& kv) { return kv.second.mu.is_linear(); });
}

bool has_linear(const PermEnv& p) {
  return std::any_of(p.begin(), p.end(), [](const auto& kv) { return kv.second == Usage::linear; });
}

/// Adds `x` to `g`; shadowing a linear binding would lose it, so that fails.
std::optional<VarEnv> extend(VarEnv g, const std::string& x, Binding b) {
  auto it = g.find(x);
  if (it != g.end() && it->second.mu.is_linear()) return std::nullopt;
  g.insert_or_assign(x, std::move(b));
  return g;
}

struct Part {
  PermEnv p;
  VarEnv g;
};

/// Splits (p, g) among `sides`.  A side is a list of subexpressions; a linear
/// resource may only go to a side that mentions it (no other rule can consume
/// it), which prunes the enumeration without losing derivations.
std::vector<std::vector<Part>> split_among(const PermEnv& p, const VarEnv& g,
                                           const std::vector<std::vector<const calc::Expr*>>& sides) {
  const std::size_t n = sides.size();
  std::vector<std::pair<std::string, std::vector<std::size_t>>> vars;
  std::vector<std::pair<std::int64_t, std::vector<std::size_t>>> perms;
  for (const auto& [x, b] : g) {
    if (!b.mu.is_linear()) continue;
    std::vector<std::size_t> options;
    for (std::size_t s = 0; s < n; ++s)
      if (std::any_of(sides[s].begin(), sides[s].end(), [&](const calc::Expr* e) { return calc::occurs_free(*e, x); }))
        options.push_back(s);
    if (options.empty()) return {};
    vars.emplace_back(x, std::move(options));
  }
  for (const auto& [i, u] : p) {
    if (u != Usage::linear) continue;
    std::vector<std::size_t> options;
    for (std::size_t s = 0; s < n; ++s)
      if (std::any_of(sides[s].begin(), sides[s].end(), [&](const calc::Expr* e) { return calc::mentions_perm(*e, i); }))
        options.push_back(s);
    if (options.empty()) return {};
    perms.emplace_back(i, std::move(options));
  }
  std::vector<std::vector<Part>> out;
  std::vector<std::size_t> choice(vars.size() + perms.size(), 0);
  while (true) {
    std::vector<Part> parts(n, Part{p, g});
    for (std::size_t k = 0; k < vars.size(); ++k) {
      std::size_t owner = vars[k].second[choice[k]];
      for (std::size_t s = 0; s < n; ++s)
        if (s != owner) parts[s].g[vars[k].first].mu = ModeUsage::spec();
    }
    for (std::size_t k = 0; k < perms.size(); ++k) {
      std::size_t owner = perms[k].second[choice[vars.size() + k]];
      for (std::size_t s = 0; s < n; ++s)
        if (s != owner) parts[s].p.erase(perms[k].first);
    }
    out.push_back(std::move(parts));
    std::size_t k = 0;
    for (; k < choice.size(); ++k) {
      std::size_t limit = k < vars.size() ? vars[k].second.size() : perms[k - vars.size()].second.size();
      if (++choice[k] < limit) break;
      choice[k] = 0;
    }
    if (k == choice.size()) break;
  }
  return out;
}

struct Borrow {
  std::vector<std::string> vars;
  std::vector<std::int64_t> perms;
};

class Declarative {
public:
  Declarative(const DeclTable& d, const TypePtr& h, const DeclarativeOptions& opts, const calc::Expr* root)
      : d_(d), h_(h), opts_(opts), root_(root) {}

  TypingSet infer(const PermEnv& p, const VarEnv& g, Mode m, const calc::Expr& e) {
    TypingCache* cache = opts_.cache;
    if (!cache || &e == root_) return infer_uncached(p, g, m, e);
    std::string key;
    key_node(key, e, m);
    key += opts_.annotated_borrows_only ? 'a' : 'f';
    key_perms(key, p);
    key_env(key, g);
    auto it = cache->strict.find(key);
    if (it != cache->strict.end()) {
      ++cache->hits;
      return it->second;
    }
    TypingSet out = infer_uncached(p, g, m, e);
    cache->strict.emplace(std::move(key), out);
    return out;
  }

  TypingSet infer_uncached(const PermEnv& p, const VarEnv& g, Mode m, const calc::Expr& e) {
    NodeStat& st = stats_[&e];
    ++st.attempts;
    TypingSet out = rules(p, g, m, e);
    if (!out.empty()) ++stats_[&e].successes;
    return out;
  }

  TypingSet infer_lax_env(const VarEnv& g, Mode m, const calc::Expr& e) {
    return infer_lax(d_, h_, g, m, e, opts_.cache, root_);
  }

  std::optional<Diagnostic> frontier(const calc::Expr& root) const {
    const calc::Expr* found = nullptr;
    std::function<void(const calc::Expr&)> walk = [&](const calc::Expr& e) {
      if (found) return;
      auto it = stats_.find(&e);
      if (it != stats_.end() && it->second.attempts > 0 && it->second.successes == 0) {
        bool children_fine = std::all_of(e.args.begin(), e.args.end(), [&](const ExprPtr& c) {
          auto jt = stats_.find(c.get());
          return jt == stats_.end() || jt->second.successes > 0;
        });
        if (children_fine) {
          found = &e;
          return;
        }
      }
      for (const auto& c : e.args) walk(*c);
    };
    walk(root);
    if (!found) return std::nullopt;
    return Diagnostic{rule_name(found->kind), found->span,
                      "no derivation for `" + calc::print(*found) + "` in any environment split reaching it"};
  }

private:
  const DeclTable& d_;
  TypePtr h_;
  DeclarativeOptions opts_;
  const calc::Expr* root_;
  std::map<const calc::Expr*, NodeStat> stats_;

  std::vector<Borrow> borrow_choices(const PermEnv& p, const VarEnv& g, const calc::Expr& e) {
    const calc::Expr& e1 = *e.args[0];
    const calc::Expr& e2 = *e.args[1];
    if (opts_.annotated_borrows_only) {
      if (!e.borrow) return {Borrow{}};
      for (const auto& x : e.borrow->vars) {
        auto it = g.find(x);
        if (it == g.end() || !it->second.mu.is_linear()) return {};
      }
      for (auto i : e.borrow->perms) {
        auto it = p.find(i);
        if (it == p.end() || it->second != Usage::linear) return {};
      }
      return {Borrow{e.borrow->vars, e.borrow->perms}};
    }
    // Borrowing a resource the first subterm does not mention is equivalent
    // to handing it to the second subterm, so only mentioned ones are tried.
    std::vector<std::string> vars;
    for (const auto& [x, b] : g) {
      bool shadowed_in_body = e.kind == EK::let && e.name == x;
      if (b.mu.is_linear() && calc::occurs_free(e1, x) && !shadowed_in_body && calc::occurs_free(e2, x))
        vars.push_back(x);
    }
    std::vector<std::int64_t> perms;
    for (const auto& [i, u] : p)
      if (u == Usage::linear && calc::mentions_perm(e1, i) && calc::mentions_perm(e2, i)) perms.push_back(i);
    std::vector<Borrow> out;
    const std::size_t k = vars.size() + perms.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
      Borrow b;
      for (std::size_t j = 0; j < vars.size(); ++j)
        if (mask >> j & 1) b.vars.push_back(vars[j]);
      for (std::size_t j = 0; j < perms.size(); ++j)
        if (mask >> (vars.size() + j) & 1) b.perms.push_back(perms[j]);
      out.push_back(std::move(b));
    }
    return out;
  }

  // Calls f(e1 env, e2 env, borrow-empty) for every borrow set and split.
  void for_each_borrow_split(const PermEnv& p, const VarEnv& g, const calc::Expr& e,
                             const std::function<void(const Part&, const Part&, bool)>& f) {
    for (const Borrow& b : borrow_choices(p, g, e)) {
      VarEnv rest_g = g;
      PermEnv rest_p = p;
      VarEnv gb;
      PermEnv pb;
      for (const auto& x : b.vars) {
        gb.emplace(x, g.at(x));
        rest_g.erase(x);
      }
      for (auto i : b.perms) {
        pb.emplace(i, p.at(i));
        rest_p.erase(i);
      }
      for (auto& parts : split_among(rest_p, rest_g, {{e.args[0].get()}, {e.args[1].get()}})) {
        Part first = parts[0];
        for (const auto& [x, bx] : project(gb, Selector::as_shared)) first.g.insert_or_assign(x, bx);
        for (const auto& [i, u] : project(pb, Selector::as_shared)) first.p.insert_or_assign(i, u);
        Part second = parts[1];
        for (const auto& [x, bx] : gb) second.g.insert_or_assign(x, bx);
        for (const auto& [i, u] : pb) second.p.insert_or_assign(i, u);
        f(first, second, b.vars.empty() && b.perms.empty());
      }
    }
  }

  TypingSet rules(const PermEnv& p, const VarEnv& g, Mode m, const calc::Expr& e) {
    TypingSet out;
    const auto& a = e.args;
    const bool env_nonlinear = !has_linear(p) && !has_linear(g);
    switch (e.kind) {
      case EK::var: {
        auto it = g.find(e.name);
        if (it == g.end() || has_linear(p)) break;
        VarEnv others = g;
        others.erase(e.name);
        if (has_linear(others)) break;
        const Binding& b = it->second;
        if (calc::mode_leq(m, b.mu.mode())) add(out, Typing{b.mu, b.type});
        if (b.mu.is_shared()) add(out, Typing{ModeUsage::spec(), b.type});
        break;
      }
      case EK::int_lit:
        if (env_nonlinear) add_all_mus(out, calc::Type::int_());
        break;
      case EK::unit:
        if (env_nonlinear) add_all_mus(out, calc::Type::unit());
        break;
      case EK::bottom:
        if (env_nonlinear) add(out, Typing{ModeUsage::spec(), calc::Type::never()});
        break;
      case EK::default_:
        if (env_nonlinear && wf_type(d_, *e.type)) add(out, Typing{ModeUsage::spec(), e.type});
        break;
      case EK::add:
        for (auto& parts : split_among(p, g, {{a[0].get()}, {a[1].get()}})) {
          TypingSet l = infer(parts[0].p, parts[0].g, m, *a[0]);
          if (l.empty()) continue;
          TypingSet r = infer(parts[1].p, parts[1].g, m, *a[1]);
          for (const auto& t : l)
            if (t.type->kind == TK::int_ && contains(r, t)) add(out, t);
        }
        break;
      case EK::crash_never:
        for (const auto& t : infer(p, g, m, *a[0]))
          if (t.type->kind == TK::never && !t.mu.is_spec()) add(out, Typing{t.mu, calc::Type::unit()});
        break;
      case EK::hdata:
        if (m == Mode::exec && env_nonlinear) add(out, Typing{ModeUsage::spec(), h_});
        break;
      case EK::hread:
        if (m == Mode::exec && env_nonlinear) add(out, Typing{ModeUsage::linear(Mode::exec), h_});
        break;
      case EK::hwrite:
        if (m == Mode::exec && contains(infer(p, g, m, *a[0]), Typing{ModeUsage::linear(Mode::exec), h_}))
          add_all_mus(out, calc::Type::unit());
        break;
      case EK::perm: {
        if (has_linear(g) || !calc::is_value(*a[0])) break;
        // Main rule: the literal owns index i at its usage in P.
        auto it = p.find(e.perm_index);
        if (it != p.end()) {
          PermEnv rest = p;
          rest.erase(e.perm_index);
          if (!has_linear(rest)) {
            for (const auto& t : infer(rest, g, m, *a[0]))
              if (t.mu == ModeUsage::linear(Mode::exec) && is_copyable(d_, Mode::exec, *t.type))
                add(out, Typing{ModeUsage::of(Mode::proof, it->second), calc::Type::perm(e.perm_index, t.type)});
          }
        }
        // Dead-end rule: a spec snapshot of the permission.
        if (!has_linear(p))
          for (const auto& t : infer(p, g, m, *a[0]))
            add(out, Typing{ModeUsage::spec(), calc::Type::perm(e.perm_index, t.type)});
        break;
      }
      case EK::pdata:
        for (const auto& t : infer(p, g, m, *a[0]))
          if (t.mu.is_spec() && t.type->kind == TK::perm) add(out, Typing{ModeUsage::spec(), t.type->inner});
        break;
      case EK::pread:
        if (m != Mode::exec) break;
        for (const auto& t : infer(p, g, m, *a[0]))
          if (t.mu == ModeUsage::shared(Mode::proof) && t.type->kind == TK::perm && t.type->perm_index == e.perm_index)
            add(out, Typing{ModeUsage::shared(Mode::exec), t.type->inner});
        break;
      case EK::pwrite:
        if (m != Mode::exec) break;
        for (auto& parts : split_among(p, g, {{a[0].get()}, {a[1].get()}})) {
          TypingSet ps = infer(parts[1].p, parts[1].g, m, *a[1]);
          bool perm_ok = std::any_of(ps.begin(), ps.end(), [&](const Typing& t) {
            return t.mu == ModeUsage::linear(Mode::proof) && t.type->kind == TK::perm &&
                   t.type->perm_index == e.perm_index;
          });
          if (!perm_ok) continue;
          for (const auto& t : infer(parts[0].p, parts[0].g, m, *a[0]))
            if (t.mu == ModeUsage::linear(Mode::exec) && is_copyable(d_, Mode::exec, *t.type))
              add(out, Typing{ModeUsage::linear(Mode::proof), calc::Type::perm(e.perm_index, t.type)});
        }
        break;
      case EK::drop:
        for (const auto& t : infer(p, g, m, *a[0]))
          if (t.mu.is_linear() && is_copyable(d_, t.mu.mode(), *t.type))
            add(out, Typing{ModeUsage::shared(t.mu.mode()), calc::Type::unit()});
        break;
      case EK::copy:
        for (const auto& t : infer(p, g, m, *a[0]))
          if (t.mu.is_shared() && is_copyable(d_, t.mu.mode(), *t.type))
            add(out, Typing{ModeUsage::linear(t.mu.mode()), t.type});
        break;
      case EK::seq:
        for_each_borrow_split(p, g, e, [&](const Part& first, const Part& second, bool) {
          TypingSet l = infer(first.p, first.g, m, *a[0]);
          if (!std::any_of(l.begin(), l.end(), [](const Typing& t) { return t.type->kind == TK::unit; })) return;
          for (const auto& t : infer(second.p, second.g, m, *a[1])) add(out, t);
        });
        break;
      case EK::let:
        if (!calc::mode_leq(m, e.mode)) break;
        for_each_borrow_split(p, g, e, [&](const Part& first, const Part& second, bool no_borrow) {
          for (const auto& t1 : infer(first.p, first.g, m, *a[0])) {
            if (t1.mu.mode() != e.mode) continue;
            if (!no_borrow && !is_unrestricted(t1.mu, *t1.type)) continue;
            auto inner = extend(second.g, e.name, Binding{t1.mu, t1.type});
            if (!inner) continue;
            for (const auto& t2 : infer(second.p, *inner, m, *a[1]))
              if (static_at(t2.mu.mode(), *t2.type)) add(out, t2);
          }
        });
        break;
      case EK::none:
        if (env_nonlinear && wf_type(d_, *e.type)) add_all_mus(out, calc::Type::option(e.type));
        break;
      case EK::some:
        for (const auto& t : infer(p, g, m, *a[0]))
          if (calc::type_eq(*t.type, *e.type)) add(out, Typing{t.mu, calc::Type::option(e.type)});
        break;
      case EK::if_some:
        for (auto& parts : split_among(p, g, {{a[0].get()}, {a[1].get(), a[2].get()}})) {
          TypingSet scrut = infer(parts[0].p, parts[0].g, m, *a[0]);
          for (Mode mb : {Mode::exec, Mode::proof, Mode::spec}) {
            if (!calc::mode_leq(m, mb)) continue;
            std::optional<TypingSet> els;
            for (const auto& t1 : scrut) {
              if (t1.type->kind != TK::option) continue;
              Mode m1 = t1.mu.mode();
              if (!(calc::mode_leq(m1, mb) || (m1 == Mode::spec && mb == Mode::proof))) continue;
              auto inner = extend(parts[1].g, e.name, Binding{t1.mu, t1.type->inner});
              if (!inner) continue;
              TypingSet then_ = infer(parts[1].p, *inner, mb, *a[1]);
              if (then_.empty()) continue;
              if (!els) els = infer(parts[1].p, parts[1].g, mb, *a[2]);
              for (const auto& t : then_)
                if (contains(*els, t)) add(out, t);
            }
          }
        }
        break;
      case EK::struct_: {
        const auto* decl = d_.find(e.name);
        if (!decl || decl->fields.size() != a.size()) break;
        std::vector<std::vector<const calc::Expr*>> sides;
        for (const auto& c : a) sides.push_back({c.get()});
        if (sides.empty()) {
          if (env_nonlinear) add_all_mus(out, calc::Type::named(e.name));
          break;
        }
        for (auto& parts : split_among(p, g, sides)) {
          std::vector<TypingSet> fields;
          bool dead = false;
          for (std::size_t i = 0; i < a.size() && !dead; ++i) {
            fields.push_back(infer(parts[i].p, parts[i].g, m, *a[i]));
            dead = fields.back().empty();
          }
          if (dead) continue;
          for (const auto& mu : ModeUsage::all()) {
            bool ok = true;
            for (std::size_t i = 0; ok && i < a.size(); ++i)
              ok = contains(fields[i],
                            Typing{calc::join_mode_usage(decl->fields[i].first, mu), decl->fields[i].second});
            if (ok) add(out, Typing{mu, calc::Type::named(e.name)});
          }
        }
        break;
      }
      case EK::let_struct: {
        const auto* decl = d_.find(e.name);
        if (!decl || decl->fields.size() != e.binders.size()) break;
        for (auto& parts : split_among(p, g, {{a[0].get()}, {a[1].get()}})) {
          for (const auto& t0 : infer(parts[0].p, parts[0].g, m, *a[0])) {
            if (t0.type->kind != TK::named || t0.type->name != e.name) continue;
            std::optional<VarEnv> inner = parts[1].g;
            for (std::size_t i = 0; inner && i < e.binders.size(); ++i)
              inner = extend(*inner, e.binders[i],
                             Binding{calc::join_mode_usage(decl->fields[i].first, t0.mu), decl->fields[i].second});
            if (!inner) continue;
            for (const auto& t : infer(parts[1].p, *inner, m, *a[1]))
              if (static_at(t.mu.mode(), *t.type)) add(out, t);
          }
        }
        break;
      }
      case EK::lambda:
        lambda_rules(p, g, e, out);
        break;
      case EK::app:
        for (auto& parts : split_among(p, g, {{a[0].get()}, {a[1].get()}})) {
          TypingSet fs = infer(parts[0].p, parts[0].g, m, *a[0]);
          std::optional<TypingSet> args;
          for (const auto& f : fs) {
            if (!is_fn(f.type)) continue;
            const FnSig& sig = *f.type->fn;
            if (sig.callability == Callability::once && !f.mu.is_linear()) continue;
            if (!calc::mode_leq(f.mu.mode(), sig.mode) || !calc::mode_leq(m, sig.mode)) continue;
            if (!args) args = infer(parts[1].p, parts[1].g, m, *a[1]);
            if (contains(*args, Typing{sig.arg_mu, sig.arg})) add(out, Typing{sig.res_mu, sig.res});
          }
        }
        break;
    }
    return out;
  }

  void lambda_rules(const PermEnv& p, const VarEnv& g, const calc::Expr& e, TypingSet& out) {
    const calc::Lambda& l = *e.lambda;
    if (!wf_type(d_, *l.param_type)) return;
    const bool env_nonlinear = !has_linear(p) && !has_linear(g);
    if (l.mode == Mode::spec) {
      if (!env_nonlinear || l.callability != Callability::many || l.lifetime != Lifetime::static_ ||
          !l.param_mu.is_spec())
        return;
      auto inner = extend(g, l.param, Binding{ModeUsage::spec(), l.param_type});
      if (!inner) return;
      for (const auto& t : infer(p, *inner, Mode::spec, *l.body))
        if (t.mu.is_spec()) add(out, Typing{ModeUsage::spec(), fn_type(l, t.mu, t.type)});
      return;
    }
    BodyContext ctx = function_body_context(l.callability, l.lifetime, p, g);
    if (ctx.ok) {
      auto inner = extend(ctx.vars, l.param, Binding{l.param_mu, l.param_type});
      if (inner) {
        for (const auto& t : infer(ctx.perms, *inner, l.mode, *l.body)) {
          if (!nonspec_function_modes(l.mode, l.param_mu, t.mu, *t.type)) continue;
          TypePtr ft = fn_type(l, t.mu, t.type);
          if (ctx.usage) {
            add(out, Typing{ModeUsage::of(l.mode, *ctx.usage), ft});
          } else {
            add(out, Typing{ModeUsage::linear(l.mode), ft});
            add(out, Typing{ModeUsage::shared(l.mode), ft});
          }
        }
      }
    }
    if (env_nonlinear) {
      // Dead-end rules: the body is only checked laxly.
      VarEnv inner = g;
      inner.insert_or_assign(l.param, Binding{l.param_mu, l.param_type});
      for (const auto& t : infer_lax_env(inner, l.mode, *l.body)) {
        if (!nonspec_function_modes(l.mode, l.param_mu, t.mu, *t.type)) continue;
        TypePtr ft = fn_type(l, t.mu, t.type);
        add(out, Typing{ModeUsage::spec(), ft});
        if (l.callability == Callability::once) add(out, Typing{ModeUsage::shared(l.mode), ft});
      }
    }
  }
};

}  // namespace

DeclarativeVerdict typecheck_declarative(const DeclTable& d, const TypePtr& h, const PermEnv& p, const VarEnv& g,
                                         Mode m, Strictness s, const ExprPtr& e, const DeclarativeOptions& opts) {
  DeclarativeVerdict v;
  if (calc::expr_size(*e) > opts.size_limit) {
    v.size_exceeded = true;
    v.diagnostics.push_back(Diagnostic{"typing.size-limit", e->span,
                                       "term size " + std::to_string(calc::expr_size(*e)) +
                                           " exceeds the declarative checker limit " +
                                           std::to_string(opts.size_limit)});
    return v;
  }
  Declarative checker(d, h, opts, e.get());
  if (s == Strictness::lax) {
    v.results = checker.infer_lax_env(g, m, *e);
  } else {
    v.results = checker.infer(p, g, m, *e);
  }
  if (v.results.empty()) {
    if (auto diag = checker.frontier(*e))
      v.diagnostics.push_back(*diag);
    else
      v.diagnostics.push_back(Diagnostic{rule_name(e->kind), e->span, "no derivation"});
  }
  return v;
}

}  // namespace mv::typing
