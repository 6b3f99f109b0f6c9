#include <functional>
#include <map>

#include "internal.hpp"
#include "mv/calc/sexpr.hpp"

namespace mv::typing {

using namespace detail;

namespace {

using Names = std::set<std::string>;
using Perms = std::set<std::int64_t>;

struct Outcome {
  Typing t;
  Names used;
  Perms used_perms;
};

bool outcome_eq(const Outcome& a, const Outcome& b) {
  return typing_eq(a.t, b.t) && a.used == b.used && a.used_perms == b.used_perms;
}

struct Env {
  VarEnv g;
  PermEnv p;
  Names demoted;  // linear bindings already consumed by an earlier sibling
  Perms demoted_perms;
};

Env demote(const Env& env, const Names& used, const Perms& used_perms) {
  Env out = env;
  for (const auto& x : used) {
    out.g.at(x).mu = ModeUsage::spec();
    out.demoted.insert(x);
  }
  for (auto i : used_perms) {
    out.p.erase(i);
    out.demoted_perms.insert(i);
  }
  return out;
}

/// The environment seen by a subterm that may not consume anything.
Env nonlinear_view(const Env& env) {
  Env out = env;
  for (auto& [x, b] : out.g)
    if (b.mu.is_linear()) b.mu = ModeUsage::spec();
  for (auto it = out.p.begin(); it != out.p.end();)
    it = it->second == Usage::linear ? out.p.erase(it) : std::next(it);
  return out;
}

struct NodeInfo {
  int attempts = 0;
  int successes = 0;
  std::string rule;
  std::string reason;
  bool reuse = false;
};

class Algorithmic {
public:
  Algorithmic(const DeclTable& d, const TypePtr& h) : d_(d), h_(h) {}

  std::vector<Outcome> check(const Env& env, Mode m, const calc::Expr& e) {
    ++info_[&e].attempts;
    std::vector<Outcome> out;
    rules(env, m, e, out);
    if (!out.empty()) ++info_[&e].successes;
    return out;
  }

  Diagnostic diagnose(const calc::Expr& root) const {
    const calc::Expr* found = nullptr;
    std::function<void(const calc::Expr&)> walk = [&](const calc::Expr& e) {
      if (found) return;
      auto it = info_.find(&e);
      if (it != info_.end() && it->second.attempts > 0 && it->second.successes == 0) {
        bool children_fine = std::all_of(e.args.begin(), e.args.end(), [&](const ExprPtr& c) {
          auto jt = info_.find(c.get());
          return jt == info_.end() || jt->second.successes > 0;
        });
        if (children_fine) {
          found = &e;
          return;
        }
      }
      for (const auto& c : e.args) walk(*c);
    };
    walk(root);
    if (!found) return Diagnostic{rule_name(root.kind), root.span, "no typing found"};
    if (const calc::Expr* r = find_reuse(*found))
      return Diagnostic{"linearity.reuse", r->span,
                        r->kind == EK::var ? "linear binding '" + r->name + "' is used after it was consumed"
                                           : "linear permission " + std::to_string(r->perm_index) +
                                                 " is used after it was consumed"};
    const NodeInfo& inf = info_.at(found);
    if (!inf.rule.empty()) return Diagnostic{inf.rule, found->span, inf.reason};
    return Diagnostic{rule_name(found->kind), found->span, "no rule types `" + calc::print(*found) + "` here"};
  }

private:
  const DeclTable& d_;
  TypePtr h_;
  std::map<const calc::Expr*, NodeInfo> info_;

  const calc::Expr* find_reuse(const calc::Expr& e) const {
    auto it = info_.find(&e);
    if (it != info_.end() && it->second.reuse) return &e;
    for (const auto& c : e.args)
      if (const calc::Expr* r = find_reuse(*c)) return r;
    return nullptr;
  }

  void fail(const calc::Expr& e, std::string rule, std::string reason) {
    NodeInfo& inf = info_[&e];
    inf.rule = std::move(rule);
    inf.reason = std::move(reason);
  }

  static void push(std::vector<Outcome>& out, Outcome o) {
    for (const auto& x : out)
      if (outcome_eq(x, o)) return;
    out.push_back(std::move(o));
  }

  static Names join(const Names& a, const Names& b) {
    Names r = a;
    r.insert(b.begin(), b.end());
    return r;
  }
  static Perms join(const Perms& a, const Perms& b) {
    Perms r = a;
    r.insert(b.begin(), b.end());
    return r;
  }

  bool require_exec(const calc::Expr& e, Mode m, const char* op) {
    if (m == Mode::exec) return true;
    fail(e, rule_name(e.kind), std::string(op) + " requires access level exec, found " + calc::to_string(m));
    return false;
  }

  /// Binds `x` for a scope; shadowing an unconsumed linear binding is refused.
  std::optional<Env> bind(const Env& env, const calc::Expr& at, const std::string& x, Binding b) {
    Env out = env;
    auto it = out.g.find(x);
    if (it != out.g.end() && it->second.mu.is_linear()) {
      fail(at, "scope.shadow-linear", "binding '" + x + "' would shadow an unconsumed linear binding");
      return std::nullopt;
    }
    out.demoted.erase(x);
    out.g.insert_or_assign(x, std::move(b));
    return out;
  }

  /// A scope's linear binders must be consumed inside it; they are then
  /// removed from the consumed set reported outward.
  bool close_scope(const calc::Expr& at, Outcome& o, const std::vector<std::pair<std::string, ModeUsage>>& binders) {
    for (const auto& [x, mu] : binders) {
      if (mu.is_linear() && !o.used.count(x)) {
        fail(at, "linearity.unconsumed", "linear binding '" + x + "' is never consumed in its scope");
        return false;
      }
      o.used.erase(x);
    }
    return true;
  }

  void unary(const Env& env, Mode m, const calc::Expr& e, std::vector<Outcome>& out,
             const std::function<std::optional<Typing>(const Typing&)>& f) {
    for (const auto& o : check(env, m, *e.args[0]))
      if (auto t = f(o.t)) push(out, Outcome{*t, o.used, o.used_perms});
  }

  // Thread two children left to right; f decides the result per pair.
  void binary(const Env& env, Mode m, const calc::Expr& e, std::vector<Outcome>& out,
              const std::function<bool(const Typing&)>& first_ok,
              const std::function<std::optional<Typing>(const Typing&, const Typing&)>& f) {
    std::map<std::pair<Names, Perms>, std::vector<Outcome>> second_cache;
    for (const auto& o1 : check(env, m, *e.args[0])) {
      if (!first_ok(o1.t)) continue;
      auto key = std::make_pair(o1.used, o1.used_perms);
      auto it = second_cache.find(key);
      if (it == second_cache.end())
        it = second_cache.emplace(key, check(demote(env, o1.used, o1.used_perms), m, *e.args[1])).first;
      for (const auto& o2 : it->second)
        if (auto t = f(o1.t, o2.t)) push(out, Outcome{*t, join(o1.used, o2.used), join(o1.used_perms, o2.used_perms)});
    }
  }

  void rules(const Env& env, Mode m, const calc::Expr& e, std::vector<Outcome>& out) {
    const auto& a = e.args;
    switch (e.kind) {
      case EK::var: {
        auto it = env.g.find(e.name);
        if (it == env.g.end()) {
          fail(e, "scope.unbound", "unbound variable '" + e.name + "'");
          break;
        }
        const Binding& b = it->second;
        if (env.demoted.count(e.name)) info_[&e].reuse = true;
        if (calc::mode_leq(m, b.mu.mode()))
          push(out, Outcome{Typing{b.mu, b.type}, b.mu.is_linear() ? Names{e.name} : Names{}, {}});
        if (!b.mu.is_spec()) push(out, Outcome{Typing{ModeUsage::spec(), b.type}, {}, {}});
        break;
      }
      case EK::int_lit:
        for (const auto& mu : ModeUsage::all()) push(out, Outcome{Typing{mu, calc::Type::int_()}, {}, {}});
        break;
      case EK::unit:
        for (const auto& mu : ModeUsage::all()) push(out, Outcome{Typing{mu, calc::Type::unit()}, {}, {}});
        break;
      case EK::bottom:
        push(out, Outcome{Typing{ModeUsage::spec(), calc::Type::never()}, {}, {}});
        break;
      case EK::default_:
        if (wf_type(d_, *e.type))
          push(out, Outcome{Typing{ModeUsage::spec(), e.type}, {}, {}});
        else
          fail(e, "typing.wf", "ill-formed type " + calc::print(*e.type));
        break;
      case EK::add:
        binary(
            env, m, e, out, [](const Typing& t) { return t.type->kind == TK::int_; },
            [](const Typing& l, const Typing& r) -> std::optional<Typing> {
              if (typing_eq(l, r)) return l;
              return std::nullopt;
            });
        break;
      case EK::crash_never:
        unary(env, m, e, out, [](const Typing& t) -> std::optional<Typing> {
          if (t.type->kind == TK::never && !t.mu.is_spec()) return Typing{t.mu, calc::Type::unit()};
          return std::nullopt;
        });
        break;
      case EK::hdata:
        if (require_exec(e, m, "hdata")) push(out, Outcome{Typing{ModeUsage::spec(), h_}, {}, {}});
        break;
      case EK::hread:
        if (require_exec(e, m, "hread")) push(out, Outcome{Typing{ModeUsage::linear(Mode::exec), h_}, {}, {}});
        break;
      case EK::hwrite:
        if (!require_exec(e, m, "hwrite")) break;
        for (const auto& o : check(env, m, *a[0]))
          if (typing_eq(o.t, Typing{ModeUsage::linear(Mode::exec), h_}))
            for (const auto& mu : ModeUsage::all())
              push(out, Outcome{Typing{mu, calc::Type::unit()}, o.used, o.used_perms});
        break;
      case EK::perm: {
        if (!calc::is_value(*a[0])) {
          fail(e, "typing.perm", "a permission literal holds a value");
          break;
        }
        if (env.demoted_perms.count(e.perm_index)) info_[&e].reuse = true;
        Env inner = nonlinear_view(env);
        auto it = env.p.find(e.perm_index);
        std::vector<Outcome> vs = check(inner, m, *a[0]);
        if (it != env.p.end()) {
          for (const auto& o : vs)
            if (o.t.mu == ModeUsage::linear(Mode::exec) && is_copyable(d_, Mode::exec, *o.t.type))
              push(out, Outcome{Typing{ModeUsage::of(Mode::proof, it->second), calc::Type::perm(e.perm_index, o.t.type)},
                                {},
                                it->second == Usage::linear ? Perms{e.perm_index} : Perms{}});
        }
        for (const auto& o : vs)
          push(out, Outcome{Typing{ModeUsage::spec(), calc::Type::perm(e.perm_index, o.t.type)}, {}, {}});
        break;
      }
      case EK::pdata:
        unary(env, m, e, out, [](const Typing& t) -> std::optional<Typing> {
          if (t.mu.is_spec() && t.type->kind == TK::perm) return Typing{ModeUsage::spec(), t.type->inner};
          return std::nullopt;
        });
        if (out.empty() && info_[&e].rule.empty())
          fail(e, "typing.pdata", "pdata needs a spec view of a permission");
        break;
      case EK::pread:
        if (!require_exec(e, m, "pread")) break;
        unary(env, m, e, out, [&](const Typing& t) -> std::optional<Typing> {
          if (t.mu == ModeUsage::shared(Mode::proof) && t.type->kind == TK::perm && t.type->perm_index == e.perm_index)
            return Typing{ModeUsage::shared(Mode::exec), t.type->inner};
          return std::nullopt;
        });
        if (out.empty())
          fail(e, "typing.pread",
               "pread needs a proof shared permission for index " + std::to_string(e.perm_index) +
                   "; a spec snapshot of a permission admits only pdata");
        break;
      case EK::pwrite:
        if (!require_exec(e, m, "pwrite")) break;
        binary(
            env, m, e, out,
            [&](const Typing& t) {
              return t.mu == ModeUsage::linear(Mode::exec) && is_copyable(d_, Mode::exec, *t.type);
            },
            [&](const Typing& v, const Typing& p) -> std::optional<Typing> {
              if (p.mu == ModeUsage::linear(Mode::proof) && p.type->kind == TK::perm &&
                  p.type->perm_index == e.perm_index)
                return Typing{ModeUsage::linear(Mode::proof), calc::Type::perm(e.perm_index, v.type)};
              return std::nullopt;
            });
        if (out.empty())
          fail(e, "typing.pwrite",
               "pwrite needs an exec linear copyable value and a proof linear permission for index " +
                   std::to_string(e.perm_index));
        break;
      case EK::drop:
        unary(env, m, e, out, [&](const Typing& t) -> std::optional<Typing> {
          if (t.mu.is_linear() && is_copyable(d_, t.mu.mode(), *t.type))
            return Typing{ModeUsage::shared(t.mu.mode()), calc::Type::unit()};
          return std::nullopt;
        });
        if (out.empty()) fail(e, "typing.drop", "drop needs a linear operand of a copyable type");
        break;
      case EK::copy:
        unary(env, m, e, out, [&](const Typing& t) -> std::optional<Typing> {
          if (t.mu.is_shared() && is_copyable(d_, t.mu.mode(), *t.type)) return Typing{ModeUsage::linear(t.mu.mode()), t.type};
          return std::nullopt;
        });
        if (out.empty()) fail(e, "typing.copy", "copy needs a shared operand of a copyable type");
        break;
      case EK::seq:
      case EK::let:
        scoped_sequence(env, m, e, out);
        break;
      case EK::none:
        if (!wf_type(d_, *e.type)) {
          fail(e, "typing.wf", "ill-formed type " + calc::print(*e.type));
          break;
        }
        for (const auto& mu : ModeUsage::all()) push(out, Outcome{Typing{mu, calc::Type::option(e.type)}, {}, {}});
        break;
      case EK::some:
        unary(env, m, e, out, [&](const Typing& t) -> std::optional<Typing> {
          if (calc::type_eq(*t.type, *e.type)) return Typing{t.mu, calc::Type::option(e.type)};
          return std::nullopt;
        });
        break;
      case EK::if_some:
        if_some(env, m, e, out);
        break;
      case EK::struct_:
        construct(env, m, e, out);
        break;
      case EK::let_struct:
        destruct(env, m, e, out);
        break;
      case EK::lambda:
        lambda(env, e, out);
        break;
      case EK::app: {
        bool mode_blocked = false;
        binary(
            env, m, e, out,
            [&](const Typing& f) {
              if (!is_fn(f.type)) return false;
              const FnSig& sig = *f.type->fn;
              if (!calc::mode_leq(m, sig.mode)) {
                mode_blocked = true;
                return false;
              }
              return (sig.callability == Callability::many || f.mu.is_linear()) && calc::mode_leq(f.mu.mode(), sig.mode);
            },
            [](const Typing& f, const Typing& arg) -> std::optional<Typing> {
              const FnSig& sig = *f.type->fn;
              if (typing_eq(arg, Typing{sig.arg_mu, sig.arg})) return Typing{sig.res_mu, sig.res};
              return std::nullopt;
            });
        if (out.empty() && mode_blocked)
          fail(e, "mode.call", std::string("cannot call a function of lower mode at access level ") + calc::to_string(m));
        break;
      }
    }
  }

  void scoped_sequence(const Env& env, Mode m, const calc::Expr& e, std::vector<Outcome>& out) {
    const bool is_let = e.kind == EK::let;
    if (is_let && !calc::mode_leq(m, e.mode)) {
      fail(e, "mode.let", std::string("a ") + calc::to_string(e.mode) + " binding cannot be introduced at access level " +
                              calc::to_string(m));
      return;
    }
    Env first = env;
    bool borrowing = false;
    if (e.borrow) {
      for (const auto& x : e.borrow->vars) {
        auto it = env.g.find(x);
        if (it == env.g.end() || !it->second.mu.is_linear()) {
          fail(e, "borrow.invalid", "borrowed name '" + x + "' is not an unconsumed linear binding");
          return;
        }
        first.g.at(x).mu = ModeUsage::shared(it->second.mu.mode());
        borrowing = true;
      }
      for (auto i : e.borrow->perms) {
        auto it = env.p.find(i);
        if (it == env.p.end() || it->second != Usage::linear) {
          fail(e, "borrow.invalid", "borrowed permission " + std::to_string(i) + " is not an unconsumed linear permission");
          return;
        }
        first.p[i] = Usage::shared;
        borrowing = true;
      }
    }
    for (const auto& o1 : check(first, m, *e.args[0])) {
      if (!is_let && o1.t.type->kind != TK::unit) continue;
      if (is_let) {
        if (o1.t.mu.mode() != e.mode) continue;
        if (borrowing && !is_unrestricted(o1.t.mu, *o1.t.type)) {
          fail(e, "borrow.escape", "a value bound under a borrow must be unrestricted");
          continue;
        }
      }
      Env second = demote(env, o1.used, o1.used_perms);
      if (is_let) {
        auto bound = bind(second, e, e.name, Binding{o1.t.mu, o1.t.type});
        if (!bound) continue;
        second = std::move(*bound);
      }
      for (auto o2 : check(second, m, *e.args[1])) {
        if (is_let) {
          if (!static_at(o2.t.mu.mode(), *o2.t.type)) {
            fail(e, "lifetime.escape", "the body's result must have static lifetime at its mode");
            continue;
          }
          if (!close_scope(e, o2, {{e.name, o1.t.mu}})) continue;
        }
        push(out, Outcome{o2.t, join(o1.used, o2.used), join(o1.used_perms, o2.used_perms)});
      }
    }
  }

  void if_some(const Env& env, Mode m, const calc::Expr& e, std::vector<Outcome>& out) {
    for (const auto& o1 : check(env, m, *e.args[0])) {
      if (o1.t.type->kind != TK::option) continue;
      Env branch = demote(env, o1.used, o1.used_perms);
      Mode m1 = o1.t.mu.mode();
      for (Mode mb : {Mode::exec, Mode::proof, Mode::spec}) {
        if (!calc::mode_leq(m, mb)) continue;
        if (!(calc::mode_leq(m1, mb) || (m1 == Mode::spec && mb == Mode::proof))) continue;
        auto bound = bind(branch, e, e.name, Binding{o1.t.mu, o1.t.type->inner});
        if (!bound) continue;
        std::vector<Outcome> thens = check(*bound, mb, *e.args[1]);
        if (thens.empty()) continue;
        std::vector<Outcome> elses = check(branch, mb, *e.args[2]);
        for (auto o2 : thens) {
          if (!close_scope(e, o2, {{e.name, o1.t.mu}})) continue;
          for (const auto& o3 : elses) {
            if (!typing_eq(o2.t, o3.t)) continue;
            if (o2.used != o3.used || o2.used_perms != o3.used_perms) {
              fail(e, "linearity.branches", "both branches must consume the same linear resources");
              continue;
            }
            push(out, Outcome{o2.t, join(o1.used, o2.used), join(o1.used_perms, o2.used_perms)});
          }
        }
      }
    }
  }

  void construct(const Env& env, Mode m, const calc::Expr& e, std::vector<Outcome>& out) {
    const auto* decl = d_.find(e.name);
    if (!decl || decl->fields.size() != e.args.size()) {
      fail(e, "typing.struct", decl ? "wrong number of fields for '" + e.name + "'" : "unknown datatype '" + e.name + "'");
      return;
    }
    struct Partial {
      std::vector<Typing> fields;
      Names used;
      Perms used_perms;
    };
    std::vector<Partial> partials{Partial{}};
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      std::vector<Partial> next;
      for (const auto& part : partials) {
        for (const auto& o : check(demote(env, part.used, part.used_perms), m, *e.args[i])) {
          if (!calc::type_eq(*o.t.type, *decl->fields[i].second)) continue;
          Partial q = part;
          q.fields.push_back(o.t);
          q.used = join(q.used, o.used);
          q.used_perms = join(q.used_perms, o.used_perms);
          next.push_back(std::move(q));
        }
      }
      partials = std::move(next);
    }
    for (const auto& mu : ModeUsage::all()) {
      for (const auto& part : partials) {
        bool ok = true;
        for (std::size_t i = 0; ok && i < part.fields.size(); ++i)
          ok = part.fields[i].mu == calc::join_mode_usage(decl->fields[i].first, mu);
        if (ok) push(out, Outcome{Typing{mu, calc::Type::named(e.name)}, part.used, part.used_perms});
      }
    }
  }

  void destruct(const Env& env, Mode m, const calc::Expr& e, std::vector<Outcome>& out) {
    const auto* decl = d_.find(e.name);
    if (!decl || decl->fields.size() != e.binders.size()) {
      fail(e, "typing.let_struct",
           decl ? "wrong number of binders for '" + e.name + "'" : "unknown datatype '" + e.name + "'");
      return;
    }
    for (const auto& o0 : check(env, m, *e.args[0])) {
      if (o0.t.type->kind != TK::named || o0.t.type->name != e.name) continue;
      std::optional<Env> body = demote(env, o0.used, o0.used_perms);
      std::vector<std::pair<std::string, ModeUsage>> binders;
      for (std::size_t i = 0; body && i < e.binders.size(); ++i) {
        ModeUsage mu = calc::join_mode_usage(decl->fields[i].first, o0.t.mu);
        binders.emplace_back(e.binders[i], mu);
        body = bind(*body, e, e.binders[i], Binding{mu, decl->fields[i].second});
      }
      if (!body) continue;
      for (auto o : check(*body, m, *e.args[1])) {
        if (!static_at(o.t.mu.mode(), *o.t.type)) {
          fail(e, "lifetime.escape", "the body's result must have static lifetime at its mode");
          continue;
        }
        if (!close_scope(e, o, binders)) continue;
        push(out, Outcome{o.t, join(o0.used, o.used), join(o0.used_perms, o.used_perms)});
      }
    }
  }

  void lambda(const Env& env, const calc::Expr& e, std::vector<Outcome>& out) {
    const calc::Lambda& l = *e.lambda;
    if (!wf_type(d_, *l.param_type)) {
      fail(e, "typing.wf", "ill-formed parameter type " + calc::print(*l.param_type));
      return;
    }
    if (l.mode == Mode::spec) {
      if (l.callability != Callability::many || l.lifetime != Lifetime::static_ || !l.param_mu.is_spec()) {
        fail(e, "typing.lambda", "spec functions must be many, static, and take a spec parameter");
        return;
      }
      auto inner = bind(nonlinear_view(env), e, l.param, Binding{ModeUsage::spec(), l.param_type});
      if (!inner) return;
      for (const auto& o : check(*inner, Mode::spec, *l.body))
        if (o.t.mu.is_spec()) push(out, Outcome{Typing{ModeUsage::spec(), fn_type(l, o.t.mu, o.t.type)}, {}, {}});
      return;
    }
    Env body_env = env;
    const bool once = l.callability == Callability::once;
    if (!once) body_env = nonlinear_view(env);
    if (l.lifetime == Lifetime::static_) {
      for (auto& [x, b] : body_env.g)
        if (!b.mu.is_linear()) b.mu = ModeUsage::spec();
      for (auto it = body_env.p.begin(); it != body_env.p.end();)
        it = it->second == Usage::shared ? body_env.p.erase(it) : std::next(it);
    }
    if (auto inner = bind(body_env, e, l.param, Binding{l.param_mu, l.param_type})) {
      for (auto o : check(*inner, l.mode, *l.body)) {
        if (!nonspec_function_modes(l.mode, l.param_mu, o.t.mu, *o.t.type)) {
          fail(e, "mode.function", "function result or parameter mode is incompatible with a " +
                                       std::string(calc::to_string(l.mode)) + " function");
          continue;
        }
        if (!close_scope(e, o, {{l.param, l.param_mu}})) continue;
        if (once && l.lifetime == Lifetime::static_) {
          bool captures_ok = std::all_of(o.used.begin(), o.used.end(), [&](const std::string& x) {
            return calc::lifetime_of(*env.g.at(x).type) == Lifetime::static_;
          });
          if (!captures_ok) {
            fail(e, "lifetime.capture", "a static function cannot capture a binding of restricted lifetime");
            continue;
          }
        }
        TypePtr ft = fn_type(l, o.t.mu, o.t.type);
        push(out, Outcome{Typing{ModeUsage::linear(l.mode), ft}, o.used, o.used_perms});
        if (!once) push(out, Outcome{Typing{ModeUsage::shared(l.mode), ft}, o.used, o.used_perms});
      }
    }
    // Dead-end rules: spec snapshots whose bodies are checked laxly.
    VarEnv inner = env.g;
    for (auto& [x, b] : inner)
      if (b.mu.is_linear()) b.mu = ModeUsage::spec();
    inner.insert_or_assign(l.param, Binding{l.param_mu, l.param_type});
    for (const auto& t : infer_lax(d_, h_, inner, l.mode, *l.body)) {
      if (!nonspec_function_modes(l.mode, l.param_mu, t.mu, *t.type)) continue;
      TypePtr ft = fn_type(l, t.mu, t.type);
      push(out, Outcome{Typing{ModeUsage::spec(), ft}, {}, {}});
      if (once) push(out, Outcome{Typing{ModeUsage::shared(l.mode), ft}, {}, {}});
    }
  }
};

}  // namespace

AlgorithmicVerdict typecheck_algorithmic(const DeclTable& d, const TypePtr& h, const PermEnv& p, const VarEnv& g,
                                         Mode m, const ExprPtr& e, const std::optional<Typing>& expected) {
  AlgorithmicVerdict v;
  Algorithmic checker(d, h);
  Env env{g, p, {}, {}};
  Names must_use;
  for (const auto& [x, b] : g)
    if (b.mu.is_linear()) must_use.insert(x);
  Perms must_use_perms;
  for (const auto& [i, u] : p)
    if (u == Usage::linear) must_use_perms.insert(i);
  std::vector<Outcome> outcomes = checker.check(env, m, *e);
  std::vector<Outcome> complete;
  for (const auto& o : outcomes)
    if (o.used == must_use && o.used_perms == must_use_perms) complete.push_back(o);
  for (const auto& o : complete) {
    bool dup = std::any_of(v.alternatives.begin(), v.alternatives.end(),
                           [&](const Typing& t) { return typing_eq(t, o.t); });
    if (!dup) v.alternatives.push_back(o.t);
  }
  const Outcome* chosen = nullptr;
  for (const auto& o : complete) {
    if (!expected || typing_eq(o.t, *expected)) {
      chosen = &o;
      break;
    }
  }
  if (chosen) {
    v.ok = true;
    v.typing = chosen->t;
    v.consumed = chosen->used;
    v.consumed_perms = chosen->used_perms;
    return v;
  }
  if (outcomes.empty()) {
    v.diagnostic = checker.diagnose(*e);
  } else if (complete.empty()) {
    std::string missing;
    const Outcome& o = outcomes.front();
    for (const auto& x : must_use)
      if (!o.used.count(x)) missing += (missing.empty() ? "'" : ", '") + x + "'";
    for (auto i : must_use_perms)
      if (!o.used_perms.count(i)) missing += (missing.empty() ? "" : ", ") + std::string("permission ") + std::to_string(i);
    v.diagnostic = Diagnostic{"linearity.unconsumed", e->span, "linear resources never consumed: " + missing};
  } else {
    std::string found;
    for (const auto& t : v.alternatives) found += (found.empty() ? "" : "; ") + to_string(t);
    v.diagnostic = Diagnostic{"typing.expected", e->span,
                              "expected " + to_string(*expected) + " but the term types as: " + found};
  }
  return v;
}

ConfigurationVerdict check_configuration(const DeclTable& d, const TypePtr& h_type, const PermEnv& p,
                                         const VarEnv& g, Mode m, const ExprPtr& heap_value, const ExprPtr& e,
                                         const Typing& expected, Checker checker, const DeclarativeOptions& opts) {
  ConfigurationVerdict v;
  const Typing heap_typing{ModeUsage::linear(Mode::exec), h_type};
  if (!is_copyable(d, Mode::exec, *h_type)) {
    v.diagnostics.push_back(Diagnostic{"config.heap", heap_value->span, "heap type " + calc::print(*h_type) +
                                                                            " is not copyable at exec"});
  } else if (calc::lifetime_of(*h_type) != Lifetime::static_) {
    v.diagnostics.push_back(Diagnostic{"config.heap", heap_value->span, "heap type must have static lifetime"});
  } else {
    VarEnv spec_g = project(g, Selector::as_spec);
    if (checker == Checker::declarative) {
      auto r = typecheck_declarative(d, h_type, {}, spec_g, Mode::exec, Strictness::strict, heap_value, opts);
      v.heap_ok = contains(r.results, heap_typing);
      if (!v.heap_ok) {
        for (auto& diag : r.diagnostics) v.diagnostics.push_back(diag);
        if (r.diagnostics.empty())
          v.diagnostics.push_back(Diagnostic{"config.heap", heap_value->span, "heap value does not type at exec linear"});
      }
    } else {
      auto r = typecheck_algorithmic(d, h_type, {}, spec_g, Mode::exec, heap_value, heap_typing);
      v.heap_ok = r.ok;
      if (!r.ok && r.diagnostic) v.diagnostics.push_back(*r.diagnostic);
    }
  }
  if (checker == Checker::declarative) {
    auto r = typecheck_declarative(d, h_type, p, g, m, Strictness::strict, e, opts);
    v.expr_ok = contains(r.results, expected);
    if (!v.expr_ok) {
      if (r.results.empty()) {
        for (auto& diag : r.diagnostics) v.diagnostics.push_back(diag);
      } else {
        std::string found;
        for (const auto& t : r.results) found += (found.empty() ? "" : "; ") + to_string(t);
        v.diagnostics.push_back(Diagnostic{"typing.expected", e->span,
                                           "expected " + to_string(expected) + " but the term types as: " + found});
      }
    }
  } else {
    auto r = typecheck_algorithmic(d, h_type, p, g, m, e, expected);
    v.expr_ok = r.ok;
    if (!r.ok && r.diagnostic) v.diagnostics.push_back(*r.diagnostic);
  }
  return v;
}

}  // namespace mv::typing
