#include <map>
#include <optional>
#include <set>

#include "internal.hpp"
#include "mv/calc/sexpr.hpp"

namespace mv::typing {

using namespace detail;

bool typing_eq(const Typing& a, const Typing& b) { return a.mu == b.mu && calc::type_eq(*a.type, *b.type); }

bool typing_less(const Typing& a, const Typing& b) {
  if (a.mu != b.mu) return a.mu < b.mu;
  return calc::type_compare(*a.type, *b.type) < 0;
}

std::string to_string(const Typing& t) { return calc::to_string(t.mu) + " " + calc::print(*t.type); }

bool contains(const TypingSet& s, const Typing& t) {
  return std::binary_search(s.begin(), s.end(), t, typing_less);
}

namespace detail {

void key_node(std::string& key, const Expr& e, Mode m) {
  key += static_cast<char>('0' + static_cast<int>(m));
  key += calc::print(e);
  key += '|';
}

void key_env(std::string& key, const VarEnv& g) {
  for (const auto& [x, b] : g) {
    key += x;
    key += ':';
    key += calc::to_string(b.mu);
    key += ':';
    key += calc::print(*b.type);
    key += ';';
  }
}

void key_perms(std::string& key, const PermEnv& p) {
  for (const auto& [i, u] : p) {
    key += std::to_string(i);
    key += u == Usage::linear ? 'l' : 's';
  }
  key += '|';
}

const char* rule_name(EK k) {
  switch (k) {
    case EK::var: return "typing.var";
    case EK::int_lit: return "typing.int";
    case EK::add: return "typing.add";
    case EK::unit: return "typing.unit";
    case EK::bottom: return "typing.bottom";
    case EK::default_: return "typing.default";
    case EK::crash_never: return "typing.crash_never";
    case EK::hdata: return "typing.hdata";
    case EK::hread: return "typing.hread";
    case EK::hwrite: return "typing.hwrite";
    case EK::perm: return "typing.perm";
    case EK::pdata: return "typing.pdata";
    case EK::pread: return "typing.pread";
    case EK::pwrite: return "typing.pwrite";
    case EK::drop: return "typing.drop";
    case EK::copy: return "typing.copy";
    case EK::seq: return "typing.seq";
    case EK::let: return "typing.let";
    case EK::none: return "typing.none";
    case EK::some: return "typing.some";
    case EK::if_some: return "typing.if_some";
    case EK::struct_: return "typing.struct";
    case EK::let_struct: return "typing.let_struct";
    case EK::lambda: return "typing.lambda";
    case EK::app: return "typing.app";
  }
  return "typing";
}
}  // namespace detail

namespace {

struct LaxVar {
  std::optional<Mode> mode;  // nullopt: any mode
  TypePtr type;
};
using LaxEnv = std::map<std::string, LaxVar>;

class Lax {
public:
  Lax(const DeclTable& d, const TypePtr& h, TypingCache* cache = nullptr, const calc::Expr* root = nullptr)
      : d_(d), h_(h), cache_(cache), root_(root) {}

  TypingSet infer(const LaxEnv& g, Mode m, const calc::Expr& e) {
    if (!cache_ || &e == root_) return close_usage(raw(g, m, e));
    std::string key;
    key_node(key, e, m);
    for (const auto& [x, v] : g) {
      key += x;
      key += ':';
      key += v.mode ? calc::to_string(*v.mode) : "*";
      key += ' ';
      key += calc::print(*v.type);
      key += ';';
    }
    auto it = cache_->lax.find(key);
    if (it != cache_->lax.end()) {
      ++cache_->hits;
      return it->second;
    }
    TypingSet out = close_usage(raw(g, m, e));
    cache_->lax.emplace(std::move(key), out);
    return out;
  }

private:
  const DeclTable& d_;
  TypePtr h_;
  TypingCache* cache_;
  const calc::Expr* root_;

  TypingSet raw(const LaxEnv& g, Mode m, const calc::Expr& e) {
    TypingSet out;
    const auto& a = e.args;
    switch (e.kind) {
      case EK::var: {
        auto it = g.find(e.name);
        if (it == g.end()) break;
        const LaxVar& v = it->second;
        add(out, Typing{ModeUsage::spec(), v.type});
        for (const auto& mu : ModeUsage::all())
          if (calc::mode_leq(m, mu.mode()) && (!v.mode || *v.mode == mu.mode())) add(out, Typing{mu, v.type});
        break;
      }
      case EK::int_lit:
        add_all_mus(out, calc::Type::int_());
        break;
      case EK::unit:
        add_all_mus(out, calc::Type::unit());
        break;
      case EK::bottom:
        add(out, Typing{ModeUsage::spec(), calc::Type::never()});
        break;
      case EK::default_:
        if (wf_type(d_, *e.type)) add(out, Typing{ModeUsage::spec(), e.type});
        break;
      case EK::add: {
        TypingSet l = infer(g, m, *a[0]);
        TypingSet r = infer(g, m, *a[1]);
        for (const auto& t : l)
          if (t.type->kind == TK::int_ && contains(r, t)) add(out, t);
        break;
      }
      case EK::crash_never:
        for (const auto& t : infer(g, m, *a[0]))
          if (t.type->kind == TK::never && !t.mu.is_spec()) add(out, Typing{t.mu, calc::Type::unit()});
        break;
      case EK::hdata:
        if (m == Mode::exec) add(out, Typing{ModeUsage::spec(), h_});
        break;
      case EK::hread:
        if (m == Mode::exec) add(out, Typing{ModeUsage::linear(Mode::exec), h_});
        break;
      case EK::hwrite:
        if (m == Mode::exec && contains(infer(g, m, *a[0]), Typing{ModeUsage::linear(Mode::exec), h_}))
          add_all_mus(out, calc::Type::unit());
        break;
      case EK::perm:
        if (!calc::is_value(*a[0])) break;
        for (const auto& t : infer(g, m, *a[0])) {
          TypePtr pt = calc::Type::perm(e.perm_index, t.type);
          add(out, Typing{ModeUsage::spec(), pt});
          if (t.mu == ModeUsage::linear(Mode::exec) && is_copyable(d_, Mode::exec, *t.type)) {
            add(out, Typing{ModeUsage::linear(Mode::proof), pt});
            add(out, Typing{ModeUsage::shared(Mode::proof), pt});
          }
        }
        break;
      case EK::pdata:
        for (const auto& t : infer(g, m, *a[0]))
          if (t.mu.is_spec() && t.type->kind == TK::perm) add(out, Typing{ModeUsage::spec(), t.type->inner});
        break;
      case EK::pread:
        if (m != Mode::exec) break;
        for (const auto& t : infer(g, m, *a[0]))
          if (t.mu == ModeUsage::shared(Mode::proof) && t.type->kind == TK::perm && t.type->perm_index == e.perm_index)
            add(out, Typing{ModeUsage::shared(Mode::exec), t.type->inner});
        break;
      case EK::pwrite: {
        if (m != Mode::exec) break;
        TypingSet vs = infer(g, m, *a[0]);
        TypingSet ps = infer(g, m, *a[1]);
        bool perm_ok = std::any_of(ps.begin(), ps.end(), [&](const Typing& t) {
          return t.mu == ModeUsage::linear(Mode::proof) && t.type->kind == TK::perm && t.type->perm_index == e.perm_index;
        });
        if (!perm_ok) break;
        for (const auto& t : vs)
          if (t.mu == ModeUsage::linear(Mode::exec) && is_copyable(d_, Mode::exec, *t.type))
            add(out, Typing{ModeUsage::linear(Mode::proof), calc::Type::perm(e.perm_index, t.type)});
        break;
      }
      case EK::drop:
        for (const auto& t : infer(g, m, *a[0]))
          if (t.mu.is_linear() && is_copyable(d_, t.mu.mode(), *t.type))
            add(out, Typing{ModeUsage::shared(t.mu.mode()), calc::Type::unit()});
        break;
      case EK::copy:
        for (const auto& t : infer(g, m, *a[0]))
          if (t.mu.is_shared() && is_copyable(d_, t.mu.mode(), *t.type))
            add(out, Typing{ModeUsage::linear(t.mu.mode()), t.type});
        break;
      case EK::seq: {
        TypingSet first = infer(g, m, *a[0]);
        bool unit_ok = std::any_of(first.begin(), first.end(), [](const Typing& t) { return t.type->kind == TK::unit; });
        if (unit_ok) out = infer(g, m, *a[1]);
        break;
      }
      case EK::let: {
        std::vector<TypePtr> bound;
        for (const auto& t : infer(g, m, *a[0]))
          if (t.mu.mode() == e.mode && calc::mode_leq(m, e.mode)) bound.push_back(t.type);
        for (const auto& tau : unique_types(bound)) {
          LaxEnv inner = g;
          inner[e.name] = LaxVar{e.mode, tau};
          for (const auto& t : infer(inner, m, *a[1]))
            if (static_at(t.mu.mode(), *t.type)) add(out, t);
        }
        break;
      }
      case EK::none:
        if (wf_type(d_, *e.type)) add_all_mus(out, calc::Type::option(e.type));
        break;
      case EK::some:
        for (const auto& t : infer(g, m, *a[0]))
          if (calc::type_eq(*t.type, *e.type)) add(out, Typing{t.mu, calc::Type::option(e.type)});
        break;
      case EK::if_some: {
        TypingSet scrut = infer(g, m, *a[0]);
        for (Mode mb : {Mode::exec, Mode::proof, Mode::spec}) {
          if (!calc::mode_leq(m, mb)) continue;
          std::vector<std::pair<Mode, TypePtr>> payloads;
          for (const auto& t : scrut) {
            if (t.type->kind != TK::option) continue;
            Mode m1 = t.mu.mode();
            if (calc::mode_leq(m1, mb) || (m1 == Mode::spec && mb == Mode::proof))
              if (std::none_of(payloads.begin(), payloads.end(), [&](const auto& q) {
                    return q.first == m1 && calc::type_eq(*q.second, *t.type->inner);
                  }))
                payloads.emplace_back(m1, t.type->inner);
          }
          if (payloads.empty()) continue;
          TypingSet els = infer(g, mb, *a[2]);
          for (const auto& [m1, tau] : payloads) {
            LaxEnv inner = g;
            inner[e.name] = LaxVar{m1, tau};
            for (const auto& t : infer(inner, mb, *a[1]))
              if (contains(els, t)) add(out, t);
          }
        }
        break;
      }
      case EK::struct_: {
        const auto* decl = d_.find(e.name);
        if (!decl || decl->fields.size() != a.size()) break;
        std::vector<TypingSet> fields;
        for (const auto& c : a) fields.push_back(infer(g, m, *c));
        for (const auto& mu : ModeUsage::all()) {
          bool ok = true;
          for (std::size_t i = 0; ok && i < a.size(); ++i)
            ok = contains(fields[i], Typing{calc::join_mode_usage(decl->fields[i].first, mu), decl->fields[i].second});
          if (ok) add(out, Typing{mu, calc::Type::named(e.name)});
        }
        break;
      }
      case EK::let_struct: {
        const auto* decl = d_.find(e.name);
        if (!decl || decl->fields.size() != e.binders.size()) break;
        std::set<Mode> modes;
        for (const auto& t : infer(g, m, *a[0]))
          if (t.type->kind == TK::named && t.type->name == e.name) modes.insert(t.mu.mode());
        for (Mode m0 : modes) {
          LaxEnv inner = g;
          for (std::size_t i = 0; i < e.binders.size(); ++i)
            inner[e.binders[i]] = LaxVar{calc::mode_join(decl->fields[i].first, m0), decl->fields[i].second};
          for (const auto& t : infer(inner, m, *a[1]))
            if (static_at(t.mu.mode(), *t.type)) add(out, t);
        }
        break;
      }
      case EK::lambda: {
        const calc::Lambda& l = *e.lambda;
        if (!wf_type(d_, *l.param_type)) break;
        LaxEnv inner = g;
        inner[l.param] = LaxVar{l.param_mu.mode(), l.param_type};
        if (l.mode == Mode::spec) {
          if (l.callability != Callability::many || l.lifetime != Lifetime::static_ || !l.param_mu.is_spec()) break;
          for (const auto& t : infer(inner, Mode::spec, *l.body))
            if (t.mu.is_spec()) add(out, Typing{ModeUsage::spec(), fn_type(l, t.mu, t.type)});
          break;
        }
        for (const auto& t : infer(inner, l.mode, *l.body)) {
          if (!nonspec_function_modes(l.mode, l.param_mu, t.mu, *t.type)) continue;
          TypePtr ft = fn_type(l, t.mu, t.type);
          add(out, Typing{ModeUsage::linear(l.mode), ft});
          add(out, Typing{ModeUsage::shared(l.mode), ft});
          add(out, Typing{ModeUsage::spec(), ft});
        }
        break;
      }
      case EK::app: {
        if (a.size() != 2) break;
        TypingSet fs = infer(g, m, *a[0]);
        TypingSet args = infer(g, m, *a[1]);
        for (const auto& f : fs) {
          if (!is_fn(f.type)) continue;
          const FnSig& sig = *f.type->fn;
          if (sig.callability == Callability::once && !f.mu.is_linear()) continue;
          if (!calc::mode_leq(f.mu.mode(), sig.mode) || !calc::mode_leq(m, sig.mode)) continue;
          if (contains(args, Typing{sig.arg_mu, sig.arg})) add(out, Typing{sig.res_mu, sig.res});
        }
        break;
      }
    }
    return out;
  }

  static std::vector<TypePtr> unique_types(std::vector<TypePtr> ts) {
    std::sort(ts.begin(), ts.end(), calc::TypeLess{});
    ts.erase(std::unique(ts.begin(), ts.end(), [](const TypePtr& x, const TypePtr& y) { return calc::type_eq(*x, *y); }),
             ts.end());
    return ts;
  }
};

}  // namespace

namespace {

LaxEnv any_mode(const std::map<std::string, TypePtr>& vars) {
  LaxEnv g;
  for (const auto& [x, t] : vars) g.emplace(x, LaxVar{std::nullopt, t});
  return g;
}

LaxEnv with_modes(const VarEnv& vars) {
  LaxEnv g;
  for (const auto& [x, b] : vars) g.emplace(x, LaxVar{b.mu.mode(), b.type});
  return g;
}

}  // namespace

TypingSet infer_lax(const DeclTable& d, const TypePtr& h, const std::map<std::string, TypePtr>& vars, Mode m,
                    const ExprPtr& e) {
  return Lax(d, h).infer(any_mode(vars), m, *e);
}

TypingSet infer_lax(const DeclTable& d, const TypePtr& h, const std::map<std::string, TypePtr>& vars, Mode m,
                    const calc::Expr& e, TypingCache* cache, const calc::Expr* root) {
  return Lax(d, h, cache, root).infer(any_mode(vars), m, e);
}

TypingSet infer_lax(const DeclTable& d, const TypePtr& h, const VarEnv& vars, Mode m, const calc::Expr& e,
                    TypingCache* cache, const calc::Expr* root) {
  return Lax(d, h, cache, root).infer(with_modes(vars), m, e);
}

}  // namespace mv::typing
