#include "mv/typing/judgments.hpp"

#include <set>
#include <stdexcept>

#include "mv/calc/sexpr.hpp"

namespace mv::typing {

using calc::Expr;
using calc::FnSig;
using K = calc::Type::Kind;

std::string to_text(const Diagnostic& d) {
  return std::to_string(d.span.line) + ":" + std::to_string(d.span.col) + ": " + d.severity + " [" + d.rule + "] " +
         d.message;
}

nlohmann::json to_json(const Diagnostic& d) {
  return {{"rule", d.rule},
          {"span", {{"line", d.span.line}, {"col", d.span.col}}},
          {"message", d.message},
          {"severity", d.severity}};
}

nlohmann::json to_json(const std::vector<Diagnostic>& ds) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : ds) out.push_back(to_json(d));
  return out;
}

namespace {

bool copyable(const DeclTable& d, Mode m, const Type& t, std::set<std::string>& visiting) {
  if (m == Mode::spec) return true;
  switch (t.kind) {
    case K::int_:
    case K::unit:
    case K::never:
      return true;
    case K::perm:
      return false;
    case K::option:
      return copyable(d, m, *t.inner, visiting);
    case K::fn:
      return t.fn->callability == Callability::many;
    case K::named: {
      const auto* decl = d.find(t.name);
      if (!decl) return false;
      // Least relation: a cycle back to a datatype under consideration yields no derivation.
      if (!visiting.insert(t.name).second) return false;
      bool ok = true;
      for (const auto& [fm, ft] : decl->fields) {
        if (!copyable(d, fm, *ft, visiting)) {
          ok = false;
          break;
        }
      }
      visiting.erase(t.name);
      return ok;
    }
  }
  return false;
}

ExprPtr default_of(const DeclTable& d, const TypePtr& t, std::set<std::string>& visiting) {
  switch (t->kind) {
    case K::int_:
      return Expr::int_lit(0);
    case K::unit:
      return Expr::unit();
    case K::never:
      return Expr::bottom();
    case K::perm:
      return Expr::perm(t->perm_index, default_of(d, t->inner, visiting));
    case K::option:
      return Expr::none(t->inner);
    case K::fn: {
      const FnSig& f = *t->fn;
      return Expr::lambda_(calc::Lambda{f.mode, f.callability, f.lifetime, "_", f.arg_mu, f.arg,
                                        Expr::default_(f.res)});
    }
    case K::named: {
      const auto* decl = d.find(t->name);
      if (!decl) throw std::invalid_argument("unknown datatype '" + t->name + "'");
      if (!visiting.insert(t->name).second)
        throw std::invalid_argument("datatype '" + t->name + "' has no finite default value");
      std::vector<ExprPtr> fields;
      for (const auto& [fm, ft] : decl->fields) fields.push_back(default_of(d, ft, visiting));
      visiting.erase(t->name);
      return Expr::struct_(t->name, std::move(fields));
    }
  }
  throw std::invalid_argument("malformed type");
}

bool in_table(const DeclTable& t, const std::string& name) { return t.find(name) != nullptr; }

DeclTable concat(const DeclTable& a, const DeclTable& b) {
  DeclTable out = a;
  for (const auto& decl : b.decls()) out.push(decl);
  return out;
}

}  // namespace

bool is_copyable(const DeclTable& d, Mode m, const Type& t) {
  std::set<std::string> visiting;
  return copyable(d, m, t, visiting);
}

ExprPtr default_value(const DeclTable& d, const TypePtr& t) {
  std::set<std::string> visiting;
  return default_of(d, t, visiting);
}

bool static_at(Mode m, const Type& t) { return m == Mode::spec || calc::lifetime_of(t) == Lifetime::static_; }

bool is_unrestricted(ModeUsage mu, const Type& t) { return !mu.is_shared() && static_at(mu.mode(), t); }

bool wf_type(const DeclTable& d, const DeclTable& d_r, const DeclTable& d_p, const Type& t) {
  static const DeclTable empty;
  switch (t.kind) {
    case K::int_:
    case K::unit:
    case K::never:
      return true;
    case K::perm:
      return wf_type(d, d_r, d_p, *t.inner);
    case K::option:
      return wf_type(d, concat(d_r, d_p), empty, *t.inner);
    case K::named:
      return in_table(d, t.name) || in_table(d_r, t.name);
    case K::fn: {
      const FnSig& f = *t.fn;
      switch (f.mode) {
        case Mode::exec: {
          DeclTable shifted = concat(d_r, d_p);
          return wf_type(d, shifted, empty, *f.arg) && wf_type(d, shifted, empty, *f.res) &&
                 is_unrestricted(f.res_mu, *f.res);
        }
        case Mode::proof:
          return calc::mode_leq(Mode::proof, f.arg_mu.mode()) && calc::mode_leq(Mode::proof, f.res_mu.mode()) &&
                 wf_type(d, empty, empty, *f.arg) && wf_type(d, d_r, d_p, *f.res) && is_unrestricted(f.res_mu, *f.res);
        case Mode::spec:
          return f.callability == Callability::many && f.lifetime == Lifetime::static_ && f.arg_mu.is_spec() &&
                 f.res_mu.is_spec() && wf_type(d, empty, empty, *f.arg) && wf_type(d, d_r, d_p, *f.res);
      }
      return false;
    }
  }
  return false;
}

bool wf_type(const DeclTable& d, const Type& t) {
  static const DeclTable empty;
  return wf_type(d, empty, empty, t);
}

std::optional<Diagnostic> wf_decl_table(const DeclTable& d) {
  DeclTable earlier;
  std::set<std::string> names;
  for (const auto& decl : d.decls()) {
    if (!names.insert(decl.name).second)
      return Diagnostic{"decl.unique", {}, "datatype '" + decl.name + "' is declared twice"};
    DeclTable self({decl});
    for (std::size_t i = 0; i < decl.fields.size(); ++i) {
      const auto& [fm, ft] = decl.fields[i];
      if (!wf_type(earlier, DeclTable{}, self, *ft))
        return Diagnostic{"decl.positivity", {},
                          "datatype '" + decl.name + "' field " + std::to_string(i) + " has ill-formed type " +
                              calc::print(*ft) + " (unknown name or non-positive recursive occurrence)"};
      if (!static_at(fm, *ft))
        return Diagnostic{"decl.static", {},
                          "datatype '" + decl.name + "' field " + std::to_string(i) +
                              " must have static lifetime at mode " + calc::to_string(fm)};
    }
    earlier.push(decl);
  }
  return std::nullopt;
}

BodyContext function_body_context(Callability o, Lifetime l, const PermEnv& p, const VarEnv& g) {
  BodyContext r;
  auto require_nonlinear = [&]() {
    for (const auto& [i, u] : p) {
      if (u == Usage::linear) {
        r.offending = std::to_string(i);
        r.message = "a many-callable function cannot capture linear permission " + r.offending;
        return false;
      }
    }
    for (const auto& [x, b] : g) {
      if (b.mu.is_linear()) {
        r.offending = x;
        r.message = "a many-callable function cannot capture linear variable '" + x + "'";
        return false;
      }
    }
    return true;
  };
  if (o == Callability::once && l == Lifetime::restricted) {
    r.perms = p;
    r.vars = g;
  } else if (o == Callability::many && l == Lifetime::restricted) {
    if (!require_nonlinear()) return r;
    r.perms = p;
    r.vars = g;
  } else if (o == Callability::many && l == Lifetime::static_) {
    if (!require_nonlinear()) return r;
    r.vars = project(g, Selector::as_spec);
  } else {
    r.perms = project(p, Selector::linear);
    r.vars = project(g, Selector::linear);
    for (const auto& [x, b] : r.vars) {
      if (calc::lifetime_of(*b.type) != Lifetime::static_) {
        r.offending = x;
        r.message = "a static once-callable function cannot capture '" + x + "' of restricted lifetime";
        return r;
      }
    }
    for (const auto& [x, b] : project(project(g, Selector::nonlinear), Selector::as_spec)) r.vars.emplace(x, b);
  }
  if (o == Callability::once) r.usage = Usage::linear;
  r.ok = true;
  return r;
}

}  // namespace mv::typing
