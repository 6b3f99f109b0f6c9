#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "mv/surface/ast.hpp"

namespace mv::surface {

namespace {

Diagnostic diag(std::string rule, Span s, std::string msg) { return Diagnostic{std::move(rule), s, std::move(msg)}; }

ExprPtr clone(const Expr& e) { return std::make_shared<Expr>(e); }

template <typename F>
void walk_expr(const Expr& e, F&& f) {
  f(e);
  for (const auto& a : e.args) walk_expr(*a, f);
}

template <typename FE, typename FS>
void walk_block(const Block& b, FE&& fe, FS&& fs) {
  for (const auto& s : b.stmts) {
    fs(*s);
    if (s->expr) walk_expr(*s->expr, fe);
    for (const auto& i : s->invariants) walk_expr(*i, fe);
    walk_block(s->body, fe, fs);
    if (s->else_body) walk_block(*s->else_body, fe, fs);
  }
  if (b.tail) walk_expr(*b.tail, fe);
}

}  // namespace

void collect_calls(const Expr& e, std::vector<const Expr*>& out) {
  walk_expr(e, [&](const Expr& x) {
    if (x.kind == Expr::Kind::call) out.push_back(&x);
  });
}

void collect_calls(const Block& b, std::vector<const Expr*>& out) {
  walk_block(
      b,
      [&](const Expr& x) {
        if (x.kind == Expr::Kind::call) out.push_back(&x);
      },
      [](const Stmt&) {});
}

namespace {

std::set<std::string> callees(const Function& f) {
  std::vector<const Expr*> calls;
  collect_calls(f.body, calls);
  for (const auto& r : f.requires_) collect_calls(*r, calls);
  for (const auto& r : f.ensures) collect_calls(*r, calls);
  std::set<std::string> out;
  for (const auto* c : calls) out.insert(c->name);
  return out;
}

}  // namespace

bool is_recursive(const Program& p, const std::string& fn) {
  std::set<std::string> seen;
  std::vector<std::string> work;
  if (const Function* f = p.find(fn))
    for (const auto& c : callees(*f)) work.push_back(c);
  while (!work.empty()) {
    std::string g = work.back();
    work.pop_back();
    if (g == fn) return true;
    if (!seen.insert(g).second) continue;
    if (const Function* f = p.find(g))
      for (const auto& c : callees(*f)) work.push_back(c);
  }
  return false;
}

// ---------------------------------------------------------------- aliasing

std::vector<Diagnostic> alias_check(const Program& p) {
  std::vector<Diagnostic> out;
  auto path_of = [](const Expr& e) -> std::string {
    const Expr* x = &e;
    std::string suffix;
    while (x->kind == Expr::Kind::field) {
      suffix = "." + x->name + suffix;
      x = x->args[0].get();
    }
    if (x->kind == Expr::Kind::deref) x = x->args[0].get();
    return x->kind == Expr::Kind::var ? x->name + suffix : std::string();
  };
  auto overlaps = [](const std::string& a, const std::string& b) {
    auto prefix = [](const std::string& x, const std::string& y) {
      return y.size() >= x.size() && y.compare(0, x.size(), x) == 0 && (y.size() == x.size() || y[x.size()] == '.');
    };
    return prefix(a, b) || prefix(b, a);
  };
  for (const auto& f : p.functions) {
    std::vector<const Expr*> calls;
    collect_calls(f.body, calls);
    for (const Expr* c : calls) {
      std::vector<std::pair<std::string, const Expr*>> muts, shared;
      for (std::size_t i = 0; i < c->args.size(); ++i) {
        if (c->passing[i] == Passing::value) continue;
        std::string path = path_of(*c->args[i]);
        if (path.empty()) {
          out.push_back(diag("alias.reference", c->args[i]->span, "a reference argument must name a variable"));
          continue;
        }
        (c->passing[i] == Passing::mut_ref ? muts : shared).emplace_back(path, c->args[i].get());
      }
      for (std::size_t i = 0; i < muts.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if (!overlaps(muts[j].first, muts[i].first)) continue;
          const Span first = muts[j].second->span;
          out.push_back(diag("alias.mut-borrow", muts[i].second->span,
                             "cannot borrow `" + muts[i].first + "` as mutable more than once at a time (first mutable borrow at " +
                                 std::to_string(first.line) + ":" + std::to_string(first.col) + ")"));
        }
        for (const auto& [path, e] : shared) {
          if (!overlaps(path, muts[i].first)) continue;
          out.push_back(diag("alias.shared-mut", muts[i].second->span,
                             "cannot borrow `" + muts[i].first + "` as mutable because it is also borrowed as immutable at " +
                                 std::to_string(e->span.line) + ":" + std::to_string(e->span.col)));
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- flattening

namespace {

class Flattener {
public:
  Flattener(const Program& p, std::vector<Diagnostic>& diags) : p_(p), diags_(diags) {}

  Program run() {
    Program out;
    out.structs = p_.structs;
    for (const auto& f : p_.functions) out.functions.push_back(function(f));
    return out;
  }

private:
  const Program& p_;
  std::vector<Diagnostic>& diags_;
  std::map<std::string, const StructDecl*> structs_;  // variables of struct type in the current function

  const StructDecl* struct_of(const Type& t) const { return t.kind == Type::Kind::named ? p_.find_struct(t.name) : nullptr; }

  Function function(const Function& f) {
    structs_.clear();
    Function g = f;
    g.params.clear();
    for (const auto& pa : f.params) {
      if (pa.type.kind == Type::Kind::named) {
        const StructDecl* s = struct_of(pa.type);
        if (!s) {
          diags_.push_back(diag("type.unknown-type", pa.span, "unknown type '" + pa.type.name + "'"));
          g.params.push_back(pa);
          continue;
        }
        structs_[pa.name] = s;
        for (const auto& [fname, ft] : s->fields) g.params.push_back(Param{pa.name + "." + fname, pa.passing, ft, pa.span});
      } else {
        g.params.push_back(pa);
      }
    }
    if (f.ret && f.ret->kind == Type::Kind::named)
      diags_.push_back(diag("type.struct", f.span, "struct results are not supported"));
    g.requires_ = exprs(f.requires_);
    g.ensures = exprs(f.ensures);
    if (f.decreases) g.decreases = expr(*f.decreases);
    g.body = block(f.body);
    return g;
  }

  std::vector<ExprPtr> exprs(const std::vector<ExprPtr>& es) {
    std::vector<ExprPtr> out;
    for (const auto& e : es) out.push_back(expr(*e));
    return out;
  }

  ExprPtr expr(const Expr& e) {
    if (e.kind == Expr::Kind::field) {
      const Expr* base = e.args[0].get();
      if (base->kind == Expr::Kind::deref) base = base->args[0].get();
      if (base->kind == Expr::Kind::var || base->kind == Expr::Kind::old) {
        auto out = clone(*base);
        out->name = base->name + "." + e.name;
        out->span = base->span;
        if (!structs_.count(base->name))
          diags_.push_back(diag("type.field", e.span, "'" + base->name + "' is not a struct"));
        return out;
      }
      diags_.push_back(diag("type.field", e.span, "field access needs a variable"));
      return clone(e);
    }
    if (e.kind == Expr::Kind::struct_lit) {
      diags_.push_back(diag("type.struct", e.span, "a struct literal may only initialize a let"));
      return clone(e);
    }
    auto out = clone(e);
    if (e.kind == Expr::Kind::call) {
      out->args.clear();
      out->passing.clear();
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        const Expr& a = *e.args[i];
        const Expr* v = a.kind == Expr::Kind::deref ? a.args[0].get() : &a;
        if (v->kind == Expr::Kind::var && structs_.count(v->name)) {
          for (const auto& [fname, ft] : structs_.at(v->name)->fields) {
            auto fe = clone(*v);
            fe->name = v->name + "." + fname;
            out->args.push_back(fe);
            out->passing.push_back(e.passing[i]);
          }
        } else {
          out->args.push_back(expr(a));
          out->passing.push_back(e.passing[i]);
        }
      }
      return out;
    }
    for (auto& a : out->args) a = expr(*a);
    return out;
  }

  Block block(const Block& b) {
    Block out;
    out.span = b.span;
    for (const auto& s : b.stmts) stmt(*s, out.stmts);
    if (b.tail) out.tail = expr(*b.tail);
    return out;
  }

  void stmt(const Stmt& s, std::vector<StmtPtr>& out) {
    auto g = std::make_shared<Stmt>(s);
    if (s.kind == Stmt::Kind::let_ || s.kind == Stmt::Kind::assign) {
      const StructDecl* sd = nullptr;
      if (s.kind == Stmt::Kind::let_) {
        if (s.type) sd = struct_of(*s.type);
        if (!sd && s.expr->kind == Expr::Kind::struct_lit) sd = p_.find_struct(s.expr->name);
        if (!sd && s.expr->kind == Expr::Kind::struct_lit) {
          diags_.push_back(diag("type.unknown-type", s.expr->span, "unknown struct '" + s.expr->name + "'"));
          return;
        }
        if (sd) structs_[s.name] = sd;
      } else if (structs_.count(s.name)) {
        sd = structs_.at(s.name);
      }
      if (sd) {
        for (const auto& [fname, ft] : sd->fields) {
          auto fs = std::make_shared<Stmt>(s);
          fs->name = s.name + "." + fname;
          if (s.kind == Stmt::Kind::let_) fs->type = ft;
          fs->expr = field_init(*s.expr, *sd, fname);
          if (!fs->expr) return;
          out.push_back(fs);
        }
        return;
      }
    }
    if (s.expr) g->expr = expr(*s.expr);
    g->invariants = exprs(s.invariants);
    g->body = block(s.body);
    if (s.else_body) g->else_body = block(*s.else_body);
    out.push_back(g);
  }

  ExprPtr field_init(const Expr& init, const StructDecl& sd, const std::string& fname) {
    if (init.kind == Expr::Kind::struct_lit) {
      if (init.name != sd.name) {
        diags_.push_back(diag("type.mismatch", init.span, "expected a " + sd.name + " literal"));
        return nullptr;
      }
      for (std::size_t i = 0; i < init.fields.size(); ++i)
        if (init.fields[i] == fname) return expr(*init.args[i]);
      diags_.push_back(diag("type.struct", init.span, "missing field '" + fname + "'"));
      return nullptr;
    }
    if (init.kind == Expr::Kind::var && structs_.count(init.name)) {
      auto v = clone(init);
      v->name = init.name + "." + fname;
      return v;
    }
    diags_.push_back(diag("type.struct", init.span, "a struct binding needs a literal or a struct variable"));
    return nullptr;
  }
};

}  // namespace

Program flatten_structs(const Program& p, std::vector<Diagnostic>& diags) { return Flattener(p, diags).run(); }

// ---------------------------------------------------------------- types

namespace {

struct VarInfo {
  Type type;
  bool ghost = false;
  bool mut_ = false;
  Passing passing = Passing::value;
};

using Env = std::map<std::string, VarInfo>;

bool fits(const BigInt& v, const Type& t) {
  if (t.kind == Type::Kind::int_) return true;
  if (v < 0) return false;
  return t.kind != Type::Kind::uint || v <= max_value(t.bits);
}

bool is_literal(const Expr& e) {
  return e.kind == Expr::Kind::int_lit || (e.kind == Expr::Kind::unary && e.op == "-" && is_literal(*e.args[0]));
}

class TypeChecker {
public:
  explicit TypeChecker(Program& p) : p_(p) {}

  std::vector<Diagnostic> run() {
    for (auto& f : p_.functions) function(f);
    return std::move(out_);
  }

private:
  Program& p_;
  std::vector<Diagnostic> out_;
  const Function* fn_ = nullptr;

  void error(std::string rule, Span s, std::string msg) { out_.push_back(diag(std::move(rule), s, std::move(msg))); }

  void function(Function& f) {
    fn_ = &f;
    Env env;
    for (const auto& pa : f.params) {
      if (pa.type.kind == Type::Kind::named) continue;  // reported while flattening
      env[pa.name] = VarInfo{pa.type, f.mode != Mode::exec, pa.passing == Passing::mut_ref, pa.passing};
    }
    bool ghost_fn = f.mode != Mode::exec;
    for (auto& r : f.requires_) expect_bool(*r, env, true);
    Env post = env;
    if (!f.result_name.empty()) {
      if (!f.ret) error("type.result", f.span, "ensures binds a result but the function returns nothing");
      if (f.ret && f.result_type && !(*f.result_type == *f.ret))
        error("type.mismatch", f.span, "ensures binder type differs from the return type");
      post[f.result_name] = VarInfo{f.ret.value_or(Type::unit()), true, false, Passing::value};
    }
    for (auto& e : f.ensures) expect_bool(*e, post, true);
    if (f.decreases) {
      Type t = infer(*f.decreases, env, true, std::nullopt);
      if (!t.is_integral()) error("type.decreases", f.decreases->span, "decreases needs an integer measure");
    }
    if (f.mode == Mode::spec && !f.ret) error("type.result", f.span, "a spec function needs a result type");
    Type t = block(f.body, env, ghost_fn, f.ret);
    if (f.body.tail) {
      if (!f.ret) error("type.result", f.body.tail->span, "function without a result type ends with a value");
      else if (!compatible(t, *f.ret, ghost_fn, *f.body.tail)) mismatch(f.body.tail->span, *f.ret, t);
    } else if (f.ret && !ends(f.body)) {
      error("type.result", f.span, "missing result value");
    }
  }

  static bool ends(const Block& b) {
    if (b.stmts.empty()) return false;
    const Stmt& s = *b.stmts.back();
    if (s.kind == Stmt::Kind::return_) return true;
    return s.kind == Stmt::Kind::if_ && s.else_body && ends(s.body) && ends(*s.else_body);
  }

  void stray_tail(const Block& b) {
    if (b.tail) error("type.statement", b.tail->span, "a value here is discarded");
  }

  void mismatch(Span s, const Type& want, const Type& got) {
    error("type.mismatch", s, "expected " + to_string(want) + ", found " + to_string(got));
  }

  /// In ghost code integer types are interchangeable (subject to range
  /// obligations); executable code needs equal types.
  static bool compatible(const Type& got, const Type& want, bool ghost, const Expr& e) {
    if (got == want) return true;
    if (got.is_integral() && want.is_integral()) {
      if (ghost) return true;
      if (is_literal(e)) return fits(e.value, want);
    }
    return false;
  }

  void expect_bool(Expr& e, const Env& env, bool ghost) {
    Type t = infer(e, env, ghost, Type::boolean());
    if (t.kind != Type::Kind::bool_) mismatch(e.span, Type::boolean(), t);
  }

  Type block(Block& b, Env env, bool ghost, const std::optional<Type>& ret) {
    for (std::size_t i = 0; i < b.stmts.size(); ++i) stmt(*b.stmts[i], env, ghost, ret, b.stmts, i);
    if (b.tail) return infer(*b.tail, env, ghost, ret);
    return Type::unit();
  }

  /// Type of an unannotated executable let bound to a literal: taken from its
  /// first use as a call argument or arithmetic/comparison operand, else u64.
  Type guess(const std::string& x, const std::vector<StmtPtr>& rest, std::size_t from, const Env& env) {
    std::optional<Type> found;
    std::function<void(const Expr&)> look = [&](const Expr& e) {
      if (found) return;
      if (e.kind == Expr::Kind::call) {
        if (const Function* g = p_.find(e.name)) {
          for (std::size_t i = 0; i < e.args.size() && i < g->params.size(); ++i) {
            const Expr* a = e.args[i].get();
            if (a->kind == Expr::Kind::deref) a = a->args[0].get();
            if (a->kind == Expr::Kind::var && a->name == x && g->params[i].type.kind == Type::Kind::uint) {
              found = g->params[i].type;
              return;
            }
          }
        }
      }
      if (e.kind == Expr::Kind::binary) {
        for (int k = 0; k < 2; ++k) {
          const Expr& a = *e.args[k];
          const Expr& b = *e.args[1 - k];
          if (a.kind == Expr::Kind::var && a.name == x && b.kind == Expr::Kind::var && env.count(b.name) &&
              env.at(b.name).type.kind == Type::Kind::uint) {
            found = env.at(b.name).type;
            return;
          }
        }
      }
      for (const auto& a : e.args) look(*a);
    };
    std::function<void(const Block&)> look_block;
    auto look_stmt = [&](const Stmt& s) {
      if (s.expr) look(*s.expr);
      for (const auto& i : s.invariants) look(*i);
      look_block(s.body);
      if (s.else_body) look_block(*s.else_body);
    };
    look_block = [&](const Block& b) {
      for (const auto& s : b.stmts) look_stmt(*s);
      if (b.tail) look(*b.tail);
    };
    for (std::size_t i = from; i < rest.size() && !found; ++i) look_stmt(*rest[i]);
    return found.value_or(Type::unsigned_(64));
  }

  void stmt(Stmt& s, Env& env, bool ghost, const std::optional<Type>& ret, const std::vector<StmtPtr>& siblings,
            std::size_t index) {
    switch (s.kind) {
      case Stmt::Kind::let_: {
        bool g = ghost || s.ghost;
        std::optional<Type> want = s.type;
        if (!want && !g && is_literal(*s.expr)) want = guess(s.name, siblings, index + 1, env);
        Type t = infer(*s.expr, env, g, want);
        if (want && !compatible(t, *want, g, *s.expr)) mismatch(s.expr->span, *want, t);
        Type bound = want.value_or(t);
        s.type = bound;
        env[s.name] = VarInfo{bound, g, s.mut_, Passing::value};
        break;
      }
      case Stmt::Kind::assign: {
        auto it = env.find(s.name);
        if (it == env.end()) {
          error("type.unbound", s.span, "unknown variable '" + s.name + "'");
          break;
        }
        const VarInfo& v = it->second;
        if (v.passing == Passing::shared_ref || (v.passing == Passing::value && !v.mut_))
          error("type.immutable", s.span, "cannot assign to immutable '" + s.name + "'");
        if (v.passing == Passing::mut_ref && !s.deref && s.name.find('.') == std::string::npos)
          error("type.deref", s.span, "assignment through '" + s.name + "' needs '*'");
        Type t = infer(*s.expr, env, ghost || v.ghost, v.type);
        if (!compatible(t, v.type, ghost || v.ghost, *s.expr)) mismatch(s.expr->span, v.type, t);
        break;
      }
      case Stmt::Kind::while_:
        expect_bool(*s.expr, env, ghost);
        for (auto& i : s.invariants) expect_bool(*i, env, true);
        block(s.body, env, ghost, ret);
        stray_tail(s.body);
        break;
      case Stmt::Kind::assert_:
        expect_bool(*s.expr, env, true);
        break;
      case Stmt::Kind::return_:
        if (s.expr) {
          Type t = infer(*s.expr, env, ghost, ret);
          if (!ret) error("type.result", s.span, "function without a result type returns a value");
          else if (!compatible(t, *ret, ghost, *s.expr)) mismatch(s.expr->span, *ret, t);
        } else if (ret) {
          error("type.result", s.span, "missing return value");
        }
        break;
      case Stmt::Kind::expr:
        if (s.expr->kind != Expr::Kind::call) error("type.statement", s.span, "an expression statement must be a call");
        infer(*s.expr, env, ghost, std::nullopt);
        break;
      case Stmt::Kind::reveal: {
        const Function* g = p_.find(s.name);
        if (!g) error("type.unknown-function", s.span, "unknown function '" + s.name + "'");
        if (s.fuel < 0) error("type.fuel", s.span, "fuel must be nonnegative");
        break;
      }
      case Stmt::Kind::if_:
        expect_bool(*s.expr, env, ghost);
        block(s.body, env, ghost, ret);
        stray_tail(s.body);
        if (s.else_body) {
          block(*s.else_body, env, ghost, ret);
          stray_tail(*s.else_body);
        }
        break;
    }
  }

  Type set(Expr& e, Type t) {
    e.ty = t;
    return t;
  }

  Type arith_result(Expr& e, const Type& l, const Type& r, bool ghost) {
    if (!l.is_integral() || !r.is_integral()) {
      error("type.mismatch", e.span, "operator " + e.op + " needs integer operands");
      return Type::integer();
    }
    if (ghost) return Type::integer();
    if (l == r) return l;
    if (is_literal(*e.args[0]) && fits(e.args[0]->value, r)) return r;
    if (is_literal(*e.args[1]) && fits(e.args[1]->value, l)) return l;
    error("type.mismatch", e.span, "operands of " + e.op + " have types " + to_string(l) + " and " + to_string(r));
    return l;
  }

  Type infer(Expr& e, const Env& env, bool ghost, const std::optional<Type>& want) {
    switch (e.kind) {
      case Expr::Kind::int_lit:
        if (!ghost && want && want->kind == Type::Kind::uint) {
          if (!fits(e.value, *want)) error("type.literal", e.span, e.value.get_str() + " does not fit " + to_string(*want));
          return set(e, *want);
        }
        if (!ghost && (!want || !want->is_integral())) return set(e, Type::unsigned_(64));
        return set(e, ghost ? Type::integer() : *want);
      case Expr::Kind::bool_lit:
        return set(e, Type::boolean());
      case Expr::Kind::var: {
        auto it = env.find(e.name);
        if (it == env.end()) {
          error("type.unbound", e.span, "unknown variable '" + e.name + "'");
          return set(e, Type::integer());
        }
        return set(e, it->second.type);
      }
      case Expr::Kind::old: {
        auto it = env.find(e.name);
        if (it == env.end()) {
          error("type.unbound", e.span, "unknown variable '" + e.name + "'");
          return set(e, Type::integer());
        }
        return set(e, it->second.type);
      }
      case Expr::Kind::deref: {
        Type t = infer(*e.args[0], env, ghost, want);
        const Expr& a = *e.args[0];
        bool ref = (a.kind == Expr::Kind::var && env.count(a.name) && env.at(a.name).passing != Passing::value) ||
                   a.kind == Expr::Kind::old;
        if (!ref) error("type.deref", e.span, "'*' needs a reference parameter");
        return set(e, t);
      }
      case Expr::Kind::unary: {
        if (e.op == "!") {
          expect_bool(*e.args[0], env, ghost);
          return set(e, Type::boolean());
        }
        Type t = infer(*e.args[0], env, ghost, want);
        if (!t.is_integral()) error("type.mismatch", e.span, "negation needs an integer");
        if (!ghost) error("type.negation", e.span, "executable integers are unsigned");
        return set(e, Type::integer());
      }
      case Expr::Kind::binary: {
        const std::string& o = e.op;
        if (o == "&&" || o == "||") {
          expect_bool(*e.args[0], env, ghost);
          expect_bool(*e.args[1], env, ghost);
          return set(e, Type::boolean());
        }
        bool cmp = o == "==" || o == "!=" || o == "<" || o == "<=" || o == ">" || o == ">=";
        std::optional<Type> hint = cmp ? std::nullopt : want;
        Type l, r;
        if (is_literal(*e.args[0]) && !is_literal(*e.args[1])) {
          r = infer(*e.args[1], env, ghost, hint);
          l = infer(*e.args[0], env, ghost, r.is_integral() ? std::optional<Type>(r) : hint);
        } else {
          l = infer(*e.args[0], env, ghost, hint);
          r = infer(*e.args[1], env, ghost, l.is_integral() ? std::optional<Type>(l) : hint);
        }
        if (cmp) {
          if (l.kind == Type::Kind::bool_ || r.kind == Type::Kind::bool_) {
            if (!(l == r) || (o != "==" && o != "!=")) error("type.mismatch", e.span, "cannot compare " + to_string(l) + " with " + to_string(r));
          } else {
            arith_result(e, l, r, ghost);
          }
          return set(e, Type::boolean());
        }
        return set(e, arith_result(e, l, r, ghost));
      }
      case Expr::Kind::cast: {
        Type from = infer(*e.args[0], env, ghost, std::nullopt);
        const Type& to = e.target;
        if (!from.is_integral() || !to.is_integral()) {
          error("type.cast", e.span, "casts convert between integer types");
          return set(e, to);
        }
        bool widening = to.kind == Type::Kind::int_ ||
                        (to.kind == Type::Kind::nat && from.kind != Type::Kind::int_) ||
                        (to.kind == Type::Kind::uint && from.kind == Type::Kind::uint && from.bits <= to.bits);
        if (!widening) error("type.cast", e.span, "narrowing cast from " + to_string(from) + " to " + to_string(to));
        if (!ghost && to.kind != Type::Kind::uint) error("type.cast", e.span, "executable code cannot hold " + to_string(to));
        return set(e, to);
      }
      case Expr::Kind::call: {
        const Function* g = p_.find(e.name);
        if (!g) {
          error("type.unknown-function", e.span, "unknown function '" + e.name + "'");
          for (auto& a : e.args) infer(*a, env, ghost, std::nullopt);
          return set(e, Type::integer());
        }
        if (g->params.size() != e.args.size()) {
          error("type.arity", e.span, e.name + " takes " + std::to_string(g->params.size()) + " argument(s)");
          return set(e, g->ret.value_or(Type::unit()));
        }
        bool arg_ghost = ghost || g->mode != Mode::exec;
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          const Param& pa = g->params[i];
          Expr& a = *e.args[i];
          if (e.passing[i] != pa.passing)
            error("type.passing", a.span, "argument " + std::to_string(i + 1) + " of " + e.name + " is passed incorrectly");
          if (pa.passing != Passing::value) {
            const Expr* v = a.kind == Expr::Kind::deref ? a.args[0].get() : &a;
            if (v->kind != Expr::Kind::var) error("type.reference", a.span, "a reference argument must name a variable");
            if (pa.passing == Passing::mut_ref && v->kind == Expr::Kind::var && env.count(v->name)) {
              const VarInfo& vi = env.at(v->name);
              if (!(vi.mut_ || vi.passing == Passing::mut_ref))
                error("type.immutable", a.span, "cannot borrow immutable '" + v->name + "' as mutable");
            }
          }
          Type t = infer(a, env, arg_ghost, pa.type);
          if (!compatible(t, pa.type, arg_ghost, a)) mismatch(a.span, pa.type, t);
        }
        return set(e, g->ret.value_or(Type::unit()));
      }
      case Expr::Kind::if_: {
        expect_bool(*e.args[0], env, ghost);
        Type a = infer(*e.args[1], env, ghost, want);
        Type b = infer(*e.args[2], env, ghost, a.is_integral() && !ghost ? std::optional<Type>(a) : want);
        if (a.is_integral() && b.is_integral()) return set(e, ghost ? Type::integer() : a);
        if (!(a == b)) mismatch(e.args[2]->span, a, b);
        return set(e, a);
      }
      case Expr::Kind::field:
      case Expr::Kind::struct_lit:
        return set(e, Type::integer());
    }
    return Type::integer();
  }
};

}  // namespace

std::vector<Diagnostic> typecheck_surface(Program& p) { return TypeChecker(p).run(); }

// ---------------------------------------------------------------- modes

namespace {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::spec: return "spec";
    case Mode::proof: return "proof";
    case Mode::exec: return "exec";
  }
  return "?";
}

class ModeChecker {
public:
  explicit ModeChecker(const Program& p) : p_(p) {}

  std::vector<Diagnostic> run() {
    std::set<std::string> names;
    for (const auto& s : p_.structs)
      if (!names.insert(s.name).second) error("mode.duplicate", s.span, "duplicate name '" + s.name + "'");
    for (const auto& f : p_.functions) {
      if (!names.insert(f.name).second) error("mode.duplicate", f.span, "duplicate name '" + f.name + "'");
      function(f);
    }
    return std::move(out_);
  }

private:
  const Program& p_;
  std::vector<Diagnostic> out_;
  const Function* fn_ = nullptr;
  std::set<std::string> ghost_vars_;

  void error(std::string rule, Span s, std::string msg) { out_.push_back(diag(std::move(rule), s, std::move(msg))); }

  enum class Pos { spec, proof, exec };

  void function(const Function& f) {
    fn_ = &f;
    ghost_vars_.clear();
    if (f.mode == Mode::spec) {
      if (!f.requires_.empty() || !f.ensures.empty())
        error("mode.spec-contract", f.span, "spec function '" + f.name + "' cannot have requires/ensures");
      if (!f.body.stmts.empty())
        error("mode.spec-purity", f.body.stmts[0]->span, "spec function '" + f.name + "' must be a single pure expression");
      if (!f.body.tail) error("mode.spec-purity", f.span, "spec function '" + f.name + "' has no body expression");
    }
    for (const auto& pa : f.params) {
      if (pa.passing == Passing::mut_ref && f.mode == Mode::spec)
        error("mode.spec-mut-ref", pa.span, "spec function parameter '" + pa.name + "' cannot be a mutable reference");
      if (f.mode == Mode::exec && (pa.type.kind == Type::Kind::int_ || pa.type.kind == Type::Kind::nat))
        error("mode.exec-type", pa.span, "executable parameter '" + pa.name + "' cannot have ghost type " + to_string(pa.type));
    }
    if (f.mode == Mode::exec && f.ret && (f.ret->kind == Type::Kind::int_ || f.ret->kind == Type::Kind::nat))
      error("mode.exec-type", f.span, "executable function '" + f.name + "' cannot return ghost type " + to_string(*f.ret));
    if (f.mode != Mode::exec && is_recursive(p_, f.name) && !f.decreases)
      error("mode.decreases-missing", f.span,
            std::string("recursive ") + mode_name(f.mode) + " function '" + f.name + "' needs a decreases clause");
    if (f.mode != Mode::exec)
      for (const auto& pa : f.params) ghost_vars_.insert(pa.name);
    for (const auto& r : f.requires_) expr(*r, Pos::spec, true);
    for (const auto& e : f.ensures) expr(*e, Pos::spec, true);
    if (f.decreases) expr(*f.decreases, Pos::spec, false);
    Pos body = f.mode == Mode::spec ? Pos::spec : f.mode == Mode::proof ? Pos::proof : Pos::exec;
    block(f.body, body);
  }

  void block(const Block& b, Pos pos) {
    std::set<std::string> saved = ghost_vars_;
    for (const auto& s : b.stmts) stmt(*s, pos);
    if (b.tail) expr(*b.tail, pos, false);
    ghost_vars_ = saved;
  }

  void stmt(const Stmt& s, Pos pos) {
    switch (s.kind) {
      case Stmt::Kind::let_:
        if (s.ghost) {
          expr(*s.expr, Pos::spec, false);
          ghost_vars_.insert(s.name);
        } else {
          expr(*s.expr, pos, false);
          if (pos == Pos::exec) ghost_vars_.erase(s.name);
          else ghost_vars_.insert(s.name);
          if (pos == Pos::exec && s.type && (s.type->kind == Type::Kind::int_ || s.type->kind == Type::Kind::nat))
            error("mode.exec-type", s.span, "executable variable '" + s.name + "' cannot have ghost type " + to_string(*s.type));
        }
        break;
      case Stmt::Kind::assign:
        if (pos == Pos::exec && ghost_vars_.count(s.name))
          error("mode.ghost-assign", s.span, "executable code cannot assign ghost variable '" + s.name + "'");
        expr(*s.expr, pos, false);
        break;
      case Stmt::Kind::while_:
        expr(*s.expr, pos, false);
        for (const auto& i : s.invariants) expr(*i, Pos::spec, true);
        block(s.body, pos);
        break;
      case Stmt::Kind::assert_:
        expr(*s.expr, Pos::spec, false);
        break;
      case Stmt::Kind::return_:
        if (s.expr) expr(*s.expr, pos, false);
        break;
      case Stmt::Kind::expr: {
        const Function* g = s.expr->kind == Expr::Kind::call ? p_.find(s.expr->name) : nullptr;
        // A proof call statement inside executable code is ghost code.
        if (g && g->mode == Mode::proof && pos == Pos::exec) {
          expr(*s.expr, Pos::proof, false);
        } else {
          expr(*s.expr, pos, false);
        }
        break;
      }
      case Stmt::Kind::reveal: {
        const Function* g = p_.find(s.name);
        if (g && g->mode != Mode::spec) error("mode.reveal", s.span, "reveal_with_fuel names a non-spec function '" + s.name + "'");
        if (pos == Pos::spec) error("mode.spec-purity", s.span, "reveal_with_fuel inside a spec function");
        break;
      }
      case Stmt::Kind::if_:
        expr(*s.expr, pos, false);
        block(s.body, pos);
        if (s.else_body) block(*s.else_body, pos);
        break;
    }
  }

  void expr(const Expr& e, Pos pos, bool old_ok) {
    switch (e.kind) {
      case Expr::Kind::var:
        if (pos == Pos::exec && ghost_vars_.count(e.name))
          error("mode.exec-reads-ghost", e.span, "executable code reads ghost variable '" + e.name + "'");
        return;
      case Expr::Kind::old: {
        if (!old_ok) error("mode.old-placement", e.span, "old(" + e.name + ") may appear only in requires, ensures or loop invariants");
        const Param* pa = fn_->param(e.name);
        if (!pa || pa->passing != Passing::mut_ref)
          error("mode.old-param", e.span, "old(" + e.name + ") needs a mutable reference parameter");
        return;
      }
      case Expr::Kind::call: {
        const Function* g = p_.find(e.name);
        if (g) {
          if (pos == Pos::spec && g->mode != Mode::spec)
            error(std::string("mode.spec-calls-") + mode_name(g->mode), e.span,
                  "spec code cannot call " + std::string(mode_name(g->mode)) + " function '" + g->name + "'");
          else if (pos == Pos::proof && g->mode == Mode::exec)
            error("mode.proof-calls-exec", e.span, "proof code cannot call exec function '" + g->name + "'");
          else if (pos == Pos::exec && g->mode != Mode::exec)
            error("mode.exec-reads-ghost", e.span,
                  "executable expression uses the result of " + std::string(mode_name(g->mode)) + " function '" + g->name + "'");
        }
        Pos arg_pos = pos;
        if (g && g->mode != Mode::exec) arg_pos = Pos::spec;
        for (const auto& a : e.args) expr(*a, arg_pos, old_ok);
        return;
      }
      default:
        for (const auto& a : e.args) expr(*a, pos, old_ok);
    }
  }
};

}  // namespace

std::vector<Diagnostic> modecheck_surface(const Program& p) { return ModeChecker(p).run(); }

Checked check_surface(std::string_view text) {
  Checked c;
  Program parsed;
  try {
    parsed = parse_surface(text);
  } catch (const SyntaxError& e) {
    std::string msg = e.what();
    auto colon = msg.find(": ");
    c.diagnostics.push_back(diag("syntax", e.span, colon == std::string::npos ? msg : msg.substr(colon + 2)));
    return c;
  }
  c.diagnostics = alias_check(parsed);
  c.program = flatten_structs(parsed, c.diagnostics);
  for (auto& d : typecheck_surface(c.program)) c.diagnostics.push_back(d);
  for (auto& d : modecheck_surface(c.program)) c.diagnostics.push_back(d);
  std::stable_sort(c.diagnostics.begin(), c.diagnostics.end(),
                   [](const Diagnostic& a, const Diagnostic& b) { return a.span < b.span; });
  return c;
}

// ---------------------------------------------------------------- erasure

namespace {

Block erase_block(const Program& p, const Block& b) {
  Block out;
  out.span = b.span;
  for (const auto& s : b.stmts) {
    switch (s->kind) {
      case Stmt::Kind::let_:
        if (s->ghost) continue;
        break;
      case Stmt::Kind::assert_:
      case Stmt::Kind::reveal:
        continue;
      case Stmt::Kind::expr:
        if (s->expr->kind == Expr::Kind::call) {
          const Function* g = p.find(s->expr->name);
          if (g && g->mode != Mode::exec) continue;
        }
        break;
      default:
        break;
    }
    auto g = std::make_shared<Stmt>(*s);
    g->invariants.clear();
    g->body = erase_block(p, s->body);
    if (s->else_body) g->else_body = erase_block(p, *s->else_body);
    out.stmts.push_back(g);
  }
  out.tail = b.tail;
  return out;
}

}  // namespace

Program erase_ghost(const Program& p) {
  Program out;
  out.structs = p.structs;
  for (const auto& f : p.functions) {
    if (f.mode != Mode::exec) continue;
    Function g = f;
    g.requires_.clear();
    g.ensures.clear();
    g.result_name.clear();
    g.result_type.reset();
    g.decreases = nullptr;
    g.body = erase_block(p, f.body);
    out.functions.push_back(g);
  }
  return out;
}

}  // namespace mv::surface
