#include <algorithm>
#include <functional>
#include <set>

#include "mv/surface/vc.hpp"

namespace mv::surface {

TermPtr t_int(const BigInt& v) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::int_lit;
  t->value = v;
  return t;
}

TermPtr t_bool(bool b) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::bool_lit;
  t->flag = b;
  return t;
}

TermPtr t_sym(const std::string& name) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::sym;
  t->name = name;
  return t;
}

TermPtr t_app(Op op, std::vector<TermPtr> args) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::app;
  t->op = op;
  t->args = std::move(args);
  return t;
}

TermPtr t_call(const std::string& fn, std::vector<TermPtr> args) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::app;
  t->op = Op::apply;
  t->name = fn;
  t->args = std::move(args);
  return t;
}

TermPtr t_and(std::vector<TermPtr> args) {
  if (args.empty()) return t_bool(true);
  if (args.size() == 1) return args[0];
  return t_app(Op::and_, std::move(args));
}

TermPtr t_not(TermPtr a) { return t_app(Op::not_, {std::move(a)}); }
TermPtr t_implies(TermPtr a, TermPtr b) { return t_app(Op::implies, {std::move(a), std::move(b)}); }
TermPtr t_eq(TermPtr a, TermPtr b) { return t_app(Op::eq, {std::move(a), std::move(b)}); }
TermPtr t_uinv(int bits, TermPtr x) { return t_app(Op::uinv, {t_int(bits), std::move(x)}); }

TermPtr t_fuel(int k) {
  TermPtr f = t_app(Op::fuel_zero, {});
  for (int i = 0; i < k; ++i) f = t_app(Op::fuel_succ, {f});
  return f;
}

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::div: return "div";
    case Op::mod: return "mod";
    case Op::neg: return "-";
    case Op::eq: return "=";
    case Op::lt: return "<";
    case Op::le: return "<=";
    case Op::gt: return ">";
    case Op::ge: return ">=";
    case Op::and_: return "and";
    case Op::or_: return "or";
    case Op::not_: return "not";
    case Op::implies: return "=>";
    case Op::ite: return "ite";
    case Op::uinv: return "uInv";
    case Op::apply: return "";
    case Op::fuel_zero: return "fuel%zero";
    case Op::fuel_succ: return "fuel%succ";
  }
  return "?";
}

void render_to(std::string& out, const Term& t) {
  switch (t.kind) {
    case Term::Kind::int_lit:
      if (t.value < 0) {
        BigInt m = -t.value;
        out += "(- " + m.get_str() + ")";
      } else {
        out += t.value.get_str();
      }
      return;
    case Term::Kind::bool_lit:
      out += t.flag ? "true" : "false";
      return;
    case Term::Kind::sym:
      out += t.name;
      return;
    case Term::Kind::app:
      break;
  }
  std::string head = t.op == Op::apply ? t.name : op_name(t.op);
  if (t.args.empty()) {
    if (t.op == Op::and_) head = "true";
    if (t.op == Op::or_) head = "false";
    out += head;
    return;
  }
  out += "(" + head;
  for (const auto& a : t.args) {
    out += ' ';
    render_to(out, *a);
  }
  out += ")";
}

}  // namespace

std::string render(const Term& t) {
  std::string out;
  render_to(out, t);
  return out;
}

const FnDef* Background::find(const std::string& name) const {
  for (const auto& d : defs)
    if (d.name == name) return &d;
  return nullptr;
}

namespace {

Sort sort_of(const Type& t) { return t.kind == Type::Kind::bool_ ? Sort::bool_ : Sort::int_; }

TermPtr range_guard(const Type& t, TermPtr x) {
  if (t.kind == Type::Kind::uint) return t_uinv(t.bits, std::move(x));
  if (t.kind == Type::Kind::nat) return t_app(Op::le, {t_int(0), std::move(x)});
  return nullptr;
}

/// Whether a value of type `from` always lies in `to`.
bool within(const Type& from, const Type& to) {
  switch (to.kind) {
    case Type::Kind::int_: return from.is_integral();
    case Type::Kind::nat: return from.kind == Type::Kind::nat || from.kind == Type::Kind::uint;
    case Type::Kind::uint: return from.kind == Type::Kind::uint && from.bits <= to.bits;
    default: return from == to;
  }
}

std::string spec_name(const std::string& f) { return f + ".?"; }
std::string req_name(const std::string& f) { return "req%" + f; }
std::string ens_name(const std::string& f) { return "ens%" + f; }

void collect_syms(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::sym) out.insert(t.name);
  for (const auto& a : t.args) collect_syms(*a, out);
}

/// Variables assigned anywhere in a block, including mutable-reference call arguments.
void assigned_vars(const Block& b, std::set<std::string>& out) {
  std::function<void(const Expr&)> in_expr = [&](const Expr& e) {
    if (e.kind == Expr::Kind::call) {
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (e.passing[i] != Passing::mut_ref) continue;
        const Expr* v = e.args[i].get();
        if (v->kind == Expr::Kind::deref) v = v->args[0].get();
        if (v->kind == Expr::Kind::var) out.insert(v->name);
      }
    }
    for (const auto& a : e.args) in_expr(*a);
  };
  for (const auto& s : b.stmts) {
    if (s->kind == Stmt::Kind::assign) out.insert(s->name);
    if (s->expr) in_expr(*s->expr);
    assigned_vars(s->body, out);
    if (s->else_body) assigned_vars(*s->else_body, out);
  }
  if (b.tail) in_expr(*b.tail);
}

struct SpecEnv {
  std::function<TermPtr(const std::string&)> var;
  std::function<TermPtr(const std::string&)> old;
  std::function<TermPtr(const std::string&)> fuel;  // for fueled callees
};

class Generator {
public:
  Generator(const Program& p, int fuel_default) : p_(p), fuel_default_(fuel_default) {
    for (const auto& f : p.functions) {
      std::set<std::string> reach;
      std::vector<std::string> work;
      std::vector<const Expr*> calls;
      collect_calls(f.body, calls);
      for (const auto* c : calls) work.push_back(c->name);
      while (!work.empty()) {
        std::string g = work.back();
        work.pop_back();
        if (!reach.insert(g).second) continue;
        if (const Function* h = p.find(g)) {
          std::vector<const Expr*> cs;
          collect_calls(h->body, cs);
          for (const auto* c : cs) work.push_back(c->name);
        }
      }
      reach_[f.name] = reach;
    }
  }

  VCSet run() {
    for (const auto& f : p_.functions) definitions(f);
    std::sort(out_.background.defs.begin(), out_.background.defs.end(),
              [](const FnDef& a, const FnDef& b) { return a.name < b.name; });
    for (const auto& f : p_.functions) {
      if (f.mode == Mode::spec) spec_queries(f);
      else body_queries(f);
    }
    return std::move(out_);
  }

private:
  const Program& p_;
  int fuel_default_;
  VCSet out_;
  std::map<std::string, std::set<std::string>> reach_;

  bool reaches(const std::string& f, const std::string& g) const {
    auto it = reach_.find(f);
    return it != reach_.end() && it->second.count(g);
  }
  bool same_scc(const std::string& f, const std::string& g) const { return reaches(f, g) && reaches(g, f); }
  bool fueled(const std::string& f) const { return reaches(f, f); }

  // ------------------------------------------------------------ spec terms

  TermPtr spec_call(const Function& g, std::vector<TermPtr> args, const SpecEnv& env) {
    if (fueled(g.name)) args.insert(args.begin(), env.fuel(g.name));
    return t_call(spec_name(g.name), std::move(args));
  }

  TermPtr spec(const Expr& e, const SpecEnv& env) {
    switch (e.kind) {
      case Expr::Kind::int_lit: return t_int(e.value);
      case Expr::Kind::bool_lit: return t_bool(e.flag);
      case Expr::Kind::var: return env.var(e.name);
      case Expr::Kind::old: return env.old(e.name);
      case Expr::Kind::deref:
      case Expr::Kind::cast: return spec(*e.args[0], env);
      case Expr::Kind::unary:
        return e.op == "!" ? t_not(spec(*e.args[0], env)) : t_app(Op::neg, {spec(*e.args[0], env)});
      case Expr::Kind::binary: return binary(e.op, spec(*e.args[0], env), spec(*e.args[1], env));
      case Expr::Kind::call: {
        const Function* g = p_.find(e.name);
        std::vector<TermPtr> args;
        for (const auto& a : e.args) args.push_back(spec(*a, env));
        if (!g) return t_call(e.name, std::move(args));
        return spec_call(*g, std::move(args), env);
      }
      case Expr::Kind::if_:
        return t_app(Op::ite, {spec(*e.args[0], env), spec(*e.args[1], env), spec(*e.args[2], env)});
      default: return t_bool(false);
    }
  }

  static TermPtr binary(const std::string& o, TermPtr l, TermPtr r) {
    static const std::map<std::string, Op> ops = {
        {"+", Op::add}, {"-", Op::sub}, {"*", Op::mul}, {"/", Op::div}, {"%", Op::mod},
        {"==", Op::eq}, {"<", Op::lt},  {"<=", Op::le}, {">", Op::gt},  {">=", Op::ge},
        {"&&", Op::and_}, {"||", Op::or_}};
    if (o == "!=") return t_not(t_eq(std::move(l), std::move(r)));
    return t_app(ops.at(o), {std::move(l), std::move(r)});
  }

  static std::string param_const(const Param& p) { return p.name + "@"; }
  static std::string pre_const(const std::string& x) { return "pre%" + x + "@"; }

  TermPtr fuel_term(const std::map<std::string, int>& fuel, const std::string& g) const {
    auto it = fuel.find(g);
    return t_fuel(it == fuel.end() ? fuel_default_ : it->second);
  }

  // ------------------------------------------------------------ definitions

  void definitions(const Function& f) {
    if (f.mode == Mode::spec) {
      FnDef d;
      d.name = spec_name(f.name);
      for (const auto& pa : f.params) d.params.push_back(Const{param_const(pa), sort_of(pa.type), pa.type});
      d.result_range = f.ret.value_or(Type::boolean());
      d.result = sort_of(d.result_range);
      d.fueled = fueled(f.name);
      SpecEnv env;
      env.var = [](const std::string& x) { return t_sym(x + "@"); };
      env.old = env.var;
      env.fuel = [&](const std::string& g) { return same_scc(f.name, g) ? t_sym("fuel@") : t_fuel(fuel_default_); };
      d.body = f.body.tail ? spec(*f.body.tail, env) : t_bool(true);
      out_.background.defs.push_back(d);
      return;
    }
    SpecEnv env;
    env.fuel = [&](const std::string&) { return t_fuel(fuel_default_); };
    if (!f.requires_.empty()) {
      FnDef d;
      d.name = req_name(f.name);
      d.contract = true;
      for (const auto& pa : f.params)
        d.params.push_back(Const{pa.passing == Passing::mut_ref ? pre_const(pa.name) : param_const(pa), sort_of(pa.type), pa.type});
      env.var = [&](const std::string& x) {
        const Param* pa = f.param(x);
        return t_sym(pa && pa->passing == Passing::mut_ref ? pre_const(x) : x + "@");
      };
      env.old = [](const std::string& x) { return t_sym(pre_const(x)); };
      std::vector<TermPtr> parts;
      for (const auto& r : f.requires_) parts.push_back(spec(*r, env));
      d.body = t_and(parts);
      out_.background.defs.push_back(d);
    }
    if (!f.ensures.empty()) {
      FnDef d;
      d.name = ens_name(f.name);
      d.contract = true;
      std::vector<TermPtr> parts;
      for (const auto& pa : f.params) {
        if (pa.passing == Passing::mut_ref) {
          d.params.push_back(Const{pre_const(pa.name), sort_of(pa.type), pa.type});
          if (auto g = range_guard(pa.type, t_sym(param_const(pa))); g && pa.type.kind == Type::Kind::uint)
            parts.push_back(g);
        }
        d.params.push_back(Const{param_const(pa), sort_of(pa.type), pa.type});
      }
      std::string result = f.result_name.empty() ? "result" : f.result_name;
      if (f.ret) {
        d.params.push_back(Const{result + "@", sort_of(*f.ret), *f.ret});
        if (f.ret->kind == Type::Kind::uint) parts.push_back(t_uinv(f.ret->bits, t_sym(result + "@")));
      }
      env.var = [](const std::string& x) { return t_sym(x + "@"); };
      env.old = [](const std::string& x) { return t_sym(pre_const(x)); };
      for (const auto& e : f.ensures) parts.push_back(spec(*e, env));
      d.body = t_and(parts);
      out_.background.defs.push_back(d);
    }
  }

  // ------------------------------------------------------------ queries

  struct State {
    std::map<std::string, std::string> cur;  // variable -> constant
    std::vector<TermPtr> hyps;
    std::map<std::string, int> fuel;
    bool dead = false;
  };

  const Function* fn_ = nullptr;
  std::map<std::string, Const> consts_;
  std::map<std::string, int> next_version_;
  std::map<std::string, Type> var_types_;
  std::map<std::string, int> kind_index_;
  std::map<std::string, int> call_index_;
  TermPtr measure_;

  void reset(const Function& f) {
    fn_ = &f;
    consts_.clear();
    next_version_.clear();
    var_types_.clear();
    kind_index_.clear();
    call_index_.clear();
    measure_ = nullptr;
  }

  std::string declare(const std::string& name, const Type& t) {
    consts_[name] = Const{name, sort_of(t), t};
    return name;
  }

  /// Fresh constant for a binding: `x@` for an immutable first binding,
  /// otherwise the next `x@k`.
  std::string fresh(const std::string& x, const Type& t, bool versioned) {
    var_types_[x] = t;
    if (!versioned && !next_version_.count(x) && !consts_.count(x + "@")) {
      next_version_[x] = 0;
      return declare(x + "@", t);
    }
    int& k = next_version_[x];
    std::string name;
    do name = x + "@" + std::to_string(k++);
    while (consts_.count(name));
    return declare(name, t);
  }

  void query(const std::string& kind, Span span, std::string message, const std::vector<TermPtr>& hyps, TermPtr goal) {
    VCQuery q;
    int idx = kind_index_[kind]++;
    q.name = fn_->name + "." + kind + "." + std::to_string(idx);
    q.function = fn_->name;
    q.kind = kind;
    q.span = span;
    q.message = std::move(message);
    q.hypotheses = hyps;
    q.goal = std::move(goal);
    std::set<std::string> syms;
    for (const auto& h : q.hypotheses) collect_syms(*h, syms);
    collect_syms(*q.goal, syms);
    for (const auto& s : syms)
      if (auto it = consts_.find(s); it != consts_.end()) q.consts.push_back(it->second);
    out_.queries.push_back(std::move(q));
  }

  SpecEnv state_env(const State& st) {
    SpecEnv env;
    env.var = [&st](const std::string& x) {
      auto it = st.cur.find(x);
      return t_sym(it == st.cur.end() ? x : it->second);
    };
    env.old = [](const std::string& x) { return t_sym(pre_const(x)); };
    env.fuel = [this, &st](const std::string& g) { return fuel_term(st.fuel, g); };
    return env;
  }

  void spec_queries(const Function& f) {
    reset(f);
    if (!f.decreases || !f.body.tail || !fueled(f.name)) return;
    std::vector<TermPtr> base;
    SpecEnv env;
    env.var = [](const std::string& x) { return t_sym(x + "@"); };
    env.old = env.var;
    env.fuel = [this](const std::string&) { return t_fuel(fuel_default_); };
    for (const auto& pa : f.params) {
      declare(param_const(pa), pa.type);
      if (auto g = range_guard(pa.type, t_sym(param_const(pa)))) base.push_back(g);
    }
    measure_ = spec(*f.decreases, env);
    spec_walk(*f.body.tail, env, base);
  }

  void decreases_query(const Function& g, const std::vector<TermPtr>& args, Span span, const std::vector<TermPtr>& hyps) {
    if (!same_scc(fn_->name, g.name) || !measure_ || !g.decreases) return;
    SpecEnv callee;
    callee.var = [&](const std::string& x) {
      for (std::size_t i = 0; i < g.params.size(); ++i)
        if (g.params[i].name == x) return args[i];
      return t_sym(x);
    };
    callee.old = callee.var;
    callee.fuel = [this](const std::string&) { return t_fuel(fuel_default_); };
    TermPtr m = spec(*g.decreases, callee);
    query("decreases", span, "recursive call to " + g.name + " does not decrease the measure", hyps,
          t_and({t_app(Op::lt, {m, measure_}), t_app(Op::ge, {measure_, t_int(0)})}));
  }

  void spec_walk(const Expr& e, const SpecEnv& env, std::vector<TermPtr> path) {
    switch (e.kind) {
      case Expr::Kind::if_: {
        spec_walk(*e.args[0], env, path);
        TermPtr c = spec(*e.args[0], env);
        auto then_path = path;
        then_path.push_back(c);
        spec_walk(*e.args[1], env, then_path);
        path.push_back(t_not(c));
        spec_walk(*e.args[2], env, path);
        return;
      }
      case Expr::Kind::binary:
        if (e.op == "&&" || e.op == "||") {
          spec_walk(*e.args[0], env, path);
          TermPtr l = spec(*e.args[0], env);
          path.push_back(e.op == "&&" ? l : t_not(l));
          spec_walk(*e.args[1], env, path);
          return;
        }
        break;
      case Expr::Kind::call: {
        for (const auto& a : e.args) spec_walk(*a, env, path);
        if (const Function* g = p_.find(e.name)) {
          std::vector<TermPtr> args;
          for (const auto& a : e.args) args.push_back(spec(*a, env));
          decreases_query(*g, args, e.span, path);
        }
        return;
      }
      default:
        break;
    }
    for (const auto& a : e.args) spec_walk(*a, env, path);
  }

  void body_queries(const Function& f) {
    reset(f);
    State st;
    std::vector<TermPtr> pre_args;
    for (const auto& pa : f.params) {
      std::string c = pa.passing == Passing::mut_ref ? declare(pre_const(pa.name), pa.type) : declare(param_const(pa), pa.type);
      var_types_[pa.name] = pa.type;
      st.cur[pa.name] = c;
      if (pa.passing == Passing::mut_ref) next_version_[pa.name] = 1;
      if (auto g = range_guard(pa.type, t_sym(c))) st.hyps.push_back(g);
      pre_args.push_back(t_sym(c));
    }
    if (!f.requires_.empty()) st.hyps.push_back(t_call(req_name(f.name), pre_args));
    if (f.decreases) measure_ = spec(*f.decreases, state_env(st));
    block(f.body, st, true);
  }

  bool ghost() const { return fn_->mode != Mode::exec; }

  void postcondition(const State& st, TermPtr result, Span span) {
    if (fn_->ensures.empty()) return;
    std::vector<TermPtr> args;
    for (const auto& pa : fn_->params) {
      if (pa.passing == Passing::mut_ref) args.push_back(t_sym(pre_const(pa.name)));
      args.push_back(t_sym(st.cur.at(pa.name)));
    }
    if (fn_->ret) args.push_back(result ? result : t_int(0));
    query("postcondition", span, "postcondition not satisfied", st.hyps, t_call(ens_name(fn_->name), args));
  }

  void block(const Block& b, State& st, bool top) {
    std::map<std::string, std::string> outer = st.cur;
    std::map<std::string, int> outer_fuel = st.fuel;
    std::set<std::string> declared;
    for (const auto& s : b.stmts) {
      if (st.dead) break;
      stmt(*s, st, declared);
    }
    if (!st.dead && b.tail) {
      TermPtr r = expr(*b.tail, st, ghost());
      if (top) {
        postcondition(st, r, b.tail->span);
        st.dead = true;
      }
    } else if (!st.dead && top) {
      postcondition(st, nullptr, fn_->span);
    }
    for (const auto& x : declared) {
      if (outer.count(x)) st.cur[x] = outer.at(x);
      else st.cur.erase(x);
    }
    st.fuel = outer_fuel;
  }

  void stmt(const Stmt& s, State& st, std::set<std::string>& declared) {
    switch (s.kind) {
      case Stmt::Kind::let_: {
        TermPtr t = expr(*s.expr, st, ghost() || s.ghost);
        std::string c = fresh(s.name, s.type.value_or(s.expr->ty), s.mut_);
        st.hyps.push_back(t_eq(t_sym(c), t));
        st.cur[s.name] = c;
        declared.insert(s.name);
        return;
      }
      case Stmt::Kind::assign: {
        TermPtr t = expr(*s.expr, st, ghost());
        std::string c = fresh(s.name, var_types_.at(s.name), true);
        st.hyps.push_back(t_eq(t_sym(c), t));
        st.cur[s.name] = c;
        return;
      }
      case Stmt::Kind::while_: {
        SpecEnv env = state_env(st);
        for (const auto& inv : s.invariants)
          query("invariant-init", inv->span, "loop invariant not satisfied on entry", st.hyps, spec(*inv, env));
        std::set<std::string> havoc;
        assigned_vars(s.body, havoc);
        for (const auto& x : havoc) {
          if (!st.cur.count(x)) continue;
          const Type& t = var_types_.at(x);
          std::string c = fresh(x, t, true);
          st.cur[x] = c;
          if (t.kind == Type::Kind::uint) st.hyps.push_back(t_uinv(t.bits, t_sym(c)));
        }
        for (const auto& inv : s.invariants) st.hyps.push_back(spec(*inv, state_env(st)));
        TermPtr cond = expr(*s.expr, st, ghost());
        State body = st;
        body.hyps.push_back(cond);
        block(s.body, body, false);
        if (!body.dead) {
          SpecEnv benv = state_env(body);
          for (const auto& inv : s.invariants)
            query("invariant-preserve", inv->span, "loop invariant not preserved", body.hyps, spec(*inv, benv));
        }
        st.hyps.push_back(t_not(cond));
        return;
      }
      case Stmt::Kind::assert_: {
        TermPtr g = spec(*s.expr, state_env(st));
        query("assert", s.span, "assertion failed", st.hyps, g);
        st.hyps.push_back(g);
        return;
      }
      case Stmt::Kind::return_: {
        TermPtr r = s.expr ? expr(*s.expr, st, ghost()) : nullptr;
        postcondition(st, r, s.span);
        st.dead = true;
        return;
      }
      case Stmt::Kind::expr:
        expr(*s.expr, st, ghost());
        return;
      case Stmt::Kind::reveal:
        st.fuel[s.name] = static_cast<int>(s.fuel);
        return;
      case Stmt::Kind::if_: {
        TermPtr c = expr(*s.expr, st, ghost());
        std::size_t base = st.hyps.size();
        State a = st, b = st;
        a.hyps.push_back(c);
        b.hyps.push_back(t_not(c));
        block(s.body, a, false);
        if (s.else_body) block(*s.else_body, b, false);
        if (a.dead && b.dead) {
          st.dead = true;
          return;
        }
        if (a.dead || b.dead) {
          State& live = a.dead ? b : a;
          live.fuel = st.fuel;
          st = live;
          return;
        }
        std::vector<TermPtr> ta(a.hyps.begin() + base + 1, a.hyps.end());
        std::vector<TermPtr> tb(b.hyps.begin() + base + 1, b.hyps.end());
        if (!ta.empty()) st.hyps.push_back(t_implies(c, t_and(ta)));
        if (!tb.empty()) st.hyps.push_back(t_implies(t_not(c), t_and(tb)));
        for (auto& [x, k] : st.cur) {
          const std::string& ka = a.cur.at(x);
          const std::string& kb = b.cur.at(x);
          if (ka == kb) {
            k = ka;
            continue;
          }
          std::string m = fresh(x, var_types_.at(x), true);
          st.hyps.push_back(t_eq(t_sym(m), t_app(Op::ite, {c, t_sym(ka), t_sym(kb)})));
          k = m;
        }
        return;
      }
    }
  }

  /// Executable or proof-mode expression: emits the obligations it raises.
  TermPtr expr(const Expr& e, State& st, bool in_ghost) {
    switch (e.kind) {
      case Expr::Kind::int_lit:
      case Expr::Kind::bool_lit:
      case Expr::Kind::var:
      case Expr::Kind::old:
        return spec(e, state_env(st));
      case Expr::Kind::deref:
      case Expr::Kind::cast:
        return expr(*e.args[0], st, in_ghost);
      case Expr::Kind::unary: {
        TermPtr a = expr(*e.args[0], st, in_ghost);
        return e.op == "!" ? t_not(a) : t_app(Op::neg, {a});
      }
      case Expr::Kind::binary: {
        if (e.op == "&&" || e.op == "||") {
          TermPtr l = expr(*e.args[0], st, in_ghost);
          std::size_t mark = st.hyps.size();
          st.hyps.push_back(e.op == "&&" ? l : t_not(l));
          TermPtr r = expr(*e.args[1], st, in_ghost);
          st.hyps.resize(mark);
          return binary(e.op, l, r);
        }
        TermPtr l = expr(*e.args[0], st, in_ghost);
        TermPtr r = expr(*e.args[1], st, in_ghost);
        TermPtr t = binary(e.op, l, r);
        if (!in_ghost && e.ty.kind == Type::Kind::uint) {
          if (e.op == "/" || e.op == "%") {
            query("division", e.span, "possible division by zero", st.hyps, t_not(t_eq(r, t_int(0))));
          } else if (e.op == "+" || e.op == "-" || e.op == "*") {
            query("overflow", e.span, "possible arithmetic overflow/underflow", st.hyps, t_uinv(e.ty.bits, t));
          }
        }
        return t;
      }
      case Expr::Kind::if_: {
        TermPtr c = expr(*e.args[0], st, in_ghost);
        std::size_t mark = st.hyps.size();
        st.hyps.push_back(c);
        TermPtr a = expr(*e.args[1], st, in_ghost);
        st.hyps.resize(mark);
        st.hyps.push_back(t_not(c));
        TermPtr b = expr(*e.args[2], st, in_ghost);
        st.hyps.resize(mark);
        return t_app(Op::ite, {c, a, b});
      }
      case Expr::Kind::call:
        return call(e, st, in_ghost);
      default:
        return t_bool(false);
    }
  }

  TermPtr call(const Expr& e, State& st, bool in_ghost) {
    const Function* g = p_.find(e.name);
    if (!g || g->mode == Mode::spec) return spec(e, state_env(st));
    bool arg_ghost = in_ghost || g->mode != Mode::exec;
    std::vector<TermPtr> args;
    std::vector<std::string> muts;
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      const Param& pa = g->params[i];
      const Expr& a = *e.args[i];
      if (pa.passing == Passing::mut_ref) {
        const Expr* v = a.kind == Expr::Kind::deref ? a.args[0].get() : &a;
        args.push_back(t_sym(st.cur.at(v->name)));
        muts.push_back(v->name);
        continue;
      }
      TermPtr t = expr(a, st, arg_ghost);
      if (!within(a.ty, pa.type)) {
        if (auto guard = range_guard(pa.type, t))
          query("range", a.span, "argument " + std::to_string(i + 1) + " of " + g->name + " out of range for " + to_string(pa.type),
                st.hyps, guard);
      }
      args.push_back(t);
    }
    if (!g->requires_.empty())
      query("precondition", e.span, "precondition not satisfied", st.hyps, t_call(req_name(g->name), args));
    decreases_query(*g, args, e.span, st.hyps);
    std::vector<TermPtr> ens_args;
    std::size_t m = 0;
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      const Param& pa = g->params[i];
      if (pa.passing != Passing::mut_ref) {
        ens_args.push_back(args[i]);
        continue;
      }
      const std::string& x = muts[m++];
      const Type& t = var_types_.at(x);
      std::string c = fresh(x, t, true);
      st.cur[x] = c;
      if (t.kind == Type::Kind::uint) st.hyps.push_back(t_uinv(t.bits, t_sym(c)));
      ens_args.push_back(args[i]);
      ens_args.push_back(t_sym(c));
    }
    TermPtr result = t_bool(true);
    if (g->ret) {
      int k = call_index_[g->name]++;
      std::string c = declare(g->name + "%ret@" + std::to_string(k), *g->ret);
      result = t_sym(c);
      if (g->ret->kind == Type::Kind::uint) st.hyps.push_back(t_uinv(g->ret->bits, result));
      ens_args.push_back(result);
    }
    if (!g->ensures.empty()) st.hyps.push_back(t_call(ens_name(g->name), ens_args));
    return result;
  }
};

}  // namespace

VCSet generate_vcs(const Program& p, int fuel_default) { return Generator(p, fuel_default).run(); }

// ---------------------------------------------------------------- SMT-LIB

namespace {

const char* sort_name(Sort s) { return s == Sort::bool_ ? "Bool" : "Int"; }

std::string binders(const FnDef& d) {
  std::string out = "(";
  if (d.fueled) out += "(fuel@ Fuel)";
  for (const auto& p : d.params) {
    if (out.size() > 1) out += ' ';
    out += "(" + p.name + " " + sort_name(p.sort) + ")";
  }
  return out + ")";
}

std::string head(const FnDef& d, const std::string& fuel) {
  if (!d.fueled && d.params.empty()) return d.name;
  std::string out = "(" + d.name;
  if (d.fueled) out += " " + fuel;
  for (const auto& p : d.params) out += " " + p.name;
  return out + ")";
}

}  // namespace

std::string emit_smtlib(const Background& bg, const VCQuery& q) {
  std::string out;
  out += "; " + q.name + "\n";
  out += "; " + q.kind + " at " + std::to_string(q.span.line) + ":" + std::to_string(q.span.col) + ": " + q.message + "\n";
  bool any_fuel = std::any_of(bg.defs.begin(), bg.defs.end(), [](const FnDef& d) { return d.fueled; });
  if (any_fuel) {
    out += "(declare-sort Fuel 0)\n";
    out += "(declare-fun fuel%zero () Fuel)\n";
    out += "(declare-fun fuel%succ (Fuel) Fuel)\n";
  }
  out +=
      "(define-fun uInv ((bits Int) (x Int)) Bool (and (<= 0 x) (< x (ite (= bits 8) 256 (ite (= bits 16) 65536 "
      "(ite (= bits 32) 4294967296 18446744073709551616))))))\n";
  for (const auto& d : bg.defs) {
    out += "(declare-fun " + d.name + " (";
    bool first = true;
    if (d.fueled) {
      out += "Fuel";
      first = false;
    }
    for (const auto& p : d.params) {
      if (!first) out += ' ';
      out += sort_name(p.sort);
      first = false;
    }
    out += std::string(") ") + sort_name(d.result) + ")\n";
  }
  for (const auto& d : bg.defs) {
    std::vector<TermPtr> guards;
    for (const auto& p : d.params)
      if (auto g = range_guard(p.range, t_sym(p.name))) guards.push_back(g);
    std::string app = head(d, "(fuel%succ fuel@)");
    std::string eq = "(= " + app + " " + render(*d.body) + ")";
    std::string body = guards.empty() ? eq : "(=> " + render(*t_and(guards)) + " " + eq + ")";
    if (!d.fueled && d.params.empty()) {
      out += "(assert " + body + ")\n";
      continue;
    }
    out += "(assert (forall " + binders(d) + " (! " + body + " :pattern (" + app + "))))\n";
    if (d.fueled)
      out += "(assert (forall " + binders(d) + " (! (= " + app + " " + head(d, "fuel@") + ") :pattern (" + app + "))))\n";
  }
  out += "(push)\n";
  for (const auto& c : q.consts) out += "(declare-const " + c.name + " " + sort_name(c.sort) + ")\n";
  std::string body = render(*q.goal);
  for (auto it = q.hypotheses.rbegin(); it != q.hypotheses.rend(); ++it) body = "(=> " + render(**it) + " " + body + ")";
  out += "(assert (not " + body + "))\n";
  out += "(check-sat)\n";
  out += "(pop)\n";
  return out;
}

}  // namespace mv::surface
