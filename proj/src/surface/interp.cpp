#include "mv/surface/interp.hpp"

namespace mv::surface {

const char* to_string(Outcome::Kind k) {
  switch (k) {
    case Outcome::Kind::returned: return "returned";
    case Outcome::Kind::overflow: return "overflow";
    case Outcome::Kind::division_by_zero: return "division by zero";
    case Outcome::Kind::budget_exhausted: return "budget exhausted";
    case Outcome::Kind::error: return "error";
  }
  return "?";
}

std::string describe(const Outcome& o) {
  std::string out;
  if (o.kind == Outcome::Kind::returned) {
    out = o.value ? to_string(*o.value) : "()";
  } else {
    out = to_string(o.kind);
    if (o.span.line) out += " at " + std::to_string(o.span.line) + ":" + std::to_string(o.span.col);
    if (!o.message.empty()) out += ": " + o.message;
  }
  return out;
}

nlohmann::json to_json(const Outcome& o) {
  nlohmann::json j;
  j["outcome"] = to_string(o.kind);
  if (o.value) j["value"] = to_string(*o.value);
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& [n, v] : o.outputs) outs[n] = to_string(v);
  j["outputs"] = outs;
  nlohmann::json locals = nlohmann::json::object();
  for (const auto& [n, v] : o.locals) locals[n] = to_string(v);
  j["locals"] = locals;
  j["steps"] = o.steps;
  if (o.kind != Outcome::Kind::returned) {
    j["span"] = {{"line", o.span.line}, {"col", o.span.col}};
    j["message"] = o.message;
  }
  return j;
}

namespace {

struct Halt {
  Outcome::Kind kind;
  Span span;
  std::string message;
};

struct Return {
  std::optional<Value> value;
};

using Frame = std::map<std::string, Value>;

class Interpreter {
public:
  Interpreter(const Program& p, long long budget) : p_(p), budget_(budget) {}

  long long steps = 0;

  /// Runs `f`, writing mutable-reference results into `outs`.
  std::optional<Value> call(const Function& f, const std::vector<Value>& args, std::vector<Value>& outs, Frame* exit_frame) {
    Frame frame;
    for (std::size_t i = 0; i < f.params.size(); ++i) frame[f.params[i].name] = args[i];
    std::optional<Value> result;
    try {
      block(f.body, frame, true, result);
    } catch (Return& r) {
      result = r.value;
    }
    outs.clear();
    for (const auto& pa : f.params)
      if (pa.passing == Passing::mut_ref) outs.push_back(frame.at(pa.name));
    if (exit_frame) *exit_frame = std::move(frame);
    return result;
  }

private:
  const Program& p_;
  long long budget_;

  void tick(Span s) {
    if (++steps > budget_) throw Halt{Outcome::Kind::budget_exhausted, s, "step budget exhausted"};
  }

  bool ghost_call(const Expr& e) const {
    const Function* g = p_.find(e.name);
    return g && g->mode != Mode::exec;
  }

  void block(const Block& b, Frame& frame, bool top, std::optional<Value>& result) {
    for (const auto& s : b.stmts) stmt(*s, frame);
    if (b.tail) {
      Value v = expr(*b.tail, frame);
      if (top) throw Return{v};
    }
    (void)result;
  }

  void stmt(const Stmt& s, Frame& frame) {
    tick(s.span);
    switch (s.kind) {
      case Stmt::Kind::let_:
        if (!s.ghost) frame[s.name] = expr(*s.expr, frame);
        return;
      case Stmt::Kind::assign:
        frame[s.name] = expr(*s.expr, frame);
        return;
      case Stmt::Kind::while_: {
        std::optional<Value> unused;
        while (expr(*s.expr, frame).b) {
          tick(s.span);
          block(s.body, frame, false, unused);
        }
        return;
      }
      case Stmt::Kind::assert_:
      case Stmt::Kind::reveal:
        return;
      case Stmt::Kind::return_:
        throw Return{s.expr ? std::optional<Value>(expr(*s.expr, frame)) : std::nullopt};
      case Stmt::Kind::expr:
        if (s.expr->kind == Expr::Kind::call && ghost_call(*s.expr)) return;
        expr(*s.expr, frame);
        return;
      case Stmt::Kind::if_: {
        std::optional<Value> unused;
        if (expr(*s.expr, frame).b) block(s.body, frame, false, unused);
        else if (s.else_body) block(*s.else_body, frame, false, unused);
        return;
      }
    }
  }

  Value checked(const Expr& e, BigInt v) {
    if (e.ty.kind == Type::Kind::uint && (v < 0 || v > max_value(e.ty.bits)))
      throw Halt{Outcome::Kind::overflow, e.span, "result " + v.get_str() + " outside " + to_string(e.ty)};
    return Value::of(v);
  }

  Value expr(const Expr& e, Frame& frame) {
    switch (e.kind) {
      case Expr::Kind::int_lit: return Value::of(e.value);
      case Expr::Kind::bool_lit: return Value::of(e.flag);
      case Expr::Kind::var: {
        auto it = frame.find(e.name);
        if (it == frame.end()) throw Halt{Outcome::Kind::error, e.span, "unbound variable " + e.name};
        return it->second;
      }
      case Expr::Kind::deref:
      case Expr::Kind::cast: return expr(*e.args[0], frame);
      case Expr::Kind::unary: {
        Value a = expr(*e.args[0], frame);
        if (e.op == "!") return Value::of(!a.b);
        return checked(e, -a.z);
      }
      case Expr::Kind::binary: {
        const std::string& o = e.op;
        if (o == "&&") return Value::of(expr(*e.args[0], frame).b && expr(*e.args[1], frame).b);
        if (o == "||") return Value::of(expr(*e.args[0], frame).b || expr(*e.args[1], frame).b);
        Value l = expr(*e.args[0], frame);
        Value r = expr(*e.args[1], frame);
        if (o == "==") return Value::of(l == r);
        if (o == "!=") return Value::of(!(l == r));
        if (o == "<") return Value::of(l.z < r.z);
        if (o == "<=") return Value::of(l.z <= r.z);
        if (o == ">") return Value::of(l.z > r.z);
        if (o == ">=") return Value::of(l.z >= r.z);
        if (o == "+") return checked(e, l.z + r.z);
        if (o == "-") return checked(e, l.z - r.z);
        if (o == "*") return checked(e, l.z * r.z);
        if (r.z == 0) throw Halt{Outcome::Kind::division_by_zero, e.span, "division by zero"};
        BigInt q, m;
        mpz_tdiv_qr(q.get_mpz_t(), m.get_mpz_t(), l.z.get_mpz_t(), r.z.get_mpz_t());
        return checked(e, o == "/" ? q : m);
      }
      case Expr::Kind::if_:
        return expr(*e.args[0], frame).b ? expr(*e.args[1], frame) : expr(*e.args[2], frame);
      case Expr::Kind::call: {
        const Function* g = p_.find(e.name);
        if (!g) throw Halt{Outcome::Kind::error, e.span, "unknown function " + e.name};
        if (g->mode != Mode::exec) throw Halt{Outcome::Kind::error, e.span, "ghost function " + e.name + " in executable code"};
        tick(e.span);
        std::vector<Value> args;
        std::vector<std::string> muts;
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          const Expr* a = e.args[i].get();
          if (e.passing[i] == Passing::mut_ref) {
            if (a->kind == Expr::Kind::deref) a = a->args[0].get();
            muts.push_back(a->name);
          }
          args.push_back(expr(*a, frame));
        }
        std::vector<Value> outs;
        std::optional<Value> r = call(*g, args, outs, nullptr);
        for (std::size_t i = 0; i < muts.size(); ++i) frame[muts[i]] = outs[i];
        return r.value_or(Value::of(true));
      }
      default:
        throw Halt{Outcome::Kind::error, e.span, "unsupported expression"};
    }
  }
};

}  // namespace

Outcome interpret(const Program& p, const std::string& entry, const std::vector<Value>& inputs, long long budget) {
  Outcome o;
  const Function* f = p.find(entry);
  if (!f || f->mode != Mode::exec) {
    o.kind = Outcome::Kind::error;
    o.message = "no executable function '" + entry + "'";
    return o;
  }
  if (inputs.size() != f->params.size()) {
    o.kind = Outcome::Kind::error;
    o.message = entry + " takes " + std::to_string(f->params.size()) + " input(s)";
    return o;
  }
  Interpreter in(p, budget);
  try {
    std::vector<Value> outs;
    Frame frame;
    o.value = in.call(*f, inputs, outs, &frame);
    std::size_t k = 0;
    for (const auto& pa : f->params)
      if (pa.passing == Passing::mut_ref) o.outputs.emplace_back(pa.name, outs[k++]);
    o.locals = std::move(frame);
  } catch (const Halt& h) {
    o.kind = h.kind;
    o.span = h.span;
    o.message = h.message;
  }
  o.steps = in.steps;
  return o;
}

}  // namespace mv::surface
