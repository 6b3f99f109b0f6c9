#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "mv/surface/vc.hpp"

namespace mv::surface {

bool Value::operator<(const Value& o) const {
  if (is_bool != o.is_bool) return is_bool < o.is_bool;
  return is_bool ? b < o.b : z < o.z;
}

std::string to_string(const Value& v) { return v.is_bool ? (v.b ? "true" : "false") : v.z.get_str(); }

const char* to_string(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::valid: return "valid";
    case Verdict::Kind::invalid: return "invalid";
    case Verdict::Kind::unknown: return "unknown";
  }
  return "?";
}

namespace {

struct Unknown {
  std::string reason;
};

struct Budget {};

/// Term compiled against a frame of slots.
struct Node {
  Term::Kind kind;
  Op op = Op::apply;
  Value lit;
  int slot = -1;
  const FnDef* fn = nullptr;
  std::vector<Node> args;
};

TermPtr substitute(const TermPtr& t, const std::map<std::string, TermPtr>& s) {
  if (t->kind == Term::Kind::sym) {
    auto it = s.find(t->name);
    return it == s.end() ? t : it->second;
  }
  if (t->args.empty()) return t;
  auto out = std::make_shared<Term>(*t);
  for (auto& a : out->args) a = substitute(a, s);
  return out;
}

bool in_range(const Value& v, const Type& t) {
  switch (t.kind) {
    case Type::Kind::bool_: return v.is_bool;
    case Type::Kind::int_: return !v.is_bool;
    case Type::Kind::nat: return !v.is_bool && v.z >= 0;
    case Type::Kind::uint: return !v.is_bool && v.z >= 0 && v.z <= max_value(t.bits);
    default: return false;
  }
}

BigInt uinv_bound(const BigInt& bits) {
  BigInt one = 1;
  if (bits == 8) return one << 8;
  if (bits == 16) return one << 16;
  if (bits == 32) return one << 32;
  return one << 64;
}

class Evaluator {
public:
  Evaluator(const Background& bg, int depth_cap) : bg_(bg), depth_cap_(depth_cap) {}

  Node compile(const Term& t, const std::map<std::string, int>& slots) {
    Node n;
    n.kind = t.kind;
    switch (t.kind) {
      case Term::Kind::int_lit: n.lit = Value::of(t.value); return n;
      case Term::Kind::bool_lit: n.lit = Value::of(t.flag); return n;
      case Term::Kind::sym: {
        auto it = slots.find(t.name);
        if (it == slots.end()) throw Unknown{"unbound constant " + t.name};
        n.slot = it->second;
        return n;
      }
      case Term::Kind::app: break;
    }
    n.op = t.op;
    std::size_t skip = 0;
    if (t.op == Op::apply) {
      n.fn = bg_.find(t.name);
      if (!n.fn) throw Unknown{"undefined function " + t.name};
      if (n.fn->fueled) skip = 1;
    }
    for (std::size_t i = skip; i < t.args.size(); ++i) n.args.push_back(compile(*t.args[i], slots));
    return n;
  }

  Value eval(const Node& n, const std::vector<Value>& frame) {
    switch (n.kind) {
      case Term::Kind::int_lit:
      case Term::Kind::bool_lit: return n.lit;
      case Term::Kind::sym: return frame[n.slot];
      case Term::Kind::app: break;
    }
    auto I = [&](std::size_t i) { return eval(n.args[i], frame).z; };
    auto B = [&](std::size_t i) { return eval(n.args[i], frame).b; };
    switch (n.op) {
      case Op::add: return Value::of(BigInt(I(0) + I(1)));
      case Op::sub: return Value::of(BigInt(I(0) - I(1)));
      case Op::mul: return Value::of(BigInt(I(0) * I(1)));
      case Op::div:
      case Op::mod: {
        BigInt a = I(0), b = I(1);
        if (b == 0) throw Unknown{"division by zero"};
        BigInt ab = abs(b), r;
        mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), ab.get_mpz_t());
        if (n.op == Op::mod) return Value::of(r);
        BigInt q = (a - r) / b;
        return Value::of(q);
      }
      case Op::neg: return Value::of(BigInt(-I(0)));
      case Op::eq: return Value::of(eval(n.args[0], frame) == eval(n.args[1], frame));
      case Op::lt: return Value::of(I(0) < I(1));
      case Op::le: return Value::of(I(0) <= I(1));
      case Op::gt: return Value::of(I(0) > I(1));
      case Op::ge: return Value::of(I(0) >= I(1));
      case Op::and_:
        for (std::size_t i = 0; i < n.args.size(); ++i)
          if (!B(i)) return Value::of(false);
        return Value::of(true);
      case Op::or_:
        for (std::size_t i = 0; i < n.args.size(); ++i)
          if (B(i)) return Value::of(true);
        return Value::of(false);
      case Op::not_: return Value::of(!B(0));
      case Op::implies: return Value::of(!B(0) || B(1));
      case Op::ite: return B(0) ? eval(n.args[1], frame) : eval(n.args[2], frame);
      case Op::uinv: {
        BigInt x = I(1);
        return Value::of(x >= 0 && x < uinv_bound(I(0)));
      }
      case Op::fuel_zero:
      case Op::fuel_succ: return Value::of(BigInt(0));
      case Op::apply: return apply(*n.fn, n.args, frame);
    }
    return Value::of(false);
  }

private:
  const Background& bg_;
  int depth_cap_;
  int depth_ = 0;
  std::map<const FnDef*, Node> bodies_;
  std::map<const FnDef*, std::map<std::vector<Value>, Value>> memo_;

  const Node& body(const FnDef& d) {
    auto it = bodies_.find(&d);
    if (it != bodies_.end()) return it->second;
    std::map<std::string, int> slots;
    for (std::size_t i = 0; i < d.params.size(); ++i) slots[d.params[i].name] = static_cast<int>(i);
    slots["fuel@"] = static_cast<int>(d.params.size());
    return bodies_.emplace(&d, compile(*d.body, slots)).first->second;
  }

  Value apply(const FnDef& d, const std::vector<Node>& arg_nodes, const std::vector<Value>& frame) {
    std::vector<Value> args;
    args.reserve(arg_nodes.size() + 1);
    for (const auto& a : arg_nodes) args.push_back(eval(a, frame));
    if (!d.contract) {
      auto& memo = memo_[&d];
      if (auto it = memo.find(args); it != memo.end()) return it->second;
      for (std::size_t i = 0; i < args.size(); ++i)
        if (!in_range(args[i], d.params[i].range))
          throw Unknown{d.name + " applied outside its domain"};
    }
    struct Depth {
      int& d;
      ~Depth() { --d; }
    } guard{++depth_};
    if (depth_ > depth_cap_) throw Unknown{"recursion depth cap exceeded in " + d.name};
    const Node& b = body(d);
    std::vector<Value> callee = args;
    callee.push_back(Value::of(BigInt(0)));
    Value v = eval(b, callee);
    if (!d.contract) memo_[&d].emplace(std::move(args), v);
    return v;
  }
};

void flatten(const TermPtr& t, const Background& bg, std::vector<TermPtr>& out) {
  if (t->kind == Term::Kind::app && t->op == Op::and_) {
    for (const auto& a : t->args) flatten(a, bg, out);
    return;
  }
  if (t->kind == Term::Kind::app && t->op == Op::apply) {
    const FnDef* d = bg.find(t->name);
    if (d && d->contract) {
      std::map<std::string, TermPtr> s;
      for (std::size_t i = 0; i < d->params.size(); ++i) s[d->params[i].name] = t->args[i];
      flatten(substitute(d->body, s), bg, out);
      return;
    }
  }
  if (t->kind == Term::Kind::bool_lit && t->flag) return;
  out.push_back(t);
}

void order_syms(const Term& t, std::vector<std::string>& order, std::set<std::string>& seen) {
  if (t.kind == Term::Kind::sym && seen.insert(t.name).second) order.push_back(t.name);
  for (const auto& a : t.args) order_syms(*a, order, seen);
}

void slots_of(const Node& n, std::vector<int>& out) {
  if (n.kind == Term::Kind::sym) out.push_back(n.slot);
  for (const auto& a : n.args) slots_of(a, out);
}

class Search {
public:
  Search(const Background& bg, const VCQuery& q, const OracleOptions& opts) : bg_(bg), q_(q), opts_(opts), ev_(bg, opts.depth_cap) {}

  Verdict run() {
    Verdict v;
    try {
      prepare();
      search();
    } catch (const Budget&) {
      v.kind = Verdict::Kind::unknown;
      v.reason = "leaf budget exhausted";
      v.assignments = leaves_;
      return v;
    } catch (const Unknown& u) {
      v.kind = Verdict::Kind::unknown;
      v.reason = u.reason;
      v.assignments = leaves_;
      return v;
    }
    v.assignments = leaves_;
    if (found_) {
      v.kind = Verdict::Kind::invalid;
      v.counterexample = counterexample_;
    } else if (!unknown_.empty()) {
      v.kind = Verdict::Kind::unknown;
      v.reason = unknown_;
    }
    return v;
  }

private:
  const Background& bg_;
  const VCQuery& q_;
  OracleOptions opts_;
  Evaluator ev_;

  std::vector<Const> consts_;  // slot order
  std::vector<Node> conj_;
  std::vector<std::vector<int>> conj_slots_;
  Node goal_;
  std::vector<int> order_;
  std::vector<Value> vals_;
  std::vector<char> assigned_;
  std::vector<char> done_;
  std::vector<int> trail_assign_, trail_done_;
  long long leaves_ = 0;
  bool found_ = false;
  std::vector<std::pair<std::string, Value>> counterexample_;
  std::string unknown_;

  void prepare() {
    std::vector<TermPtr> conj;
    for (const auto& h : q_.hypotheses) flatten(h, bg_, conj);
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (const auto& c : conj) order_syms(*c, names, seen);
    order_syms(*q_.goal, names, seen);
    std::map<std::string, int> slots;
    for (const auto& n : names) {
      auto it = std::find_if(q_.consts.begin(), q_.consts.end(), [&](const Const& c) { return c.name == n; });
      if (it == q_.consts.end()) throw Unknown{"undeclared constant " + n};
      slots[n] = static_cast<int>(consts_.size());
      consts_.push_back(*it);
    }
    for (const auto& c : conj) {
      conj_.push_back(ev_.compile(*c, slots));
      std::vector<int> s;
      slots_of(conj_.back(), s);
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      conj_slots_.push_back(s);
    }
    goal_ = ev_.compile(*q_.goal, slots);
    std::vector<char> definable(consts_.size(), 0);
    for (std::size_t i = 0; i < conj_.size(); ++i) {
      const Node& c = conj_[i];
      if (c.kind != Term::Kind::app || c.op != Op::eq) continue;
      for (int side = 0; side < 2; ++side) {
        const Node& l = c.args[side];
        if (l.kind != Term::Kind::sym) continue;
        std::vector<int> other;
        slots_of(c.args[1 - side], other);
        if (std::find(other.begin(), other.end(), l.slot) == other.end()) definable[l.slot] = 1;
      }
    }
    for (std::size_t i = 0; i < consts_.size(); ++i)
      if (!definable[i]) order_.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < consts_.size(); ++i)
      if (definable[i]) order_.push_back(static_cast<int>(i));
    vals_.assign(consts_.size(), Value{});
    assigned_.assign(consts_.size(), 0);
    done_.assign(conj_.size(), 0);
  }

  bool ready(std::size_t i) const {
    for (int s : conj_slots_[i])
      if (!assigned_[s]) return false;
    return true;
  }

  bool ready(const Node& n) const {
    if (n.kind == Term::Kind::sym) return assigned_[n.slot];
    for (const auto& a : n.args)
      if (!ready(a)) return false;
    return true;
  }

  void assign(int slot, Value v) {
    vals_[slot] = std::move(v);
    assigned_[slot] = 1;
    trail_assign_.push_back(slot);
  }

  void mark(std::size_t i) {
    done_[i] = 1;
    trail_done_.push_back(static_cast<int>(i));
  }

  void undo(std::size_t a, std::size_t d) {
    while (trail_assign_.size() > a) {
      assigned_[trail_assign_.back()] = 0;
      trail_assign_.pop_back();
    }
    while (trail_done_.size() > d) {
      done_[trail_done_.back()] = 0;
      trail_done_.pop_back();
    }
  }

  /// Walks the conjuncts in order, assigning constants fixed by an equality
  /// and checking every conjunct whose constants are known; false prunes.
  bool consistent() {
    try {
      bool changed = true;
      while (changed) {
        changed = false;
        for (std::size_t i = 0; i < conj_.size(); ++i) {
          if (done_[i]) continue;
          const Node& c = conj_[i];
          if (ready(i)) {
            if (!ev_.eval(c, vals_).b) return false;
            mark(i);
            continue;
          }
          if (c.kind != Term::Kind::app || c.op != Op::eq) continue;
          for (int side = 0; side < 2; ++side) {
            const Node& l = c.args[side];
            const Node& r = c.args[1 - side];
            if (l.kind != Term::Kind::sym || assigned_[l.slot] || !ready(r)) continue;
            Value v = ev_.eval(r, vals_);
            if (!in_range(v, consts_[l.slot].range)) return false;
            assign(l.slot, v);
            mark(i);
            changed = true;
            break;
          }
        }
      }
    } catch (const Unknown& u) {
      if (unknown_.empty()) unknown_ = u.reason;
      return false;
    }
    return true;
  }

  void search() {
    if (found_) return;
    std::size_t a = trail_assign_.size(), d = trail_done_.size();
    if (!consistent()) {
      undo(a, d);
      return;
    }
    int next = -1;
    for (int s : order_)
      if (!assigned_[s]) {
        next = s;
        break;
      }
    if (next < 0) {
      if (++leaves_ > opts_.leaf_budget) throw Budget{};
      bool holds = true;
      try {
        holds = ev_.eval(goal_, vals_).b;
      } catch (const Unknown& u) {
        if (unknown_.empty()) unknown_ = u.reason;
      }
      if (!holds) {
        found_ = true;
        std::vector<std::pair<std::string, Value>> cex;
        for (std::size_t i = 0; i < consts_.size(); ++i) cex.emplace_back(consts_[i].name, vals_[i]);
        std::sort(cex.begin(), cex.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        counterexample_ = std::move(cex);
      }
      undo(a, d);
      return;
    }
    const Type& t = consts_[next].range;
    if (t.kind == Type::Kind::bool_) {
      for (bool b : {false, true}) {
        assign(next, Value::of(b));
        search();
        undo(trail_assign_.size() - 1, trail_done_.size());
        if (found_) break;
      }
    } else if (t.kind == Type::Kind::uint) {
      int w = std::min(t.bits, opts_.width);
      long long n = 1LL << w;
      for (long long v = 0; v < n && !found_; ++v) {
        std::size_t a2 = trail_assign_.size(), d2 = trail_done_.size();
        assign(next, Value::of(BigInt(static_cast<long>(v))));
        search();
        undo(a2, d2);
      }
    } else {
      throw Unknown{"unbounded sort: " + consts_[next].name + " : " + to_string(t)};
    }
    undo(a, d);
  }
};

}  // namespace

Verdict bounded_verify(const Background& bg, const VCQuery& q, const OracleOptions& opts) { return Search(bg, q, opts).run(); }

bool replay(const Background& bg, const VCQuery& q, const std::vector<std::pair<std::string, Value>>& assignment) {
  try {
    Evaluator ev(bg, 1 << 20);
    std::map<std::string, int> slots;
    std::vector<Value> frame;
    for (const auto& [n, v] : assignment) {
      slots[n] = static_cast<int>(frame.size());
      frame.push_back(v);
    }
    std::vector<TermPtr> conj;
    for (const auto& h : q.hypotheses) flatten(h, bg, conj);
    for (const auto& c : conj)
      if (!ev.eval(ev.compile(*c, slots), frame).b) return false;
    return !ev.eval(ev.compile(*q.goal, slots), frame).b;
  } catch (const Unknown&) {
    return false;
  }
}

std::optional<Value> evaluate(const Background& bg, const Term& t, const std::map<std::string, Value>& env) {
  try {
    Evaluator ev(bg, 1 << 20);
    std::map<std::string, int> slots;
    std::vector<Value> frame;
    for (const auto& [n, v] : env) {
      slots[n] = static_cast<int>(frame.size());
      frame.push_back(v);
    }
    return ev.eval(ev.compile(t, slots), frame);
  } catch (const Unknown&) {
    return std::nullopt;
  }
}

SolverResult run_solver(const std::string& solver, const std::string& script, int timeout_seconds) {
  SolverResult r;
  char path[] = "/tmp/mvr-query-XXXXXX.smt2";
  int fd = mkstemps(path, 5);
  if (fd < 0) {
    r.status = "error";
    r.output = "cannot create temporary file";
    return r;
  }
  {
    std::ofstream os(path);
    os << script;
  }
  close(fd);
  std::string cmd = "timeout " + std::to_string(timeout_seconds) + " '" + solver + "' '" + path + "' 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    unlink(path);
    r.status = "error";
    return r;
  }
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  int rc = WEXITSTATUS(pclose(pipe));
  unlink(path);
  std::string first = r.output.substr(0, r.output.find('\n'));
  while (!first.empty() && (first.back() == '\r' || first.back() == ' ')) first.pop_back();
  if (first == "timeout" || (first.empty() && rc == 124)) first = "unknown";
  r.status = first == "sat" || first == "unsat" || first == "unknown" ? first : "error";
  return r;
}

nlohmann::json to_json(const VCQuery& q, const Verdict& v) {
  nlohmann::json j;
  j["query"] = q.name;
  j["function"] = q.function;
  j["kind"] = q.kind;
  j["span"] = {{"line", q.span.line}, {"col", q.span.col}};
  j["message"] = q.message;
  j["verdict"] = to_string(v.kind);
  if (!v.reason.empty()) j["reason"] = v.reason;
  if (v.kind == Verdict::Kind::invalid) {
    nlohmann::json cex = nlohmann::json::object();
    for (const auto& [n, val] : v.counterexample) cex[n] = to_string(val);
    j["counterexample"] = cex;
  }
  return j;
}

}  // namespace mv::surface
