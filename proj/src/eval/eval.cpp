#include "mv/eval/eval.hpp"

#include <sstream>

#include "mv/calc/sexpr.hpp"
#include "mv/typing/judgments.hpp"

namespace mv::eval {

using calc::Expr;
using EK = calc::Expr::Kind;

namespace {

std::optional<std::size_t> first_nonvalue(const Expr& e, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to && i < e.args.size(); ++i)
    if (!calc::is_value(*e.args[i])) return i;
  return std::nullopt;
}

}  // namespace

std::optional<Path> decompose(const Expr& e) {
  if (calc::is_value(e)) return std::nullopt;
  std::optional<std::size_t> hole;
  switch (e.kind) {
    case EK::add:
    case EK::pwrite:
    case EK::app:
    case EK::struct_:
      hole = first_nonvalue(e, 0, e.args.size());
      break;
    case EK::crash_never:
    case EK::hwrite:
    case EK::pdata:
    case EK::pread:
    case EK::drop:
    case EK::copy:
    case EK::some:
    case EK::seq:
    case EK::let:
    case EK::if_some:
    case EK::let_struct:
      hole = first_nonvalue(e, 0, 1);
      break;
    default:
      break;
  }
  Path path;
  if (hole) {
    path.push_back(*hole);
    Path rest = *decompose(*e.args[*hole]);
    path.insert(path.end(), rest.begin(), rest.end());
  }
  return path;
}

const Expr& at_path(const Expr& e, const Path& path) {
  const Expr* cur = &e;
  for (auto i : path) cur = cur->args.at(i).get();
  return *cur;
}

ExprPtr plug(const ExprPtr& e, const Path& path, ExprPtr replacement) {
  if (path.empty()) return replacement;
  Path rest(path.begin() + 1, path.end());
  return calc::with_child(*e, path[0], plug(e->args.at(path[0]), rest, std::move(replacement)));
}

const char* to_string(StuckReason r) {
  return r == StuckReason::crash_never_on_bottom ? "crash_never_on_bottom" : "no_rule_applies";
}

namespace {

struct Reduced {
  const char* rule;
  ExprPtr result;
  ExprPtr heap;
};

std::optional<Reduced> reduce(const Expr& r, const ExprPtr& heap, const DeclTable& d, StuckReason& why) {
  const auto& a = r.args;
  why = StuckReason::no_rule_applies;
  switch (r.kind) {
    case EK::add:
      if (a[0]->kind == EK::int_lit && a[1]->kind == EK::int_lit)
        return Reduced{"add", Expr::int_lit(a[0]->value + a[1]->value), heap};
      return std::nullopt;
    case EK::default_:
      try {
        return Reduced{"default", typing::default_value(d, r.type), heap};
      } catch (const std::exception&) {
        return std::nullopt;
      }
    case EK::hdata:
      return Reduced{"hdata", heap, heap};
    case EK::hread:
      return Reduced{"hread", heap, heap};
    case EK::hwrite:
      return Reduced{"hwrite", Expr::unit(), a[0]};
    case EK::pdata:
      if (a[0]->kind == EK::perm) return Reduced{"pdata", a[0]->args[0], heap};
      return std::nullopt;
    case EK::pread:
      if (a[0]->kind == EK::perm && a[0]->perm_index == r.perm_index) return Reduced{"pread", a[0]->args[0], heap};
      return std::nullopt;
    case EK::pwrite:
      if (a[1]->kind == EK::perm && a[1]->perm_index == r.perm_index)
        return Reduced{"pwrite", Expr::perm(r.perm_index, a[0]), heap};
      return std::nullopt;
    case EK::drop:
      return Reduced{"drop", Expr::unit(), heap};
    case EK::copy:
      return Reduced{"copy", a[0], heap};
    case EK::seq:
      if (a[0]->kind == EK::unit) return Reduced{"seq", a[1], heap};
      return std::nullopt;
    case EK::let:
      return Reduced{"let", calc::substitute(a[1], r.name, a[0]), heap};
    case EK::if_some:
      if (a[0]->kind == EK::none) return Reduced{"if_none", a[2], heap};
      if (a[0]->kind == EK::some) return Reduced{"if_some", calc::substitute(a[1], r.name, a[0]->args[0]), heap};
      return std::nullopt;
    case EK::let_struct: {
      const Expr& s = *a[0];
      if (s.kind != EK::struct_ || s.name != r.name || s.args.size() != r.binders.size()) return std::nullopt;
      ExprPtr body = a[1];
      for (std::size_t i = 0; i < r.binders.size(); ++i) body = calc::substitute(body, r.binders[i], s.args[i]);
      return Reduced{"let_struct", body, heap};
    }
    case EK::app:
      if (a[0]->kind == EK::lambda)
        return Reduced{"app", calc::substitute(a[0]->lambda->body, a[0]->lambda->param, a[1]), heap};
      return std::nullopt;
    case EK::crash_never:
      if (a[0]->kind == EK::bottom) why = StuckReason::crash_never_on_bottom;
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

}  // namespace

StepResult step(const Configuration& c) {
  StepResult out;
  auto path = decompose(*c.expr);
  if (!path) return out;
  const Expr& redex = at_path(*c.expr, *path);
  StuckReason why;
  auto r = reduce(redex, c.heap, c.decls, why);
  // The redex is addressed by path; keep a shared handle for reporting.
  ExprPtr handle = path->empty() ? c.expr : nullptr;
  if (!handle) {
    const Expr* parent = &at_path(*c.expr, Path(path->begin(), path->end() - 1));
    handle = parent->args[path->back()];
  }
  out.redex = handle;
  if (!r) {
    out.kind = StepResult::Kind::stuck;
    out.reason = why;
    return out;
  }
  out.kind = StepResult::Kind::stepped;
  out.rule = r->rule;
  out.next = Configuration{r->heap, plug(c.expr, *path, r->result), c.decls};
  return out;
}

std::string to_string(const TraceLine& t) {
  std::ostringstream os;
  os << t.index << " " << t.rule << " " << t.redex;
  return os.str();
}

RunOutcome run(Configuration c, std::uint64_t budget, bool record_trace) {
  RunOutcome out;
  for (;;) {
    if (calc::is_value(*c.expr)) {
      out.kind = RunOutcome::Kind::finished;
      break;
    }
    if (out.steps >= budget) {
      out.kind = RunOutcome::Kind::budget_exhausted;
      break;
    }
    StepResult s = step(c);
    if (s.kind == StepResult::Kind::stuck) {
      out.kind = RunOutcome::Kind::crashed;
      out.reason = s.reason;
      break;
    }
    if (record_trace) out.trace.push_back(TraceLine{out.steps, s.rule, calc::print(*s.redex)});
    c = std::move(s.next);
    ++out.steps;
  }
  out.config = std::move(c);
  return out;
}

ProbeProgram snapshot_probe_program(std::int64_t index, long before, std::optional<long> after) {
  std::string i = std::to_string(index);
  std::string decl = "(struct Probe (spec int) (exec int) (proof (perm " + i + " int)))";
  std::string write = after ? "(pwrite " + i + " " + std::to_string(*after) + " p)" : "p";
  std::string text = decl + "\n(main (let proof p (perm " + i + " " + std::to_string(before) +
                     ") (let spec s p (let proof q " + write + " (let exec r (borrow q) (copy (pread " + i +
                     " q)) (struct Probe (pdata s) r q))))))";
  auto prog = calc::parse_program(text);
  return ProbeProgram{prog.decls, prog.main};
}

ProbeEvidence spec_determinism_probe(const Configuration& c) {
  ProbeEvidence ev;
  RunOutcome r = run(c);
  ev.steps = r.steps;
  ev.finished = r.kind == RunOutcome::Kind::finished;
  if (!ev.finished) return ev;
  const Expr& v = *r.config.expr;
  if (v.kind == EK::struct_ && v.args.size() >= 2) {
    if (v.args[0]->kind == EK::int_lit) ev.snapshot = v.args[0]->value;
    if (v.args[1]->kind == EK::int_lit) ev.live = v.args[1]->value;
  }
  return ev;
}

}  // namespace mv::eval
