#include "mv/meta/properties.hpp"

#include <chrono>
#include <sstream>

#include "mv/calc/sexpr.hpp"

namespace mv::meta {

using typing::PermEnv;
using typing::Strictness;

void PropertyReport::record(bool ok, const std::function<Counterexample()>& make) {
  ++examined;
  if (ok)
    ++passed;
  else if (!counterexample)
    counterexample = make();
}

nlohmann::json to_json(const PropertyReport& r) {
  nlohmann::json j{{"property", r.property}, {"examined", r.examined}, {"passed", r.passed}};
  if (r.counterexample) {
    const auto& c = *r.counterexample;
    j["counterexample"] = {{"term", c.term},     {"perms", c.perms},   {"access", calc::to_string(c.access)},
                           {"typing", c.typing}, {"detail", c.detail}, {"trace", c.trace}};
  }
  return j;
}

std::string summary(const PropertyReport& r) {
  std::ostringstream os;
  os << r.property << ": " << r.passed << "/" << r.examined << " passed";
  if (r.counterexample) os << "; counterexample " << r.counterexample->term << " (" << r.counterexample->detail << ")";
  return os.str();
}

namespace {

const calc::TypePtr& heap_type() {
  static const calc::TypePtr h = calc::Type::int_();
  return h;
}

std::string typings_text(const typing::TypingSet& ts) {
  std::string s;
  for (const auto& t : ts) s += (s.empty() ? "" : "; ") + typing::to_string(t);
  return s;
}

Counterexample make_cex(const Case& c, std::string detail, std::vector<std::string> trace = {}) {
  return Counterexample{calc::print(*c.expr), typing::to_string(c.perms), c.access, typings_text(c.typings),
                        std::move(detail), std::move(trace)};
}

eval::Configuration start(const EnumerationSpec& spec, const Case& c) {
  return eval::Configuration{calc::Expr::int_lit(0), c.expr, spec.decls};
}

}  // namespace

std::vector<PermEnv> perm_envs_for(const calc::Expr& e, const std::vector<std::int64_t>& indices) {
  std::vector<PermEnv> out{PermEnv{}};
  for (auto i : indices) {
    if (!calc::mentions_perm(e, i)) continue;
    std::vector<PermEnv> next;
    for (const auto& p : out) {
      next.push_back(p);
      for (calc::Usage u : {calc::Usage::linear, calc::Usage::shared}) {
        PermEnv q = p;
        q[i] = u;
        next.push_back(q);
      }
    }
    out = std::move(next);
  }
  return out;
}

bool preservation_holds(const EnumerationSpec& spec, const Case& c, typing::TypingCache* cache, std::string& detail) {
  auto s = eval::step(start(spec, c));
  if (s.kind != eval::StepResult::Kind::stepped) return true;
  typing::DeclarativeOptions opts;
  opts.cache = cache;
  opts.size_limit = 64;
  auto heap = typing::typecheck_declarative(spec.decls, heap_type(), {}, {}, Mode::exec, Strictness::strict,
                                            s.next.heap, opts);
  if (!typing::contains(heap.results, typing::Typing{calc::ModeUsage::linear(Mode::exec), heap_type()})) {
    detail = "heap " + calc::print(*s.next.heap) + " no longer has type int after " + s.rule;
    return false;
  }
  auto after = typing::typecheck_declarative(spec.decls, heap_type(), c.perms, {}, c.access, Strictness::strict,
                                             s.next.expr, opts);
  for (const auto& t : c.typings) {
    if (!typing::contains(after.results, t)) {
      detail = "after " + s.rule + " the term " + calc::print(*s.next.expr) + " lost typing " + typing::to_string(t);
      return false;
    }
  }
  return true;
}

bool progress_holds(const EnumerationSpec& spec, const Case& c, std::string& detail) {
  auto s = eval::step(start(spec, c));
  if (s.kind != eval::StepResult::Kind::stuck) return true;
  detail = std::string("stuck (") + eval::to_string(s.reason) + ") at " + calc::print(*s.redex);
  return false;
}

bool termination_holds(const EnumerationSpec& spec, const Case& c, std::uint64_t budget, std::string& detail) {
  auto r = eval::run(start(spec, c), budget);
  if (r.kind == eval::RunOutcome::Kind::finished) return true;
  detail = r.kind == eval::RunOutcome::Kind::crashed ? std::string("crashed: ") + eval::to_string(r.reason)
                                                     : "budget of " + std::to_string(budget) + " steps exhausted";
  return false;
}

SweepResult sweep(const EnumerationSpec& spec, std::uint64_t budget) {
  SweepResult res;
  auto t0 = std::chrono::steady_clock::now();
  typing::TypingCache cache;
  typing::DeclarativeOptions opts;
  opts.cache = &cache;
  opts.size_limit = 64;
  res.terms = for_each_term(spec, cache, [&](const ExprPtr& e) {
    for (const auto& p : perm_envs_for(*e, spec.perm_indices)) {
      for (Mode m : spec.access) {
        auto v = typing::typecheck_declarative(spec.decls, heap_type(), p, {}, m, Strictness::strict, e, opts);
        if (!v.ok()) continue;
        ++res.configurations;
        Case c{e, p, m, v.results};
        std::string detail;
        bool ok = preservation_holds(spec, c, &cache, detail);
        res.preservation.record(ok, [&] { return make_cex(c, detail); });
        ok = progress_holds(spec, c, detail);
        res.progress.record(ok, [&] { return make_cex(c, detail); });
        if (m != Mode::exec) {
          ok = termination_holds(spec, c, budget, detail);
          res.termination.record(ok, [&] {
            std::vector<std::string> trace;
            for (const auto& line : eval::run(start(spec, c), std::min<std::uint64_t>(budget, 50), true).trace)
              trace.push_back(eval::to_string(line));
            return make_cex(c, detail, trace);
          });
        }
      }
    }
    return true;
  });
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

void check_agreement(const EnumerationSpec& spec, const ExprPtr& e, Mode m, AgreementResult& res,
                     typing::TypingCache* cache) {
  typing::DeclarativeOptions opts;
  opts.cache = cache;
  typing::DeclarativeOptions annotated = opts;
  annotated.annotated_borrows_only = true;
  Case c{e, {}, m, {}};
  auto d = typing::typecheck_declarative(spec.decls, heap_type(), {}, {}, m, Strictness::strict, e, opts);
  c.typings = d.results;
  auto a = typing::typecheck_algorithmic(spec.decls, heap_type(), {}, {}, m, e);
  if (a.ok) {
    bool member = typing::contains(d.results, a.typing);
    std::string detail = "algorithmic typing " + typing::to_string(a.typing) + " not derivable declaratively";
    if (member) {
      auto da = typing::typecheck_declarative(spec.decls, heap_type(), {}, {}, m, Strictness::strict, e, annotated);
      for (const auto& t : da.results) {
        if (!typing::typecheck_algorithmic(spec.decls, heap_type(), {}, {}, m, e, t).ok) {
          member = false;
          detail = "algorithmic checker misses " + typing::to_string(t) + ", derivable with the annotated borrows";
          break;
        }
      }
    }
    res.agreement.record(member, [&] { return make_cex(c, detail); });
    return;
  }
  if (d.results.empty()) {
    bool both = a.diagnostic.has_value() && !d.diagnostics.empty();
    res.agreement.record(both, [&] { return make_cex(c, "a rejection without a diagnostic"); });
    return;
  }
  auto da = typing::typecheck_declarative(spec.decls, heap_type(), {}, {}, m, Strictness::strict, e, annotated);
  if (da.results.empty()) {
    ++res.known_incomplete;
    if (res.incomplete_examples.size() < 5)
      res.incomplete_examples.push_back(calc::print(*e) + " at " + calc::to_string(m));
    res.agreement.record(true, {});
    return;
  }
  res.agreement.record(false, [&] {
    return make_cex(c, "algorithmic rejection (" + (a.diagnostic ? a.diagnostic->rule : std::string("?")) +
                           ") of a term typable with its annotated borrows");
  });
}

AgreementResult agreement_sweep(EnumerationSpec spec) {
  AgreementResult res;
  auto t0 = std::chrono::steady_clock::now();
  spec.permission_free = true;
  typing::TypingCache cache;
  for_each_term(spec, cache, [&](const ExprPtr& e) {
    for (Mode m : spec.access) check_agreement(spec, e, m, res, &cache);
    return true;
  });
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

DivergenceFixture divergence_fixture() {
  const char* src = R"((heap (Fn exec many static (exec linear) int (exec linear) int)
      (lambda exec many static (x (exec linear) int) (app (hread) x)))
(main (app (hread) 0)))";
  return DivergenceFixture{calc::parse_program(src)};
}

}  // namespace mv::meta
