#include <doctest.h>

#include "mv/calc/sexpr.hpp"
#include "mv/eval/eval.hpp"
#include "mv/typing/check.hpp"

using namespace mv;
using namespace mv::eval;
using calc::parse_expr;
using calc::print;

namespace {

Configuration cfg(const char* e, const char* heap = "unit", const char* decl_src = "") {
  DeclTable d = calc::parse_program(std::string(decl_src) + "\n(main unit)").decls;
  return Configuration{parse_expr(heap), parse_expr(e), d};
}

std::string redex_of(const char* e) {
  auto x = parse_expr(e);
  auto p = decompose(*x);
  REQUIRE(p.has_value());
  return print(at_path(*x, *p));
}

}  // namespace

TEST_CASE("decomposition") {
  CHECK(redex_of("(+ (+ 1 2) 3)") == "(+ 1 2)");
  CHECK_FALSE(decompose(*parse_expr("(some 1 int)")).has_value());
  CHECK(redex_of("(struct S 1 (+ 2 3) (+ 4 5))") == "(+ 2 3)");
  CHECK(redex_of("(pwrite 0 (+ 1 1) (perm 0 (+ 2 2)))") == "(+ 1 1)");
  CHECK(redex_of("(pwrite 0 1 (copy (perm 0 1)))") == "(copy (perm 0 1))");
  CHECK(redex_of("(app (lambda exec many static (x (exec linear) int) x) (+ 1 1))") == "(+ 1 1)");
  CHECK(redex_of("(let exec x (+ 1 1) (+ x 2))") == "(+ 1 1)");
  // A permission literal has no evaluation context inside it.
  CHECK(redex_of("(perm 0 (+ 1 1))") == "(perm 0 (+ 1 1))");
  // Plugging the redex back reproduces the term.
  const char* terms[] = {"(+ (+ 1 2) 3)", "(struct S 1 (+ 2 3) (+ 4 5))", "(if_some y (some (+ 1 1) int) y 0)",
                         "(seq (drop (copy 1)) 2)"};
  for (const char* t : terms) {
    auto e = parse_expr(t);
    auto p = decompose(*e);
    REQUIRE(p.has_value());
    auto r = at_path(*e, *p);
    CHECK(calc::expr_eq(plug(e, *p, std::make_shared<const calc::Expr>(r)), e));
  }
}

TEST_CASE("single steps") {
  auto s = step(cfg("(pwrite 0 9 (perm 0 5))"));
  REQUIRE(s.kind == StepResult::Kind::stepped);
  CHECK(print(s.next.expr) == "(perm 0 9)");
  CHECK(s.rule == "pwrite");

  auto crash = step(cfg("(crash_never bot)"));
  CHECK(crash.kind == StepResult::Kind::stuck);
  CHECK(crash.reason == StuckReason::crash_never_on_bottom);

  auto w = step(cfg("(hwrite 7)", "4"));
  REQUIRE(w.kind == StepResult::Kind::stepped);
  CHECK(print(w.next.heap) == "7");
  CHECK(print(w.next.expr) == "unit");

  CHECK(step(cfg("5")).kind == StepResult::Kind::already_value);
  auto bad = step(cfg("(pread 1 (perm 0 5))"));
  CHECK(bad.kind == StepResult::Kind::stuck);
  CHECK(bad.reason == StuckReason::no_rule_applies);

  auto d = step(cfg("(default P)", "unit", "(struct P (exec int) (spec (Option int)))"));
  REQUIRE(d.kind == StepResult::Kind::stepped);
  CHECK(print(d.next.expr) == "(struct P 0 (none int))");
}

TEST_CASE("runs") {
  auto five = run(cfg("5"));
  CHECK(five.kind == RunOutcome::Kind::finished);
  CHECK(five.steps == 0);

  auto r = run(cfg("(let exec x (+ 1 1) (+ x (copy x)))"));
  REQUIRE(r.kind == RunOutcome::Kind::finished);
  CHECK(print(r.config.expr) == "4");
  CHECK(r.steps == 4);

  auto none = run(cfg("(+ 1 2)"), 0);
  CHECK(none.kind == RunOutcome::Kind::budget_exhausted);

  auto st = run(cfg("(let_struct P (a b) (struct P 1 2) (+ a b))", "unit", "(struct P (exec int) (exec int))"));
  CHECK(print(st.config.expr) == "3");

  auto tr = run(cfg("(seq (hwrite (+ 1 1)) (hread))", "0"), default_budget, true);
  REQUIRE(tr.trace.size() == 4);
  CHECK(to_string(tr.trace[0]) == "0 add (+ 1 1)");
  CHECK(to_string(tr.trace[1]) == "1 hwrite (hwrite 2)");
  CHECK(to_string(tr.trace[3]) == "3 hread (hread)");
  CHECK(print(tr.config.expr) == "2");
}

TEST_CASE("determinism of stepping") {
  auto c = cfg("(if_some z (some (+ 1 1) int) (+ z z) 0)");
  for (int i = 0; i < 3; ++i) {
    auto a = step(c), b = step(c);
    REQUIRE(a.kind == b.kind);
    if (a.kind != StepResult::Kind::stepped) break;
    CHECK(calc::expr_eq(a.next.expr, b.next.expr));
    c = a.next;
  }
}

TEST_CASE("snapshot probe") {
  auto prog = snapshot_probe_program(0, 5, 9);
  auto v = typing::typecheck_algorithmic(prog.decls, calc::parse_type("Unit"), {{0, calc::Usage::linear}}, {},
                                         calc::Mode::exec, prog.expr);
  CHECK(v.ok);
  auto ev = spec_determinism_probe(Configuration{parse_expr("unit"), prog.expr, prog.decls});
  REQUIRE(ev.finished);
  CHECK(ev.snapshot == 5);
  CHECK(ev.live == 9);

  auto still = snapshot_probe_program(0, 5, std::nullopt);
  auto ev2 = spec_determinism_probe(Configuration{parse_expr("unit"), still.expr, still.decls});
  REQUIRE(ev2.finished);
  CHECK(ev2.snapshot == ev2.live);
}
