#include <doctest.h>

#include "mv/calc/sexpr.hpp"
#include "mv/calc/syntax.hpp"

using namespace mv::calc;

namespace {

ExprPtr ex(const char* s) { return parse_expr(s); }
TypePtr ty(const char* s) { return parse_type(s); }

}  // namespace

TEST_CASE("mode lattice") {
  const Mode all[] = {Mode::exec, Mode::proof, Mode::spec};
  CHECK(mode_leq(Mode::exec, Mode::spec));
  CHECK_FALSE(mode_leq(Mode::spec, Mode::proof));
  CHECK(mode_join(Mode::proof, Mode::exec) == Mode::proof);
  // Join table against the rank encoding exec=0 < proof=1 < spec=2.
  for (Mode a : all) {
    CHECK(mode_join(a, a) == a);
    for (Mode b : all) {
      int ra = static_cast<int>(a), rb = static_cast<int>(b);
      CHECK(mode_leq(a, b) == (ra <= rb));
      CHECK(static_cast<int>(mode_join(a, b)) == std::max(ra, rb));
      CHECK(mode_join(a, b) == mode_join(b, a));
      CHECK(mode_leq(a, b) == (mode_join(a, b) == b));
      for (Mode c : all) CHECK(mode_join(mode_join(a, b), c) == mode_join(a, mode_join(b, c)));
    }
  }
}

TEST_CASE("join_mode_usage") {
  CHECK(join_mode_usage(Mode::proof, ModeUsage::linear(Mode::exec)) == ModeUsage::linear(Mode::proof));
  CHECK(join_mode_usage(Mode::exec, ModeUsage::spec()) == ModeUsage::spec());
  CHECK(join_mode_usage(Mode::spec, ModeUsage::linear(Mode::exec)) == ModeUsage::spec());
  CHECK(join_mode_usage(Mode::exec, ModeUsage::shared(Mode::proof)) == ModeUsage::shared(Mode::proof));
}

TEST_CASE("mode usage shape") {
  CHECK(ModeUsage::all().size() == 5);
  CHECK_FALSE(ModeUsage::spec().usage().has_value());
  for (const auto& mu : ModeUsage::all()) CHECK(mu.is_linear() == (mu.usage() == Usage::linear));
}

TEST_CASE("lifetime_of") {
  CHECK(lifetime_of(*ty("int")) == Lifetime::static_);
  auto f = ty("(Fn exec many restricted (exec linear) int (exec linear) int)");
  CHECK(lifetime_of(*f) == Lifetime::restricted);
  auto nested = ty("(Option (Option (Fn exec many restricted (exec linear) int (exec linear) int)))");
  CHECK(lifetime_of(*nested) == Lifetime::restricted);
  CHECK(lifetime_of(*ty("(perm 0 int)")) == Lifetime::static_);
}

TEST_CASE("substitute") {
  CHECK(print(substitute(ex("(+ x 1)"), "x", ex("2"))) == "(+ 2 1)");
  auto lam = ex("(lambda exec many static (x (exec linear) int) x)");
  CHECK(expr_eq(substitute(lam, "x", ex("5")), lam));
  CHECK(print(substitute(ex("(let spec y x (+ y x))"), "x", ex("3"))) == "(let spec y 3 (+ y 3))");
  // Shadowing in the body of a let stops substitution there but not in the bound term.
  CHECK(print(substitute(ex("(let exec x x x)"), "x", ex("7"))) == "(let exec x 7 x)");
  CHECK(print(substitute(ex("(if_some x (some x int) x y)"), "y", ex("1"))) == "(if_some x (some x int) x 1)");
  CHECK(print(substitute(ex("(let_struct P (a b) x (+ a x))"), "x", ex("4"))) == "(let_struct P (a b) 4 (+ a 4))");
}

TEST_CASE("substitution commutes for distinct variables") {
  const char* terms[] = {"(+ x y)", "(let exec z x (+ z y))", "(seq unit (struct P x y))",
                         "(lambda exec once restricted (y (exec linear) int) (+ x y))"};
  for (const char* t : terms) {
    auto e = ex(t);
    auto a = substitute(substitute(e, "x", ex("1")), "y", ex("0"));
    auto b = substitute(substitute(e, "y", ex("0")), "x", ex("1"));
    CHECK(expr_eq(a, b));
  }
}

TEST_CASE("is_value") {
  CHECK(is_value(*ex("(perm 3 7)")));
  CHECK_FALSE(is_value(*ex("(+ 1 2)")));
  CHECK(is_value(*ex("(some (struct S 0 unit) S)")));
  CHECK_FALSE(is_value(*ex("(some (struct S (+ 0 0) unit) S)")));
  CHECK(is_value(*ex("bot")));
  CHECK(is_value(*ex("(none int)")));
  CHECK(is_value(*ex("(lambda exec many static (x (exec linear) int) (+ x x))")));
  CHECK_FALSE(is_value(*ex("x")));
  CHECK_FALSE(is_value(*ex("(perm 0 (+ 1 1))")));
  CHECK(is_value(*substitute(ex("(some x int)"), "x", ex("1"))));
}

TEST_CASE("expr size") {
  CHECK(expr_size(*ex("1")) == 1);
  CHECK(expr_size(*ex("(+ 1 2)")) == 3);
  CHECK(expr_size(*ex("(pdata (perm 0 1))")) == 4);
}

TEST_CASE("printer round trip") {
  const char* terms[] = {
      "x", "-12", "unit", "bot", "(+ 1 (+ x y))", "(default (Option int))", "(crash_never bot)", "(hdata)", "(hread)",
      "(hwrite 5)", "(perm -2 7)", "(pdata (perm 0 1))", "(pread 0 p)", "(pwrite 0 9 p)", "(drop x)", "(copy x)",
      "(seq unit 1)", "(seq (borrow x 0) unit 1)", "(let proof y 1 y)", "(let exec y (borrow a b 3) (hread) y)",
      "(none (perm 0 int))", "(some 1 int)", "(if_some z (some 1 int) z 0)", "(struct P 1 unit)",
      "(let_struct P (a b) (struct P 1 unit) a)",
      "(lambda proof once restricted (x (proof shared) (perm 1 int)) (pread 1 x))",
      "(lambda spec many static (x spec Never) unit)", "(app f 3)",
      "(default (Fn exec once static (exec linear) Unit spec (Option P)))",
  };
  for (const char* t : terms) {
    auto e = ex(t);
    CHECK(print(e) == t);
    CHECK(expr_eq(parse_expr(print(e)), e));
  }
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_expr("(+ 1\n  (pread x 2))");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.span().line == 2);
  }
  CHECK_THROWS_AS(parse_expr("(let exec 1 2 3)"), ParseError);
  CHECK_THROWS_AS(parse_expr(")"), ParseError);
}

TEST_CASE("program files") {
  const char* src = R"((struct P (exec int) (proof Unit))
; heap
(heap int 4)
(perms (0 linear) (1 shared))
(access exec)
(expect (exec linear) int)
(main (hread))
)";
  CalcProgram p = parse_program(src);
  CHECK(p.decls.decls().size() == 1);
  CHECK(p.perms.size() == 2);
  CHECK(p.perms.at(1) == Usage::shared);
  CHECK(print(p.heap_value) == "4");
  CHECK(p.expect.has_value());
  CalcProgram q = parse_program(print_program(p));
  CHECK(print_program(q) == print_program(p));
}
