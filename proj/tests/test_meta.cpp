#include <doctest.h>

#include <algorithm>

#include "mv/calc/sexpr.hpp"
#include "mv/meta/properties.hpp"

using namespace mv;
using namespace mv::meta;
using calc::parse_expr;
using calc::print;

namespace {

std::vector<std::string> printed(const EnumerationSpec& s) {
  std::vector<std::string> out;
  for (const auto& e : enumerate_terms(s)) out.push_back(print(*e));
  return out;
}

bool has(const std::vector<std::string>& v, const std::string& x) { return std::find(v.begin(), v.end(), x) != v.end(); }

typing::TypingSet typings(const EnumerationSpec& s, const ExprPtr& e, const typing::PermEnv& p, Mode m) {
  return typing::typecheck_declarative(s.decls, calc::Type::int_(), p, {}, m, typing::Strictness::strict, e).results;
}

}  // namespace

TEST_CASE("leaves at size 1") {
  auto s = default_spec();
  s.max_size = 1;
  auto terms = printed(s);
  CHECK(has(terms, "0"));
  CHECK(has(terms, "1"));
  CHECK(has(terms, "unit"));
  for (Mode m : {Mode::exec, Mode::proof, Mode::spec}) {
    CHECK_FALSE(typings(s, parse_expr("1"), {}, m).empty());
    CHECK_FALSE(typings(s, parse_expr("unit"), {}, m).empty());
  }
}

TEST_CASE("size 4 reaches a snapshot of a permission literal") {
  auto s = default_spec();
  s.max_size = 4;
  auto terms = printed(s);
  REQUIRE(has(terms, "(pdata (perm 0 1))"));
  CHECK(calc::expr_size(*parse_expr("(pdata (perm 0 1))")) == 4);
  auto ts = typings(s, parse_expr("(pdata (perm 0 1))"), {}, Mode::spec);
  CHECK(typing::contains(ts, typing::Typing{calc::ModeUsage::spec(), calc::Type::int_()}));
}

TEST_CASE("enumeration is stable") {
  auto s = default_spec();
  s.max_size = 4;
  CHECK(printed(s) == printed(s));
}

TEST_CASE("permission environments follow mentions") {
  CHECK(perm_envs_for(*parse_expr("(+ 1 2)"), {0}).size() == 1);
  CHECK(perm_envs_for(*parse_expr("(pdata (perm 0 1))"), {0}).size() == 3);
}

TEST_CASE("single-case properties") {
  auto s = default_spec();
  std::string detail;
  Case add{parse_expr("(+ 1 2)"), {}, Mode::exec, {}};
  add.typings = typings(s, add.expr, {}, Mode::exec);
  CHECK(preservation_holds(s, add, nullptr, detail));
  CHECK(progress_holds(s, add, detail));

  Case pw{parse_expr("(pwrite 0 1 (perm 0 0))"), {{0, calc::Usage::linear}}, Mode::exec, {}};
  pw.typings = typings(s, pw.expr, pw.perms, Mode::exec);
  REQUIRE(typing::contains(pw.typings, typing::Typing{calc::ModeUsage::linear(Mode::proof), calc::parse_type("(perm 0 int)")}));
  CHECK(preservation_holds(s, pw, nullptr, detail));

  Case value{parse_expr("(some 1 int)"), {}, Mode::spec, {}};
  value.typings = typings(s, value.expr, {}, Mode::spec);
  CHECK(preservation_holds(s, value, nullptr, detail));
  CHECK(progress_holds(s, value, detail));
  CHECK(termination_holds(s, value, 0, detail));

  Case spec_add{parse_expr("(+ 1 2)"), {}, Mode::spec, {}};
  CHECK_FALSE(termination_holds(s, spec_add, 0, detail));
  CHECK(detail.find("budget") != std::string::npos);
}

TEST_CASE("crash_never of bottom is never enumerated") {
  auto s = default_spec();
  auto e = parse_expr("(crash_never bot)");
  for (Mode m : {Mode::exec, Mode::proof, Mode::spec}) CHECK(typings(s, e, {}, m).empty());
}

TEST_CASE("sweep over the default corpus at size 4") {
  auto s = default_spec();
  s.max_size = 4;
  auto r = sweep(s);
  CHECK(r.terms > 0);
  CHECK(r.preservation.examined == r.configurations);
  CHECK(r.preservation.ok());
  CHECK(r.progress.ok());
  CHECK(r.termination.ok());
  CHECK(r.termination.examined > 0);
  CHECK(r.termination.examined < r.configurations);
  auto j = to_json(r.preservation);
  CHECK(j["property"] == "preservation");
  CHECK_FALSE(j.contains("counterexample"));
}

TEST_CASE("sweep over the rich corpus at size 4") {
  auto s = rich_spec();
  s.max_size = 4;
  auto r = sweep(s);
  CHECK(r.preservation.ok());
  CHECK(r.progress.ok());
  CHECK(r.termination.ok());
}

TEST_CASE("lax weakening keeps the binding mode") {
  // A spec binding captured by a dead-end function body cannot stand for an exec result.
  auto s = default_spec();
  auto e = parse_expr("(let spec x0 bot (lambda exec many static (x1 (exec linear) int) x0))");
  auto lost = typing::Typing{calc::ModeUsage::spec(), calc::parse_type("(Fn exec many static (exec linear) int (exec linear) Never)")};
  CHECK_FALSE(typing::contains(typings(s, e, {}, Mode::exec), lost));
}

TEST_CASE("empty corpus") {
  auto s = default_spec();
  s.max_size = 0;
  auto r = sweep(s);
  CHECK(r.preservation.examined == 0);
  CHECK(r.preservation.ok());
  CHECK(agreement_sweep(s).agreement.ok());
}

TEST_CASE("checker agreement") {
  auto s = default_spec();
  s.max_size = 4;
  auto r = agreement_sweep(s);
  CHECK(r.agreement.examined > 0);
  CHECK(r.agreement.ok());
  CHECK(r.known_incomplete == 0);

  AgreementResult hand;
  check_agreement(s, parse_expr("(let exec x0 (hread) (let exec x1 (copy x0) (seq (drop x1) x0)))"), Mode::exec, hand);
  CHECK(hand.known_incomplete == 1);
  CHECK(hand.agreement.ok());
  AgreementResult annotated;
  check_agreement(s, parse_expr("(let exec x0 (hread) (let exec x1 (borrow x0) (copy x0) (seq (drop x1) x0)))"),
                  Mode::exec, annotated);
  CHECK(annotated.known_incomplete == 0);
  CHECK(annotated.agreement.ok());
}

TEST_CASE("heap self-application diverges at exec") {
  auto f = divergence_fixture();
  auto v = typing::check_configuration(f.program.decls, f.program.heap_type, {}, {}, Mode::exec, f.program.heap_value,
                                       f.program.main, typing::Typing{calc::ModeUsage::linear(Mode::exec), calc::Type::int_()});
  CHECK(v.ok());
  auto r = eval::run(eval::Configuration{f.program.heap_value, f.program.main, f.program.decls}, 1000);
  CHECK(r.kind == eval::RunOutcome::Kind::budget_exhausted);
}
