#include <doctest.h>

#include "mv/calc/sexpr.hpp"
#include "mv/typing/check.hpp"

using namespace mv;
using namespace mv::typing;
using calc::parse_expr;
using calc::parse_type;

namespace {

Binding b(ModeUsage mu, const char* t) { return Binding{mu, parse_type(t)}; }

const ModeUsage XL = ModeUsage::linear(Mode::exec);
const ModeUsage XS = ModeUsage::shared(Mode::exec);
const ModeUsage PL = ModeUsage::linear(Mode::proof);
const ModeUsage PS = ModeUsage::shared(Mode::proof);
const ModeUsage SP = ModeUsage::spec();

Typing tt(ModeUsage mu, const char* t) { return Typing{mu, parse_type(t)}; }

DeclTable decls(const char* src) {
  std::string text = std::string(src) + "\n(main unit)";
  return calc::parse_program(text).decls;
}

TypingSet decl_types(const char* e, const VarEnv& g = {}, const PermEnv& p = {}, Mode m = Mode::exec,
                     const DeclTable& d = {}) {
  return typecheck_declarative(d, parse_type("int"), p, g, m, Strictness::strict, parse_expr(e)).results;
}

}  // namespace

TEST_CASE("environment projections") {
  VarEnv g{{"x1", b(XS, "int")}, {"x2", b(XL, "int")}};
  VarEnv lin = project(g, Selector::linear);
  CHECK(lin.size() == 1);
  CHECK(lin.count("x2"));
  CHECK(project(g, Selector::nonlinear).count("x1"));
  CHECK(project(PermEnv{{0, Usage::linear}, {1, Usage::linear}}, Selector::nonlinear).empty());
  VarEnv s = project(VarEnv{{"x", b(PL, "int")}}, Selector::as_spec);
  CHECK(s.at("x").mu == SP);
  CHECK(project(g, Selector::as_shared).at("x2").mu == XS);
  CHECK(project(g, Selector::as_linear).at("x1").mu == XL);
  CHECK_THROWS(project(PermEnv{}, Selector::as_spec));
}

TEST_CASE("environment splits") {
  VarEnv g{{"x1", b(XS, "int")}, {"x2", b(XL, "int")}};
  auto splits = env_split_enumerate(g);
  bool found = false;
  for (const auto& [l, r] : splits)
    if (l.at("x2").mu == XL && r.at("x2").mu == SP && l.at("x1").mu == XS && r.at("x1").mu == XS) found = true;
  CHECK(found);
  CHECK(env_split_enumerate(VarEnv{}).size() == 1);
  for (int k = 0; k <= 4; ++k) {
    VarEnv h;
    for (int i = 0; i < k; ++i) h.emplace("v" + std::to_string(i), b(i % 2 ? PL : XL, "int"));
    h.emplace("s", b(SP, "Unit"));
    h.emplace("sh", b(PS, "int"));
    auto all = env_split_enumerate(h);
    CHECK(all.size() == (1u << k));
    for (const auto& [l, r] : all) CHECK(is_split_of(h, l, r));
  }
  PermEnv p{{0, Usage::linear}, {1, Usage::shared}, {2, Usage::linear}};
  auto ps = perm_split_enumerate(p);
  CHECK(ps.size() == 4);
  for (const auto& [l, r] : ps) {
    CHECK(is_split_of(p, l, r));
    CHECK(l.count(1));
    CHECK(r.count(1));
    CHECK(l.count(0) + r.count(0) == 1);
  }
  CHECK_FALSE(is_split_of(g, g, g));
}

TEST_CASE("copyable types") {
  DeclTable d = decls("(struct P (exec int) (proof Unit)) (struct Q (exec (perm 0 int)))");
  CHECK(is_copyable(d, Mode::spec, *parse_type("(perm 0 int)")));
  CHECK(is_copyable(d, Mode::exec, *parse_type("int")));
  CHECK_FALSE(is_copyable(d, Mode::exec, *parse_type("(Fn exec once static (exec linear) int (exec linear) int)")));
  CHECK(is_copyable(d, Mode::exec, *parse_type("(Fn exec many static (exec linear) int (exec linear) int)")));
  CHECK_FALSE(is_copyable(d, Mode::proof, *parse_type("(perm 0 int)")));
  CHECK(is_copyable(d, Mode::exec, *parse_type("(Option P)")));
  CHECK_FALSE(is_copyable(d, Mode::exec, *parse_type("Q")));
  CHECK(is_copyable(d, Mode::spec, *parse_type("Q")));
}

TEST_CASE("default values") {
  DeclTable d = decls("(struct P (exec int) (proof Unit))");
  CHECK(calc::print(default_value(d, parse_type("int"))) == "0");
  CHECK(calc::print(default_value(d, parse_type("Never"))) == "bot");
  CHECK(calc::print(default_value(d, parse_type("(Option Never)"))) == "(none Never)");
  CHECK(calc::print(default_value(d, parse_type("(perm 2 P)"))) == "(perm 2 (struct P 0 unit))");
  CHECK_THROWS(default_value(d, parse_type("Missing")));
  const char* types[] = {"int", "Unit", "Never", "(perm 0 int)", "(Option P)", "P",
                         "(Fn exec many static (exec linear) int spec P)",
                         "(Fn proof once restricted (proof linear) int spec Unit)"};
  for (const char* t : types) {
    auto ts = typecheck_declarative(d, parse_type("int"), {}, {}, Mode::spec, Strictness::strict,
                                    default_value(d, parse_type(t)))
                  .results;
    INFO(std::string(t));
    CHECK(contains(ts, tt(SP, t)));
  }
  // A function default's body is default(result), which types only at spec.
  auto gap = parse_type("(Fn exec many static (exec linear) int (exec shared) P)");
  CHECK_FALSE(contains(
      typecheck_declarative(d, parse_type("int"), {}, {}, Mode::spec, Strictness::strict, default_value(d, gap)).results,
      Typing{SP, gap}));
}

TEST_CASE("well-formed types and declaration tables") {
  DeclTable none;
  DeclTable list = decls("(struct List (exec (Option List)))");
  DeclTable self{std::vector<calc::DatatypeDecl>{list.decls()[0]}};
  CHECK(wf_type(none, none, self, *parse_type("(Option List)")));
  CHECK_FALSE(wf_type(none, none, self, *parse_type("List")));
  CHECK_FALSE(wf_decl_table(list).has_value());

  auto bad = wf_decl_table(decls("(struct Bad (spec (Fn spec many static spec Bad spec Unit)))"));
  REQUIRE(bad.has_value());
  CHECK(bad->rule == "decl.positivity");
  CHECK_FALSE(wf_decl_table(decls("(struct Ok (exec (Fn exec many static (exec linear) Ok (exec linear) Unit)))")));
  CHECK_FALSE(wf_decl_table(DeclTable{}).has_value());
  CHECK_FALSE(wf_decl_table(decls("(struct Pair (exec int) (exec int))")).has_value());
  auto dup = wf_decl_table(decls("(struct A (exec int)) (struct A (exec Unit))"));
  REQUIRE(dup.has_value());
  CHECK(dup->rule == "decl.unique");
  auto restricted = wf_decl_table(decls("(struct R (exec (Fn exec many restricted (exec linear) int (exec linear) int)))"));
  REQUIRE(restricted.has_value());
  CHECK(restricted->rule == "decl.static");
  CHECK_FALSE(wf_decl_table(decls("(struct R (spec (Fn exec many restricted (exec linear) int (exec linear) int)))")));
}

TEST_CASE("function body contexts") {
  PermEnv p{{0, Usage::linear}, {1, Usage::shared}};
  VarEnv g{{"a", b(XL, "int")}, {"s", b(XS, "int")}};
  auto once = function_body_context(Callability::once, Lifetime::restricted, p, g);
  CHECK(once.ok);
  CHECK(once.perms == p);
  CHECK(env_eq(once.vars, g));
  CHECK(once.usage == Usage::linear);

  auto many_static = function_body_context(Callability::many, Lifetime::static_, PermEnv{{1, Usage::shared}},
                                           VarEnv{{"x", b(XS, "int")}});
  CHECK(many_static.ok);
  CHECK(many_static.perms.empty());
  CHECK(many_static.vars.at("x").mu == SP);
  CHECK_FALSE(many_static.usage.has_value());

  auto many = function_body_context(Callability::many, Lifetime::restricted, {}, g);
  CHECK_FALSE(many.ok);
  CHECK(many.offending == "a");

  auto once_static = function_body_context(Callability::once, Lifetime::static_, p, g);
  CHECK(once_static.ok);
  CHECK(once_static.perms == PermEnv{{0, Usage::linear}});
  CHECK(once_static.vars.at("a").mu == XL);
  CHECK(once_static.vars.at("s").mu == SP);
}

TEST_CASE("declarative checker") {
  SUBCASE("pread on a shared permission") {
    auto ts = decl_types("(pread 0 (perm 0 5))", {}, {{0, Usage::shared}});
    CHECK(contains(ts, tt(XS, "int")));
  }
  SUBCASE("pwrite needs exec access") {
    CHECK(decl_types("(pwrite 0 9 (perm 0 5))", {}, {{0, Usage::linear}}, Mode::proof).empty());
    CHECK(contains(decl_types("(pwrite 0 9 (perm 0 5))", {}, {{0, Usage::linear}}),
                   tt(PL, "(perm 0 int)")));
  }
  SUBCASE("spec snapshot of a shared binding") {
    VarEnv g{{"x", b(XS, "int")}};
    auto ts = decl_types("x", g);
    CHECK(contains(ts, tt(XS, "int")));
    CHECK(contains(ts, tt(SP, "int")));
  }
  SUBCASE("a dead-end permission admits pdata only") {
    CHECK(contains(decl_types("(perm 0 5)"), tt(SP, "(perm 0 int)")));
    CHECK(contains(decl_types("(pdata (perm 0 5))"), tt(SP, "int")));
    CHECK(decl_types("(pread 0 (perm 0 5))").empty());
    CHECK(decl_types("(pwrite 0 1 (perm 0 5))").empty());
  }
  SUBCASE("literal addition at every mode") {
    auto ts = decl_types("(+ 1 1)");
    CHECK(ts.size() == 5);
  }
  SUBCASE("linear bindings must be consumed") {
    VarEnv g{{"x", b(XL, "int")}};
    CHECK(decl_types("unit", g).empty());
    CHECK(contains(decl_types("(drop x)", g), tt(XS, "Unit")));
    CHECK(decl_types("(+ x x)", g).empty());
  }
  SUBCASE("borrowing lets a linear binding be read and then consumed") {
    VarEnv g{{"x", b(XL, "int")}};
    CHECK(contains(decl_types("(let exec y (copy x) (+ y x))", g), tt(XL, "int")));
  }
  SUBCASE("size gate") {
    auto v = typecheck_declarative({}, parse_type("int"), {}, {}, Mode::exec, Strictness::strict,
                                   parse_expr("(+ 1 (+ 1 (+ 1 (+ 1 (+ 1 (+ 1 (+ 1 (+ 1 (+ 1 (+ 1 (+ 1 (+ 1 1))))))))))))"));
    CHECK(v.size_exceeded);
  }
}

TEST_CASE("algorithmic checker") {
  SUBCASE("spec snapshot then consume") {
    VarEnv g{{"x", b(XL, "int")}};
    auto e = parse_expr("(let spec s x (drop x))");
    auto v = typecheck_algorithmic({}, parse_type("int"), {}, g, Mode::exec, e);
    REQUIRE(v.ok);
    CHECK(typing_eq(v.typing, tt(XS, "Unit")));
    CHECK(v.consumed == std::set<std::string>{"x"});
    CHECK(contains(decl_types("(let spec s x (drop x))", g), v.typing));
  }
  SUBCASE("double use of a linear permission") {
    DeclTable d = decls("(struct PP (proof (perm 0 int)) (proof (perm 0 int)))");
    auto e = parse_expr("(struct PP (pwrite 0 1 (perm 0 0)) (pwrite 0 2 (perm 0 0)))");
    auto v = typecheck_algorithmic(d, parse_type("int"), {{0, Usage::linear}}, {}, Mode::exec, e);
    CHECK_FALSE(v.ok);
    REQUIRE(v.diagnostic.has_value());
    CHECK(v.diagnostic->rule == "linearity.reuse");
    CHECK(decl_types("(struct PP (pwrite 0 1 (perm 0 0)) (pwrite 0 2 (perm 0 0)))", {}, {{0, Usage::linear}},
                     Mode::exec, d)
              .empty());
  }
  SUBCASE("drop of a copyable linear binding") {
    VarEnv g{{"x", b(XL, "int")}};
    auto v = typecheck_algorithmic({}, parse_type("int"), {}, g, Mode::exec, parse_expr("(drop x)"));
    REQUIRE(v.ok);
    CHECK(typing_eq(v.typing, tt(XS, "Unit")));
  }
  SUBCASE("explicit borrow") {
    VarEnv g{{"x", b(XL, "int")}};
    auto with = typecheck_algorithmic({}, parse_type("int"), {}, g, Mode::exec,
                                      parse_expr("(let exec y (borrow x) (copy x) (+ y x))"));
    CHECK(with.ok);
    auto without = typecheck_algorithmic({}, parse_type("int"), {}, g, Mode::exec,
                                         parse_expr("(let exec y (copy x) (+ y x))"));
    CHECK_FALSE(without.ok);
  }
  SUBCASE("unconsumed binding") {
    VarEnv g{{"x", b(XL, "int")}};
    auto v = typecheck_algorithmic({}, parse_type("int"), {}, g, Mode::exec, parse_expr("1"));
    CHECK_FALSE(v.ok);
    REQUIRE(v.diagnostic.has_value());
    CHECK(v.diagnostic->rule == "linearity.unconsumed");
  }
  SUBCASE("access level diagnostics") {
    auto v = typecheck_algorithmic({}, parse_type("int"), {{0, Usage::linear}}, {}, Mode::proof,
                                   parse_expr("(pwrite 0 9 (perm 0 5))"));
    REQUIRE(v.diagnostic.has_value());
    CHECK(v.diagnostic->rule == "typing.pwrite");
    auto r = typecheck_algorithmic({}, parse_type("int"), {}, {}, Mode::exec, parse_expr("(pread 0 (perm 0 5))"));
    REQUIRE(r.diagnostic.has_value());
    CHECK(r.diagnostic->rule == "typing.pread");
  }
  SUBCASE("expected typing selects among alternatives") {
    auto v = typecheck_algorithmic({}, parse_type("int"), {}, {}, Mode::exec, parse_expr("(+ 1 1)"), tt(PS, "int"));
    REQUIRE(v.ok);
    CHECK(typing_eq(v.typing, tt(PS, "int")));
  }
}

TEST_CASE("configurations") {
  DeclTable d;
  auto heap = parse_expr("0");
  auto ok = check_configuration(d, parse_type("int"), {}, {}, Mode::exec, heap, parse_expr("(hread)"), tt(XL, "int"));
  CHECK(ok.ok());
  auto ft = parse_type("(Fn exec many restricted (exec linear) int (exec linear) int)");
  auto fn_heap = parse_expr("(lambda exec many restricted (x (exec linear) int) x)");
  auto bad = check_configuration(d, ft, {}, {}, Mode::exec, fn_heap, parse_expr("unit"), tt(XL, "Unit"));
  CHECK_FALSE(bad.heap_ok);
  CHECK(bad.expr_ok);
  for (Mode m : {Mode::exec, Mode::proof, Mode::spec})
    for (const auto& mu : ModeUsage::all()) {
      auto c = check_configuration(d, parse_type("Unit"), {}, {}, m, parse_expr("unit"), parse_expr("(+ 1 1)"),
                                   Typing{mu, parse_type("int")});
      CHECK(c.ok());
      auto a = check_configuration(d, parse_type("Unit"), {}, {}, m, parse_expr("unit"), parse_expr("(+ 1 1)"),
                                   Typing{mu, parse_type("int")}, Checker::algorithmic);
      CHECK(a.ok());
    }
}
