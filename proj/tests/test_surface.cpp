#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mv/cli/commands.hpp"
#include "mv/surface/ast.hpp"
#include "mv/surface/interp.hpp"
#include "mv/surface/vc.hpp"

using namespace mv;
using namespace mv::surface;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = MV_TEST_DATA;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> rules(const Checked& c) {
  std::vector<std::string> out;
  for (const auto& d : c.diagnostics) out.push_back(d.rule);
  return out;
}

Checked checked(const std::string& text) {
  Checked c = check_surface(text);
  for (const auto& d : c.diagnostics) MESSAGE(typing::to_text(d));
  return c;
}

std::vector<const VCQuery*> of_function(const VCSet& vs, const std::string& fn, const std::string& kind = "") {
  std::vector<const VCQuery*> out;
  for (const auto& q : vs.queries)
    if (q.function == fn && (kind.empty() || q.kind == kind)) out.push_back(&q);
  return out;
}

std::string solver_path() {
  if (const char* s = std::getenv("MVR_SOLVER")) return s;
  return fs::exists("/usr/local/bin/z3") ? "/usr/local/bin/z3" : "";
}

std::string entry_of(const std::string& text) {
  const std::string tag = "// entry: ";
  auto at = text.find(tag);
  if (at == std::string::npos) return "main";
  auto end = text.find('\n', at);
  return text.substr(at + tag.size(), end - at - tag.size());
}

std::vector<std::vector<Value>> grid(const Function& f) {
  std::vector<std::vector<Value>> out{{}};
  for (const auto& pa : f.params) {
    std::vector<Value> dom;
    if (pa.type.kind == Type::Kind::bool_) dom = {Value::of(false), Value::of(true)};
    else
      for (int v = 0; v <= max_value(std::min(pa.type.bits, 8)).get_si(); ++v) dom.push_back(Value::of(BigInt(v)));
    std::vector<std::vector<Value>> next;
    for (const auto& row : out)
      for (const auto& v : dom) {
        next.push_back(row);
        next.back().push_back(v);
      }
    out = std::move(next);
  }
  return out;
}

const char* swap_odd_src = R"(
#[spec] fn is_odd(n: int) -> bool { n % 2 == 1 }

fn swap_odd(a: &mut u8, b: &mut u8) {
    requires(is_odd(*old(a)));
    ensures([*a == *old(b), *b == *old(a), is_odd(*b)]);
    let t = *a;
    *a = *b;
    *b = t;
}

fn main() {
    let mut v = 3;
    let mut w = 4;
    swap_odd(&mut v, &mut w);
    assert(is_odd(w));
}
)";

}  // namespace

TEST_CASE("parse and print round trip") {
  Program p = parse_surface(swap_odd_src);
  REQUIRE(p.functions.size() == 3);
  std::string once = print(p);
  std::string twice = print(parse_surface(once));
  CHECK(once == twice);
}

TEST_CASE("empty input parses to an empty program") {
  Program p = parse_surface("");
  CHECK(p.functions.empty());
  CHECK(check_surface("").ok());
}

TEST_CASE("syntax errors carry a position") {
  try {
    parse_surface("fn f( -> u8 { 1 }");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.span.line == 1);
  }
}

TEST_CASE("mode checking") {
  SUBCASE("the running example is accepted") { CHECK(checked(swap_odd_src).ok()); }
  SUBCASE("exec code cannot call a proof function for its value") {
    auto c = check_surface(R"(
#[proof] fn lemma(x: nat) -> nat { ensures(|r: nat| r == x); x }
fn f(x: u8) -> u8 { let y = lemma(x as nat); x }
)");
    CHECK_FALSE(c.ok());
  }
  SUBCASE("old() is rejected in executable statements") {
    auto c = check_surface("fn f(a: &mut u8) { let x = *old(a); }");
    CHECK(rules(c) == std::vector<std::string>{"mode.old-placement"});
  }
  SUBCASE("a recursive spec function needs decreases") {
    auto c = check_surface("#[spec] fn f(n: nat) -> nat { if n == 0 { 0 } else { f(n - 1) } }");
    CHECK(rules(c) == std::vector<std::string>{"mode.decreases-missing"});
  }
  SUBCASE("a function with a result must produce one on every path") {
    auto c = check_surface("fn f(a: u8) -> u8 { if a > 1 { return a; } }");
    CHECK(rules(c) == std::vector<std::string>{"type.result"});
  }
  SUBCASE("a trailing if/else with statements yields the result") {
    auto c = checked("fn f(a: u8) -> u8 { if a > 1 { let b = a - 1; b } else { a } }");
    CHECK(c.ok());
    auto o = interpret(c.program, "f", {Value::of(BigInt(5))});
    CHECK(o.value == Value::of(BigInt(4)));
  }
}

TEST_CASE("alias checking") {
  const char* callee = "fn two(a: &mut u8, b: &mut u8) { }\nfn one(a: &mut u8, b: &u8) { }\n";
  SUBCASE("the same variable borrowed mutably twice") {
    auto c = check_surface(std::string(callee) + "fn main() { let mut x = 1; two(&mut x, &mut x); }");
    CHECK(rules(c) == std::vector<std::string>{"alias.mut-borrow"});
  }
  SUBCASE("shared and mutable borrows of one variable") {
    auto c = check_surface(std::string(callee) + "fn main() { let mut x = 1; one(&mut x, &x); }");
    CHECK(rules(c) == std::vector<std::string>{"alias.shared-mut"});
  }
  SUBCASE("distinct variables are fine") {
    CHECK(checked(std::string(callee) + "fn main() { let mut x = 1; let mut y = 2; two(&mut x, &mut y); }").ok());
  }
}

TEST_CASE("ssa versions and query shapes for the running example") {
  auto c = checked(swap_odd_src);
  REQUIRE(c.ok());
  VCSet vs = generate_vcs(c.program);
  auto main_q = of_function(vs, "main");
  CHECK(of_function(vs, "main", "precondition").size() == 1);
  CHECK(of_function(vs, "main", "assert").size() == 1);
  CHECK(main_q.size() == 2);
  const VCQuery& a = *of_function(vs, "main", "assert")[0];
  std::vector<std::string> names;
  for (const auto& k : a.consts) names.push_back(k.name);
  CHECK(std::count(names.begin(), names.end(), "v@0") == 1);
  CHECK(std::count(names.begin(), names.end(), "v@1") == 1);
  CHECK(std::count(names.begin(), names.end(), "w@1") == 1);
  std::string smt = emit_smtlib(vs.background, a);
  auto count = [&](const std::string& s) {
    std::size_t n = 0;
    for (auto at = smt.find(s); at != std::string::npos; at = smt.find(s, at + 1)) ++n;
    return n;
  };
  CHECK(count("(declare-fun req%swap_odd ") == 1);
  CHECK(count("(declare-fun ens%swap_odd ") == 1);
  CHECK(count("(check-sat)") == 1);
  CHECK(smt.find("(push)") < smt.find("(check-sat)"));
}

TEST_CASE("decreases queries only for recursive functions") {
  auto c = checked(slurp(data_dir / "surface" / "fibo.mvr"));
  REQUIRE(c.ok());
  VCSet vs = generate_vcs(c.program);
  CHECK(of_function(vs, "fibo", "decreases").size() == 2);
  CHECK_FALSE(of_function(vs, "lemma_fibo_is_monotonic", "decreases").empty());
  CHECK(of_function(vs, "fibo_impl", "decreases").empty());
}

TEST_CASE("oracle verdicts") {
  Background bg;
  VCQuery q;
  q.name = "t.assert.0";
  q.consts = {Const{"x@", Sort::int_, Type::unsigned_(8)}};
  SUBCASE("a true goal is valid") {
    q.goal = t_app(Op::le, {t_sym("x@"), t_int(255)});
    CHECK(bounded_verify(bg, q).kind == Verdict::Kind::valid);
  }
  SUBCASE("a false goal has a replayable counterexample") {
    q.goal = t_app(Op::lt, {t_sym("x@"), t_int(200)});
    Verdict v = bounded_verify(bg, q);
    REQUIRE(v.kind == Verdict::Kind::invalid);
    CHECK(replay(bg, q, v.counterexample));
    CHECK(v.counterexample[0].second.z >= 200);
  }
  SUBCASE("unbounded sorts are not enumerated") {
    q.consts[0].range = Type::natural();
    q.goal = t_app(Op::lt, {t_sym("x@"), t_int(1000)});
    CHECK(bounded_verify(bg, q).kind == Verdict::Kind::unknown);
  }
}

TEST_CASE("solver agrees with the oracle on small queries") {
  std::string solver = solver_path();
  if (solver.empty()) return;
  VCQuery q;
  q.name = "t.assert.0";
  q.consts = {Const{"x@", Sort::int_, Type::unsigned_(8)}};
  q.hypotheses = {t_uinv(8, t_sym("x@"))};
  q.goal = t_app(Op::le, {t_sym("x@"), t_int(255)});
  CHECK(run_solver(solver, emit_smtlib({}, q), 20).status == "unsat");
  q.goal = t_app(Op::lt, {t_sym("x@"), t_int(200)});
  CHECK(run_solver(solver, emit_smtlib({}, q), 20).status == "sat");

  auto c = checked(swap_odd_src);
  VCSet vs = generate_vcs(c.program);
  OracleOptions o;
  o.width = 8;
  for (const auto& query : vs.queries) {
    Verdict v = bounded_verify(vs.background, query, o);
    auto r = run_solver(solver, emit_smtlib(vs.background, query), 20);
    INFO(query.name);
    if (v.kind == Verdict::Kind::valid) CHECK(r.status != "sat");
    if (v.kind == Verdict::Kind::invalid) CHECK(r.status != "unsat");
  }
}

TEST_CASE("interpreter") {
  auto c = checked(slurp(data_dir / "surface" / "fibo_u16.mvr"));
  REQUIRE(c.ok());
  CHECK(interpret(c.program, "fibo_impl", {Value::of(BigInt(10))}).value == Value::of(BigInt(55)));
  CHECK(interpret(c.program, "fibo_impl", {Value::of(BigInt(0))}).value == Value::of(BigInt(0)));
  CHECK(interpret(c.program, "fibo_impl", {Value::of(BigInt(30))}).kind == Outcome::Kind::overflow);
  CHECK(interpret(c.program, "fibo_impl", {Value::of(BigInt(10))}, 5).kind == Outcome::Kind::budget_exhausted);

  auto s = checked(swap_odd_src);
  auto o = interpret(s.program, "main", {});
  CHECK(o.kind == Outcome::Kind::returned);
  CHECK(o.locals.at("v") == Value::of(BigInt(4)));
  CHECK(o.locals.at("w") == Value::of(BigInt(3)));

  auto d = checked("fn f(a: u8, b: u8) -> u8 { a / b }");
  CHECK(interpret(d.program, "f", {Value::of(BigInt(1)), Value::of(BigInt(0))}).kind ==
        Outcome::Kind::division_by_zero);
}

TEST_CASE("verified programs over byte inputs do not fail") {
  const std::vector<std::string> files = {
      "e01_add_clamped.mvr", "e03_max.mvr",       "e04_swap.mvr",          "e05_countdown.mvr",
      "e06_mul_small.mvr",   "e07_is_even.mvr",   "e08_div_safe.mvr",      "e10_abs_diff.mvr",
      "e13_increment_ref.mvr", "e14_min3.mvr",    "e16_bool_logic.mvr",    "e17_saturating_sub.mvr",
      "e18_digits.mvr",      "e20_accumulate.mvr", "e21_triangle_check.mvr"};
  for (const auto& name : files) {
    INFO(name);
    std::string text = slurp(data_dir / "erasure" / name);
    auto c = check_surface(text);
    REQUIRE(c.ok());
    VCSet vs = generate_vcs(c.program);
    for (const auto& q : vs.queries) REQUIRE(bounded_verify(vs.background, q).kind == Verdict::Kind::valid);
    std::string fn = entry_of(text);
    const Function* f = c.program.find(fn);
    REQUIRE(f);
    const FnDef* req = vs.background.find("req%" + fn);
    for (const auto& in : grid(*f)) {
      if (req) {
        std::vector<TermPtr> args;
        for (const auto& v : in) args.push_back(v.is_bool ? t_bool(v.b) : t_int(v.z));
        auto holds = evaluate(vs.background, *t_call(req->name, args));
        if (!holds || !holds->b) continue;
      }
      CHECK(interpret(c.program, fn, in).kind == Outcome::Kind::returned);
    }
  }
}

TEST_CASE("commands are deterministic") {
  auto path = (data_dir / "surface" / "swap_odd.mvr").string();
  CHECK(cli::cmd_check(path).out == cli::cmd_check(path).out);
  cli::VerifyOptions vo;
  vo.width = 6;
  auto a = cli::cmd_verify(path, vo);
  auto b = cli::cmd_verify(path, vo);
  CHECK(a.out == b.out);
  CHECK(a.exit_code == 0);
}

TEST_CASE("negative corpus") {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(data_dir / "negative")) {
    std::string text = slurp(entry.path());
    auto tag = text.find("expect: ");
    REQUIRE(tag != std::string::npos);
    std::string rule = text.substr(tag + 8, text.find('\n', tag) - tag - 8);
    auto r = cli::cmd_check(entry.path().string());
    INFO(entry.path().filename().string());
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("[" + rule + "]") != std::string::npos);
    ++n;
  }
  CHECK(n >= 12);
}

TEST_CASE("calculus samples run to their values") {
  const std::vector<std::pair<std::string, std::string>> samples = {
      {"add.mvc", "3\n"}, {"perm_update.mvc", "6\n"}, {"lambda_twice.mvc", "42\n"}};
  for (const auto& [name, value] : samples) {
    auto path = (data_dir / "calc" / name).string();
    INFO(name);
    CHECK(cli::cmd_check(path).exit_code == 0);
    auto r = cli::cmd_run(path);
    CHECK(r.exit_code == 0);
    CHECK(r.out == value);
  }
}
