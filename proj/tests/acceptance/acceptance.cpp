#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "mv/cli/commands.hpp"
#include "mv/meta/properties.hpp"
#include "mv/surface/ast.hpp"
#include "mv/surface/interp.hpp"
#include "mv/surface/vc.hpp"

using namespace mv;
using namespace mv::surface;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = MV_TEST_DATA;

constexpr double sweep_seconds_limit = 300.0;
constexpr double incomplete_fraction_limit = 0.01;
constexpr double fibo_seconds_limit = 60.0;
constexpr int fig4_width = 6;
constexpr int fibo_width = 16;
constexpr int account_width = 6;
constexpr int erasure_width = 8;
constexpr std::size_t erasure_corpus_min = 20;
constexpr std::size_t negative_corpus_min = 12;

struct Result {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<fs::path> files_in(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string solver() {
  const char* s = std::getenv("MVR_SOLVER");
  return s ? s : "";
}

struct Verified {
  VCSet vcs;
  std::vector<Verdict> verdicts;
};

Verified verify(const Program& p, int width, const std::string& only = "") {
  Verified v;
  v.vcs = generate_vcs(p);
  OracleOptions o;
  o.width = width;
  std::vector<VCQuery> kept;
  for (auto& q : v.vcs.queries)
    if (only.empty() || q.function == only) kept.push_back(std::move(q));
  v.vcs.queries = std::move(kept);
  for (const auto& q : v.vcs.queries) v.verdicts.push_back(bounded_verify(v.vcs.background, q, o));
  return v;
}

Checked load(const std::string& name) { return check_surface(slurp(data_dir / "surface" / name)); }

BigInt fib(unsigned n) {
  BigInt a = 0, b = 1;
  for (unsigned i = 0; i < n; ++i) {
    BigInt t = a + b;
    a = b;
    b = t;
  }
  return a;
}

BigInt fib_rec(unsigned n) { return n < 2 ? BigInt(n) : fib_rec(n - 2) + fib_rec(n - 1); }

Result metatheory_sweep() {
  auto spec = meta::default_spec();
  auto r = meta::sweep(spec, 100000);
  Result out;
  out.pass = spec.max_size == 7 && r.preservation.ok() && r.progress.ok() && r.termination.ok() &&
             r.seconds <= sweep_seconds_limit;
  std::ostringstream os;
  os << "size<=7 terms=" << r.terms << " configs=" << r.configurations << " " << summary(r.preservation) << ", "
     << summary(r.progress) << ", " << summary(r.termination) << ", " << static_cast<int>(r.seconds) << "s";
  out.detail = os.str();
  return out;
}

Result checker_agreement() {
  auto spec = meta::default_spec();
  spec.max_size = 6;
  auto r = meta::agreement_sweep(spec);
  Result out;
  double fraction = r.agreement.examined ? double(r.known_incomplete) / double(r.agreement.examined) : 0.0;
  out.pass = r.agreement.examined > 0 && r.agreement.ok() && fraction <= incomplete_fraction_limit;
  std::ostringstream os;
  os << summary(r.agreement) << ", known-incomplete " << r.known_incomplete << " (" << fraction * 100 << "%)";
  out.detail = os.str();
  return out;
}

Result fig4() {
  Result out;
  auto c = load("swap_odd.mvr");
  auto m = load("swap_odd_mutated.mvr");
  if (!c.ok() || !m.ok()) return {false, "program rejected"};
  auto v = verify(c.program, fig4_width);
  std::size_t valid = 0;
  for (const auto& x : v.verdicts) valid += x.kind == Verdict::Kind::valid;
  auto mv = verify(m.program, fig4_width);
  std::vector<std::string> flipped;
  bool replayable = true;
  for (std::size_t i = 0; i < mv.verdicts.size(); ++i) {
    if (mv.verdicts[i].kind == Verdict::Kind::valid) continue;
    flipped.push_back(mv.vcs.queries[i].name);
    replayable = replayable && mv.verdicts[i].kind == Verdict::Kind::invalid &&
                 replay(mv.vcs.background, mv.vcs.queries[i], mv.verdicts[i].counterexample);
  }
  out.pass = valid == v.verdicts.size() && !v.verdicts.empty() && flipped == std::vector<std::string>{"main.assert.0"} &&
             replayable && mv.verdicts.size() == v.verdicts.size();
  out.detail = std::to_string(valid) + "/" + std::to_string(v.verdicts.size()) + " valid at width 6; mutation flips " +
               (flipped.empty() ? std::string("nothing") : flipped[0]) + (flipped.size() > 1 ? " and more" : "") +
               (replayable ? " (replayed)" : " (not replayable)");
  std::string s = solver();
  if (s.empty()) {
    out.detail += "; no solver configured";
    return out;
  }
  std::size_t unsat = 0;
  for (const auto& q : v.vcs.queries) unsat += run_solver(s, emit_smtlib(v.vcs.background, q), 60).status == "unsat";
  out.pass = out.pass && unsat == v.vcs.queries.size();
  out.detail += "; solver unsat " + std::to_string(unsat) + "/" + std::to_string(v.vcs.queries.size());
  return out;
}

Result fibo() {
  auto t0 = std::chrono::steady_clock::now();
  auto c = load("fibo_u16.mvr");
  if (!c.ok()) return {false, "program rejected"};
  auto v = verify(c.program, fibo_width, "fibo_impl");
  std::size_t valid = 0;
  for (const auto& x : v.verdicts) valid += x.kind == Verdict::Kind::valid;
  unsigned checked = 0, agree = 0;
  for (unsigned n = 0; fib_rec(n) < 65536; ++n) {
    ++checked;
    auto o = interpret(c.program, "fibo_impl", {Value::of(BigInt(n))});
    agree += o.kind == Outcome::Kind::returned && o.value == Value::of(fib(n));
  }
  double secs = seconds_since(t0);
  Result out;
  out.pass = !v.verdicts.empty() && valid == v.verdicts.size() && agree == checked && secs <= fibo_seconds_limit;
  out.detail = std::to_string(valid) + "/" + std::to_string(v.verdicts.size()) + " valid at width 16; interpret = fibo for n in 0.." +
               std::to_string(checked - 1) + " (" + std::to_string(agree) + "/" + std::to_string(checked) + "), " +
               std::to_string(static_cast<int>(secs)) + "s";
  return out;
}

Result account() {
  Result out;
  auto aliased = cli::cmd_check((data_dir / "surface" / "account_aliased.mvr").string());
  bool alias_ok = aliased.exit_code == 1 && aliased.out.find("[alias.mut-borrow]") != std::string::npos;
  auto big = load("account_20000.mvr");
  auto small = load("account_10000.mvr");
  if (!big.ok() || !small.ok()) return {false, "program rejected"};
  auto vb = verify(big.program, account_width);
  std::vector<std::string> failing;
  for (std::size_t i = 0; i < vb.verdicts.size(); ++i)
    if (vb.verdicts[i].kind != Verdict::Kind::valid) failing.push_back(vb.vcs.queries[i].kind);
  auto vs = verify(small.program, account_width);
  std::size_t valid = 0;
  for (const auto& x : vs.verdicts) valid += x.kind == Verdict::Kind::valid;
  out.pass = alias_ok && failing == std::vector<std::string>{"precondition"} && valid == vs.verdicts.size();
  out.detail = std::string("aliased exit ") + std::to_string(aliased.exit_code) + "; 20000 fails " +
               std::to_string(failing.size()) + " obligation(s)" + (failing.size() == 1 ? " (" + failing[0] + ")" : "") +
               "; 10000 " + std::to_string(valid) + "/" + std::to_string(vs.verdicts.size()) + " valid";
  return out;
}

std::string entry_of(const std::string& text) {
  const std::string tag = "// entry: ";
  auto at = text.find(tag);
  if (at == std::string::npos) return "main";
  auto end = text.find('\n', at);
  return text.substr(at + tag.size(), end - at - tag.size());
}

Result erasure() {
  Result out;
  std::size_t programs = 0, with_ghost = 0, inputs = 0;
  for (const auto& path : files_in(data_dir / "erasure")) {
    std::string text = slurp(path);
    auto original = check_surface(text);
    std::string erased_text = print(erase_ghost(parse_surface(text)));
    auto erased = check_surface(erased_text);
    if (!original.ok() || !erased.ok()) return {false, path.filename().string() + " rejected"};
    ++programs;
    with_ghost += erased_text != print(parse_surface(text));
    std::string fn = entry_of(text);
    const Function* f = original.program.find(fn);
    if (!f) return {false, path.filename().string() + ": no entry " + fn};
    std::vector<std::vector<Value>> grid{{}};
    for (const auto& pa : f->params) {
      std::vector<Value> dom;
      if (pa.type.kind == Type::Kind::bool_) dom = {Value::of(false), Value::of(true)};
      else
        for (long v = 0; v <= max_value(std::min(pa.type.bits, erasure_width)).get_si(); ++v)
          dom.push_back(Value::of(BigInt(v)));
      std::vector<std::vector<Value>> next;
      for (const auto& row : grid)
        for (const auto& v : dom) {
          next.push_back(row);
          next.back().push_back(v);
        }
      grid = std::move(next);
    }
    for (const auto& in : grid) {
      ++inputs;
      auto a = interpret(original.program, fn, in);
      auto b = interpret(erased.program, fn, in);
      if (!(a == b)) {
        out.pass = false;
        if (out.detail.empty()) out.detail = path.filename().string() + ": " + describe(a) + " vs " + describe(b) + "; ";
      }
    }
  }
  out.pass = out.pass && programs >= erasure_corpus_min && with_ghost == programs;
  out.detail += std::to_string(programs) + " programs (" + std::to_string(with_ghost) + " with ghost code), " +
                std::to_string(inputs) + " inputs";
  return out;
}

Result negatives() {
  Result out;
  std::size_t n = 0, matched = 0;
  std::set<std::string> seen;
  for (const auto& path : files_in(data_dir / "negative")) {
    std::string text = slurp(path);
    auto tag = text.find("expect: ");
    if (tag == std::string::npos) continue;
    std::string rule = text.substr(tag + 8, text.find('\n', tag) - tag - 8);
    auto r = cli::cmd_check(path.string());
    ++n;
    if (r.exit_code == 1 && r.out.find("[" + rule + "]") != std::string::npos) {
      ++matched;
      seen.insert(rule);
    } else if (out.detail.empty()) {
      out.detail = path.filename().string() + " expected " + rule + "; ";
    }
  }
  const std::set<std::string> required = {"mode.spec-calls-proof", "mode.exec-reads-ghost", "typing.pwrite",
                                          "typing.pread", "linearity.reuse", "mode.decreases-missing"};
  bool covered = std::includes(seen.begin(), seen.end(), required.begin(), required.end());
  out.pass = n >= negative_corpus_min && matched == n && covered;
  out.detail += std::to_string(matched) + "/" + std::to_string(n) + " rejected with the expected rule, " +
                std::to_string(seen.size()) + " distinct rules" + (covered ? "" : ", required rules missing");
  return out;
}

Result determinism() {
  std::vector<fs::path> inputs;
  for (const char* d : {"surface", "negative", "erasure", "calc"})
    for (const auto& p : files_in(data_dir / d)) inputs.push_back(p);
  fs::path tmp = fs::temp_directory_path() / ("mvr_accept_" + std::to_string(::getpid()));
  std::size_t compared = 0;
  bool same = true;
  for (const auto& p : inputs) {
    auto a = cli::cmd_check(p.string());
    auto b = cli::cmd_check(p.string());
    same = same && a.out == b.out && a.exit_code == b.exit_code;
    ++compared;
    if (p.extension() != ".mvr" || a.exit_code != 0) continue;
    fs::path dir = tmp / "vc";
    auto snapshot = [&] {
      std::vector<std::pair<std::string, std::string>> files;
      for (const auto& f : files_in(dir)) files.emplace_back(f.filename().string(), slurp(f));
      return files;
    };
    fs::remove_all(tmp);
    auto v1 = cli::cmd_vc(p.string(), dir.string());
    auto s1 = snapshot();
    fs::remove_all(tmp);
    auto v2 = cli::cmd_vc(p.string(), dir.string());
    auto s2 = snapshot();
    same = same && v1.out == v2.out && v1.exit_code == v2.exit_code && s1 == s2;
    compared += s1.size();
  }
  fs::remove_all(tmp);
  return {same && compared > 0, std::to_string(compared) + " outputs compared"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"metatheory-sweep", metatheory_sweep}, {"checker-agreement", checker_agreement},
      {"swap-odd-queries", fig4},             {"fibo-impl", fibo},
      {"account-transfer", account},          {"erasure-equivalence", erasure},
      {"negative-corpus", negatives},         {"determinism", determinism}};
  int failed = 0;
  int k = 0;
  for (const auto& [name, run] : criteria) {
    ++k;
    if (!only.empty() && !only.count(k)) continue;
    Result r;
    try {
      r = run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << " " << k << " " << name << ": " << r.detail << std::endl;
  }
  return failed ? 1 : 0;
}
