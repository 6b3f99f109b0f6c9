#include "mv/cli/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mv/calc/sexpr.hpp"
#include "mv/eval/eval.hpp"
#include "mv/meta/properties.hpp"
#include "mv/surface/interp.hpp"
#include "mv/surface/vc.hpp"
#include "mv/typing/check.hpp"

namespace mv::cli {

namespace {

namespace fs = std::filesystem;

bool read_file(const std::string& path, std::string& text) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  std::ostringstream os;
  os << is.rdbuf();
  text = os.str();
  return true;
}

CommandOutcome usage_error(const std::string& msg) {
  CommandOutcome o;
  o.exit_code = 2;
  o.out = "error: " + msg + "\n";
  o.report = {{"error", msg}};
  return o;
}

bool is_calculus(const std::string& path) { return fs::path(path).extension() == ".mvc"; }
bool is_surface(const std::string& path) { return fs::path(path).extension() == ".mvr"; }

std::string location(const std::string& path, const typing::Diagnostic& d) {
  return path + ":" + typing::to_text(d);
}

struct Loaded {
  std::optional<CommandOutcome> failure;
  surface::Checked checked;
};

/// Reads and checks a surface file; `failure` is set when the caller must stop.
Loaded load_surface(const std::string& path) {
  Loaded l;
  if (!is_surface(path)) {
    l.failure = usage_error("expected a .mvr file: " + path);
    return l;
  }
  std::string text;
  if (!read_file(path, text)) {
    l.failure = usage_error("cannot read " + path);
    return l;
  }
  l.checked = surface::check_surface(text);
  if (!l.checked.ok()) {
    CommandOutcome o;
    o.exit_code = 1;
    for (const auto& d : l.checked.diagnostics) o.out += location(path, d) + "\n";
    o.report = {{"file", path}, {"ok", false}, {"diagnostics", typing::to_json(l.checked.diagnostics)}};
    l.failure = o;
  }
  return l;
}

struct LoadedCalc {
  std::optional<CommandOutcome> failure;
  calc::CalcProgram program;
  typing::Typing typing;
};

LoadedCalc load_calculus(const std::string& path) {
  LoadedCalc l;
  std::string text;
  if (!read_file(path, text)) {
    l.failure = usage_error("cannot read " + path);
    return l;
  }
  CommandOutcome fail;
  fail.exit_code = 1;
  try {
    l.program = calc::parse_program(text);
  } catch (const calc::ParseError& e) {
    typing::Diagnostic d{"syntax", e.span(), e.what()};
    std::string msg = e.what();
    if (auto c = msg.find(": "); c != std::string::npos) d.message = msg.substr(c + 2);
    fail.out = location(path, d) + "\n";
    fail.report = {{"file", path}, {"ok", false}, {"diagnostics", typing::to_json(std::vector<typing::Diagnostic>{d})}};
    l.failure = fail;
    return l;
  }
  const auto& p = l.program;
  std::optional<typing::Typing> expected;
  if (p.expect) expected = typing::Typing{p.expect->first, p.expect->second};
  auto alg = typing::typecheck_algorithmic(p.decls, p.heap_type, p.perms, {}, p.access, p.main, expected);
  std::vector<typing::Diagnostic> diags;
  if (!alg.ok) {
    if (alg.diagnostic) diags.push_back(*alg.diagnostic);
    else diags.push_back(typing::Diagnostic{"typing.expected", p.main->span, "no typing found"});
  } else {
    auto cv = typing::check_configuration(p.decls, p.heap_type, p.perms, {}, p.access, p.heap_value, p.main, alg.typing,
                                          typing::Checker::algorithmic);
    if (!cv.ok()) {
      diags = cv.diagnostics;
      if (diags.empty()) diags.push_back(typing::Diagnostic{"config.heap", p.heap_value->span, "heap value does not check"});
    }
  }
  if (!diags.empty()) {
    for (const auto& d : diags) fail.out += location(path, d) + "\n";
    fail.report = {{"file", path}, {"ok", false}, {"diagnostics", typing::to_json(diags)}};
    l.failure = fail;
    return l;
  }
  l.typing = alg.typing;
  return l;
}

std::optional<surface::Value> parse_value(const std::string& s) {
  if (s == "true") return surface::Value::of(true);
  if (s == "false") return surface::Value::of(false);
  std::string digits;
  for (char c : s)
    if (c != '_') digits += c;
  surface::BigInt z;
  if (digits.empty() || z.set_str(digits, 0) != 0) return std::nullopt;
  return surface::Value::of(z);
}

}  // namespace

CommandOutcome cmd_check(const std::string& path) {
  if (!fs::exists(path)) return usage_error("no such file: " + path);
  if (is_calculus(path)) {
    LoadedCalc l = load_calculus(path);
    if (l.failure) return *l.failure;
    CommandOutcome o;
    o.out = path + ": ok " + typing::to_string(l.typing) + "\n";
    o.report = {{"file", path}, {"ok", true}, {"typing", typing::to_string(l.typing)}, {"diagnostics", nlohmann::json::array()}};
    return o;
  }
  Loaded l = load_surface(path);
  if (l.failure) return *l.failure;
  CommandOutcome o;
  o.out = path + ": ok (" + std::to_string(l.checked.program.functions.size()) + " functions)\n";
  o.report = {{"file", path}, {"ok", true}, {"diagnostics", nlohmann::json::array()}};
  return o;
}

CommandOutcome cmd_run(const std::string& path, const RunOptions& opts) {
  if (!fs::exists(path)) return usage_error("no such file: " + path);
  CommandOutcome o;
  if (is_calculus(path)) {
    LoadedCalc l = load_calculus(path);
    if (l.failure) return *l.failure;
    auto r = eval::run(eval::Configuration{l.program.heap_value, l.program.main, l.program.decls}, opts.budget, opts.trace);
    if (opts.trace)
      for (const auto& t : r.trace) o.out += eval::to_string(t) + "\n";
    switch (r.kind) {
      case eval::RunOutcome::Kind::finished:
        o.out += calc::print(r.config.expr) + "\n";
        o.report = {{"outcome", "value"}, {"value", calc::print(r.config.expr)}, {"steps", r.steps}};
        break;
      case eval::RunOutcome::Kind::crashed:
        o.exit_code = 1;
        o.out += std::string("crashed: ") + eval::to_string(r.reason) + "\n";
        o.report = {{"outcome", "crashed"}, {"reason", eval::to_string(r.reason)}, {"steps", r.steps}};
        break;
      case eval::RunOutcome::Kind::budget_exhausted:
        o.exit_code = 1;
        o.out += "budget exhausted after " + std::to_string(r.steps) + " steps\n";
        o.report = {{"outcome", "budget exhausted"}, {"steps", r.steps}};
        break;
    }
    return o;
  }
  Loaded l = load_surface(path);
  if (l.failure) return *l.failure;
  std::vector<surface::Value> inputs;
  for (const auto& a : opts.args) {
    auto v = parse_value(a);
    if (!v) return usage_error("bad argument '" + a + "'");
    inputs.push_back(*v);
  }
  auto r = surface::interpret(l.checked.program, opts.entry, inputs, static_cast<long long>(opts.budget));
  if (r.kind == surface::Outcome::Kind::error && r.span.line == 0) return usage_error(r.message);
  o.out = surface::describe(r) + "\n";
  for (const auto& [n, v] : r.outputs) o.out += n + " = " + surface::to_string(v) + "\n";
  if (opts.trace)
    for (const auto& [n, v] : r.locals) o.out += "  " + n + " = " + surface::to_string(v) + "\n";
  o.report = surface::to_json(r);
  if (r.kind != surface::Outcome::Kind::returned) o.exit_code = 1;
  return o;
}

CommandOutcome cmd_vc(const std::string& path, const std::string& out_dir, int fuel) {
  if (!fs::exists(path)) return usage_error("no such file: " + path);
  Loaded l = load_surface(path);
  if (l.failure) return *l.failure;
  auto set = surface::generate_vcs(l.checked.program, fuel);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return usage_error("cannot create " + out_dir);
  CommandOutcome o;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& q : set.queries) {
    fs::path file = fs::path(out_dir) / (q.name + ".smt2");
    std::ofstream os(file, std::ios::binary);
    if (!os) return usage_error("cannot write " + file.string());
    os << surface::emit_smtlib(set.background, q);
    o.out += file.string() + "\n";
    files.push_back({{"query", q.name}, {"kind", q.kind}, {"file", file.string()},
                     {"span", {{"line", q.span.line}, {"col", q.span.col}}}});
  }
  o.report = {{"file", path}, {"queries", files}};
  return o;
}

CommandOutcome cmd_verify(const std::string& path, const VerifyOptions& opts) {
  if (!fs::exists(path)) return usage_error("no such file: " + path);
  if (opts.width < 1 || opts.width > 32) return usage_error("--width must lie in 1..32");
  Loaded l = load_surface(path);
  if (l.failure) return *l.failure;
  if (!opts.function.empty() && !l.checked.program.find(opts.function))
    return usage_error("no function '" + opts.function + "'");
  auto set = surface::generate_vcs(l.checked.program, opts.fuel);
  CommandOutcome o;
  nlohmann::json results = nlohmann::json::array();
  std::string errors;
  int valid = 0, total = 0;
  surface::OracleOptions oo;
  oo.width = opts.width;
  oo.leaf_budget = opts.leaf_budget;
  for (const auto& q : set.queries) {
    if (!opts.function.empty() && q.function != opts.function) continue;
    ++total;
    auto v = surface::bounded_verify(set.background, q, oo);
    auto j = surface::to_json(q, v);
    std::string status = surface::to_string(v.kind);
    bool ok = v.kind == surface::Verdict::Kind::valid;
    if (!opts.solver.empty()) {
      auto s = surface::run_solver(opts.solver, surface::emit_smtlib(set.background, q), opts.timeout);
      j["solver"] = s.status;
      status += " / solver " + s.status;
      if (v.kind == surface::Verdict::Kind::unknown && s.status == "unsat") ok = true;
    }
    j["ok"] = ok;
    results.push_back(j);
    if (ok) ++valid;
    std::string loc = std::to_string(q.span.line) + ":" + std::to_string(q.span.col);
    o.out += q.name + "  " + loc + "  " + status + "\n";
    if (!ok) {
      errors += "error: " + q.message + "\n  --> " + path + ":" + loc + "\n";
      if (v.kind == surface::Verdict::Kind::invalid) {
        errors += "  counterexample:";
        for (const auto& [n, val] : v.counterexample) errors += " " + n + "=" + surface::to_string(val);
        errors += "\n";
      } else if (!v.reason.empty()) {
        errors += "  reason: " + v.reason + "\n";
      }
    }
  }
  o.out += errors;
  o.out += std::to_string(valid) + "/" + std::to_string(total) + " obligations verified\n";
  o.exit_code = valid == total ? 0 : 1;
  o.report = {{"file", path}, {"width", opts.width}, {"verified", valid}, {"total", total}, {"obligations", results}};
  return o;
}

CommandOutcome cmd_erase(const std::string& path, const std::string& out) {
  if (!fs::exists(path)) return usage_error("no such file: " + path);
  Loaded l = load_surface(path);
  if (l.failure) return *l.failure;
  std::string text;
  read_file(path, text);
  std::string erased = surface::print(surface::erase_ghost(surface::parse_surface(text)));
  CommandOutcome o;
  if (out.empty()) {
    o.out = erased;
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) return usage_error("cannot write " + out);
    os << erased;
    o.out = out + "\n";
  }
  o.report = {{"file", path}, {"erased", erased}};
  return o;
}

CommandOutcome cmd_meta(const MetaOptions& opts) {
  auto spec = opts.rich ? meta::rich_spec() : meta::default_spec();
  spec.max_size = opts.size;
  CommandOutcome o;
  auto r = meta::sweep(spec, opts.budget);
  std::ostringstream os;
  os << "size <= " << opts.size << ": " << r.terms << " terms, " << r.configurations << " configurations\n";
  nlohmann::json props = nlohmann::json::array();
  for (const auto* p : {&r.preservation, &r.progress, &r.termination}) {
    os << meta::summary(*p) << "\n";
    props.push_back(meta::to_json(*p));
    if (!p->ok()) {
      o.exit_code = 1;
      const auto& c = *p->counterexample;
      os << "  term: " << c.term << "\n  perms: " << c.perms << "\n  access: " << calc::to_string(c.access)
         << "\n  typing: " << c.typing << "\n  detail: " << c.detail << "\n";
      for (const auto& t : c.trace) os << "  " << t << "\n";
    }
  }
  o.out = os.str();
  o.report = {{"size", opts.size}, {"terms", r.terms}, {"configurations", r.configurations}, {"properties", props}};
  return o;
}

}  // namespace mv::cli
