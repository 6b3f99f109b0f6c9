#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mv/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mvr: mode-checked verification toolkit"};
  app.require_subcommand(1);
  std::string json_path;
  app.add_option("--json", json_path, "write a JSON report");

  std::string file;
  auto* check = app.add_subcommand("check", "parse and check a .mvc or .mvr file");
  check->add_option("file", file)->required();

  mv::cli::RunOptions run_opts;
  auto* run = app.add_subcommand("run", "evaluate a calculus program or interpret a surface function");
  run->add_option("file", file)->required();
  run->add_option("--entry", run_opts.entry, "surface entry function");
  run->add_option("--arg", run_opts.args, "entry argument (repeatable)");
  run->add_option("--budget", run_opts.budget, "step budget");
  run->add_flag("--trace", run_opts.trace, "print the reduction trace");

  std::string out_dir = "vc";
  int fuel = 1;
  auto* vc = app.add_subcommand("vc", "write one SMT-LIB script per obligation");
  vc->add_option("file", file)->required();
  vc->add_option("--out", out_dir, "output directory");
  vc->add_option("--fuel", fuel, "default fuel");

  mv::cli::VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "check every obligation with the bounded oracle");
  verify->add_option("file", file)->required();
  verify->add_option("--width", verify_opts.width, "enumeration width in bits");
  verify->add_option("--fuel", verify_opts.fuel, "default fuel");
  verify->add_option("--function", verify_opts.function, "only this function's obligations");
  verify->add_option("--budget", verify_opts.leaf_budget, "assignment budget per obligation");
  verify->add_option("--timeout", verify_opts.timeout, "solver timeout in seconds");

  std::string erase_out;
  auto* erase = app.add_subcommand("erase", "remove ghost code");
  erase->add_option("file", file)->required();
  erase->add_option("--out", erase_out, "output file");

  mv::cli::MetaOptions meta_opts;
  auto* meta = app.add_subcommand("meta", "preservation, progress and termination sweep");
  meta->add_option("--size", meta_opts.size, "maximum term size");
  meta->add_option("--budget", meta_opts.budget, "step budget for termination");
  meta->add_flag("--rich", meta_opts.rich, "wider leaf and lambda pools");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  mv::cli::CommandOutcome o;
  if (*check) o = mv::cli::cmd_check(file);
  else if (*run) o = mv::cli::cmd_run(file, run_opts);
  else if (*vc) o = mv::cli::cmd_vc(file, out_dir, fuel);
  else if (*verify) {
    if (const char* s = std::getenv("MVR_SOLVER")) verify_opts.solver = s;
    o = mv::cli::cmd_verify(file, verify_opts);
  } else if (*erase) o = mv::cli::cmd_erase(file, erase_out);
  else o = mv::cli::cmd_meta(meta_opts);

  std::cout << o.out;
  if (!json_path.empty()) {
    std::ofstream js(json_path, std::ios::binary);
    if (!js) {
      std::cerr << "error: cannot write " << json_path << "\n";
      return 2;
    }
    js << o.report.dump(2) << "\n";
  }
  return o.exit_code;
}
