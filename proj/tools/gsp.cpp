// Command-line front end: check, run, dump-bc, fuzz, corpus.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gsp/checker.hpp"
#include "gsp/harness.hpp"
#include "gsp/parser.hpp"
#include "gsp/vm.hpp"
#include "json.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(1);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Parse + check; on failure prints diagnostics and exits 1.
gsp::CheckResult load(const std::string& path, bool jsonOut) {
  gsp::ParseResult pr = gsp::parse(read_file(path));
  std::vector<gsp::Diagnostic> diags = pr.diags;
  gsp::CheckResult cr;
  if (pr.ok()) {
    cr = gsp::check_program(pr.program);
    diags = cr.diags;
  }
  if (!diags.empty()) {
    if (jsonOut) {
      nlohmann::json out = nlohmann::json::array();
      for (const gsp::Diagnostic& d : diags)
        out.push_back({{"code", d.code}, {"message", d.message}, {"line", d.line}});
      std::cout << out.dump(2) << "\n";
    } else {
      for (const gsp::Diagnostic& d : diags)
        std::cerr << path << ":" << d.line << ": " << d.code << ": " << d.message << "\n";
    }
    std::exit(1);
  }
  return cr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradually-typed language toolchain"};
  app.require_subcommand(1);

  std::string file, metricsPath, dir;
  bool jsonOut = false, noOpt = false;
  long long budget = 10000000;
  int count = 1000;
  uint64_t seed = 0;
  double dynBias = 0.5;

  CLI::App* check = app.add_subcommand("check", "type-check a program");
  check->add_option("file", file)->required();
  check->add_flag("--json", jsonOut, "emit diagnostics as JSON");

  CLI::App* run = app.add_subcommand("run", "check and execute a program");
  run->add_option("file", file)->required();
  run->add_flag("--no-opt", noOpt, "skip the check-skipping optimizer");
  run->add_option("--metrics", metricsPath, "write runtime counters as JSON");
  run->add_option("--budget", budget, "instruction budget");

  CLI::App* dump = app.add_subcommand("dump-bc", "print the bytecode listing");
  dump->add_option("file", file)->required();
  dump->add_flag("--no-opt", noOpt, "skip the check-skipping optimizer");

  CLI::App* fuzz = app.add_subcommand("fuzz", "generate programs and hunt for soundness violations");
  fuzz->add_option("--count", count, "number of programs");
  fuzz->add_option("--seed", seed, "base seed");
  fuzz->add_option("--dyn-bias", dynBias, "probability of Dyn per annotation site");
  fuzz->add_option("--budget", budget, "instruction budget per program");

  CLI::App* corpus = app.add_subcommand("corpus", "run a directory of .gsp files with expectations");
  corpus->add_option("dir", dir)->required();

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) {
    load(file, jsonOut);
    std::cout << "ok\n";
    return 0;
  }

  if (run->parsed() || dump->parsed()) {
    gsp::CheckResult cr = load(file, false);
    gsp::BytecodeModule m = gsp::compile(cr.program);
    if (!noOpt) m = gsp::optimize(m);
    if (dump->parsed()) {
      std::cout << gsp::dump(m);
      return 0;
    }
    gsp::TypeRegistry reg;
    gsp::ExecResult r = gsp::execute(m, reg, budget);
    for (const std::string& line : r.outputs) std::cout << line << "\n";
    if (!metricsPath.empty()) {
      const gsp::Metrics& k = r.metrics;
      nlohmann::json out = {
          {"casts_executed", k.casts_executed},
          {"check_args_executed", k.check_args_executed},
          {"arg_casts_executed", k.arg_casts_executed},
          {"element_casts", k.element_casts},
          {"direct_calls", k.direct_calls},
          {"vtable_calls", k.vtable_calls},
          {"dynamic_calls", k.dynamic_calls},
          {"wrapper_result_checks", k.wrapper_result_checks},
      };
      std::ofstream mout(metricsPath);
      mout << out.dump(2) << "\n";
    }
    switch (r.status) {
      case gsp::ExecStatus::Ok:
        return 0;
      case gsp::ExecStatus::Error:
        std::cerr << gsp::err_kind_name(r.errKind) << ": " << r.errMessage << "\n";
        return 2;
      case gsp::ExecStatus::Timeout:
        std::cerr << "Timeout: instruction budget exhausted\n";
        return 2;
      case gsp::ExecStatus::Internal:
        std::cerr << "Internal: " << r.internalDetail << "\n";
        return 3;
    }
  }

  if (fuzz->parsed()) {
    gsp::FuzzSummary s = gsp::run_fuzz(seed, count, dynBias, budget);
    std::cout << "programs:       " << count << "\n"
              << "well-typed:     " << s.wellTyped << "\n"
              << "allowed errors: " << s.allowedErrors << "\n"
              << "static rejects: " << s.staticRejects << "\n"
              << "timeouts:       " << s.timeouts << "\n"
              << "violations:     " << s.violations << "\n";
    for (const std::string& d : s.violationDetails) std::cout << "  " << d << "\n";
    return s.violations == 0 ? 0 : 1;
  }

  if (corpus->parsed()) {
    gsp::CorpusReport r = gsp::run_corpus(dir);
    for (const gsp::CorpusEntry& e : r.entries) {
      std::cout << (e.pass ? "PASS" : "FAIL") << " " << e.file;
      if (!e.pass) std::cout << " (" << e.detail << ")";
      std::cout << "\n";
    }
    std::cout << r.passed << " passed, " << r.failed << " failed\n";
    return r.failed == 0 ? 0 : 1;
  }
  return 0;
}
