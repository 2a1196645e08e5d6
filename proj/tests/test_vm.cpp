#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <string>

#include "doctest.h"
#include "gsp/checker.hpp"
#include "gsp/parser.hpp"
#include "gsp/vm.hpp"

using namespace gsp;

namespace {

BytecodeModule compile_source(const std::string& src) {
  ParseResult pr = parse(src);
  REQUIRE(pr.ok());
  CheckResult cr = check_program(pr.program);
  REQUIRE(cr.ok());
  return compile(cr.program);
}

ExecResult run_source(const std::string& src, bool opt = true, long long budget = 1000000) {
  BytecodeModule m = compile_source(src);
  if (opt) m = optimize(m);
  TypeRegistry reg;
  return execute(m, reg, budget);
}

const BCFunction& fn(const BytecodeModule& m, const std::string& name) {
  for (const BCFunction& f : m.functions)
    if (f.name == name) return f;
  REQUIRE(false);
  return m.functions[0];
}

}  // namespace

static const char* kFig1Checked =
    "def f(x: CheckedDict[str, int]):\n"
    "    return x[\"A\"]\n"
    "\n"
    "f(CheckedDict[str, int]({\"A\": 1}))\n";

TEST_CASE("typed functions get a checked prologue and a fast entry past it") {
  BytecodeModule m = compile_source(kFig1Checked);
  const BCFunction& f = fn(m, "f");
  REQUIRE(!f.code.empty());
  CHECK(f.code[0].op == Op::CHECK_ARGS);
  CHECK(f.fastEntry == 1);
  for (size_t i = 1; i < f.code.size(); ++i) CHECK(f.code[i].op != Op::CHECK_ARGS);
  // Untyped functions have no prologue; both entries coincide.
  BytecodeModule u = compile_source("def g(x):\n    return x\n\ng(1)\n");
  const BCFunction& g = fn(u, "g");
  CHECK(g.fastEntry == 0);
  CHECK(g.code[0].op != Op::CHECK_ARGS);
}

TEST_CASE("the optimizer retargets exactly the strict edges") {
  BytecodeModule plain = compile_source(kFig1Checked);
  BytecodeModule opt = optimize(plain);
  int retargeted = 0;
  REQUIRE(plain.functions.size() == opt.functions.size());
  for (size_t fi = 0; fi < plain.functions.size(); ++fi) {
    const auto& pc = plain.functions[fi].code;
    const auto& oc = opt.functions[fi].code;
    REQUIRE(pc.size() == oc.size());
    for (size_t i = 0; i < pc.size(); ++i) {
      // Everything before optimization targets the checked entry.
      if (pc[i].op == Op::INVOKE_FUNCTION || pc[i].op == Op::INVOKE_METHOD)
        CHECK(pc[i].b == 0);
      if (pc[i].op == Op::INVOKE_FUNCTION || pc[i].op == Op::INVOKE_METHOD) {
        CHECK(oc[i].b == (pc[i].c == 1 ? 1 : 0));
        if (oc[i].b == 1) ++retargeted;
      } else {
        CHECK(oc[i].op == pc[i].op);
      }
    }
  }
  CHECK(retargeted >= 1);
  // A fully dynamic program is left untouched.
  BytecodeModule dyn = compile_source("def g(x):\n    return x\n\ng(1)\n");
  BytecodeModule dynOpt = optimize(dyn);
  for (size_t fi = 0; fi < dyn.functions.size(); ++fi)
    for (size_t i = 0; i < dyn.functions[fi].code.size(); ++i)
      CHECK(dyn.functions[fi].code[i].b == dynOpt.functions[fi].code[i].b);
}

TEST_CASE("the first program prints 1 in all three migrations") {
  const char* variants[] = {
      "def f(x):\n    return x[\"A\"]\n\nf({\"A\": 1})\n",
      "def f(x: Dict[str, int]):\n    return x[\"A\"]\n\nf({\"A\": 1})\n",
      kFig1Checked,
  };
  for (const char* v : variants) {
    ExecResult r = run_source(v);
    REQUIRE(r.status == ExecStatus::Ok);
    REQUIRE(r.outputs.size() == 1);
    CHECK(r.outputs[0] == "1");
  }
}

TEST_CASE("cost profile: typed container reads and writes, counted") {
  for (int n : {10, 1000}) {
    std::string reads = "    a: int = x[\"A\"]\n";
    for (int i = 1; i < n; ++i) reads += "    a = x[\"A\"]\n";

    // Typed reads from a shallow Dict need one cast each.
    ExecResult dictRead = run_source("def f(x: Dict[str, int]) -> int:\n" + reads +
                                     "    return a\n\nf({\"A\": 1})\n");
    REQUIRE(dictRead.status == ExecStatus::Ok);
    CHECK(dictRead.metrics.casts_executed == n);
    CHECK(dictRead.metrics.element_casts == 0);

    // Typed reads from a CheckedDict are free: the tag already pays for them.
    ExecResult chkRead = run_source("def f(x: CheckedDict[str, int]) -> int:\n" + reads +
                                    "    return a\n\nf(CheckedDict[str, int]({\"A\": 1}))\n");
    REQUIRE(chkRead.status == ExecStatus::Ok);
    CHECK(chkRead.metrics.casts_executed == 0);
    CHECK(chkRead.metrics.element_casts == 2);  // constructing the 1-entry literal

    std::string writes;
    for (int i = 0; i < n; ++i) writes += "    x[\"A\"] = 1\n";

    // Untyped writes into a CheckedDict are guarded: 2 element casts each.
    ExecResult guarded = run_source("def g(x):\n" + writes +
                                    "    return x\n\ng(CheckedDict[str, int]({}))\n");
    REQUIRE(guarded.status == ExecStatus::Ok);
    CHECK(guarded.metrics.element_casts == 2 * n);

    // Writes into a shallow Dict are never checked.
    ExecResult plain = run_source("def h(x: Dict[str, int]) -> int:\n" + writes +
                                  "    return 0\n\nh({})\n");
    REQUIRE(plain.status == ExecStatus::Ok);
    CHECK(plain.metrics.element_casts == 0);
    CHECK(plain.metrics.casts_executed == 0);
  }
}

TEST_CASE("typed-to-typed calls skip argument checks after optimization") {
  const int kInner = 50;
  std::string src =
      "def callee(p: int) -> int:\n"
      "    return p\n"
      "\n"
      "def caller(p: int) -> int:\n"
      "    a: int = callee(p)\n";
  for (int i = 1; i < kInner; ++i) src += "    a = callee(p)\n";
  src += "    return a\n\ncaller(1)\n";
  const long long calls = kInner + 1;  // inner calls plus the top-level one

  ExecResult opt = run_source(src, /*opt=*/true);
  REQUIRE(opt.status == ExecStatus::Ok);
  CHECK(opt.metrics.direct_calls == calls);
  CHECK(opt.metrics.arg_casts_executed == 0);
  CHECK(opt.metrics.check_args_executed == 0);

  ExecResult plain = run_source(src, /*opt=*/false);
  REQUIRE(plain.status == ExecStatus::Ok);
  CHECK(plain.metrics.direct_calls == calls);
  CHECK(plain.metrics.check_args_executed == calls);
  CHECK(plain.metrics.arg_casts_executed == calls);  // arity 1 each
  CHECK(plain.outputs == opt.outputs);
}

TEST_CASE("dynamic dispatch routes through wrappers that check results") {
  const char* src =
      "class A(object):\n"
      "    v: int = 0\n"
      "    def m(self) -> int:\n"
      "        return 0\n"
      "\n"
      "dyn class B(A):\n"
      "    w = 0\n"
      "    def m(self):\n"
      "        return \"oops\"\n"
      "\n"
      "def use(x: A) -> int:\n"
      "    return x.m()\n"
      "\n"
      "b = B()\n"
      "use(b)\n";
  ExecResult r = run_source(src);
  CHECK(r.status == ExecStatus::Error);
  CHECK(r.errKind == ErrKind::CastError);
  CHECK(r.metrics.wrapper_result_checks == 1);
  CHECK(r.metrics.vtable_calls == 1);
}

TEST_CASE("runtime failures map onto the four allowed error kinds") {
  ExecResult key = run_source("def f(x):\n    return x[\"B\"]\n\nf({\"A\": 1})\n");
  CHECK(key.status == ExecStatus::Error);
  CHECK(key.errKind == ErrKind::KeyError);

  ExecResult attr = run_source(
      "class A(object):\n    v: int = 0\n\ndef f(x):\n    return x.w\n\nf(A(0))\n");
  CHECK(attr.status == ExecStatus::Error);
  CHECK(attr.errKind == ErrKind::AttributeError);

  ExecResult dyncall = run_source("g = 1\ng(2)\n");
  CHECK(dyncall.status == ExecStatus::Error);
  CHECK(dyncall.errKind == ErrKind::DynCallError);

  ExecResult cast = run_source("def f(x: str):\n    return x\n\ng = 1\nf(g)\n");
  CHECK(cast.status == ExecStatus::Error);
  CHECK(cast.errKind == ErrKind::CastError);
  CHECK(cast.errMessage == "str expected, got int");
}

TEST_CASE("the instruction budget turns divergence into a timeout") {
  ExecResult r = run_source("def f(x):\n    while True:\n        pass\n\nf(1)\n",
                            /*opt=*/true, /*budget=*/1000);
  CHECK(r.status == ExecStatus::Timeout);
}

TEST_CASE("the bytecode listing is stable") {
  BytecodeModule m = optimize(compile_source(kFig1Checked));
  CHECK(dump(m) ==
        "def f nlocals=1 fast=1\n"
        "  0: CHECK_ARGS (0, CheckedDict[str, int])\n"
        "  1: LOAD_LOCAL 0\n"
        "  2: LOAD_CONST \"A\"\n"
        "  3: DICT_GET\n"
        "  4: RETURN_VALUE\n"
        "  5: LOAD_CONST None\n"
        "  6: RETURN_VALUE\n"
        "def <module> nlocals=0 fast=0\n"
        "  0: LOAD_CONST \"A\"\n"
        "  1: LOAD_CONST 1\n"
        "  2: BUILD_CHECKED_MAP CheckedDict[str, int] n=1\n"
        "  3: INVOKE_FUNCTION f fast\n"
        "  4: POP out\n"
        "  5: LOAD_CONST None\n"
        "  6: RETURN_VALUE\n");
}

TEST_CASE("execution is deterministic") {
  const char* src =
      "def f(x: Dict[str, int]):\n    return x[\"A\"]\n\nf({\"A\": 1})\nf({\"A\": 2})\n";
  ExecResult a = run_source(src);
  ExecResult b = run_source(src);
  CHECK(a.status == b.status);
  CHECK(a.outputs == b.outputs);
  CHECK(a.metrics.casts_executed == b.metrics.casts_executed);
}
