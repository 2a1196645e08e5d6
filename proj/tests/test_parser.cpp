#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "gsp/harness.hpp"
#include "gsp/parser.hpp"

using namespace gsp;

TEST_CASE("a typed one-function program parses to the expected tree") {
  ParseResult pr = parse(
      "def f(x: Dict[str, int]):\n"
      "    return x[\"A\"]\n"
      "\n"
      "f({\"A\": 1})\n");
  REQUIRE(pr.ok());
  REQUIRE(pr.program.stmts.size() == 2);

  const Stmt& def = *pr.program.stmts[0];
  CHECK(def.kind == StmtKind::FuncDef);
  CHECK(def.name == "f");
  CHECK(def.param.name == "x");
  CHECK(def.param.ann == Type::dict(Type::strT(), Type::intT()));
  CHECK(def.ann == Type::dyn());  // no return annotation
  REQUIRE(def.body.size() == 1);
  const Stmt& ret = *def.body[0];
  CHECK(ret.kind == StmtKind::Return);
  REQUIRE(ret.hasExpr);
  CHECK(ret.expr->kind == ExprKind::Subscript);
  CHECK(ret.expr->args[0]->kind == ExprKind::Var);
  CHECK(ret.expr->args[0]->name == "x");
  CHECK(ret.expr->args[1]->kind == ExprKind::StrLit);
  CHECK(ret.expr->args[1]->strVal == "A");

  const Stmt& call = *pr.program.stmts[1];
  CHECK(call.kind == StmtKind::ExprStmt);
  CHECK(call.expr->kind == ExprKind::Call);
  CHECK(call.expr->name == "f");
  REQUIRE(call.expr->args.size() == 1);
  CHECK(call.expr->args[0]->kind == ExprKind::DictLit);
}

TEST_CASE("type annotations parse across the whole grammar") {
  ParseResult pr = parse(
      "a: Optional[str] = None\n"
      "b: Union[None, int] = 1\n"
      "c: CheckedDict[str, dyn] = CheckedDict[str, dyn]({})\n"
      "d: Dict[bool, str] = {}\n");
  REQUIRE(pr.ok());
  // Optional[S] is desugared to Union[None, S] while parsing.
  CHECK(pr.program.stmts[0]->ann == Type::unionOf({Type::none(), Type::strT()}));
  CHECK(pr.program.stmts[1]->ann == Type::unionOf({Type::none(), Type::intT()}));
  CHECK(pr.program.stmts[2]->ann == Type::checkedDict(Type::strT(), Type::dyn()));
  CHECK(pr.program.stmts[3]->ann == Type::dict(Type::boolT(), Type::strT()));
}

TEST_CASE("classes parse with flags, fields, and methods") {
  ParseResult pr = parse(
      "dyn class A(object):\n"
      "    v = 0\n"
      "    def m(self, p):\n"
      "        return p\n"
      "\n"
      "class B(A):\n"
      "    w: int = 1\n"
      "    def m(self, p: int) -> int:\n"
      "        return p\n");
  REQUIRE(pr.ok());
  const Stmt& a = *pr.program.stmts[0];
  CHECK(a.kind == StmtKind::ClassDef);
  CHECK(a.dynClass);
  CHECK(a.parent == "object");
  CHECK(a.fieldName == "v");
  CHECK(a.fieldAnn == Type::dyn());
  REQUIRE(a.methods.size() == 1);
  CHECK(a.methods[0].hasParam);
  CHECK(a.methods[0].param.ann == Type::dyn());
  const Stmt& b = *pr.program.stmts[1];
  CHECK(!b.dynClass);
  CHECK(b.parent == "A");
  CHECK(b.fieldAnn == Type::intT());
  CHECK(b.methods[0].param.ann == Type::intT());
  CHECK(b.methods[0].ret == Type::intT());
}

TEST_CASE("malformed input produces diagnostics, not crashes") {
  CHECK(!parse("def f(:\n    pass\n").ok());
  CHECK(!parse("break\n").ok());                    // break outside a loop
  CHECK(!parse("if 1:\n    pass\n").ok());          // if at top level
  CHECK(!parse("def f(x):\n        return x\n").ok());  // bad indent depth
  CHECK(!parse("x +\n").ok());
  CHECK(parse("").ok());  // empty program is fine
}

TEST_CASE("unparse round-trips hand-written programs") {
  const char* src =
      "def f(x: Optional[str]) -> str:\n"
      "    while True:\n"
      "        if x is None:\n"
      "            break\n"
      "        return x\n"
      "    return \"A\"\n"
      "\n"
      "f(None)\n";
  ParseResult pr = parse(src);
  REQUIRE(pr.ok());
  ParseResult again = parse(unparse(pr.program));
  REQUIRE(again.ok());
  CHECK(program_equal(pr.program, again.program));
}

TEST_CASE("unparse round-trips generated programs") {
  int nonEmpty = 0;
  for (uint64_t seed = 0; seed < 400; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    SurfaceProgram p = generate_program(cfg);
    std::string text = unparse(p);
    ParseResult pr = parse(text);
    INFO("seed ", seed, "\n", text);
    REQUIRE(pr.ok());
    CHECK(program_equal(p, pr.program));
    if (!p.stmts.empty()) ++nonEmpty;
  }
  CHECK(nonEmpty == 400);
}
