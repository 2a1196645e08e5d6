#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <string>
#include <vector>

#include "doctest.h"
#include "gsp/checker.hpp"
#include "gsp/parser.hpp"

using namespace gsp;

namespace {

CheckResult check_source(const std::string& src) {
  ParseResult pr = parse(src);
  REQUIRE(pr.ok());
  return check_program(pr.program);
}

bool has_code(const CheckResult& cr, const std::string& code) {
  for (const Diagnostic& d : cr.diags)
    if (d.code == code) return true;
  return false;
}

}  // namespace

TEST_CASE("the single-coercion rule: accept, cast, or reject — never a chain") {
  ClassHierarchy h;
  h.add("A", "object");
  h.add("B", "A");
  CHECK(coerce(h, Type::intT(), Type::intT()) == CoercionDecision::Accept);
  CHECK(coerce(h, Type::boolT(), Type::intT()) == CoercionDecision::Accept);
  CHECK(coerce(h, Type::cls("B"), Type::cls("A")) == CoercionDecision::Accept);
  CHECK(coerce(h, Type::intT(), Type::dyn()) == CoercionDecision::Accept);
  CHECK(coerce(h, Type::dyn(), Type::strT()) == CoercionDecision::InsertCast);
  CHECK(coerce(h, Type::dyn(), Type::cls("A")) == CoercionDecision::InsertCast);
  CHECK(coerce(h, Type::intT(), Type::strT()) == CoercionDecision::Reject);
  CHECK(coerce(h, Type::cls("A"), Type::cls("B")) == CoercionDecision::Reject);
  // No chain: int fails str even though int -> dyn -> str would "work".
  CHECK(coerce(h, Type::intT(), Type::strT()) == CoercionDecision::Reject);
}

TEST_CASE("a dyn argument into a typed call expected at str takes exactly two casts") {
  // f: (int) -> dyn, x: dyn; `g: str = f(x)` elaborates to
  // Cast(str, Call_f(Cast(int, x))).
  CheckResult cr = check_source(
      "def f(p: int):\n"
      "    return p\n"
      "\n"
      "x = 1\n"
      "g: str = f(x)\n");
  REQUIRE(cr.ok());
  REQUIRE(cr.program.top.size() == 2);
  const ElabPtr& init = cr.program.top[1]->expr;
  REQUIRE(init->isCast);
  CHECK(init->type == Type::strT());
  const ElabPtr& call = init->args[0];
  CHECK(call->kind == ExprKind::Call);
  CHECK(!call->isCast);
  REQUIRE(call->args.size() == 1);
  const ElabPtr& arg = call->args[0];
  REQUIRE(arg->isCast);
  CHECK(arg->type == Type::intT());
  CHECK(arg->args[0]->kind == ExprKind::Var);
  CHECK(count_casts(cr.program) == 2);
  CHECK(verify_cast_nodes(cr.program));
}

TEST_CASE("fully precise programs elaborate without casts") {
  CheckResult cr = check_source(
      "def f(p: int) -> int:\n"
      "    a: int = p\n"
      "    return a\n"
      "\n"
      "g: int = f(2)\n"
      "g\n");
  REQUIRE(cr.ok());
  CHECK(count_casts(cr.program) == 0);
  // The call is statically strict: both sides precisely typed.
  CHECK(cr.program.top[0]->expr->callKind == CallKind::StaticStrict);
}

TEST_CASE("untyped contexts see module globals as dyn") {
  CheckResult cr = check_source(
      "g: int = 1\n"
      "\n"
      "def f(x):\n"
      "    a: str = g\n"
      "    return a\n");
  // In a typed context this would be E-TYPE-MISMATCH (int vs str); in the
  // untyped function the global reads as dyn, so a cast is inserted instead.
  REQUIRE(cr.ok());
  CHECK(count_casts(cr.program) >= 1);
}

TEST_CASE("narrowing refines Optional locals through is-None tests") {
  std::map<std::string, Type> locals{{"x", Type::optional(Type::strT())}};
  Expr cond;
  cond.kind = ExprKind::IsNone;
  cond.args.push_back(make_expr(ExprKind::Var));
  cond.args[0]->name = "x";
  NarrowResult nr = narrow(locals, cond);
  REQUIRE(nr.thenTypes.count("x"));
  REQUIRE(nr.elseTypes.count("x"));
  CHECK(nr.thenTypes.at("x") == Type::none());
  CHECK(nr.elseTypes.at("x") == Type::strT());
  // Unhandled conditions refine nothing.
  Expr other;
  other.kind = ExprKind::BoolLit;
  NarrowResult none = narrow(locals, other);
  CHECK(none.thenTypes.empty());
  CHECK(none.elseTypes.empty());
}

TEST_CASE("narrowed branches type-check against the refined type") {
  CheckResult cr = check_source(
      "def f(x: Optional[str]) -> str:\n"
      "    if x is None:\n"
      "        return \"A\"\n"
      "    return x\n");
  REQUIRE(cr.ok());
  CHECK(count_casts(cr.program) == 0);
}

TEST_CASE("definite-return analysis sees through while True without break") {
  // No break: the loop never falls through, so no implicit return.
  CheckResult ok = check_source(
      "def f(x: int) -> int:\n"
      "    while True:\n"
      "        return x\n");
  CHECK(ok.ok());
  // With a break the loop can fall through to an implicit None return.
  CheckResult bad = check_source(
      "def f(x: Optional[str]) -> str:\n"
      "    while True:\n"
      "        if x is None:\n"
      "            break\n"
      "        return x\n");
  CHECK(has_code(bad, "E-IMPLICIT-NONE-RETURN"));
}

TEST_CASE("override rules: imprecise and incompatible are distinct failures") {
  std::string base =
      "class A(object):\n"
      "    v: int = 0\n"
      "    def m(self, p: int) -> int:\n"
      "        return p\n"
      "\n";
  CHECK(has_code(check_source(base +
                              "class B(A):\n"
                              "    w: int = 0\n"
                              "    def m(self, p: int):\n"
                              "        return 0\n"),
                 "E-IMPRECISE-OVERRIDE"));
  CHECK(has_code(check_source(base +
                              "class B(A):\n"
                              "    w: int = 0\n"
                              "    def m(self, p: int) -> str:\n"
                              "        return \"x\"\n"),
                 "E-INCOMPAT-OVERRIDE"));
  // Overriding with the same signature is fine; so is a dyn class override.
  CHECK(check_source(base +
                     "class B(A):\n"
                     "    w: int = 0\n"
                     "    def m(self, p: int) -> int:\n"
                     "        return 1\n")
            .ok());
  CHECK(check_source(base +
                     "dyn class B(A):\n"
                     "    w = 0\n"
                     "    def m(self, p):\n"
                     "        return 0\n")
            .ok());
}

TEST_CASE("a dyn-class override of a typed method gets a result wrapper") {
  CheckResult cr = check_source(
      "class A(object):\n"
      "    v: int = 0\n"
      "    def m(self) -> int:\n"
      "        return 0\n"
      "\n"
      "dyn class B(A):\n"
      "    w = 0\n"
      "    def m(self):\n"
      "        return \"oops\"\n");
  REQUIRE(cr.ok());
  int bId = cr.program.classIndex.at("B");
  const ElabClass& b = cr.program.classes[(size_t)bId];
  bool foundWrapper = false;
  for (const VtableSlot& s : b.vtable) {
    if (s.methodName != "m") continue;
    foundWrapper = s.wrapperNeeded;
    CHECK(s.wrapperRetT == Type::intT());
  }
  CHECK(foundWrapper);
  // Slot indices stay fixed across the subtree.
  int aId = cr.program.classIndex.at("A");
  const ElabClass& a = cr.program.classes[(size_t)aId];
  for (size_t i = 0; i < a.vtable.size(); ++i)
    CHECK(a.vtable[i].methodName == b.vtable[i].methodName);
}

TEST_CASE("module variables are immutable and dyn classes reject precise types") {
  CHECK(has_code(check_source("g: int = 1\n"
                              "\n"
                              "def f(x):\n"
                              "    g = 2\n"
                              "    return x\n"),
                 "E-IMMUTABLE-MODULE-VAR"));
  CHECK(has_code(check_source("dyn class A(object):\n"
                              "    v: int = 0\n"),
                 "E-DYNCLASS-PRECISE-ANN"));
}

TEST_CASE("unknown names and arity mistakes have dedicated codes") {
  CHECK(has_code(check_source("g: Foo = 1\n"), "E-UNKNOWN-CLASS"));
  CHECK(has_code(check_source("h(1)\n"), "E-UNKNOWN-FUNCTION"));
  CHECK(has_code(check_source("class A(object):\n"
                              "    v: int = 0\n"
                              "\n"
                              "a: A = A(0)\n"
                              "a.w\n"),
                 "E-UNKNOWN-MEMBER"));
  CHECK(has_code(check_source("class A(object):\n"
                              "    v: int = 0\n"
                              "    def m(self) -> int:\n"
                              "        return 0\n"
                              "\n"
                              "a: A = A(0)\n"
                              "a.m(1)\n"),
                 "E-ARITY"));
}

TEST_CASE("every checked program satisfies the cast-node invariant") {
  const char* sources[] = {
      "def f(x):\n    return x[\"A\"]\n\nf({\"A\": 1})\n",
      "def f(x: Dict[str, int]):\n    return x[\"A\"]\n\nf({\"A\": 1})\n",
      "def f(x: CheckedDict[str, int]):\n    return x[\"A\"]\n\n"
      "f(CheckedDict[str, int]({\"A\": 1}))\n",
      "g = 1\nh: int = g\nh\n",
  };
  for (const char* src : sources) {
    CheckResult cr = check_source(src);
    REQUIRE(cr.ok());
    CHECK(verify_cast_nodes(cr.program));
  }
}
