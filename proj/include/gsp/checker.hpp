#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gsp/ast.hpp"

namespace gsp {

// ---- type environment (Gamma) ----

struct FuncSig {
  std::string paramName;
  Type paramT = Type::dyn();
  Type retT = Type::dyn();
  bool isTyped = false;  // some annotation is precise
};

struct MethodSig {
  bool hasParam = false;
  Type paramT = Type::dyn();
  Type retT = Type::dyn();
  std::string declaringClass;
};

struct ClassSig {
  std::string parent;
  bool dynamicFlag = false;
  std::string fieldName;
  Type fieldT = Type::dyn();
  ExprPtr fieldDefault;
  std::map<std::string, MethodSig> methods;  // own declarations only
  std::vector<std::string> methodOrder;      // declaration order (slot layout)
};

struct TypeEnv {
  std::map<std::string, Type> vars;  // module-level, immutable bindings
  std::map<std::string, FuncSig> funcs;
  std::map<std::string, ClassSig> classes;
  std::vector<std::string> classOrder;  // declaration order, parents first
  ClassHierarchy hier;

  struct FieldInfo {
    std::string name;
    Type type;
    std::string declaringClass;
    int slot = -1;
  };

  // Gamma*(C): fields of C and ancestors, root-first slot order, child
  // declarations shadowing.
  std::vector<FieldInfo> flat_fields(const std::string& cls) const;
  const MethodSig* find_method(const std::string& cls, const std::string& name) const;
  bool find_field(const std::string& cls, const std::string& name, FieldInfo& out) const;
};

// ---- elaborated program ----

enum class CallKind { StaticStrict, StaticLenient, Dynamic };
enum class CoercionDecision { Accept, InsertCast, Reject };

// Static receiver classification for subscript forms.
enum class RecvKind { DynR, DictR, CheckedR };

struct ElabExpr;
using ElabPtr = std::shared_ptr<ElabExpr>;

struct ElabExpr {
  ExprKind kind = ExprKind::Var;
  bool isCast = false;  // Cast node: `type` is the target, args[0] the inner expr
  Type type = Type::dyn();  // static evaluation type of this node
  std::string name;
  long long intVal = 0;
  bool boolVal = false;
  std::string strVal;
  Type keyT = Type::dyn(), valT = Type::dyn();  // ChkDictLit (retracted)
  std::vector<ElabPtr> args;
  CallKind callKind = CallKind::Dynamic;
  RecvKind recv = RecvKind::DynR;
  int localSlot = -1;       // Var: >=0 means local
  std::string ownerClass;   // MethodCall/Field*: static receiver class; New: class
  int slot = -1;            // resolved method slot / field slot
};

struct ElabStmt;
using ElabStmtPtr = std::shared_ptr<ElabStmt>;

struct ElabStmt {
  StmtKind kind = StmtKind::Pass;
  std::string name;
  ElabPtr expr;
  bool hasExpr = false;
  std::vector<ElabStmtPtr> body, orelse;
  int localSlot = -1;  // LocalDef/Assign target; VarDef: module var
  bool whileTrueNoBreak = false;
};

struct ElabFunction {
  std::string name;  // "f" or "C.m"
  bool isMethod = false;
  std::string className;
  int nparams = 1;  // methods count self
  bool methodHasParam = false;
  bool isTyped = false;
  Type retT = Type::dyn();
  std::vector<std::pair<int, Type>> checkArgs;  // precise-typed params only
  std::vector<ElabStmtPtr> body;
  int nlocals = 0;
  std::vector<std::string> localNames;
};

struct VtableSlot {
  std::string methodName;
  int funcIndex = -1;
  bool wrapperNeeded = false;
  Type wrapperRetT = Type::dyn();
};

struct ElabClass {
  std::string name, parent;
  bool dynamicFlag = false;
  std::vector<VtableSlot> vtable;           // inherited slots first, fixed indices
  std::vector<TypeEnv::FieldInfo> fields;   // slot order, root-first
  int ownFieldSlot = 0;
  ElabPtr ownDefault;  // this class's field default, elaborated in module scope
};

struct ElabProgram {
  TypeEnv env;
  std::vector<ElabFunction> functions;
  std::map<std::string, int> funcIndex;  // free functions
  std::vector<ElabClass> classes;
  std::map<std::string, int> classIndex;
  std::vector<ElabStmtPtr> top;  // VarDef + ExprStmt in order
};

struct CheckResult {
  ElabProgram program;
  std::vector<Diagnostic> diags;
  bool ok() const { return diags.empty(); }
};

// Builds the environment only (exposed for tests); diagnostics appended.
TypeEnv build_env(const SurfaceProgram& p, std::vector<Diagnostic>& diags);

// The single-coercion rule: Accept via consistent subtyping, else a cast
// via materialization, else Reject. Never chained.
CoercionDecision coerce(const ClassHierarchy& env, const Type& actual, const Type& expected);

// Occurrence typing for `x is None` forms: given the current local types,
// returns the refinements each branch may assume. Unhandled conditions
// yield empty maps (locals unchanged).
struct NarrowResult {
  std::map<std::string, Type> thenTypes, elseTypes;
};
NarrowResult narrow(const std::map<std::string, Type>& locals, const Expr& cond);

// Full pipeline: env, override tables, bodies, top-level statements.
CheckResult check_program(const SurfaceProgram& p);

// Counts Cast nodes in an elaborated program (fully-precise programs have 0).
int count_casts(const ElabProgram& p);

// Checks the Cast-node invariant everywhere: inner type is Dyn and the
// target is precise. Returns false if violated.
bool verify_cast_nodes(const ElabProgram& p);

}  // namespace gsp
