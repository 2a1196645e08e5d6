#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gsp/types.hpp"

namespace gsp {

struct Diagnostic {
  std::string code;     // stable string, e.g. "E-TYPE-MISMATCH"
  std::string message;
  int line = 0;
  int col = 0;
};

enum class ExprKind {
  Var,
  NoneLit,
  IntLit,
  BoolLit,
  StrLit,
  Call,
  DictLit,
  ChkDictLit,
  Subscript,
  SubscriptSet,
  New,
  FieldGet,
  FieldSet,
  MethodCall,
  IsNone,
  Eq,
  Not,
};

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct Expr {
  ExprKind kind;
  int line = 0, col = 0;
  std::string name;        // Var, Call(fname), New(class), FieldGet/Set, MethodCall
  long long intVal = 0;
  bool boolVal = false;
  std::string strVal;
  Type keyAnn, valAnn;     // ChkDictLit
  // Children, by kind:
  //   Call: [arg]; DictLit/ChkDictLit: [k0,v0,k1,v1,...]; Subscript: [recv,key];
  //   SubscriptSet: [recv,key,value]; New: [arg?]; FieldGet: [recv];
  //   FieldSet: [recv,value]; MethodCall: [recv,arg?]; IsNone/Not: [e]; Eq: [l,r]
  std::vector<ExprPtr> args;
};

inline ExprPtr make_expr(ExprKind k, int line = 0, int col = 0) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->line = line;
  e->col = col;
  return e;
}

enum class StmtKind {
  VarDef,    // top level: name: ann = init
  FuncDef,
  ClassDef,
  ExprStmt,  // top level or body
  LocalDef,  // body: name[: ann] = init (first binding)
  Assign,    // body: name = expr (rebinding; module-level target is an error)
  If,
  While,
  Break,
  Pass,
  Return,
};

struct Stmt;
using StmtPtr = std::shared_ptr<Stmt>;

struct Param {
  std::string name;
  Type ann = Type::dyn();
};

struct MethodDef {
  std::string name;
  bool hasParam = false;
  Param param;
  Type ret = Type::dyn();
  std::vector<StmtPtr> body;
  int line = 0;
};

struct Stmt {
  StmtKind kind;
  int line = 0, col = 0;
  std::string name;           // VarDef/FuncDef/ClassDef/LocalDef/Assign
  bool hasAnn = false;
  Type ann = Type::dyn();     // VarDef/LocalDef annotation; FuncDef return type
  ExprPtr expr;               // init / condition / return value / expr stmt
  bool hasExpr = false;       // Return with value
  std::vector<StmtPtr> body;  // If-then / While body / FuncDef body
  std::vector<StmtPtr> orelse;
  Param param;                // FuncDef
  // ClassDef:
  std::string parent;
  bool dynClass = false;
  std::string fieldName;
  Type fieldAnn = Type::dyn();
  ExprPtr fieldDefault;
  std::vector<MethodDef> methods;
};

inline StmtPtr make_stmt(StmtKind k, int line = 0, int col = 0) {
  auto s = std::make_shared<Stmt>();
  s->kind = k;
  s->line = line;
  s->col = col;
  return s;
}

struct SurfaceProgram {
  std::vector<StmtPtr> stmts;
};

// Structural AST equality (spans ignored); used by the round-trip property.
bool expr_equal(const Expr& a, const Expr& b);
bool stmt_equal(const Stmt& a, const Stmt& b);
bool program_equal(const SurfaceProgram& a, const SurfaceProgram& b);

// Deep copy with every annotation replaced by Dyn and every class marked
// dynamic; drives the erasure differential.
SurfaceProgram erase_annotations(const SurfaceProgram& p);

}  // namespace gsp
