#include "gsp/ast.hpp"

namespace gsp {

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.name != b.name || a.intVal != b.intVal || a.boolVal != b.boolVal ||
      a.strVal != b.strVal || a.keyAnn != b.keyAnn || a.valAnn != b.valAnn)
    return false;
  if (a.args.size() != b.args.size()) return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!expr_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

namespace {

bool block_equal(const std::vector<StmtPtr>& a, const std::vector<StmtPtr>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!stmt_equal(*a[i], *b[i])) return false;
  return true;
}

bool expr_opt_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return expr_equal(*a, *b);
}

}  // namespace

bool stmt_equal(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.name != b.name || a.hasAnn != b.hasAnn || a.hasExpr != b.hasExpr)
    return false;
  if (a.hasAnn && a.ann != b.ann) return false;
  if (!expr_opt_equal(a.expr, b.expr)) return false;
  if (!block_equal(a.body, b.body) || !block_equal(a.orelse, b.orelse)) return false;
  if (a.kind == StmtKind::FuncDef) {
    if (a.param.name != b.param.name || a.param.ann != b.param.ann || a.ann != b.ann) return false;
  }
  if (a.kind == StmtKind::ClassDef) {
    if (a.parent != b.parent || a.dynClass != b.dynClass || a.fieldName != b.fieldName ||
        a.fieldAnn != b.fieldAnn || !expr_opt_equal(a.fieldDefault, b.fieldDefault))
      return false;
    if (a.methods.size() != b.methods.size()) return false;
    for (size_t i = 0; i < a.methods.size(); ++i) {
      const MethodDef& m0 = a.methods[i];
      const MethodDef& m1 = b.methods[i];
      if (m0.name != m1.name || m0.hasParam != m1.hasParam || m0.ret != m1.ret) return false;
      if (m0.hasParam && (m0.param.name != m1.param.name || m0.param.ann != m1.param.ann))
        return false;
      if (!block_equal(m0.body, m1.body)) return false;
    }
  }
  return true;
}

bool program_equal(const SurfaceProgram& a, const SurfaceProgram& b) {
  return block_equal(a.stmts, b.stmts);
}

namespace {

ExprPtr erase_expr(const ExprPtr& e) {
  if (!e) return nullptr;
  auto out = std::make_shared<Expr>(*e);
  out->args.clear();
  for (const ExprPtr& c : e->args) out->args.push_back(erase_expr(c));
  // ChkDictLit annotations stay: erasure-eligible programs contain none.
  return out;
}

StmtPtr erase_stmt(const StmtPtr& s);

std::vector<StmtPtr> erase_block(const std::vector<StmtPtr>& b) {
  std::vector<StmtPtr> out;
  for (const StmtPtr& s : b) out.push_back(erase_stmt(s));
  return out;
}

StmtPtr erase_stmt(const StmtPtr& s) {
  auto out = std::make_shared<Stmt>(*s);
  out->expr = erase_expr(s->expr);
  out->body = erase_block(s->body);
  out->orelse = erase_block(s->orelse);
  if (s->hasAnn) out->ann = Type::dyn();
  switch (s->kind) {
    case StmtKind::FuncDef:
      out->param.ann = Type::dyn();
      out->ann = Type::dyn();
      break;
    case StmtKind::ClassDef:
      out->dynClass = true;
      out->fieldAnn = Type::dyn();
      out->fieldDefault = erase_expr(s->fieldDefault);
      for (MethodDef& m : out->methods) {
        m.param.ann = Type::dyn();
        m.ret = Type::dyn();
        m.body = erase_block(m.body);
      }
      break;
    default:
      break;
  }
  return out;
}

}  // namespace

SurfaceProgram erase_annotations(const SurfaceProgram& p) {
  SurfaceProgram out;
  for (const StmtPtr& s : p.stmts) out.stmts.push_back(erase_stmt(s));
  return out;
}

}  // namespace gsp
