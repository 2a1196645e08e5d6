#include "gsp/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "gsp/checker.hpp"
#include "gsp/parser.hpp"

namespace gsp {

// ---- program generation ----

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Generator {
 public:
  explicit Generator(const GenConfig& cfg) : cfg_(cfg), state_(splitmix64(cfg.seed ^ 0xA5CEC0DEull)) {}

  SurfaceProgram run() {
    int nClasses = (int)draw((uint64_t)cfg_.maxClasses + 1);
    for (int c = 0; c < nClasses; ++c) gen_class(c);
    int nFuncs = (int)draw(4);
    for (int f = 0; f < nFuncs; ++f) gen_func(f);
    int nVars = (int)draw(4);
    for (int v = 0; v < nVars; ++v) gen_var(v);
    int nTop = 1 + (int)draw((uint64_t)cfg_.maxTopStmts);
    for (int t = 0; t < nTop; ++t) {
      StmtPtr s = make_stmt(StmtKind::ExprStmt);
      Ctx ctx;
      ctx.vars = moduleVars_;
      s->expr = gen_expr(Type::dyn(), cfg_.maxExprDepth, ctx);
      prog_.stmts.push_back(s);
    }
    return std::move(prog_);
  }

 private:
  struct MethodG {
    std::string name;
    bool hasParam = false;
    Type paramT = Type::dyn();
    Type retT = Type::dyn();
  };
  struct ClassG {
    std::string name;
    int parent = -1;
    bool dynFlag = false;
    std::string fieldName;
    Type fieldT = Type::dyn();
    std::vector<MethodG> methods;
  };
  struct FuncG {
    std::string name;
    Type paramT = Type::dyn();
    Type retT = Type::dyn();
  };
  struct VarG {
    std::string name;
    Type t = Type::dyn();
  };
  struct Ctx {
    std::vector<VarG> vars;
    int localCounter = 0;
  };

  const GenConfig& cfg_;
  uint64_t state_;
  SurfaceProgram prog_;
  std::vector<ClassG> classes_;
  std::vector<FuncG> funcs_;
  std::vector<VarG> moduleVars_;
  ClassHierarchy hier_;

  uint64_t next() { return state_ = splitmix64(state_); }
  uint64_t draw(uint64_t n) { return n ? next() % n : 0; }
  bool chance(double p) { return (double)(next() >> 11) * (1.0 / 9007199254740992.0) < p; }

  // -- types --

  Type gen_type(int depth) {
    if (chance(cfg_.dynBias)) return Type::dyn();
    switch (draw(depth > 0 ? 7 : 3)) {
      case 0: return Type::intT();
      case 1: return Type::boolT();
      case 2: return Type::strT();
      case 3:
        if (classes_.empty()) return Type::intT();
        return Type::cls(classes_[draw(classes_.size())].name);
      case 4: return Type::dict(gen_prim(), gen_prim());
      // The parser desugars Optional[S] to Union[None, S]; generate the
      // desugared form so round-tripping is the identity.
      case 5: return Type::unionOf({Type::none(), gen_payload(depth - 1)});
      default: return Type::checkedDict(gen_type(depth - 1), gen_type(depth - 1));
    }
  }

  Type gen_prim() {
    switch (draw(3)) {
      case 0: return Type::intT();
      case 1: return Type::boolT();
      default: return Type::strT();
    }
  }

  Type gen_payload(int depth) {
    switch (draw(depth > 0 ? 5 : 3)) {
      case 0: return Type::intT();
      case 1: return Type::boolT();
      case 2: return Type::strT();
      case 3:
        if (classes_.empty()) return Type::strT();
        return Type::cls(classes_[draw(classes_.size())].name);
      default: return Type::dict(gen_prim(), gen_prim());
    }
  }

  // -- expression helpers --

  ExprPtr intLit(long long v) {
    ExprPtr e = make_expr(ExprKind::IntLit);
    e->intVal = v;
    return e;
  }
  ExprPtr boolLit(bool v) {
    ExprPtr e = make_expr(ExprKind::BoolLit);
    e->boolVal = v;
    return e;
  }
  ExprPtr strLit(std::string v) {
    ExprPtr e = make_expr(ExprKind::StrLit);
    e->strVal = std::move(v);
    return e;
  }
  ExprPtr var(const std::string& n) {
    ExprPtr e = make_expr(ExprKind::Var);
    e->name = n;
    return e;
  }

  const ClassG* find_class(const std::string& name) const {
    for (const ClassG& c : classes_)
      if (c.name == name) return &c;
    return nullptr;
  }

  std::vector<MethodG> visible_methods(int idx) const {
    std::vector<MethodG> out;
    for (int c = idx; c >= 0; c = classes_[(size_t)c].parent) {
      for (const MethodG& m : classes_[(size_t)c].methods) {
        bool seen = false;
        for (const MethodG& o : out)
          if (o.name == m.name) seen = true;
        if (!seen) out.push_back(m);
      }
    }
    return out;
  }

  // Annotations in the AST must be in the parser's image: Optional[S]
  // desugars to Union[None, S] there, so rewrite before embedding.
  static Type surface_form(const Type& t) {
    if (t.kind == TypeKind::OptionalT)
      return Type::unionOf({Type::none(), surface_form(t.args[0])});
    Type out = t;
    for (Type& a : out.args) a = surface_form(a);
    return out;
  }

  // A definitely well-typed expression of the given evaluation type.
  ExprPtr literal_of(const Type& t, int depth) {
    switch (t.kind) {
      case TypeKind::Dyn:
      case TypeKind::IntT: return intLit((long long)draw(10));
      case TypeKind::BoolT: return boolLit(chance(0.5));
      case TypeKind::StrT: {
        static const char* pool[] = {"A", "B", "x"};
        return strLit(pool[draw(3)]);
      }
      case TypeKind::NoneT: return make_expr(ExprKind::NoneLit);
      case TypeKind::OptionalT:
        if (chance(0.4) || depth <= 0) return make_expr(ExprKind::NoneLit);
        return literal_of(t.args[0], depth - 1);
      case TypeKind::DictT: {
        ExprPtr e = make_expr(ExprKind::DictLit);
        Type k = t.args.empty() ? gen_prim() : t.args[0];
        Type v = t.args.empty() ? gen_prim() : t.args[1];
        uint64_t n = draw(3);
        for (uint64_t i = 0; i < n; ++i) {
          e->args.push_back(literal_of(k, 0));
          e->args.push_back(literal_of(v, 0));
        }
        return e;
      }
      case TypeKind::CheckedDictT: {
        ExprPtr e = make_expr(ExprKind::ChkDictLit);
        e->keyAnn = surface_form(t.args[0]);
        e->valAnn = surface_form(t.args[1]);
        uint64_t n = draw(3);
        for (uint64_t i = 0; i < n; ++i) {
          e->args.push_back(literal_of(retract(t.args[0]), 0));
          e->args.push_back(literal_of(retract(t.args[1]), 0));
        }
        return e;
      }
      case TypeKind::ClassT: {
        const ClassG* c = find_class(t.className);
        if (!c) return intLit(0);
        ExprPtr e = make_expr(ExprKind::New);
        e->name = c->name;
        if (depth > 0 && chance(0.6)) e->args.push_back(literal_of(retract(c->fieldT), depth - 1));
        return e;
      }
      case TypeKind::UnionT:
        return literal_of(t.args[draw(t.args.size())], depth);
    }
    return intLit(0);
  }

  bool fits(const Type& have, const Type& want) {
    if (want.isDyn() || have.isDyn()) return true;
    try {
      return is_subtype(hier_, retract(have), retract(want));
    } catch (const UnknownClassError&) {
      return false;
    }
  }

  // An expression whose static type the checker will accept (possibly via a
  // cast) where `target` is expected. Biased toward typed/untyped boundary
  // crossings; occasionally deliberately ill-typed.
  ExprPtr gen_expr(const Type& targetSurface, int depth, Ctx& ctx) {
    Type target = retract(targetSurface);
    if (chance(0.05)) return literal_of(gen_type(0), 0);  // expected static rejects

    std::vector<std::function<ExprPtr()>> makers;
    makers.push_back([&] { return literal_of(target, depth); });

    for (const VarG& v : ctx.vars)
      if (fits(v.t, target)) makers.push_back([&, n = v.name] { return var(n); });

    if (depth > 0) {
      for (const FuncG& f : funcs_) {
        if (!fits(f.retT, target)) continue;
        makers.push_back([&, fn = f] {
          ExprPtr e = make_expr(ExprKind::Call);
          e->name = fn.name;
          e->args.push_back(gen_expr(fn.paramT, depth - 1, ctx));
          return e;
        });
      }
      // Reads through containers and objects held in variables.
      for (const VarG& v : ctx.vars) {
        Type vt = retract(v.t);
        if (vt.kind == TypeKind::DictT && target.isDyn()) {
          makers.push_back([&, n = v.name] {
            ExprPtr e = make_expr(ExprKind::Subscript);
            e->args.push_back(var(n));
            e->args.push_back(literal_of(gen_prim(), 0));
            return e;
          });
        }
        if (vt.kind == TypeKind::CheckedDictT && fits(vt.args[1], target)) {
          makers.push_back([&, n = v.name, kt = vt.args[0]] {
            ExprPtr e = make_expr(ExprKind::Subscript);
            e->args.push_back(var(n));
            e->args.push_back(literal_of(kt, 0));
            return e;
          });
        }
        if (vt.isDyn()) {
          // Dynamic receivers exercise the *_ATTR_DYN and guarded paths.
          makers.push_back([&, n = v.name] {
            ExprPtr e = make_expr(ExprKind::Subscript);
            e->args.push_back(var(n));
            e->args.push_back(literal_of(gen_prim(), 0));
            return e;
          });
        }
        if (vt.kind == TypeKind::ClassT) {
          const ClassG* c = find_class(vt.className);
          if (c && fits(c->fieldT, target)) {
            makers.push_back([&, n = v.name, fld = c->fieldName] {
              ExprPtr e = make_expr(ExprKind::FieldGet);
              e->name = fld;
              e->args.push_back(var(n));
              return e;
            });
          }
          if (c) {
            int idx = (int)(c - classes_.data());
            for (const MethodG& m : visible_methods(idx)) {
              if (!fits(m.retT, target)) continue;
              makers.push_back([&, n = v.name, mg = m] {
                ExprPtr e = make_expr(ExprKind::MethodCall);
                e->name = mg.name;
                e->args.push_back(var(n));
                if (mg.hasParam) e->args.push_back(gen_expr(mg.paramT, depth - 1, ctx));
                return e;
              });
            }
          }
        }
      }
      if (target.kind == TypeKind::ClassT) {
        const ClassG* c = find_class(target.className);
        if (c) {
          makers.push_back([&, cg = c] {
            ExprPtr e = make_expr(ExprKind::New);
            e->name = cg->name;
            if (chance(0.7)) e->args.push_back(gen_expr(cg->fieldT, depth - 1, ctx));
            return e;
          });
        }
      }
      if (target.kind == TypeKind::BoolT || target.isDyn()) {
        makers.push_back([&] {
          ExprPtr e = make_expr(ExprKind::Eq);
          Type t = gen_prim();
          e->args.push_back(gen_expr(t, depth - 1, ctx));
          e->args.push_back(gen_expr(t, depth - 1, ctx));
          return e;
        });
        for (const VarG& v : ctx.vars) {
          Type vt = retract(v.t);
          if (vt.kind == TypeKind::OptionalT || vt.isDyn()) {
            makers.push_back([&, n = v.name] {
              ExprPtr e = make_expr(ExprKind::IsNone);
              e->args.push_back(var(n));
              return e;
            });
          }
        }
      }
    }
    return makers[draw(makers.size())]();
  }

  ExprPtr gen_cond(Ctx& ctx, int depth) {
    // Prefer is-None tests on Optional locals so narrowing gets exercised.
    std::vector<std::string> optionals;
    for (const VarG& v : ctx.vars)
      if (retract(v.t).kind == TypeKind::OptionalT) optionals.push_back(v.name);
    if (!optionals.empty() && chance(0.6)) {
      ExprPtr e = make_expr(chance(0.5) ? ExprKind::IsNone : ExprKind::Not);
      if (e->kind == ExprKind::IsNone) {
        e->args.push_back(var(optionals[draw(optionals.size())]));
      } else {
        ExprPtr inner = make_expr(ExprKind::IsNone);
        inner->args.push_back(var(optionals[draw(optionals.size())]));
        e->args.push_back(inner);
      }
      return e;
    }
    return gen_expr(Type::boolT(), depth, ctx);
  }

  // -- statements --

  void gen_body(std::vector<StmtPtr>& out, Ctx& ctx, const Type& retT, bool inFunc, int depth) {
    size_t startSize = out.size();
    int n = 1 + (int)draw(3);
    for (int i = 0; i < n; ++i) {
      switch (draw(inFunc ? 10 : 9)) {
        case 0:
        case 1:
        case 2: {  // first binding
          StmtPtr s = make_stmt(StmtKind::LocalDef);
          s->name = "a" + std::to_string(ctx.localCounter++);
          if (chance(0.7)) {
            s->hasAnn = true;
            s->ann = gen_type(2);
            s->expr = gen_expr(s->ann, depth, ctx);
            ctx.vars.push_back({s->name, s->ann});
          } else {
            Type t = gen_type(2);
            s->expr = gen_expr(t, depth, ctx);
            ctx.vars.push_back({s->name, t});  // declared type is synthesized; t is close
          }
          out.push_back(s);
          break;
        }
        case 3: {  // rebinding
          if (ctx.vars.empty() || ctx.vars.back().name[0] != 'a') break;
          const VarG& target = ctx.vars[draw(ctx.vars.size())];
          if (target.name[0] != 'a') break;  // only locals rebind
          StmtPtr s = make_stmt(StmtKind::Assign);
          s->name = target.name;
          s->expr = gen_expr(target.t, depth, ctx);
          out.push_back(s);
          break;
        }
        case 4:
        case 5: {  // expression statement, often effectful
          StmtPtr s = make_stmt(StmtKind::ExprStmt);
          if (chance(0.4) && !ctx.vars.empty()) {
            const VarG& v = ctx.vars[draw(ctx.vars.size())];
            Type vt = retract(v.t);
            if (vt.kind == TypeKind::DictT || vt.kind == TypeKind::CheckedDictT || vt.isDyn()) {
              ExprPtr e = make_expr(ExprKind::SubscriptSet);
              e->args.push_back(var(v.name));
              Type kt = vt.kind == TypeKind::CheckedDictT ? vt.args[0] : Type(gen_prim());
              Type et = vt.kind == TypeKind::CheckedDictT ? vt.args[1] : Type(Type::dyn());
              e->args.push_back(gen_expr(kt, 0, ctx));
              e->args.push_back(gen_expr(et, depth, ctx));
              s->expr = e;
            } else if (vt.kind == TypeKind::ClassT && find_class(vt.className)) {
              const ClassG* c = find_class(vt.className);
              ExprPtr e = make_expr(ExprKind::FieldSet);
              e->name = c->fieldName;
              e->args.push_back(var(v.name));
              e->args.push_back(gen_expr(c->fieldT, depth, ctx));
              s->expr = e;
            } else {
              s->expr = gen_expr(Type::dyn(), depth, ctx);
            }
          } else {
            s->expr = gen_expr(Type::dyn(), depth, ctx);
          }
          out.push_back(s);
          break;
        }
        case 6: {  // conditional; branch-local bindings stay branch-local
          if (depth <= 0) break;
          StmtPtr s = make_stmt(StmtKind::If);
          s->expr = gen_cond(ctx, depth - 1);
          Ctx thenCtx = ctx;
          gen_body(s->body, thenCtx, retT, inFunc, depth - 1);
          ctx.localCounter = thenCtx.localCounter;
          if (chance(0.5)) {
            Ctx elseCtx = ctx;
            gen_body(s->orelse, elseCtx, retT, inFunc, depth - 1);
            ctx.localCounter = elseCtx.localCounter;
          }
          out.push_back(s);
          break;
        }
        case 7: {  // loop with a guaranteed exit
          if (depth <= 0) break;
          StmtPtr s = make_stmt(StmtKind::While);
          s->expr = boolLit(true);
          Ctx loopCtx = ctx;
          gen_body(s->body, loopCtx, retT, inFunc, depth - 1);
          s->body.push_back(make_stmt(StmtKind::Break));
          ctx.localCounter = std::max(ctx.localCounter, loopCtx.localCounter);
          out.push_back(s);
          break;
        }
        case 8:
          out.push_back(make_stmt(StmtKind::Pass));
          break;
        case 9: {  // early return
          StmtPtr s = make_stmt(StmtKind::Return);
          s->hasExpr = true;
          s->expr = gen_expr(retT, depth, ctx);
          out.push_back(s);
          return;  // anything further is dead code
        }
      }
    }
    // Empty blocks are not representable in the concrete syntax.
    if (out.size() == startSize) out.push_back(make_stmt(StmtKind::Pass));
  }

  // -- declarations --

  void gen_class(int idx) {
    ClassG c;
    c.name = "C" + std::to_string(idx);
    c.parent = (idx > 0 && chance(0.5)) ? (int)draw((uint64_t)idx) : -1;
    c.dynFlag = chance(0.3);

    // Field: usually fresh; sometimes shadow an ancestor's (same type keeps
    // it legal, a different type is an expected static reject).
    std::string shadowName;
    Type shadowT = Type::dyn();
    if (c.parent >= 0) {
      shadowName = classes_[(size_t)c.parent].fieldName;
      shadowT = classes_[(size_t)c.parent].fieldT;
    }
    if (!shadowName.empty() && chance(0.2)) {
      c.fieldName = shadowName;
      c.fieldT = c.dynFlag ? Type::dyn() : (chance(0.8) ? shadowT : gen_type(2));
    } else {
      c.fieldName = "v" + std::to_string(idx);
      c.fieldT = c.dynFlag ? Type::dyn() : gen_type(2);
    }

    std::vector<MethodG> inherited =
        c.parent >= 0 ? visible_methods(c.parent) : std::vector<MethodG>{};
    int nMethods = (int)draw(3);
    bool freshUsed = false;
    for (int m = 0; m < nMethods; ++m) {
      MethodG mg;
      bool overriding = !inherited.empty() && (freshUsed || chance(0.5));
      if (overriding) {
        const MethodG& base = inherited[draw(inherited.size())];
        bool dup = false;
        for (const MethodG& own : c.methods)
          if (own.name == base.name) dup = true;
        if (dup) continue;
        mg.name = base.name;
        mg.hasParam = base.hasParam;
        if (c.dynFlag) {
          mg.paramT = Type::dyn();
          mg.retT = Type::dyn();
        } else if (chance(0.7)) {
          mg.paramT = base.paramT;  // compatible override
          mg.retT = base.retT;
        } else {
          mg.paramT = gen_type(1);  // often an override error, by design
          mg.retT = gen_type(1);
        }
      } else {
        if (freshUsed) continue;  // one new vtable slot per class
        freshUsed = true;
        mg.name = "m" + std::to_string(idx);
        mg.hasParam = chance(0.7);
        mg.paramT = c.dynFlag ? Type::dyn() : gen_type(1);
        mg.retT = c.dynFlag ? Type::dyn() : gen_type(1);
      }
      c.methods.push_back(mg);
    }

    StmtPtr s = make_stmt(StmtKind::ClassDef);
    s->name = c.name;
    s->parent = c.parent >= 0 ? classes_[(size_t)c.parent].name : "object";
    s->dynClass = c.dynFlag;
    s->fieldName = c.fieldName;
    s->fieldAnn = c.fieldT;
    s->fieldDefault = literal_of(retract(c.fieldT), 1);
    for (const MethodG& mg : c.methods) {
      MethodDef md;
      md.name = mg.name;
      md.hasParam = mg.hasParam;
      md.param.name = "p";
      md.param.ann = mg.paramT;
      md.ret = mg.retT;
      Ctx ctx;
      ctx.vars.push_back({"self", c.dynFlag ? Type::dyn() : Type::cls(c.name)});
      if (mg.hasParam) ctx.vars.push_back({"p", mg.paramT});
      gen_body(md.body, ctx, mg.retT, /*inFunc=*/true, cfg_.maxExprDepth - 1);
      StmtPtr ret = make_stmt(StmtKind::Return);
      ret->hasExpr = true;
      Ctx retCtx = ctx;
      ret->expr = gen_expr(mg.retT, 1, retCtx);
      md.body.push_back(ret);
      s->methods.push_back(std::move(md));
    }
    prog_.stmts.push_back(s);
    classes_.push_back(c);
    hier_.add(c.name, s->parent);
  }

  void gen_func(int idx) {
    FuncG f;
    f.name = "f" + std::to_string(idx);
    f.paramT = gen_type(2);
    f.retT = gen_type(2);
    StmtPtr s = make_stmt(StmtKind::FuncDef);
    s->name = f.name;
    s->param.name = "p";
    s->param.ann = f.paramT;
    s->ann = f.retT;
    Ctx ctx;
    ctx.vars.push_back({"p", f.paramT});
    gen_body(s->body, ctx, f.retT, /*inFunc=*/true, cfg_.maxExprDepth - 1);
    StmtPtr ret = make_stmt(StmtKind::Return);
    ret->hasExpr = true;
    ret->expr = gen_expr(f.retT, 1, ctx);
    s->body.push_back(ret);
    prog_.stmts.push_back(s);
    funcs_.push_back(f);
  }

  void gen_var(int idx) {
    VarG v;
    v.name = "g" + std::to_string(idx);
    v.t = gen_type(2);
    StmtPtr s = make_stmt(StmtKind::VarDef);
    s->name = v.name;
    s->hasAnn = true;
    s->ann = v.t;
    Ctx ctx;
    ctx.vars = moduleVars_;
    s->expr = gen_expr(v.t, cfg_.maxExprDepth - 1, ctx);
    prog_.stmts.push_back(s);
    moduleVars_.push_back(v);
  }
};

}  // namespace

SurfaceProgram generate_program(const GenConfig& cfg) { return Generator(cfg).run(); }

// ---- verdicts ----

const char* verdict_kind_name(VerdictKind k) {
  switch (k) {
    case VerdictKind::WellTypedValue: return "WellTypedValue";
    case VerdictKind::AllowedError: return "AllowedError";
    case VerdictKind::StaticReject: return "StaticReject";
    case VerdictKind::Timeout: return "Timeout";
    case VerdictKind::SoundnessViolation: return "SOUNDNESS_VIOLATION";
  }
  return "?";
}

namespace {

bool expr_has_chk(const ExprPtr& e) {
  if (!e) return false;
  if (e->kind == ExprKind::ChkDictLit) return true;
  for (const ExprPtr& c : e->args)
    if (expr_has_chk(c)) return true;
  return false;
}

bool block_has_chk(const std::vector<StmtPtr>& b);

bool stmt_has_chk(const StmtPtr& s) {
  if (expr_has_chk(s->expr) || expr_has_chk(s->fieldDefault)) return true;
  if (block_has_chk(s->body) || block_has_chk(s->orelse)) return true;
  for (const MethodDef& m : s->methods)
    if (block_has_chk(m.body)) return true;
  return false;
}

bool block_has_chk(const std::vector<StmtPtr>& b) {
  for (const StmtPtr& s : b)
    if (stmt_has_chk(s)) return true;
  return false;
}

Verdict violation(std::string detail) {
  Verdict v;
  v.kind = VerdictKind::SoundnessViolation;
  v.detail = std::move(detail);
  return v;
}

}  // namespace

Verdict soundness_verdict(const SurfaceProgram& p, long long budget) {
  CheckResult cr = check_program(p);
  if (!cr.ok()) {
    Verdict v;
    v.kind = VerdictKind::StaticReject;
    for (const Diagnostic& d : cr.diags) v.codes.push_back(d.code);
    return v;
  }
  if (!verify_cast_nodes(cr.program))
    return violation("checker emitted a malformed cast node");

  BytecodeModule plain = compile(cr.program);
  BytecodeModule opt = optimize(plain);
  TypeRegistry reg;
  ExecResult r = execute(opt, reg, budget);

  // Optimizer differential: identical observable behavior with every invoke
  // edge on the checked entry. Budgets are instruction counts, so a timeout
  // on either side makes the comparison inconclusive.
  {
    TypeRegistry reg2;
    ExecResult r2 = execute(plain, reg2, budget * 4);
    if (r.status != ExecStatus::Timeout && r2.status != ExecStatus::Timeout) {
      if (r.status != r2.status || r.outputs != r2.outputs ||
          (r.status == ExecStatus::Error && r.errKind != r2.errKind))
        return violation("optimized and checked-entry executions disagree");
    }
  }

  switch (r.status) {
    case ExecStatus::Timeout: {
      Verdict v;
      v.kind = VerdictKind::Timeout;
      return v;
    }
    case ExecStatus::Internal:
      return violation("internal error: " + r.internalDetail);
    case ExecStatus::Error: {
      Verdict v;
      v.kind = VerdictKind::AllowedError;
      v.errKind = r.errKind;
      v.detail = r.errMessage;
      return v;
    }
    case ExecStatus::Ok:
      break;
  }

  // Terminal values must satisfy their static types.
  std::vector<Type> outTypes;
  for (const ElabStmtPtr& s : cr.program.top)
    if (s->kind == StmtKind::ExprStmt) outTypes.push_back(s->expr->type);
  if (outTypes.size() != r.outputValues.size())
    return violation("top-level output count does not match the program");
  for (size_t i = 0; i < outTypes.size(); ++i) {
    try {
      cast_value(opt.classes, reg, r.outputValues[i], outTypes[i]);
    } catch (const RuntimeErr& e) {
      return violation("terminal value " + std::to_string(i) + " fails its static type " +
                       to_string(outTypes[i]) + ": " + e.message);
    }
  }

  // Erasure differential (checked-dict literals are exempt: exact-match tags
  // legitimately change behavior when annotations vanish).
  if (!block_has_chk(p.stmts)) {
    SurfaceProgram erased = erase_annotations(p);
    CheckResult ec = check_program(erased);
    if (!ec.ok())
      return violation("erased program was rejected: " + ec.diags[0].code);
    BytecodeModule em = optimize(compile(ec.program));
    TypeRegistry ereg;
    ExecResult er = execute(em, ereg, budget * 10);
    if (er.status != ExecStatus::Timeout) {
      if (er.status != ExecStatus::Ok || er.outputs != r.outputs)
        return violation("erased program output diverged");
    }
  }

  Verdict v;
  v.kind = VerdictKind::WellTypedValue;
  if (!r.outputs.empty()) {
    v.rendered = r.outputs.back();
    v.staticType = outTypes.back();
  } else {
    v.rendered = "None";
    v.staticType = Type::none();
  }
  return v;
}

Verdict soundness_verdict_source(const std::string& source, long long budget) {
  ParseResult pr = parse(source);
  if (!pr.ok()) {
    Verdict v;
    v.kind = VerdictKind::StaticReject;
    for (const Diagnostic& d : pr.diags) v.codes.push_back(d.code);
    return v;
  }
  return soundness_verdict(pr.program, budget);
}

// ---- fuzzing ----

FuzzSummary run_fuzz(uint64_t seed, int count, double dynBias, long long budget) {
  FuzzSummary sum;
  for (int i = 0; i < count; ++i) {
    GenConfig cfg;
    cfg.seed = splitmix64(seed + (uint64_t)i);
    cfg.dynBias = dynBias;
    SurfaceProgram p = generate_program(cfg);
    Verdict v = soundness_verdict(p, budget);
    switch (v.kind) {
      case VerdictKind::WellTypedValue: ++sum.wellTyped; break;
      case VerdictKind::AllowedError: ++sum.allowedErrors; break;
      case VerdictKind::StaticReject: ++sum.staticRejects; break;
      case VerdictKind::Timeout: ++sum.timeouts; break;
      case VerdictKind::SoundnessViolation:
        ++sum.violations;
        sum.violationDetails.push_back("seed=" + std::to_string(seed) + " index=" +
                                       std::to_string(i) + ": " + v.detail);
        break;
    }
  }
  return sum;
}

// ---- corpus ----

CorpusReport run_corpus(const std::string& dir) {
  CorpusReport report;
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".gsp") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());

  for (const std::string& file : files) {
    std::ifstream in(file);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string source = buf.str();

    std::string expect;
    std::istringstream lines(source);
    std::string line;
    while (std::getline(lines, line)) {
      const std::string marker = "# expect: ";
      if (line.rfind(marker, 0) == 0) {
        expect = line.substr(marker.size());
        while (!expect.empty() && (expect.back() == '\r' || expect.back() == ' '))
          expect.pop_back();
        break;
      }
    }

    CorpusEntry e;
    e.file = std::filesystem::path(file).filename().string();
    if (expect.empty()) {
      e.detail = "missing '# expect:' header";
      report.entries.push_back(e);
      ++report.failed;
      continue;
    }

    Verdict v = soundness_verdict_source(source, 1000000);
    auto starts = [&](const char* prefix) { return expect.rfind(prefix, 0) == 0; };
    if (starts("value ")) {
      std::string want = expect.substr(6);
      e.pass = v.kind == VerdictKind::WellTypedValue && v.rendered == want;
      if (!e.pass)
        e.detail = "expected value " + want + ", got " + std::string(verdict_kind_name(v.kind)) +
                   " " + (v.kind == VerdictKind::WellTypedValue ? v.rendered : v.detail);
    } else if (starts("static ")) {
      std::string want = expect.substr(7);
      bool found = false;
      for (const std::string& c : v.codes) found = found || c == want;
      e.pass = v.kind == VerdictKind::StaticReject && found;
      if (!e.pass) {
        e.detail = "expected static " + want + ", got " + verdict_kind_name(v.kind);
        for (const std::string& c : v.codes) e.detail += " " + c;
      }
    } else if (starts("runtime ")) {
      std::string want = expect.substr(8);
      e.pass = v.kind == VerdictKind::AllowedError && err_kind_name(v.errKind) == want;
      if (!e.pass)
        e.detail = "expected runtime " + want + ", got " + verdict_kind_name(v.kind) +
                   (v.kind == VerdictKind::AllowedError
                        ? std::string(" ") + err_kind_name(v.errKind)
                        : "");
    } else {
      e.detail = "unrecognized expectation: " + expect;
    }
    report.entries.push_back(e);
    if (e.pass)
      ++report.passed;
    else
      ++report.failed;
  }
  return report;
}

}  // namespace gsp
