#include "gsp/checker.hpp"

#include <algorithm>
#include <set>

namespace gsp {

// ---- TypeEnv lookups ----

namespace {

std::vector<std::string> chain_root_first(const TypeEnv& env, const std::string& cls) {
  std::vector<std::string> chain;
  std::string cur = cls;
  while (cur != "object") {
    chain.push_back(cur);
    auto it = env.classes.find(cur);
    if (it == env.classes.end()) break;
    cur = it->second.parent;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

}  // namespace

std::vector<TypeEnv::FieldInfo> TypeEnv::flat_fields(const std::string& cls) const {
  std::vector<FieldInfo> out;
  for (const std::string& c : chain_root_first(*this, cls)) {
    auto it = classes.find(c);
    if (it == classes.end()) continue;
    const ClassSig& sig = it->second;
    bool shadowed = false;
    for (FieldInfo& f : out) {
      if (f.name == sig.fieldName) {
        f.type = sig.fieldT;
        f.declaringClass = c;
        shadowed = true;
        break;
      }
    }
    if (!shadowed) {
      FieldInfo f;
      f.name = sig.fieldName;
      f.type = sig.fieldT;
      f.declaringClass = c;
      f.slot = (int)out.size();
      out.push_back(f);
    }
  }
  return out;
}

const MethodSig* TypeEnv::find_method(const std::string& cls, const std::string& name) const {
  std::string cur = cls;
  while (cur != "object") {
    auto it = classes.find(cur);
    if (it == classes.end()) return nullptr;
    auto mit = it->second.methods.find(name);
    if (mit != it->second.methods.end()) return &mit->second;
    cur = it->second.parent;
  }
  return nullptr;
}

bool TypeEnv::find_field(const std::string& cls, const std::string& name, FieldInfo& out) const {
  for (const FieldInfo& f : flat_fields(cls)) {
    if (f.name == name) {
      out = f;
      return true;
    }
  }
  return false;
}

// ---- coercion ----

CoercionDecision coerce(const ClassHierarchy& env, const Type& actual, const Type& expected) {
  if (is_consistent_subtype(env, actual, expected)) return CoercionDecision::Accept;
  if (materializes(actual, expected)) return CoercionDecision::InsertCast;
  return CoercionDecision::Reject;
}

// ---- narrowing ----

NarrowResult narrow(const std::map<std::string, Type>& locals, const Expr& cond) {
  NarrowResult r;
  if (cond.kind == ExprKind::Not) {
    NarrowResult inner = narrow(locals, *cond.args[0]);
    r.thenTypes = std::move(inner.elseTypes);
    r.elseTypes = std::move(inner.thenTypes);
    return r;
  }
  if (cond.kind == ExprKind::IsNone && cond.args[0]->kind == ExprKind::Var) {
    const std::string& name = cond.args[0]->name;
    auto it = locals.find(name);
    if (it != locals.end() && it->second.kind == TypeKind::OptionalT) {
      r.thenTypes[name] = Type::none();
      r.elseTypes[name] = it->second.args[0];
    }
  }
  return r;
}

// ---- environment construction ----

namespace {

// Replaces references to undeclared classes with Dyn so later judgments
// never see an unknown name; each replacement is reported once.
Type sanitize_type(const Type& t, const std::set<std::string>& classNames,
                   std::vector<Diagnostic>& diags, int line) {
  if (t.kind == TypeKind::ClassT) {
    if (t.className == "object" || classNames.count(t.className)) return t;
    diags.push_back({"E-UNKNOWN-CLASS", "unknown class '" + t.className + "' in annotation",
                     line, 1});
    return Type::dyn();
  }
  Type out = t;
  for (Type& a : out.args) a = sanitize_type(a, classNames, diags, line);
  return normalize(out);
}

bool ann_all_dyn(const Stmt& cls) {
  if (!cls.fieldAnn.isDyn()) return false;
  for (const MethodDef& m : cls.methods) {
    if (!m.ret.isDyn()) return false;
    if (m.hasParam && !m.param.ann.isDyn()) return false;
  }
  return true;
}

}  // namespace

TypeEnv build_env(const SurfaceProgram& p, std::vector<Diagnostic>& diags) {
  TypeEnv env;
  // Class names first: annotations may reference classes declared later.
  std::set<std::string> classNames;
  for (const StmtPtr& s : p.stmts)
    if (s->kind == StmtKind::ClassDef && s->name != "object") classNames.insert(s->name);
  auto san = [&](const Type& surface, int line) {
    return sanitize_type(retract(surface), classNames, diags, line);
  };
  for (const StmtPtr& s : p.stmts) {
    switch (s->kind) {
      case StmtKind::VarDef:
        env.vars[s->name] = san(s->ann, s->line);
        break;
      case StmtKind::FuncDef: {
        FuncSig sig;
        sig.paramName = s->param.name;
        sig.paramT = san(s->param.ann, s->line);
        sig.retT = san(s->ann, s->line);
        sig.isTyped = !(sig.paramT.isDyn() && sig.retT.isDyn());
        env.funcs[s->name] = sig;
        break;
      }
      case StmtKind::ClassDef: {
        if (s->name == "object") {
          diags.push_back({"E-DUP-NAME", "cannot redeclare builtin class 'object'", s->line, 1});
          break;
        }
        if (s->parent != "object" && !env.classes.count(s->parent)) {
          diags.push_back({"E-UNKNOWN-CLASS",
                           "unknown parent class '" + s->parent + "'", s->line, 1});
          break;
        }
        if (s->dynClass && !ann_all_dyn(*s)) {
          diags.push_back({"E-DYNCLASS-PRECISE-ANN",
                           "dyn class '" + s->name + "' must use only dyn annotations",
                           s->line, 1});
        }
        ClassSig sig;
        sig.parent = s->parent;
        sig.dynamicFlag = s->dynClass;
        sig.fieldName = s->fieldName;
        sig.fieldT = san(s->fieldAnn, s->line);
        sig.fieldDefault = s->fieldDefault;
        for (const MethodDef& m : s->methods) {
          if (sig.methods.count(m.name)) {
            diags.push_back({"E-DUP-NAME",
                             "duplicate method '" + m.name + "' in class '" + s->name + "'",
                             m.line, 1});
            continue;
          }
          MethodSig ms;
          ms.hasParam = m.hasParam;
          ms.paramT = san(m.param.ann, m.line);
          ms.retT = san(m.ret, m.line);
          ms.declaringClass = s->name;
          sig.methods[m.name] = ms;
          sig.methodOrder.push_back(m.name);
        }
        env.classes[s->name] = std::move(sig);
        env.classOrder.push_back(s->name);
        env.hier.add(s->name, s->parent);
        break;
      }
      default:
        break;
    }
  }
  return env;
}

// ---- the checker ----

namespace {

struct LocalInfo {
  int slot = -1;
  Type declared = Type::dyn();
  Type current = Type::dyn();
};

class Checker {
 public:
  explicit Checker(const SurfaceProgram& p) : src_(p) {}

  CheckResult run() {
    prog_.env = build_env(src_, res_.diags);
    for (const auto& [n, c] : prog_.env.classes) classNames_.insert(n);
    build_classes();
    check_all_bodies();
    check_top_level();
    res_.program = std::move(prog_);
    return std::move(res_);
  }

 private:
  const SurfaceProgram& src_;
  ElabProgram prog_;
  CheckResult res_;
  std::set<std::string> classNames_;

  Type san(const Type& surface, int line) {
    return sanitize_type(retract(surface), classNames_, res_.diags, line);
  }

  struct FnCtx {
    bool untyped = false;
    Type retT = Type::dyn();
    std::map<std::string, LocalInfo> locals;
    std::set<std::string> assigned;
    int nextSlot = 0;
    std::vector<std::string> localNames;
    bool isModuleScope = false;
  };

  void diag(const std::string& code, const std::string& msg, int line, int col) {
    res_.diags.push_back({code, msg, line, col});
  }

  const TypeEnv& env() const { return prog_.env; }
  const ClassHierarchy& hier() const { return prog_.env.hier; }

  // -- class tables, override checks, function skeletons --

  void build_classes() {
    // Free function skeletons first so Call sites can resolve indices.
    for (const StmtPtr& s : src_.stmts) {
      if (s->kind != StmtKind::FuncDef) continue;
      if (!env().funcs.count(s->name)) continue;
      const FuncSig& sig = env().funcs.at(s->name);
      ElabFunction f;
      f.name = s->name;
      f.nparams = 1;
      f.isTyped = sig.isTyped;
      f.retT = sig.retT;
      if (!sig.paramT.isDyn()) f.checkArgs.push_back({0, sig.paramT});
      prog_.funcIndex[s->name] = (int)prog_.functions.size();
      prog_.functions.push_back(std::move(f));
    }
    for (const StmtPtr& s : src_.stmts) {
      if (s->kind != StmtKind::ClassDef) continue;
      if (!env().classes.count(s->name)) continue;  // earlier build_env error
      build_class(*s);
    }
  }

  // Nearest ancestor declaration of `name` in a non-dynamic class; falls
  // back to the nearest declaration of any kind.
  const MethodSig* governing_sig(const std::string& startClass, const std::string& name) const {
    const MethodSig* nearest = nullptr;
    std::string cur = startClass;
    while (cur != "object") {
      auto it = env().classes.find(cur);
      if (it == env().classes.end()) break;
      auto mit = it->second.methods.find(name);
      if (mit != it->second.methods.end()) {
        if (!nearest) nearest = &mit->second;
        if (!it->second.dynamicFlag) return &mit->second;
      }
      cur = it->second.parent;
    }
    return nearest;
  }

  bool governing_is_precise(const std::string& startClass, const std::string& name) const {
    std::string cur = startClass;
    while (cur != "object") {
      auto it = env().classes.find(cur);
      if (it == env().classes.end()) break;
      if (!it->second.dynamicFlag && it->second.methods.count(name)) return true;
      cur = it->second.parent;
    }
    return false;
  }

  void build_class(const Stmt& s) {
    const ClassSig& sig = env().classes.at(s.name);
    ElabClass ec;
    ec.name = s.name;
    ec.parent = s.parent;
    ec.dynamicFlag = sig.dynamicFlag;
    ec.fields = env().flat_fields(s.name);
    for (const auto& f : ec.fields)
      if (f.name == sig.fieldName) ec.ownFieldSlot = f.slot;

    // Field shadowing must preserve the slot's type: slots are shared
    // across the subtree and reads through ancestor-typed receivers rely
    // on the declared type.
    if (s.parent != "object") {
      TypeEnv::FieldInfo inherited;
      if (env().find_field(s.parent, sig.fieldName, inherited) && inherited.type != sig.fieldT) {
        diag("E-INCOMPAT-OVERRIDE",
             "field '" + sig.fieldName + "' in '" + s.name +
                 "' changes the inherited type " + to_string(inherited.type),
             s.line, 1);
      }
      ec.vtable = prog_.classes[prog_.classIndex.at(s.parent)].vtable;
    }

    // Field and method names share the dynamic attribute namespace; a
    // collision anywhere in the chain would make `o.name` ambiguous.
    if (env().find_method(s.name, sig.fieldName)) {
      diag("E-DUP-NAME",
           "'" + sig.fieldName + "' in '" + s.name + "' is both a field and a method",
           s.line, 1);
    }
    for (const std::string& mname : sig.methodOrder) {
      if (mname == sig.fieldName) continue;  // reported above
      TypeEnv::FieldInfo clash;
      if (env().find_field(s.name, mname, clash)) {
        diag("E-DUP-NAME",
             "'" + mname + "' in '" + s.name + "' is both a field and a method", s.line, 1);
      }
    }

    int newNames = 0;
    for (const std::string& mname : sig.methodOrder) {
      const MethodSig& ms = sig.methods.at(mname);
      int funcIdx = (int)prog_.functions.size();
      {
        ElabFunction f;
        f.name = s.name + "." + mname;
        f.isMethod = true;
        f.className = s.name;
        f.methodHasParam = ms.hasParam;
        f.nparams = ms.hasParam ? 2 : 1;
        f.isTyped = !sig.dynamicFlag && !(ms.paramT.isDyn() && ms.retT.isDyn());
        f.retT = ms.retT;
        if (ms.hasParam && !ms.paramT.isDyn()) f.checkArgs.push_back({1, ms.paramT});
        prog_.functions.push_back(std::move(f));
      }

      int slotIdx = -1;
      for (size_t k = 0; k < ec.vtable.size(); ++k)
        if (ec.vtable[k].methodName == mname) slotIdx = (int)k;

      if (slotIdx < 0) {
        ++newNames;
        VtableSlot slot;
        slot.methodName = mname;
        slot.funcIndex = funcIdx;
        ec.vtable.push_back(slot);
        continue;
      }

      const MethodSig* gov = governing_sig(s.parent, mname);
      bool govPrecise = governing_is_precise(s.parent, mname);
      VtableSlot& slot = ec.vtable[slotIdx];
      slot.funcIndex = funcIdx;
      slot.wrapperNeeded = false;
      if (sig.dynamicFlag) {
        if (gov && govPrecise && !gov->retT.isDyn()) {
          slot.wrapperNeeded = true;
          slot.wrapperRetT = gov->retT;
        }
        continue;
      }
      if (!gov) continue;
      if (gov->hasParam != ms.hasParam) {
        diag("E-INCOMPAT-OVERRIDE",
             "override '" + mname + "' in '" + s.name + "' changes the method arity", s.line, 1);
        continue;
      }
      // Return position: covariant, Dyn may not replace a precise type.
      if (!gov->retT.isDyn() && ms.retT.isDyn()) {
        diag("E-IMPRECISE-OVERRIDE",
             "override '" + mname + "' in '" + s.name + "': dyn cannot override " +
                 to_string(gov->retT),
             s.line, 1);
      } else if (!is_subtype(hier(), ms.retT, gov->retT)) {
        diag("E-INCOMPAT-OVERRIDE",
             "override '" + mname + "' in '" + s.name + "': return type " +
                 to_string(ms.retT) + " is not a subtype of " + to_string(gov->retT),
             s.line, 1);
      }
      // Parameter position: contravariant, same Dyn restriction.
      if (ms.hasParam) {
        if (!gov->paramT.isDyn() && ms.paramT.isDyn()) {
          diag("E-IMPRECISE-OVERRIDE",
               "override '" + mname + "' in '" + s.name + "': dyn cannot override " +
                   to_string(gov->paramT),
               s.line, 1);
        } else if (!is_subtype(hier(), gov->paramT, ms.paramT)) {
          diag("E-INCOMPAT-OVERRIDE",
               "override '" + mname + "' in '" + s.name + "': parameter type " +
                   to_string(ms.paramT) + " does not accept " + to_string(gov->paramT),
               s.line, 1);
        }
      }
    }
    if (newNames > 1)
      diag("E-SYNTAX", "class '" + s.name + "' introduces more than one new method name",
           s.line, 1);

    prog_.classIndex[s.name] = (int)prog_.classes.size();
    prog_.classes.push_back(std::move(ec));
  }

  // -- expressions --

  ElabPtr make_cast(Type target, ElabPtr inner) {
    auto c = std::make_shared<ElabExpr>();
    c->isCast = true;
    c->type = std::move(target);
    c->args.push_back(std::move(inner));
    return c;
  }

  ElabPtr elab_node(ExprKind k, Type t) {
    auto e = std::make_shared<ElabExpr>();
    e->kind = k;
    e->type = std::move(t);
    return e;
  }

  // Elaborates `e` where the context expects `expected`, applying exactly
  // one coercion. actualOut receives the pre-coercion type.
  ElabPtr elab_at(const Expr& e, const Type& expected, FnCtx& fn, Type* actualOut = nullptr) {
    auto [t, el] = synth(e, fn);
    if (actualOut) *actualOut = t;
    switch (coerce(hier(), t, expected)) {
      case CoercionDecision::Accept:
        return el;
      case CoercionDecision::InsertCast:
        return make_cast(expected, el);
      case CoercionDecision::Reject:
        diag("E-TYPE-MISMATCH",
             "expected " + to_string(expected) + ", got " + to_string(t), e.line, e.col);
        return el;
    }
    return el;
  }

  CallKind classify_call(const Type& actual, const Type& paramT) {
    bool strict = false;
    try {
      strict = is_subtype(hier(), actual, paramT);
    } catch (const UnknownClassError&) {
      strict = false;
    }
    return strict ? CallKind::StaticStrict : CallKind::StaticLenient;
  }

  std::pair<Type, ElabPtr> synth(const Expr& e, FnCtx& fn) {
    switch (e.kind) {
      case ExprKind::NoneLit: return {Type::none(), elab_node(e.kind, Type::none())};
      case ExprKind::IntLit: {
        ElabPtr el = elab_node(e.kind, Type::intT());
        el->intVal = e.intVal;
        return {Type::intT(), el};
      }
      case ExprKind::BoolLit: {
        ElabPtr el = elab_node(e.kind, Type::boolT());
        el->boolVal = e.boolVal;
        return {Type::boolT(), el};
      }
      case ExprKind::StrLit: {
        ElabPtr el = elab_node(e.kind, Type::strT());
        el->strVal = e.strVal;
        return {Type::strT(), el};
      }
      case ExprKind::Var: return synth_var(e, fn);
      case ExprKind::Call: return synth_call(e, fn);
      case ExprKind::New: return synth_new(e, fn);
      case ExprKind::DictLit: {
        ElabPtr el = elab_node(e.kind, Type::dict());
        for (const ExprPtr& c : e.args) el->args.push_back(synth(*c, fn).second);
        return {Type::dict(), el};
      }
      case ExprKind::ChkDictLit: {
        Type k = san(e.keyAnn, e.line);
        Type v = san(e.valAnn, e.line);
        Type t = Type::checkedDict(k, v);
        ElabPtr el = elab_node(e.kind, t);
        el->keyT = k;
        el->valT = v;
        for (size_t i = 0; i + 1 < e.args.size(); i += 2) {
          el->args.push_back(elab_at(*e.args[i], k, fn));
          el->args.push_back(elab_at(*e.args[i + 1], v, fn));
        }
        return {t, el};
      }
      case ExprKind::Subscript: return synth_subscript(e, fn, /*isSet=*/false);
      case ExprKind::SubscriptSet: return synth_subscript(e, fn, /*isSet=*/true);
      case ExprKind::FieldGet: return synth_field(e, fn, /*isSet=*/false);
      case ExprKind::FieldSet: return synth_field(e, fn, /*isSet=*/true);
      case ExprKind::MethodCall: return synth_method_call(e, fn);
      case ExprKind::IsNone:
      case ExprKind::Not: {
        ElabPtr el = elab_node(e.kind, Type::boolT());
        el->args.push_back(synth(*e.args[0], fn).second);
        return {Type::boolT(), el};
      }
      case ExprKind::Eq: {
        ElabPtr el = elab_node(e.kind, Type::boolT());
        el->args.push_back(synth(*e.args[0], fn).second);
        el->args.push_back(synth(*e.args[1], fn).second);
        return {Type::boolT(), el};
      }
    }
    return {Type::dyn(), elab_node(ExprKind::NoneLit, Type::dyn())};
  }

  std::pair<Type, ElabPtr> synth_var(const Expr& e, FnCtx& fn) {
    auto it = fn.locals.find(e.name);
    if (it != fn.locals.end()) {
      if (!fn.assigned.count(e.name)) {
        diag("E-SYNTAX", "local '" + e.name + "' may be used before assignment", e.line, e.col);
      }
      ElabPtr el = elab_node(ExprKind::Var, it->second.current);
      el->name = e.name;
      el->localSlot = it->second.slot;
      return {it->second.current, el};
    }
    auto vit = env().vars.find(e.name);
    if (vit != env().vars.end()) {
      Type t = fn.untyped ? Type::dyn() : vit->second;
      ElabPtr el = elab_node(ExprKind::Var, t);
      el->name = e.name;
      return {t, el};
    }
    if (env().funcs.count(e.name) || env().classes.count(e.name)) {
      // First-class references to functions and classes are dynamic.
      ElabPtr el = elab_node(ExprKind::Var, Type::dyn());
      el->name = e.name;
      return {Type::dyn(), el};
    }
    diag("E-UNKNOWN-FUNCTION", "unknown name '" + e.name + "'", e.line, e.col);
    return {Type::dyn(), elab_node(ExprKind::NoneLit, Type::dyn())};
  }

  std::pair<Type, ElabPtr> synth_call(const Expr& e, FnCtx& fn) {
    ElabPtr el = elab_node(ExprKind::Call, Type::dyn());
    el->name = e.name;

    // Local binding shadows globals; its value is called dynamically.
    auto lit = fn.locals.find(e.name);
    if (lit != fn.locals.end()) {
      const Type& lt = lit->second.current;
      if (!lt.isDyn()) {
        diag("E-TYPE-MISMATCH", "value of type " + to_string(lt) + " is not callable",
             e.line, e.col);
      }
      if (e.args.empty()) {
        diag("E-ARITY", "call to '" + e.name + "' needs one argument", e.line, e.col);
      }
      el->localSlot = lit->second.slot;
      el->callKind = CallKind::Dynamic;
      if (!e.args.empty()) el->args.push_back(synth(*e.args[0], fn).second);
      return {Type::dyn(), el};
    }

    auto fit = env().funcs.find(e.name);
    if (fit != env().funcs.end() && !fn.untyped) {
      const FuncSig& sig = fit->second;
      if (e.args.empty()) {
        diag("E-ARITY", "call to '" + e.name + "' needs one argument", e.line, e.col);
        el->callKind = sig.isTyped ? CallKind::StaticLenient : CallKind::Dynamic;
        el->type = sig.isTyped ? sig.retT : Type::dyn();
        return {el->type, el};
      }
      if (!sig.isTyped) {
        el->callKind = CallKind::Dynamic;
        el->args.push_back(synth(*e.args[0], fn).second);
        return {Type::dyn(), el};
      }
      Type actual;
      ElabPtr arg = elab_at(*e.args[0], sig.paramT, fn, &actual);
      el->callKind = classify_call(actual, sig.paramT);
      el->args.push_back(arg);
      el->type = sig.retT;
      return {sig.retT, el};
    }

    bool known = fit != env().funcs.end() || env().vars.count(e.name) ||
                 env().classes.count(e.name);
    if (!known) {
      diag("E-UNKNOWN-FUNCTION", "unknown function '" + e.name + "'", e.line, e.col);
      return {Type::dyn(), el};
    }
    if (!fn.untyped) {
      auto vit = env().vars.find(e.name);
      if (vit != env().vars.end() && !vit->second.isDyn()) {
        diag("E-TYPE-MISMATCH",
             "value of type " + to_string(vit->second) + " is not callable", e.line, e.col);
      }
    }
    el->callKind = CallKind::Dynamic;
    if (!e.args.empty())
      el->args.push_back(synth(*e.args[0], fn).second);
    else
      diag("E-ARITY", "call to '" + e.name + "' needs one argument", e.line, e.col);
    return {Type::dyn(), el};
  }

  std::pair<Type, ElabPtr> synth_new(const Expr& e, FnCtx& fn) {
    auto cit = env().classes.find(e.name);
    if (cit == env().classes.end()) {
      diag("E-UNKNOWN-CLASS", "unknown class '" + e.name + "'", e.line, e.col);
      return {Type::dyn(), elab_node(ExprKind::NoneLit, Type::dyn())};
    }
    Type t = Type::cls(e.name);
    ElabPtr el = elab_node(ExprKind::New, t);
    el->name = e.name;
    el->ownerClass = e.name;
    if (!e.args.empty()) el->args.push_back(elab_at(*e.args[0], cit->second.fieldT, fn));
    return {t, el};
  }

  std::pair<Type, ElabPtr> synth_subscript(const Expr& e, FnCtx& fn, bool isSet) {
    auto [rt, rel] = synth(*e.args[0], fn);
    ElabPtr el = elab_node(e.kind, Type::dyn());
    el->args.push_back(rel);
    Type result = isSet ? Type::none() : Type::dyn();
    if (rt.kind == TypeKind::DictT) {
      el->recv = RecvKind::DictR;
      el->args.push_back(synth(*e.args[1], fn).second);
      if (isSet) el->args.push_back(synth(*e.args[2], fn).second);
    } else if (rt.kind == TypeKind::CheckedDictT) {
      el->recv = RecvKind::CheckedR;
      el->args.push_back(elab_at(*e.args[1], rt.args[0], fn));
      if (isSet)
        el->args.push_back(elab_at(*e.args[2], rt.args[1], fn));
      else
        result = rt.args[1];
    } else if (rt.isDyn()) {
      el->recv = RecvKind::DynR;
      el->args.push_back(synth(*e.args[1], fn).second);
      if (isSet) el->args.push_back(synth(*e.args[2], fn).second);
    } else {
      diag("E-TYPE-MISMATCH", "value of type " + to_string(rt) + " is not subscriptable",
           e.line, e.col);
      el->recv = RecvKind::DynR;
      el->args.push_back(synth(*e.args[1], fn).second);
      if (isSet) el->args.push_back(synth(*e.args[2], fn).second);
    }
    el->type = result;
    return {result, el};
  }

  std::pair<Type, ElabPtr> synth_field(const Expr& e, FnCtx& fn, bool isSet) {
    auto [rt, rel] = synth(*e.args[0], fn);
    ElabPtr el = elab_node(e.kind, Type::dyn());
    el->name = e.name;
    el->args.push_back(rel);
    Type result = isSet ? Type::none() : Type::dyn();
    if (rt.kind == TypeKind::ClassT && env().classes.count(rt.className)) {
      TypeEnv::FieldInfo f;
      if (!env().find_field(rt.className, e.name, f)) {
        diag("E-UNKNOWN-MEMBER",
             "class '" + rt.className + "' has no field '" + e.name + "'", e.line, e.col);
        return {result, el};
      }
      el->ownerClass = rt.className;
      el->slot = f.slot;
      if (isSet)
        el->args.push_back(elab_at(*e.args[1], f.type, fn));
      else
        result = f.type;
    } else if (rt.isDyn()) {
      if (isSet) el->args.push_back(synth(*e.args[1], fn).second);
    } else {
      diag("E-UNKNOWN-MEMBER",
           "value of type " + to_string(rt) + " has no attribute '" + e.name + "'",
           e.line, e.col);
      if (isSet) el->args.push_back(synth(*e.args[1], fn).second);
    }
    el->type = result;
    return {result, el};
  }

  std::pair<Type, ElabPtr> synth_method_call(const Expr& e, FnCtx& fn) {
    auto [rt, rel] = synth(*e.args[0], fn);
    ElabPtr el = elab_node(ExprKind::MethodCall, Type::dyn());
    el->name = e.name;
    el->args.push_back(rel);
    bool hasArg = e.args.size() > 1;
    if (rt.kind == TypeKind::ClassT && env().classes.count(rt.className)) {
      const MethodSig* sig = env().find_method(rt.className, e.name);
      if (!sig) {
        diag("E-UNKNOWN-MEMBER",
             "class '" + rt.className + "' has no method '" + e.name + "'", e.line, e.col);
        if (hasArg) el->args.push_back(synth(*e.args[1], fn).second);
        return {Type::dyn(), el};
      }
      if (sig->hasParam != hasArg) {
        diag("E-ARITY", "method '" + e.name + "' takes " +
                            std::string(sig->hasParam ? "one argument" : "no arguments"),
             e.line, e.col);
        if (hasArg) el->args.push_back(synth(*e.args[1], fn).second);
        el->type = sig->retT;
        return {sig->retT, el};
      }
      el->ownerClass = rt.className;
      el->slot = find_vtable_slot(rt.className, e.name);
      el->callKind = CallKind::StaticStrict;
      if (hasArg) {
        Type actual;
        el->args.push_back(elab_at(*e.args[1], sig->paramT, fn, &actual));
        el->callKind = classify_call(actual, sig->paramT);
      }
      el->type = sig->retT;
      return {sig->retT, el};
    }
    if (rt.isDyn()) {
      el->callKind = CallKind::Dynamic;
      if (hasArg) el->args.push_back(synth(*e.args[1], fn).second);
      return {Type::dyn(), el};
    }
    diag("E-UNKNOWN-MEMBER",
         "value of type " + to_string(rt) + " has no method '" + e.name + "'", e.line, e.col);
    if (hasArg) el->args.push_back(synth(*e.args[1], fn).second);
    return {Type::dyn(), el};
  }

  int find_vtable_slot(const std::string& cls, const std::string& mname) const {
    auto it = prog_.classIndex.find(cls);
    if (it == prog_.classIndex.end()) return -1;
    const ElabClass& ec = prog_.classes[it->second];
    for (size_t k = 0; k < ec.vtable.size(); ++k)
      if (ec.vtable[k].methodName == mname) return (int)k;
    return -1;
  }

  // -- statements --

  static bool has_lexical_break(const std::vector<StmtPtr>& body) {
    for (const StmtPtr& s : body) {
      if (s->kind == StmtKind::Break) return true;
      if (s->kind == StmtKind::If) {
        if (has_lexical_break(s->body) || has_lexical_break(s->orelse)) return true;
      }
      // A break inside a nested while binds to that loop.
    }
    return false;
  }

  void reset_narrowing(FnCtx& fn) {
    for (auto& [name, info] : fn.locals) info.current = info.declared;
  }

  // Returns true when control may fall through past the block.
  bool check_block(const std::vector<StmtPtr>& stmts, std::vector<ElabStmtPtr>& out, FnCtx& fn) {
    bool falls = true;
    for (size_t idx = 0; idx < stmts.size(); ++idx) {
      const StmtPtr& s = stmts[idx];
      ElabStmtPtr es = std::make_shared<ElabStmt>();
      es->kind = s->kind;
      es->name = s->name;
      switch (s->kind) {
        case StmtKind::LocalDef: {
          Type declared;
          if (s->hasAnn) {
            declared = san(s->ann, s->line);
            es->expr = elab_at(*s->expr, declared, fn);
          } else {
            auto [t, el] = synth(*s->expr, fn);
            declared = t;
            es->expr = el;
          }
          LocalInfo info;
          auto it = fn.locals.find(s->name);
          if (it != fn.locals.end()) {
            info = it->second;  // branch-parallel redefinition keeps the slot
          } else {
            info.slot = fn.nextSlot++;
            fn.localNames.push_back(s->name);
          }
          info.declared = declared;
          info.current = declared;
          fn.locals[s->name] = info;
          fn.assigned.insert(s->name);
          es->localSlot = info.slot;
          break;
        }
        case StmtKind::Assign: {
          auto it = fn.locals.find(s->name);
          if (it != fn.locals.end()) {
            es->expr = elab_at(*s->expr, it->second.declared, fn);
            it->second.current = it->second.declared;
            fn.assigned.insert(s->name);
            es->localSlot = it->second.slot;
          } else if (env().vars.count(s->name)) {
            diag("E-IMMUTABLE-MODULE-VAR",
                 "module-level variable '" + s->name + "' cannot be mutated", s->line, s->col);
            es->expr = synth(*s->expr, fn).second;
          } else {
            diag("E-UNKNOWN-FUNCTION", "unknown name '" + s->name + "'", s->line, s->col);
            es->expr = synth(*s->expr, fn).second;
          }
          break;
        }
        case StmtKind::ExprStmt:
          es->expr = synth(*s->expr, fn).second;
          break;
        case StmtKind::If: {
          es->expr = synth(*s->expr, fn).second;
          std::map<std::string, Type> cur;
          for (auto& [n, i] : fn.locals) cur[n] = i.current;
          NarrowResult nr = narrow(cur, *s->expr);

          std::set<std::string> baseAssigned = fn.assigned;
          for (auto& [n, t] : nr.thenTypes) fn.locals[n].current = t;
          bool thenFalls = check_block(s->body, es->body, fn);
          std::set<std::string> thenAssigned = fn.assigned;
          std::map<std::string, Type> thenCur;
          for (auto& [n, i] : fn.locals) thenCur[n] = i.current;

          fn.assigned = baseAssigned;
          for (auto& [n, i] : fn.locals) {
            auto cit = cur.find(n);
            i.current = cit != cur.end() ? cit->second : i.declared;
          }
          for (auto& [n, t] : nr.elseTypes) fn.locals[n].current = t;
          bool elseFalls = check_block(s->orelse, es->orelse, fn);
          std::set<std::string> elseAssigned = fn.assigned;

          // Join: definite assignment meets. Narrowing resets to the
          // declared type at a true join; if only one branch reaches this
          // point, its refinements survive.
          if (thenFalls && elseFalls) {
            fn.assigned.clear();
            std::set_intersection(thenAssigned.begin(), thenAssigned.end(),
                                  elseAssigned.begin(), elseAssigned.end(),
                                  std::inserter(fn.assigned, fn.assigned.begin()));
            reset_narrowing(fn);
          } else if (thenFalls) {
            fn.assigned = thenAssigned;
            for (auto& [n, i] : fn.locals) {
              auto tit = thenCur.find(n);
              i.current = tit != thenCur.end() ? tit->second : i.declared;
            }
          } else if (elseFalls) {
            fn.assigned = elseAssigned;  // locals already hold the else state
          } else {
            fn.assigned = baseAssigned;
            reset_narrowing(fn);
          }
          if (!thenFalls && !elseFalls) falls = false;
          break;
        }
        case StmtKind::While: {
          es->expr = synth(*s->expr, fn).second;
          bool isWhileTrue = s->expr->kind == ExprKind::BoolLit && s->expr->boolVal;
          es->whileTrueNoBreak = isWhileTrue && !has_lexical_break(s->body);
          std::map<std::string, Type> cur;
          for (auto& [n, i] : fn.locals) cur[n] = i.current;
          NarrowResult nr = narrow(cur, *s->expr);
          for (auto& [n, t] : nr.thenTypes) fn.locals[n].current = t;
          std::set<std::string> baseAssigned = fn.assigned;
          check_block(s->body, es->body, fn);
          fn.assigned = baseAssigned;  // body may not execute
          reset_narrowing(fn);
          if (es->whileTrueNoBreak) falls = false;
          break;
        }
        case StmtKind::Break:
          falls = false;
          break;
        case StmtKind::Pass:
          break;
        case StmtKind::Return: {
          if (s->hasExpr) {
            es->expr = elab_at(*s->expr, fn.retT, fn);
            es->hasExpr = true;
          } else if (coerce(hier(), Type::none(), fn.retT) == CoercionDecision::Reject) {
            diag("E-TYPE-MISMATCH",
                 "bare return in a function returning " + to_string(fn.retT), s->line, s->col);
          }
          falls = false;
          break;
        }
        default:
          diag("E-SYNTAX", "statement not allowed here", s->line, s->col);
          break;
      }
      out.push_back(es);
      if (!falls) {
        // Remaining statements are unreachable; keep checking them but the
        // block as a whole does not fall through.
        for (size_t rest = idx + 1; rest < stmts.size(); ++rest) {
          std::vector<ElabStmtPtr> dead;
          std::vector<StmtPtr> one{stmts[rest]};
          check_block(one, dead, fn);
          for (auto& d : dead) out.push_back(d);
        }
        return false;
      }
    }
    return falls;
  }

  void check_function_body(ElabFunction& f, const Param* param, const Type& paramT,
                           const std::vector<StmtPtr>& body, bool untypedCtx, int defLine) {
    FnCtx fn;
    fn.untyped = untypedCtx;
    fn.retT = f.retT;
    fn.nextSlot = 0;
    if (f.isMethod) {
      LocalInfo self;
      self.slot = fn.nextSlot++;
      self.declared = self.current = untypedCtx ? Type::dyn() : Type::cls(f.className);
      fn.locals["self"] = self;
      fn.assigned.insert("self");
      fn.localNames.push_back("self");
    }
    if (param) {
      LocalInfo p;
      p.slot = fn.nextSlot++;
      p.declared = p.current = untypedCtx ? Type::dyn() : paramT;
      fn.locals[param->name] = p;
      fn.assigned.insert(param->name);
      fn.localNames.push_back(param->name);
    }
    bool falls = check_block(body, f.body, fn);
    if (falls && coerce(hier(), Type::none(), fn.retT) == CoercionDecision::Reject) {
      diag("E-IMPLICIT-NONE-RETURN",
           "function '" + f.name + "' can fall off the end but must return " +
               to_string(fn.retT),
           defLine, 1);
    }
    f.nlocals = fn.nextSlot;
    f.localNames = fn.localNames;
  }

  void check_all_bodies() {
    for (const StmtPtr& s : src_.stmts) {
      if (s->kind == StmtKind::FuncDef) {
        auto it = prog_.funcIndex.find(s->name);
        if (it == prog_.funcIndex.end()) continue;
        ElabFunction& f = prog_.functions[it->second];
        check_function_body(f, &s->param, env().funcs.at(s->name).paramT, s->body,
                            /*untyped=*/!f.isTyped, s->line);
      } else if (s->kind == StmtKind::ClassDef) {
        auto cit = prog_.classIndex.find(s->name);
        if (cit == prog_.classIndex.end()) continue;
        ElabClass& ec = prog_.classes[cit->second];
        const ClassSig& sig = env().classes.at(s->name);
        // Field default is evaluated at instantiation time; typecheck it in
        // module scope against the declared field type.
        {
          FnCtx modCtx;
          modCtx.isModuleScope = true;
          ec.ownDefault = elab_at(*s->fieldDefault, sig.fieldT, modCtx);
        }
        for (const MethodDef& m : s->methods) {
          const std::string fullName = s->name + "." + m.name;
          for (ElabFunction& f : prog_.functions) {
            if (f.name == fullName && f.isMethod && f.className == s->name) {
              auto mit = sig.methods.find(m.name);
              Type pT = mit != sig.methods.end() ? mit->second.paramT : Type::dyn();
              check_function_body(f, m.hasParam ? &m.param : nullptr, pT, m.body,
                                  /*untyped=*/sig.dynamicFlag, m.line);
              break;
            }
          }
        }
      }
    }
  }

  void check_top_level() {
    FnCtx modCtx;
    modCtx.isModuleScope = true;
    for (const StmtPtr& s : src_.stmts) {
      if (s->kind == StmtKind::VarDef) {
        ElabStmtPtr es = std::make_shared<ElabStmt>();
        es->kind = StmtKind::VarDef;
        es->name = s->name;
        es->expr = elab_at(*s->expr, env().vars.at(s->name), modCtx);
        prog_.top.push_back(es);
      } else if (s->kind == StmtKind::ExprStmt) {
        ElabStmtPtr es = std::make_shared<ElabStmt>();
        es->kind = StmtKind::ExprStmt;
        es->expr = synth(*s->expr, modCtx).second;
        prog_.top.push_back(es);
      }
    }
  }
};

}  // namespace

CheckResult check_program(const SurfaceProgram& p) { return Checker(p).run(); }

// ---- IR inspection helpers ----

namespace {

void count_expr_casts(const ElabPtr& e, int& n, bool& ok) {
  if (!e) return;
  if (e->isCast) {
    ++n;
    if (!e->args[0]->type.isDyn() || e->type.isDyn()) ok = false;
  }
  for (const ElabPtr& c : e->args) count_expr_casts(c, n, ok);
}

void count_block_casts(const std::vector<ElabStmtPtr>& body, int& n, bool& ok) {
  for (const ElabStmtPtr& s : body) {
    count_expr_casts(s->expr, n, ok);
    count_block_casts(s->body, n, ok);
    count_block_casts(s->orelse, n, ok);
  }
}

void scan(const ElabProgram& p, int& n, bool& ok) {
  for (const ElabFunction& f : p.functions) count_block_casts(f.body, n, ok);
  for (const ElabClass& c : p.classes) count_expr_casts(c.ownDefault, n, ok);
  count_block_casts(p.top, n, ok);
}

}  // namespace

int count_casts(const ElabProgram& p) {
  int n = 0;
  bool ok = true;
  scan(p, n, ok);
  return n;
}

bool verify_cast_nodes(const ElabProgram& p) {
  int n = 0;
  bool ok = true;
  scan(p, n, ok);
  return ok;
}

}  // namespace gsp
