#include "gsp/vm.hpp"

#include <stdexcept>

namespace gsp {

// ---- compilation ----

namespace {

class Compiler {
 public:
  explicit Compiler(const ElabProgram& p) : p_(p) {}

  BytecodeModule run() {
    build_class_table();
    m_.funcIds = p_.funcIndex;
    m_.classIds = p_.classIndex;
    // Constructor ids must be known before any body mentioning `New` is
    // compiled; constructors land right after the user functions.
    int userCount = (int)p_.functions.size();
    for (int c = 0; c < (int)p_.classes.size(); ++c)
      m_.ctorIds.push_back({userCount + 2 * c, userCount + 2 * c + 1});
    for (const ElabFunction& f : p_.functions) compile_function(f);
    for (size_t c = 0; c < p_.classes.size(); ++c) compile_ctors((int)c);
    compile_module();
    return std::move(m_);
  }

 private:
  const ElabProgram& p_;
  BytecodeModule m_;
  std::map<std::string, int> typeRefIds_;

  int type_ref(const Type& t) {
    std::string key = to_string(t);
    auto it = typeRefIds_.find(key);
    if (it != typeRefIds_.end()) return it->second;
    int id = (int)m_.typeRefs.size();
    m_.typeRefs.push_back(t);
    typeRefIds_.emplace(std::move(key), id);
    return id;
  }

  int const_idx(Value v) {
    m_.consts.push_back(std::move(v));
    return (int)m_.consts.size() - 1;
  }

  void build_class_table() {
    for (const ElabClass& ec : p_.classes) {
      RuntimeClass rc;
      rc.name = ec.name;
      rc.parentId = ec.parent == "object" ? -1 : p_.classIndex.at(ec.parent);
      for (const auto& f : ec.fields) {
        rc.fieldNames.push_back(f.name);
        rc.fieldTypes.push_back(f.type);
      }
      rc.ownFieldSlot = ec.ownFieldSlot;
      for (const VtableSlot& s : ec.vtable) {
        VtableEntry e;
        e.methodName = s.methodName;
        e.funcId = s.funcIndex;
        e.wrapper = s.wrapperNeeded;
        e.resultT = s.wrapperRetT;
        rc.vtable.push_back(std::move(e));
      }
      m_.classes.classes.push_back(std::move(rc));
    }
  }

  void emit(std::vector<Instr>& code, Op op, int a = 0, int b = 0, int c = 0, int d = 0,
            std::string name = {}) {
    Instr in;
    in.op = op;
    in.a = a;
    in.b = b;
    in.c = c;
    in.d = d;
    in.name = std::move(name);
    code.push_back(std::move(in));
  }

  // -- expressions --

  void expr(const ElabPtr& e, std::vector<Instr>& code) {
    if (e->isCast) {
      expr(e->args[0], code);
      emit(code, Op::CAST, type_ref(e->type));
      return;
    }
    switch (e->kind) {
      case ExprKind::NoneLit:
        emit(code, Op::LOAD_CONST, const_idx(Value::none()));
        break;
      case ExprKind::IntLit:
        emit(code, Op::LOAD_CONST, const_idx(Value::intv(e->intVal)));
        break;
      case ExprKind::BoolLit:
        emit(code, Op::LOAD_CONST, const_idx(Value::boolv(e->boolVal)));
        break;
      case ExprKind::StrLit:
        emit(code, Op::LOAD_CONST, const_idx(Value::str(e->strVal)));
        break;
      case ExprKind::Var:
        if (e->localSlot >= 0)
          emit(code, Op::LOAD_LOCAL, e->localSlot);
        else
          emit(code, Op::LOAD_GLOBAL, 0, 0, 0, 0, e->name);
        break;
      case ExprKind::Call: {
        if (e->callKind == CallKind::Dynamic) {
          if (e->localSlot >= 0) {
            emit(code, Op::LOAD_LOCAL, e->localSlot);
            for (const ElabPtr& a : e->args) expr(a, code);
            emit(code, Op::CALL_DYNAMIC, (int)e->args.size());
          } else {
            for (const ElabPtr& a : e->args) expr(a, code);
            emit(code, Op::CALL_DYNAMIC, (int)e->args.size(), 0, 0, 0, e->name);
          }
          break;
        }
        for (const ElabPtr& a : e->args) expr(a, code);
        int strict = e->callKind == CallKind::StaticStrict ? 1 : 0;
        emit(code, Op::INVOKE_FUNCTION, p_.funcIndex.at(e->name), 0, strict);
        break;
      }
      case ExprKind::New: {
        int classId = p_.classIndex.at(e->name);
        for (const ElabPtr& a : e->args) expr(a, code);
        // The caller-side coercion already guarantees the argument type, so
        // the constructor edge is strict.
        int ctor = e->args.empty() ? m_.ctorIds[(size_t)classId].first
                                   : m_.ctorIds[(size_t)classId].second;
        emit(code, Op::INVOKE_FUNCTION, ctor, 0, 1);
        break;
      }
      case ExprKind::DictLit:
        for (const ElabPtr& a : e->args) expr(a, code);
        emit(code, Op::BUILD_MAP, (int)e->args.size() / 2);
        break;
      case ExprKind::ChkDictLit:
        for (const ElabPtr& a : e->args) expr(a, code);
        emit(code, Op::BUILD_CHECKED_MAP, type_ref(Type::checkedDict(e->keyT, e->valT)),
             (int)e->args.size() / 2);
        break;
      case ExprKind::Subscript:
        expr(e->args[0], code);
        expr(e->args[1], code);
        emit(code, Op::DICT_GET);
        break;
      case ExprKind::SubscriptSet:
        expr(e->args[0], code);
        expr(e->args[1], code);
        expr(e->args[2], code);
        emit(code, e->recv == RecvKind::DynR ? Op::DICT_SET_GUARDED : Op::DICT_SET);
        break;
      case ExprKind::FieldGet:
        expr(e->args[0], code);
        if (e->ownerClass.empty())
          emit(code, Op::LOAD_ATTR_DYN, 0, 0, 0, 0, e->name);
        else
          emit(code, Op::LOAD_FIELD, p_.classIndex.at(e->ownerClass), e->slot);
        break;
      case ExprKind::FieldSet:
        expr(e->args[0], code);
        expr(e->args[1], code);
        if (e->ownerClass.empty())
          emit(code, Op::STORE_ATTR_DYN, 0, 0, 0, 0, e->name);
        else
          emit(code, Op::STORE_FIELD, p_.classIndex.at(e->ownerClass), e->slot);
        break;
      case ExprKind::MethodCall: {
        expr(e->args[0], code);
        if (e->ownerClass.empty() || e->slot < 0) {
          emit(code, Op::LOAD_ATTR_DYN, 0, 0, 0, 0, e->name);
          for (size_t i = 1; i < e->args.size(); ++i) expr(e->args[i], code);
          emit(code, Op::CALL_DYNAMIC, (int)e->args.size() - 1);
        } else {
          for (size_t i = 1; i < e->args.size(); ++i) expr(e->args[i], code);
          int strict = e->callKind == CallKind::StaticStrict ? 1 : 0;
          emit(code, Op::INVOKE_METHOD, e->slot, 0, strict, (int)e->args.size());
        }
        break;
      }
      case ExprKind::IsNone:
        expr(e->args[0], code);
        emit(code, Op::IS_NONE);
        break;
      case ExprKind::Not:
        expr(e->args[0], code);
        emit(code, Op::NOT);
        break;
      case ExprKind::Eq:
        expr(e->args[0], code);
        expr(e->args[1], code);
        emit(code, Op::EQ);
        break;
    }
  }

  // -- statements --

  void stmt(const ElabStmtPtr& s, std::vector<Instr>& code, std::vector<size_t>* breaks) {
    switch (s->kind) {
      case StmtKind::LocalDef:
      case StmtKind::Assign:
        expr(s->expr, code);
        emit(code, Op::STORE_LOCAL, s->localSlot);
        break;
      case StmtKind::ExprStmt:
        expr(s->expr, code);
        emit(code, Op::POP);
        break;
      case StmtKind::If: {
        expr(s->expr, code);
        size_t pjif = code.size();
        emit(code, Op::POP_JUMP_IF_FALSE);
        for (const ElabStmtPtr& c : s->body) stmt(c, code, breaks);
        size_t jend = code.size();
        emit(code, Op::JUMP);
        code[pjif].a = (int)code.size();
        for (const ElabStmtPtr& c : s->orelse) stmt(c, code, breaks);
        code[jend].a = (int)code.size();
        break;
      }
      case StmtKind::While: {
        size_t top = code.size();
        expr(s->expr, code);
        size_t pjif = code.size();
        emit(code, Op::POP_JUMP_IF_FALSE);
        std::vector<size_t> myBreaks;
        for (const ElabStmtPtr& c : s->body) stmt(c, code, &myBreaks);
        emit(code, Op::JUMP, (int)top);
        code[pjif].a = (int)code.size();
        for (size_t b : myBreaks) code[b].a = (int)code.size();
        break;
      }
      case StmtKind::Break:
        if (breaks) breaks->push_back(code.size());
        emit(code, Op::JUMP);
        break;
      case StmtKind::Pass:
        break;
      case StmtKind::Return:
        if (s->hasExpr)
          expr(s->expr, code);
        else
          emit(code, Op::LOAD_CONST, const_idx(Value::none()));
        emit(code, Op::RETURN_VALUE);
        break;
      default:
        throw std::logic_error("unexpected statement in function body");
    }
  }

  void compile_function(const ElabFunction& src) {
    BCFunction f;
    f.name = src.name;
    f.nParams = src.nparams;
    f.nLocals = src.nlocals;
    if (!src.checkArgs.empty()) {
      Instr in;
      in.op = Op::CHECK_ARGS;
      for (const auto& [slot, t] : src.checkArgs) in.checkArgs.push_back({slot, type_ref(t)});
      f.code.push_back(std::move(in));
    }
    f.fastEntry = (int)f.code.size();
    for (const ElabStmtPtr& s : src.body) stmt(s, f.code, nullptr);
    emit(f.code, Op::LOAD_CONST, const_idx(Value::none()));
    emit(f.code, Op::RETURN_VALUE);
    m_.functions.push_back(std::move(f));
  }

  // Two synthesized constructors per class: a zero-argument form using every
  // field default, and a one-argument form taking the declared field's value.
  // The one-argument form checks its input so dynamic construction stays
  // sound; typed `C(e)` sites enter past the check.
  void compile_ctors(int classId) {
    const ElabClass& ec = p_.classes[(size_t)classId];
    auto defaults_for = [&](int slot) -> const ElabPtr& {
      const std::string& declaring = ec.fields[(size_t)slot].declaringClass;
      return p_.classes[(size_t)p_.classIndex.at(declaring)].ownDefault;
    };
    if (m_.ctorIds[(size_t)classId].first != (int)m_.functions.size())
      throw std::logic_error("constructor id mismatch");
    {
      BCFunction f;
      f.name = ec.name + ".<new0>";
      f.nParams = 0;
      for (size_t i = 0; i < ec.fields.size(); ++i) expr(defaults_for((int)i), f.code);
      emit(f.code, Op::TP_ALLOC, classId);
      emit(f.code, Op::RETURN_VALUE);
      m_.functions.push_back(std::move(f));
    }
    {
      BCFunction f;
      f.name = ec.name + ".<new1>";
      f.nParams = 1;
      f.nLocals = 1;
      const Type& ownT = ec.fields[(size_t)ec.ownFieldSlot].type;
      if (!ownT.isDyn()) {
        Instr in;
        in.op = Op::CHECK_ARGS;
        in.checkArgs.push_back({0, type_ref(ownT)});
        f.code.push_back(std::move(in));
      }
      f.fastEntry = (int)f.code.size();
      for (size_t i = 0; i < ec.fields.size(); ++i) {
        if ((int)i == ec.ownFieldSlot)
          emit(f.code, Op::LOAD_LOCAL, 0);
        else
          expr(defaults_for((int)i), f.code);
      }
      emit(f.code, Op::TP_ALLOC, classId);
      emit(f.code, Op::RETURN_VALUE);
      m_.functions.push_back(std::move(f));
    }
  }

  void compile_module() {
    BCFunction f;
    f.name = "<module>";
    for (const ElabStmtPtr& s : p_.top) {
      if (s->kind == StmtKind::VarDef) {
        expr(s->expr, f.code);
        emit(f.code, Op::STORE_GLOBAL, 0, 0, 0, 0, s->name);
      } else {
        expr(s->expr, f.code);
        emit(f.code, Op::POP, 1);  // record the value as program output
      }
    }
    emit(f.code, Op::LOAD_CONST, const_idx(Value::none()));
    emit(f.code, Op::RETURN_VALUE);
    m_.moduleFunc = (int)m_.functions.size();
    m_.functions.push_back(std::move(f));
  }
};

}  // namespace

BytecodeModule compile(const ElabProgram& p) { return Compiler(p).run(); }

BytecodeModule optimize(const BytecodeModule& m) {
  BytecodeModule out = m;
  for (BCFunction& f : out.functions)
    for (Instr& in : f.code)
      if ((in.op == Op::INVOKE_FUNCTION || in.op == Op::INVOKE_METHOD) && in.c == 1)
        in.b = 1;
  return out;
}

// ---- execution ----

namespace {

struct Frame {
  int funcId = -1;
  size_t ip = 0;
  std::vector<Value> locals;
  std::vector<Value> stack;
  bool wrapper = false;
  Type wrapperRetT = Type::dyn();
};

constexpr size_t kMaxFrames = 1 << 16;

struct TimeoutSignal {};

class Interp {
 public:
  Interp(const BytecodeModule& m, TypeRegistry& reg, long long budget)
      : m_(m), reg_(reg), budget_(budget) {}

  ExecResult run() {
    for (const auto& [n, id] : m_.funcIds) globals_[n] = Value::func(id);
    for (const auto& [n, id] : m_.classIds) globals_[n] = Value::cls(id);
    push_frame(m_.moduleFunc, {}, /*fast=*/false, false, Type::dyn());
    try {
      loop();
    } catch (const RuntimeErr& e) {
      res_.status = ExecStatus::Error;
      res_.errKind = e.kind;
      res_.errMessage = e.message;
    } catch (const TimeoutSignal&) {
      res_.status = ExecStatus::Timeout;
    } catch (const std::exception& e) {
      res_.status = ExecStatus::Internal;
      res_.internalDetail = e.what();
    }
    return std::move(res_);
  }

 private:
  const BytecodeModule& m_;
  TypeRegistry& reg_;
  long long budget_;
  ExecResult res_;
  std::map<std::string, Value> globals_;
  std::vector<Frame> frames_;

  void push_frame(int funcId, std::vector<Value> args, bool fast, bool wrapper, Type wrapT) {
    if (frames_.size() >= kMaxFrames) throw TimeoutSignal{};
    const BCFunction& fn = m_.functions[(size_t)funcId];
    Frame f;
    f.funcId = funcId;
    f.ip = fast ? (size_t)fn.fastEntry : 0;
    f.locals.resize((size_t)std::max(fn.nLocals, fn.nParams));
    for (size_t i = 0; i < args.size() && i < f.locals.size(); ++i)
      f.locals[i] = std::move(args[i]);
    f.wrapper = wrapper;
    f.wrapperRetT = std::move(wrapT);
    frames_.push_back(std::move(f));
  }

  std::vector<Value> pop_n(std::vector<Value>& stack, size_t n) {
    if (stack.size() < n) throw std::logic_error("stack underflow");
    std::vector<Value> out(stack.end() - (long)n, stack.end());
    stack.resize(stack.size() - n);
    return out;
  }

  Value pop(std::vector<Value>& stack) {
    if (stack.empty()) throw std::logic_error("stack underflow");
    Value v = std::move(stack.back());
    stack.pop_back();
    return v;
  }

  // Dynamic invocation of any callable value; arity mismatches are
  // DynCallError (the dynamic analogue of a static E-ARITY).
  void call_value(const Value& callee, std::vector<Value> args) {
    switch (callee.kind) {
      case ValueKind::FuncV: {
        const BCFunction& fn = m_.functions[(size_t)callee.i];
        if ((int)args.size() != fn.nParams)
          throw RuntimeErr{ErrKind::DynCallError,
                           "'" + fn.name + "' takes " + std::to_string(fn.nParams) +
                               " argument(s), got " + std::to_string(args.size())};
        push_frame((int)callee.i, std::move(args), false, false, Type::dyn());
        return;
      }
      case ValueKind::ClassV: {
        const auto& [c0, c1] = m_.ctorIds[(size_t)callee.i];
        if (args.size() == 0) {
          push_frame(c0, {}, false, false, Type::dyn());
        } else if (args.size() == 1) {
          push_frame(c1, std::move(args), false, false, Type::dyn());
        } else {
          throw RuntimeErr{ErrKind::DynCallError,
                           "constructor takes at most one argument"};
        }
        return;
      }
      case ValueKind::BoundMethodV: {
        const RuntimeClass& rc = m_.classes.classes[(size_t)callee.obj->classId];
        const VtableEntry& e = rc.vtable[(size_t)callee.i];
        const BCFunction& fn = m_.functions[(size_t)e.funcId];
        std::vector<Value> full;
        Value self;
        self.kind = ValueKind::ObjectV;
        self.obj = callee.obj;
        full.push_back(std::move(self));
        for (Value& a : args) full.push_back(std::move(a));
        if ((int)full.size() != fn.nParams)
          throw RuntimeErr{ErrKind::DynCallError,
                           "'" + fn.name + "' takes " + std::to_string(fn.nParams - 1) +
                               " argument(s), got " + std::to_string(args.size())};
        push_frame(e.funcId, std::move(full), false, e.wrapper, e.resultT);
        return;
      }
      default:
        throw RuntimeErr{ErrKind::DynCallError,
                         value_kind_name(callee) + " is not callable"};
    }
  }

  void require_instance(const Value& v, int classId, const char* what) {
    if (v.kind != ValueKind::ObjectV || !m_.classes.is_descendant(v.obj->classId, classId))
      throw std::logic_error(std::string(what) + ": receiver is not an instance of " +
                             m_.classes.classes[(size_t)classId].name);
  }

  void loop() {
    while (!frames_.empty()) {
      Frame& f = frames_.back();
      const BCFunction& fn = m_.functions[(size_t)f.funcId];
      if (f.ip >= fn.code.size()) throw std::logic_error("instruction pointer out of range");
      const Instr& in = fn.code[f.ip++];
      if (--budget_ < 0) throw TimeoutSignal{};
      Metrics& mx = res_.metrics;
      switch (in.op) {
        case Op::LOAD_CONST:
          f.stack.push_back(m_.consts[(size_t)in.a]);
          break;
        case Op::LOAD_LOCAL:
          f.stack.push_back(f.locals[(size_t)in.a]);
          break;
        case Op::STORE_LOCAL:
          f.locals[(size_t)in.a] = pop(f.stack);
          break;
        case Op::LOAD_GLOBAL: {
          auto it = globals_.find(in.name);
          if (it == globals_.end())
            throw RuntimeErr{ErrKind::AttributeError,
                             "name '" + in.name + "' is not defined"};
          f.stack.push_back(it->second);
          break;
        }
        case Op::STORE_GLOBAL:
          globals_[in.name] = pop(f.stack);
          break;
        case Op::CAST: {
          ++mx.casts_executed;
          Value v = pop(f.stack);
          f.stack.push_back(cast_value(m_.classes, reg_, v, m_.typeRefs[(size_t)in.a]));
          break;
        }
        case Op::CHECK_ARGS:
          ++mx.check_args_executed;
          for (const auto& [slot, tref] : in.checkArgs) {
            ++mx.arg_casts_executed;
            cast_value(m_.classes, reg_, f.locals[(size_t)slot], m_.typeRefs[(size_t)tref]);
          }
          break;
        case Op::BUILD_MAP: {
          std::vector<Value> flat = pop_n(f.stack, (size_t)in.a * 2);
          Value d = Value::emptyDict();
          for (size_t i = 0; i + 1 < flat.size(); i += 2) d.dict->set(flat[i], flat[i + 1]);
          f.stack.push_back(std::move(d));
          break;
        }
        case Op::BUILD_CHECKED_MAP: {
          std::vector<Value> flat = pop_n(f.stack, (size_t)in.b * 2);
          std::vector<std::pair<Value, Value>> seed;
          for (size_t i = 0; i + 1 < flat.size(); i += 2)
            seed.emplace_back(std::move(flat[i]), std::move(flat[i + 1]));
          const Type& t = m_.typeRefs[(size_t)in.a];
          f.stack.push_back(checked_dict_new(m_.classes, reg_, t.args[0], t.args[1], seed,
                                             &mx.element_casts));
          break;
        }
        case Op::TP_ALLOC: {
          const RuntimeClass& rc = m_.classes.classes[(size_t)in.a];
          std::vector<Value> fields = pop_n(f.stack, rc.fieldNames.size());
          Value v;
          v.kind = ValueKind::ObjectV;
          v.obj = std::make_shared<ObjectData>();
          v.obj->classId = in.a;
          v.obj->fields = std::move(fields);
          f.stack.push_back(std::move(v));
          break;
        }
        case Op::INVOKE_FUNCTION: {
          ++mx.direct_calls;
          const BCFunction& target = m_.functions[(size_t)in.a];
          std::vector<Value> args = pop_n(f.stack, (size_t)target.nParams);
          push_frame(in.a, std::move(args), in.b == 1, false, Type::dyn());
          break;
        }
        case Op::INVOKE_METHOD: {
          ++mx.vtable_calls;
          std::vector<Value> args = pop_n(f.stack, (size_t)in.d);
          const Value& self = args[0];
          if (self.kind != ValueKind::ObjectV)
            throw std::logic_error("INVOKE_METHOD: receiver is not an object");
          const RuntimeClass& rc = m_.classes.classes[(size_t)self.obj->classId];
          const VtableEntry& e = rc.vtable[(size_t)in.a];
          const BCFunction& target = m_.functions[(size_t)e.funcId];
          if ((int)args.size() != target.nParams)
            throw RuntimeErr{ErrKind::DynCallError,
                             "'" + target.name + "' takes " +
                                 std::to_string(target.nParams - 1) + " argument(s), got " +
                                 std::to_string(args.size() - 1)};
          push_frame(e.funcId, std::move(args), in.b == 1, e.wrapper, e.resultT);
          break;
        }
        case Op::CALL_DYNAMIC: {
          ++mx.dynamic_calls;
          std::vector<Value> args = pop_n(f.stack, (size_t)in.a);
          Value callee;
          if (in.name.empty()) {
            callee = pop(f.stack);
          } else {
            auto it = globals_.find(in.name);
            if (it == globals_.end())
              throw RuntimeErr{ErrKind::AttributeError,
                               "name '" + in.name + "' is not defined"};
            callee = it->second;
          }
          call_value(callee, std::move(args));
          break;
        }
        case Op::DICT_GET: {
          Value k = pop(f.stack);
          Value d = pop(f.stack);
          f.stack.push_back(dict_get(d, k));
          break;
        }
        case Op::DICT_SET: {
          Value v = pop(f.stack);
          Value k = pop(f.stack);
          Value d = pop(f.stack);
          dict_set(d, k, v);
          f.stack.push_back(Value::none());
          break;
        }
        case Op::DICT_SET_GUARDED: {
          Value v = pop(f.stack);
          Value k = pop(f.stack);
          Value d = pop(f.stack);
          dict_set_guarded(m_.classes, reg_, d, k, v, &mx.element_casts);
          f.stack.push_back(Value::none());
          break;
        }
        case Op::LOAD_FIELD: {
          Value recv = pop(f.stack);
          require_instance(recv, in.a, "LOAD_FIELD");
          f.stack.push_back(recv.obj->fields[(size_t)in.b]);
          break;
        }
        case Op::STORE_FIELD: {
          Value v = pop(f.stack);
          Value recv = pop(f.stack);
          require_instance(recv, in.a, "STORE_FIELD");
          recv.obj->fields[(size_t)in.b] = std::move(v);
          f.stack.push_back(Value::none());
          break;
        }
        case Op::LOAD_ATTR_DYN: {
          Value recv = pop(f.stack);
          if (recv.kind != ValueKind::ObjectV)
            throw RuntimeErr{ErrKind::AttributeError,
                             value_kind_name(recv) + " has no attribute '" + in.name + "'"};
          int classId = recv.obj->classId;
          int fslot = m_.classes.field_slot(classId, in.name);
          if (fslot >= 0) {
            f.stack.push_back(recv.obj->fields[(size_t)fslot]);
            break;
          }
          int mslot = m_.classes.method_slot(classId, in.name);
          if (mslot >= 0) {
            Value bm;
            bm.kind = ValueKind::BoundMethodV;
            bm.obj = recv.obj;
            bm.i = mslot;
            f.stack.push_back(std::move(bm));
            break;
          }
          throw RuntimeErr{ErrKind::AttributeError,
                           "'" + m_.classes.classes[(size_t)classId].name +
                               "' object has no attribute '" + in.name + "'"};
        }
        case Op::STORE_ATTR_DYN: {
          Value v = pop(f.stack);
          Value recv = pop(f.stack);
          if (recv.kind != ValueKind::ObjectV)
            throw RuntimeErr{ErrKind::AttributeError,
                             value_kind_name(recv) + " has no attribute '" + in.name + "'"};
          int classId = recv.obj->classId;
          int fslot = m_.classes.field_slot(classId, in.name);
          if (fslot < 0)
            throw RuntimeErr{ErrKind::AttributeError,
                             "'" + m_.classes.classes[(size_t)classId].name +
                                 "' object has no attribute '" + in.name + "'"};
          // Writes from untyped contexts are checked against the declared
          // field type (not counted as a CAST instruction).
          cast_value(m_.classes, reg_, v,
                     m_.classes.classes[(size_t)classId].fieldTypes[(size_t)fslot]);
          recv.obj->fields[(size_t)fslot] = std::move(v);
          f.stack.push_back(Value::none());
          break;
        }
        case Op::IS_NONE: {
          Value v = pop(f.stack);
          f.stack.push_back(Value::boolv(v.kind == ValueKind::NoneV));
          break;
        }
        case Op::EQ: {
          Value b = pop(f.stack);
          Value a = pop(f.stack);
          f.stack.push_back(Value::boolv(value_equal(a, b)));
          break;
        }
        case Op::NOT: {
          Value v = pop(f.stack);
          f.stack.push_back(Value::boolv(!v.truthy()));
          break;
        }
        case Op::JUMP:
          f.ip = (size_t)in.a;
          break;
        case Op::POP_JUMP_IF_FALSE: {
          Value v = pop(f.stack);
          if (!v.truthy()) f.ip = (size_t)in.a;
          break;
        }
        case Op::POP: {
          Value v = pop(f.stack);
          if (in.a == 1) {
            res_.outputs.push_back(render(v, reg_, m_.classes));
            res_.outputValues.push_back(std::move(v));
          }
          break;
        }
        case Op::RETURN_VALUE: {
          Value v = pop(f.stack);
          if (f.wrapper) {
            ++mx.wrapper_result_checks;
            cast_value(m_.classes, reg_, v, f.wrapperRetT);
          }
          frames_.pop_back();
          if (!frames_.empty()) frames_.back().stack.push_back(std::move(v));
          break;
        }
      }
    }
  }
};

}  // namespace

ExecResult execute(const BytecodeModule& m, TypeRegistry& reg, long long budget) {
  return Interp(m, reg, budget).run();
}

// ---- disassembly ----

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::LOAD_CONST: return "LOAD_CONST";
    case Op::LOAD_LOCAL: return "LOAD_LOCAL";
    case Op::STORE_LOCAL: return "STORE_LOCAL";
    case Op::LOAD_GLOBAL: return "LOAD_GLOBAL";
    case Op::STORE_GLOBAL: return "STORE_GLOBAL";
    case Op::CAST: return "CAST";
    case Op::CHECK_ARGS: return "CHECK_ARGS";
    case Op::BUILD_MAP: return "BUILD_MAP";
    case Op::BUILD_CHECKED_MAP: return "BUILD_CHECKED_MAP";
    case Op::TP_ALLOC: return "TP_ALLOC";
    case Op::INVOKE_FUNCTION: return "INVOKE_FUNCTION";
    case Op::INVOKE_METHOD: return "INVOKE_METHOD";
    case Op::CALL_DYNAMIC: return "CALL_DYNAMIC";
    case Op::DICT_GET: return "DICT_GET";
    case Op::DICT_SET: return "DICT_SET";
    case Op::DICT_SET_GUARDED: return "DICT_SET_GUARDED";
    case Op::LOAD_FIELD: return "LOAD_FIELD";
    case Op::STORE_FIELD: return "STORE_FIELD";
    case Op::LOAD_ATTR_DYN: return "LOAD_ATTR_DYN";
    case Op::STORE_ATTR_DYN: return "STORE_ATTR_DYN";
    case Op::IS_NONE: return "IS_NONE";
    case Op::EQ: return "EQ";
    case Op::NOT: return "NOT";
    case Op::JUMP: return "JUMP";
    case Op::POP_JUMP_IF_FALSE: return "POP_JUMP_IF_FALSE";
    case Op::POP: return "POP";
    case Op::RETURN_VALUE: return "RETURN_VALUE";
  }
  return "?";
}

std::string const_repr(const Value& v) {
  switch (v.kind) {
    case ValueKind::NoneV: return "None";
    case ValueKind::IntV: return std::to_string(v.i);
    case ValueKind::BoolV: return v.i ? "True" : "False";
    case ValueKind::StrV: {
      std::string out = "\"";
      for (char c : v.s) {
        if (c == '"') out += "\\\"";
        else if (c == '\\') out += "\\\\";
        else if (c == '\n') out += "\\n";
        else out += c;
      }
      return out + "\"";
    }
    default: return value_kind_name(v);
  }
}

std::string instr_args(const BytecodeModule& m, const Instr& in) {
  switch (in.op) {
    case Op::LOAD_CONST: return const_repr(m.consts[(size_t)in.a]);
    case Op::LOAD_LOCAL:
    case Op::STORE_LOCAL:
    case Op::BUILD_MAP: return std::to_string(in.a);
    case Op::LOAD_GLOBAL:
    case Op::STORE_GLOBAL:
    case Op::LOAD_ATTR_DYN:
    case Op::STORE_ATTR_DYN: return in.name;
    case Op::CAST: return to_string(m.typeRefs[(size_t)in.a]);
    case Op::CHECK_ARGS: {
      std::string out;
      for (size_t i = 0; i < in.checkArgs.size(); ++i) {
        if (i) out += ", ";
        out += "(" + std::to_string(in.checkArgs[i].first) + ", " +
               to_string(m.typeRefs[(size_t)in.checkArgs[i].second]) + ")";
      }
      return out;
    }
    case Op::BUILD_CHECKED_MAP:
      return to_string(m.typeRefs[(size_t)in.a]) + " n=" + std::to_string(in.b);
    case Op::TP_ALLOC: return m.classes.classes[(size_t)in.a].name;
    case Op::INVOKE_FUNCTION:
      return m.functions[(size_t)in.a].name + (in.b == 1 ? " fast" : " checked");
    case Op::INVOKE_METHOD:
      return "slot=" + std::to_string(in.a) + " argc=" + std::to_string(in.d) +
             (in.b == 1 ? " fast" : " checked");
    case Op::CALL_DYNAMIC:
      return (in.name.empty() ? std::string("<stack>") : in.name) +
             " argc=" + std::to_string(in.a);
    case Op::JUMP:
    case Op::POP_JUMP_IF_FALSE: return std::to_string(in.a);
    case Op::POP: return in.a == 1 ? "out" : "";
    default: return "";
  }
}

}  // namespace

std::string dump(const BytecodeModule& m) {
  std::string out;
  for (const BCFunction& f : m.functions) {
    out += "def " + f.name + " nlocals=" + std::to_string(f.nLocals) +
           " fast=" + std::to_string(f.fastEntry) + "\n";
    for (size_t i = 0; i < f.code.size(); ++i) {
      std::string args = instr_args(m, f.code[i]);
      out += "  " + std::to_string(i) + ": " + op_name(f.code[i].op);
      if (!args.empty()) out += " " + args;
      out += "\n";
    }
  }
  return out;
}

}  // namespace gsp
