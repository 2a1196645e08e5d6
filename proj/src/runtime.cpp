#include "gsp/runtime.hpp"

#include <stdexcept>

namespace gsp {

// ---- dictionaries ----

namespace {

// Normalized key representation: booleans collapse onto the integers 0/1 so
// BoolV(true) and IntV(1) are the same key.
std::string key_repr(const Value& k) {
  switch (k.kind) {
    case ValueKind::NoneV: return "n";
    case ValueKind::IntV:
    case ValueKind::BoolV: return "i" + std::to_string(k.i);
    case ValueKind::StrV: return "s" + k.s;
    default:
      throw RuntimeErr{ErrKind::KeyError, "unhashable key of kind " + value_kind_name(k)};
  }
}

std::string escape_str(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\\\"";
    else if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace

Value Value::emptyDict() {
  return {ValueKind::DictV, 0, {}, std::make_shared<DictData>(), nullptr, -1};
}

bool Value::truthy() const {
  switch (kind) {
    case ValueKind::NoneV: return false;
    case ValueKind::IntV:
    case ValueKind::BoolV: return i != 0;
    case ValueKind::StrV: return !s.empty();
    case ValueKind::DictV:
    case ValueKind::CheckedDictV: return !dict->entries.empty();
    default: return true;
  }
}

bool DictData::find(const Value& k, Value& out) const {
  auto it = index.find(key_repr(k));
  if (it == index.end()) return false;
  out = entries[it->second].second;
  return true;
}

void DictData::set(const Value& k, const Value& v) {
  std::string repr = key_repr(k);
  auto it = index.find(repr);
  if (it != index.end()) {
    entries[it->second].second = v;
    return;
  }
  index.emplace(std::move(repr), entries.size());
  entries.emplace_back(k, v);
}

// ---- equality ----

static bool value_equal_rec(const Value& a, const Value& b, int depth) {
  bool aNum = a.kind == ValueKind::IntV || a.kind == ValueKind::BoolV;
  bool bNum = b.kind == ValueKind::IntV || b.kind == ValueKind::BoolV;
  if (aNum && bNum) return a.i == b.i;
  bool aMap = a.kind == ValueKind::DictV || a.kind == ValueKind::CheckedDictV;
  bool bMap = b.kind == ValueKind::DictV || b.kind == ValueKind::CheckedDictV;
  if (aMap && bMap) {
    if (a.dict == b.dict) return true;
    // Self-referential dictionaries bottom out at identity.
    if (depth > 64) return false;
    if (a.dict->entries.size() != b.dict->entries.size()) return false;
    for (const auto& [k, v] : a.dict->entries) {
      Value other;
      if (!b.dict->find(k, other)) return false;
      if (!value_equal_rec(v, other, depth + 1)) return false;
    }
    return true;
  }
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ValueKind::NoneV: return true;
    case ValueKind::StrV: return a.s == b.s;
    case ValueKind::ObjectV: return a.obj == b.obj;
    case ValueKind::FuncV:
    case ValueKind::ClassV: return a.i == b.i;
    case ValueKind::BoundMethodV: return a.obj == b.obj && a.i == b.i;
    default: return false;
  }
}

bool value_equal(const Value& a, const Value& b) { return value_equal_rec(a, b, 0); }

// ---- registry ----

int TypeRegistry::intern(const Type& t) {
  Type norm = normalize(t);
  std::string key = to_string(norm);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = byKey_.find(key);
  if (it != byKey_.end()) return it->second;
  int id = (int)types_.size();
  types_.push_back(norm);
  byKey_.emplace(std::move(key), id);
  return id;
}

Type TypeRegistry::type_of(int id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return types_.at((size_t)id);
}

size_t TypeRegistry::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return types_.size();
}

// ---- class table ----

bool ClassTable::is_descendant(int classId, int ancestorId) const {
  for (int c = classId; c >= 0; c = classes[(size_t)c].parentId)
    if (c == ancestorId) return true;
  return false;
}

int ClassTable::find(const std::string& name) const {
  for (size_t i = 0; i < classes.size(); ++i)
    if (classes[i].name == name) return (int)i;
  return -1;
}

int ClassTable::field_slot(int classId, const std::string& name) const {
  const auto& fields = classes[(size_t)classId].fieldNames;
  for (size_t i = 0; i < fields.size(); ++i)
    if (fields[i] == name) return (int)i;
  return -1;
}

int ClassTable::method_slot(int classId, const std::string& name) const {
  const auto& vt = classes[(size_t)classId].vtable;
  for (size_t i = 0; i < vt.size(); ++i)
    if (vt[i].methodName == name) return (int)i;
  return -1;
}

// ---- errors ----

const char* err_kind_name(ErrKind k) {
  switch (k) {
    case ErrKind::CastError: return "CastError";
    case ErrKind::KeyError: return "KeyError";
    case ErrKind::AttributeError: return "AttributeError";
    case ErrKind::DynCallError: return "DynCallError";
  }
  return "?";
}

// ---- casts ----

namespace {

// Tag-level acceptance per evaluation type; never looks inside containers.
bool cast_ok(const ClassTable& ct, TypeRegistry& reg, const Value& v, const Type& t) {
  switch (t.kind) {
    case TypeKind::Dyn:
      return true;
    case TypeKind::NoneT:
      return v.kind == ValueKind::NoneV;
    case TypeKind::IntT:
      return v.kind == ValueKind::IntV || v.kind == ValueKind::BoolV;
    case TypeKind::BoolT:
      return v.kind == ValueKind::BoolV;
    case TypeKind::StrT:
      return v.kind == ValueKind::StrV;
    case TypeKind::DictT:
      // A checked dictionary does not pass: its static Dict type would
      // permit unguarded writes that break the tag invariant.
      return v.kind == ValueKind::DictV;
    case TypeKind::CheckedDictT:
      return v.kind == ValueKind::CheckedDictV && v.tag == reg.intern(t);
    case TypeKind::ClassT: {
      if (t.className == "object") return true;
      if (v.kind != ValueKind::ObjectV) return false;
      int target = ct.find(t.className);
      return target >= 0 && ct.is_descendant(v.obj->classId, target);
    }
    case TypeKind::OptionalT:
      return v.kind == ValueKind::NoneV || cast_ok(ct, reg, v, t.args[0]);
    case TypeKind::UnionT:
      for (const Type& m : t.args)
        if (cast_ok(ct, reg, v, m)) return true;
      return false;
  }
  return false;
}

}  // namespace

Value cast_value(const ClassTable& ct, TypeRegistry& reg, const Value& v, const Type& t) {
  if (cast_ok(ct, reg, v, t)) return v;
  throw RuntimeErr{ErrKind::CastError,
                   to_string(t) + " expected, got " + value_kind_name(v)};
}

// ---- checked dictionaries ----

Value checked_dict_new(const ClassTable& ct, TypeRegistry& reg, const Type& keyT,
                       const Type& valT, const std::vector<std::pair<Value, Value>>& seed,
                       long long* elementVisits) {
  Value out;
  out.kind = ValueKind::CheckedDictV;
  out.dict = std::make_shared<DictData>();
  out.tag = reg.intern(Type::checkedDict(keyT, valT));
  for (const auto& [k, v] : seed) {
    if (elementVisits) ++*elementVisits;
    cast_value(ct, reg, k, keyT);
    if (elementVisits) ++*elementVisits;
    cast_value(ct, reg, v, valT);
    out.dict->set(k, v);
  }
  return out;
}

void dict_set_guarded(const ClassTable& ct, TypeRegistry& reg, Value& d, const Value& k,
                      const Value& v, long long* elementVisits) {
  if (d.kind == ValueKind::DictV) {
    d.dict->set(k, v);
    return;
  }
  if (d.kind != ValueKind::CheckedDictV)
    throw RuntimeErr{ErrKind::CastError, "dict expected, got " + value_kind_name(d)};
  Type tagT = reg.type_of(d.tag);
  if (elementVisits) ++*elementVisits;
  cast_value(ct, reg, k, tagT.args[0]);
  if (elementVisits) ++*elementVisits;
  cast_value(ct, reg, v, tagT.args[1]);
  d.dict->set(k, v);
}

Value dict_get(const Value& d, const Value& k) {
  if (d.kind != ValueKind::DictV && d.kind != ValueKind::CheckedDictV)
    throw RuntimeErr{ErrKind::CastError, "dict expected, got " + value_kind_name(d)};
  Value out;
  if (!d.dict->find(k, out)) {
    std::string repr;
    switch (k.kind) {
      case ValueKind::NoneV: repr = "None"; break;
      case ValueKind::IntV: repr = std::to_string(k.i); break;
      case ValueKind::BoolV: repr = k.i ? "True" : "False"; break;
      case ValueKind::StrV: repr = escape_str(k.s); break;
      default: repr = value_kind_name(k); break;
    }
    throw RuntimeErr{ErrKind::KeyError, "missing key " + repr};
  }
  return out;
}

void dict_set(Value& d, const Value& k, const Value& v) {
  if (d.kind != ValueKind::DictV && d.kind != ValueKind::CheckedDictV)
    throw RuntimeErr{ErrKind::CastError, "dict expected, got " + value_kind_name(d)};
  d.dict->set(k, v);
}

// ---- rendering ----

std::string value_kind_name(const Value& v) {
  switch (v.kind) {
    case ValueKind::NoneV: return "None";
    case ValueKind::IntV: return "int";
    case ValueKind::BoolV: return "bool";
    case ValueKind::StrV: return "str";
    case ValueKind::DictV: return "dict";
    case ValueKind::CheckedDictV: return "checked dict";
    case ValueKind::ObjectV: return "object";
    case ValueKind::FuncV: return "function";
    case ValueKind::ClassV: return "class";
    case ValueKind::BoundMethodV: return "bound method";
  }
  return "?";
}

static std::string render_rec(const Value& v, const TypeRegistry& reg, const ClassTable& ct,
                              std::vector<const DictData*>& active) {
  switch (v.kind) {
    case ValueKind::NoneV: return "None";
    case ValueKind::IntV: return std::to_string(v.i);
    case ValueKind::BoolV: return v.i ? "True" : "False";
    case ValueKind::StrV: return escape_str(v.s);
    case ValueKind::DictV:
    case ValueKind::CheckedDictV: {
      // Self-referential dictionaries print as {...}.
      for (const DictData* d : active)
        if (d == v.dict.get()) return "{...}";
      active.push_back(v.dict.get());
      std::string body = "{";
      bool first = true;
      for (const auto& [k, val] : v.dict->entries) {
        if (!first) body += ", ";
        first = false;
        body += render_rec(k, reg, ct, active) + ": " + render_rec(val, reg, ct, active);
      }
      body += "}";
      active.pop_back();
      if (v.kind == ValueKind::DictV) return body;
      Type tagT = reg.type_of(v.tag);
      return "CheckedDict[" + to_string(tagT.args[0]) + ", " + to_string(tagT.args[1]) +
             "](" + body + ")";
    }
    case ValueKind::ObjectV:
      return "<" + ct.classes[(size_t)v.obj->classId].name + " object>";
    case ValueKind::FuncV: return "<function>";
    case ValueKind::ClassV: return "<class " + ct.classes[(size_t)v.i].name + ">";
    case ValueKind::BoundMethodV: return "<bound method>";
  }
  return "?";
}

std::string render(const Value& v, const TypeRegistry& reg, const ClassTable& ct) {
  std::vector<const DictData*> active;
  return render_rec(v, reg, ct, active);
}

}  // namespace gsp
