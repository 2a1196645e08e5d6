#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gsp/types.hpp"

namespace gsp {

// ---- values ----

enum class ValueKind {
  NoneV,
  IntV,
  BoolV,
  StrV,
  DictV,
  CheckedDictV,
  ObjectV,
  FuncV,         // first-class reference to a module function
  ClassV,        // first-class reference to a class (callable as a constructor)
  BoundMethodV,  // receiver + vtable slot, produced by dynamic attribute reads
};

struct DictData;
struct ObjectData;

struct Value {
  ValueKind kind = ValueKind::NoneV;
  long long i = 0;    // IntV; BoolV 0/1; FuncV funcId; ClassV classId; BoundMethodV slot
  std::string s;      // StrV
  std::shared_ptr<DictData> dict;  // DictV / CheckedDictV
  std::shared_ptr<ObjectData> obj; // ObjectV / BoundMethodV receiver
  int tag = -1;       // CheckedDictV: interned TypeId

  static Value none() { return {}; }
  static Value intv(long long v) { return {ValueKind::IntV, v, {}, nullptr, nullptr, -1}; }
  static Value boolv(bool v) { return {ValueKind::BoolV, v ? 1 : 0, {}, nullptr, nullptr, -1}; }
  static Value str(std::string v) {
    return {ValueKind::StrV, 0, std::move(v), nullptr, nullptr, -1};
  }
  static Value emptyDict();
  static Value func(int funcId) { return {ValueKind::FuncV, funcId, {}, nullptr, nullptr, -1}; }
  static Value cls(int classId) { return {ValueKind::ClassV, classId, {}, nullptr, nullptr, -1}; }

  // Python-style truthiness: None, 0, False, "", and empty mappings are
  // false; everything else is true.
  bool truthy() const;
};

// Insertion-ordered mapping with O(1) lookup on the hashable key kinds.
// BoolV(true)/IntV(1) (and false/0) are the same key.
struct DictData {
  std::vector<std::pair<Value, Value>> entries;
  std::unordered_map<std::string, size_t> index;  // normalized key repr -> entry

  bool find(const Value& k, Value& out) const;
  void set(const Value& k, const Value& v);
};

struct ObjectData {
  int classId = -1;
  std::vector<Value> fields;
};

// Structural equality for primitives and mappings, identity for objects.
bool value_equal(const Value& a, const Value& b);

// ---- the type registry ----

// Append-only bijection between normalized CheckedDict evaluation types and
// small integer ids; id equality is the exact-match test used by casts.
// Interning is atomic (lookup-or-insert under a lock).
class TypeRegistry {
 public:
  int intern(const Type& t);
  Type type_of(int id) const;
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, int> byKey_;
  std::vector<Type> types_;
};

// ---- class objects ----

struct VtableEntry {
  std::string methodName;
  int funcId = -1;
  bool wrapper = false;  // cast the result to resultT after the call returns
  Type resultT = Type::dyn();
};

struct RuntimeClass {
  std::string name;
  int parentId = -1;
  std::vector<std::string> fieldNames;  // slot order, root-first
  std::vector<Type> fieldTypes;         // declared types (dynamic writes are checked)
  int ownFieldSlot = 0;
  std::vector<VtableEntry> vtable;
};

struct ClassTable {
  std::vector<RuntimeClass> classes;

  bool is_descendant(int classId, int ancestorId) const;
  int find(const std::string& name) const;  // -1 when absent
  int field_slot(int classId, const std::string& name) const;
  int method_slot(int classId, const std::string& name) const;
};

// ---- errors ----

enum class ErrKind { CastError, KeyError, AttributeError, DynCallError };

struct RuntimeErr {
  ErrKind kind;
  std::string message;
};

const char* err_kind_name(ErrKind k);

// ---- operations ----

// Table-2 check: returns v unchanged on success, throws RuntimeErr(CastError)
// otherwise. Constant work: never inspects mapping entries or object fields.
Value cast_value(const ClassTable& ct, TypeRegistry& reg, const Value& v, const Type& t);

// Builds a checked dictionary from seed entries, casting every key and value
// (the one place element traversal happens: +2 visits per entry).
Value checked_dict_new(const ClassTable& ct, TypeRegistry& reg, const Type& keyT,
                       const Type& valT, const std::vector<std::pair<Value, Value>>& seed,
                       long long* elementVisits);

// Write from an untyped context: casts key and value against the tag (+2
// visits), then stores. On a plain dict this degenerates to an unguarded set.
void dict_set_guarded(const ClassTable& ct, TypeRegistry& reg, Value& d, const Value& k,
                      const Value& v, long long* elementVisits);

Value dict_get(const Value& d, const Value& k);                  // throws KeyError
void dict_set(Value& d, const Value& k, const Value& v);         // unguarded

// Rendering used by the CLI and the soundness harness.
std::string render(const Value& v, const TypeRegistry& reg, const ClassTable& ct);
std::string value_kind_name(const Value& v);

}  // namespace gsp
