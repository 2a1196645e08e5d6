#pragma once

#include <map>
#include <string>
#include <vector>

namespace gsp {

// One node shape covers both the surface grammar and the evaluation types.
// Surface Dict carries two parameters; the evaluation-type Dict carries none.
enum class TypeKind {
  Dyn,
  NoneT,
  IntT,
  BoolT,
  StrT,
  ClassT,
  DictT,
  CheckedDictT,
  UnionT,
  OptionalT,
};

struct Type {
  TypeKind kind = TypeKind::Dyn;
  std::string className;   // ClassT only
  std::vector<Type> args;  // Dict(0|2), CheckedDict(2), Union(n), Optional(1)

  static Type dyn() { return {TypeKind::Dyn, {}, {}}; }
  static Type none() { return {TypeKind::NoneT, {}, {}}; }
  static Type intT() { return {TypeKind::IntT, {}, {}}; }
  static Type boolT() { return {TypeKind::BoolT, {}, {}}; }
  static Type strT() { return {TypeKind::StrT, {}, {}}; }
  static Type cls(std::string name) { return {TypeKind::ClassT, std::move(name), {}}; }
  static Type object() { return cls("object"); }
  static Type dict() { return {TypeKind::DictT, {}, {}}; }
  static Type dict(Type k, Type v) { return {TypeKind::DictT, {}, {std::move(k), std::move(v)}}; }
  static Type checkedDict(Type k, Type v) {
    return {TypeKind::CheckedDictT, {}, {std::move(k), std::move(v)}};
  }
  static Type unionOf(std::vector<Type> members) { return {TypeKind::UnionT, {}, std::move(members)}; }
  static Type optional(Type t) { return {TypeKind::OptionalT, {}, {std::move(t)}}; }

  bool isDyn() const { return kind == TypeKind::Dyn; }
  bool isObjectClass() const { return kind == TypeKind::ClassT && className == "object"; }

  bool operator==(const Type& o) const {
    return kind == o.kind && className == o.className && args == o.args;
  }
  bool operator!=(const Type& o) const { return !(*this == o); }
};

// Canonical textual rendering, identical to the surface grammar.
std::string to_string(const Type& t);

// Total order on types: constructor rank, then name, then children.
// Drives the canonical member order inside normalized unions.
int type_compare(const Type& a, const Type& b);

// Flattens unions, removes duplicates, canonicalizes order, collapses
// Dyn-absorbing unions and Optional special cases. Idempotent.
Type normalize(const Type& s);

// Surface-to-evaluation retraction R(.). Normalizes first; output satisfies
// the evaluation-type invariants (Dict bare, no Union, Optional payload
// never Dyn/None/Optional).
Type retract(const Type& s);

bool is_eval_type(const Type& t);

// Declared-class view needed by subtyping: child -> parent edges, tree
// rooted at "object".
class ClassHierarchy {
 public:
  void add(const std::string& name, const std::string& parent) { parent_[name] = parent; }
  bool declared(const std::string& name) const {
    return name == "object" || parent_.count(name) > 0;
  }
  // True iff c0 == c1 or c1 is an ancestor of c0.
  bool derives_from(const std::string& c0, const std::string& c1) const;
  const std::map<std::string, std::string>& edges() const { return parent_; }

 private:
  std::map<std::string, std::string> parent_;
};

struct UnknownClassError {
  std::string name;
};

// The <= relation over evaluation types: reflexive-transitive closure of
// T <: Object, Bool <: Int, Optional covariance, None <: Optional[T],
// T0 <: T1 => T0 <: Optional[T1], and declared class edges. Dyn relates
// only to itself.
bool is_subtype(const ClassHierarchy& env, const Type& t0, const Type& t1);

// Consistent subtyping: subtyping or t1 = Dyn.
bool is_consistent_subtype(const ClassHierarchy& env, const Type& t0, const Type& t1);

// Materialization: Dyn on the left, non-Dyn on the right.
bool materializes(const Type& t0, const Type& t1);

}  // namespace gsp
