#include "gsp/types.hpp"

#include <algorithm>
#include <stdexcept>

namespace gsp {

std::string to_string(const Type& t) {
  switch (t.kind) {
    case TypeKind::Dyn: return "dyn";
    case TypeKind::NoneT: return "None";
    case TypeKind::IntT: return "int";
    case TypeKind::BoolT: return "bool";
    case TypeKind::StrT: return "str";
    case TypeKind::ClassT: return t.className;
    case TypeKind::DictT:
      if (t.args.empty()) return "Dict";
      return "Dict[" + to_string(t.args[0]) + ", " + to_string(t.args[1]) + "]";
    case TypeKind::CheckedDictT:
      return "CheckedDict[" + to_string(t.args[0]) + ", " + to_string(t.args[1]) + "]";
    case TypeKind::OptionalT: return "Optional[" + to_string(t.args[0]) + "]";
    case TypeKind::UnionT: {
      std::string out = "Union[";
      for (size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ", ";
        out += to_string(t.args[i]);
      }
      return out + "]";
    }
  }
  return "?";
}

namespace {

// None sorts first inside unions; Dyn never survives in one.
int rank(TypeKind k) {
  switch (k) {
    case TypeKind::NoneT: return 0;
    case TypeKind::BoolT: return 1;
    case TypeKind::IntT: return 2;
    case TypeKind::StrT: return 3;
    case TypeKind::ClassT: return 4;
    case TypeKind::DictT: return 5;
    case TypeKind::CheckedDictT: return 6;
    case TypeKind::OptionalT: return 7;
    case TypeKind::UnionT: return 8;
    case TypeKind::Dyn: return 9;
  }
  return 10;
}

}  // namespace

int type_compare(const Type& a, const Type& b) {
  if (rank(a.kind) != rank(b.kind)) return rank(a.kind) < rank(b.kind) ? -1 : 1;
  if (a.className != b.className) return a.className < b.className ? -1 : 1;
  if (a.args.size() != b.args.size()) return a.args.size() < b.args.size() ? -1 : 1;
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (int c = type_compare(a.args[i], b.args[i])) return c;
  }
  return 0;
}

namespace {

void flatten_into(const Type& t, std::vector<Type>& members, bool& sawDyn) {
  if (t.kind == TypeKind::UnionT) {
    for (const Type& m : t.args) flatten_into(m, members, sawDyn);
  } else if (t.kind == TypeKind::OptionalT) {
    members.push_back(Type::none());
    flatten_into(t.args[0], members, sawDyn);
  } else if (t.kind == TypeKind::Dyn) {
    sawDyn = true;
  } else {
    members.push_back(t);
  }
}

}  // namespace

Type normalize(const Type& s) {
  switch (s.kind) {
    case TypeKind::UnionT:
    case TypeKind::OptionalT: {
      // Treat Optional[S] as Union[None, S] and renormalize.
      std::vector<Type> members;
      bool sawDyn = false;
      {
        std::vector<Type> raw;
        flatten_into(s, raw, sawDyn);
        for (Type& m : raw) members.push_back(normalize(m));
      }
      if (sawDyn) return Type::dyn();
      for (const Type& m : members)
        if (m.isDyn()) return Type::dyn();
      // Re-flatten: a member may have normalized into an Optional/Union.
      {
        std::vector<Type> flat;
        bool d2 = false;
        for (const Type& m : members) flatten_into(m, flat, d2);
        if (d2) return Type::dyn();
        members = std::move(flat);
      }
      std::sort(members.begin(), members.end(),
                [](const Type& a, const Type& b) { return type_compare(a, b) < 0; });
      members.erase(std::unique(members.begin(), members.end()), members.end());
      if (members.empty()) return Type::dyn();
      if (members.size() == 1) return members[0];
      if (members.size() == 2 && members[0].kind == TypeKind::NoneT)
        return Type::optional(members[1]);
      return Type::unionOf(std::move(members));
    }
    case TypeKind::DictT: {
      Type out = s;
      for (Type& a : out.args) a = normalize(a);
      return out;
    }
    case TypeKind::CheckedDictT:
      return Type::checkedDict(normalize(s.args[0]), normalize(s.args[1]));
    default:
      return s;
  }
}

Type retract(const Type& s) {
  Type n = normalize(s);
  switch (n.kind) {
    case TypeKind::DictT: return Type::dict();
    case TypeKind::UnionT: return Type::dyn();
    case TypeKind::OptionalT: {
      Type payload = retract(n.args[0]);
      if (payload.isDyn()) return Type::dyn();
      if (payload.kind == TypeKind::NoneT) return Type::none();
      if (payload.kind == TypeKind::OptionalT) return payload;
      return Type::optional(payload);
    }
    case TypeKind::CheckedDictT:
      return Type::checkedDict(retract(n.args[0]), retract(n.args[1]));
    default:
      return n;
  }
}

bool is_eval_type(const Type& t) {
  switch (t.kind) {
    case TypeKind::UnionT: return false;
    case TypeKind::DictT: return t.args.empty();
    case TypeKind::OptionalT: {
      const Type& p = t.args[0];
      if (p.isDyn() || p.kind == TypeKind::NoneT || p.kind == TypeKind::OptionalT) return false;
      return is_eval_type(p);
    }
    case TypeKind::CheckedDictT:
      return is_eval_type(t.args[0]) && is_eval_type(t.args[1]);
    default:
      return true;
  }
}

bool ClassHierarchy::derives_from(const std::string& c0, const std::string& c1) const {
  std::string cur = c0;
  while (true) {
    if (cur == c1) return true;
    if (cur == "object") return false;
    auto it = parent_.find(cur);
    if (it == parent_.end()) return false;
    cur = it->second;
  }
}

namespace {

void require_classes(const ClassHierarchy& env, const Type& t) {
  if (t.kind == TypeKind::ClassT && !env.declared(t.className)) throw UnknownClassError{t.className};
  for (const Type& a : t.args) require_classes(env, a);
}

}  // namespace

bool is_subtype(const ClassHierarchy& env, const Type& t0, const Type& t1) {
  require_classes(env, t0);
  require_classes(env, t1);
  if (t0 == t1) return true;
  // Dyn only relates to itself under <=.
  if (t0.isDyn() || t1.isDyn()) return false;
  if (t1.isObjectClass()) return true;
  if (t0.kind == TypeKind::BoolT && t1.kind == TypeKind::IntT) return true;
  if (t1.kind == TypeKind::OptionalT) {
    if (t0.kind == TypeKind::NoneT) return true;
    if (t0.kind == TypeKind::OptionalT) return is_subtype(env, t0.args[0], t1.args[0]);
    return is_subtype(env, t0, t1.args[0]);
  }
  if (t0.kind == TypeKind::ClassT && t1.kind == TypeKind::ClassT)
    return env.derives_from(t0.className, t1.className);
  return false;
}

bool is_consistent_subtype(const ClassHierarchy& env, const Type& t0, const Type& t1) {
  if (t1.isDyn()) return true;
  return is_subtype(env, t0, t1);
}

bool materializes(const Type& t0, const Type& t1) { return t0.isDyn() && !t1.isDyn(); }

}  // namespace gsp
