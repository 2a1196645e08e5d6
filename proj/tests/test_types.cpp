#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "doctest.h"
#include "gsp/types.hpp"

using namespace gsp;

namespace {

// Random surface types for the algebraic properties.
Type random_type(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 5);
  switch (pick(rng)) {
    case 0: return Type::dyn();
    case 1: return Type::none();
    case 2: return Type::intT();
    case 3: return Type::boolT();
    case 4: return Type::strT();
    case 5: return rng() % 2 ? Type::cls("A") : Type::cls("B");
    case 6: return Type::dict(random_type(rng, depth - 1), random_type(rng, depth - 1));
    case 7: return Type::checkedDict(random_type(rng, depth - 1), random_type(rng, depth - 1));
    case 8: return Type::optional(random_type(rng, depth - 1));
    default: {
      std::uniform_int_distribution<int> n(2, 4);
      std::vector<Type> members;
      int count = n(rng);
      for (int i = 0; i < count; ++i) members.push_back(random_type(rng, depth - 1));
      return Type::unionOf(std::move(members));
    }
  }
}

}  // namespace

TEST_CASE("rendering matches the surface grammar") {
  CHECK(to_string(Type::dyn()) == "dyn");
  CHECK(to_string(Type::dict(Type::strT(), Type::intT())) == "Dict[str, int]");
  CHECK(to_string(Type::dict()) == "Dict");
  CHECK(to_string(Type::checkedDict(Type::strT(), Type::dyn())) == "CheckedDict[str, dyn]");
  CHECK(to_string(Type::optional(Type::strT())) == "Optional[str]");
  CHECK(to_string(Type::unionOf({Type::intT(), Type::strT()})) == "Union[int, str]");
  CHECK(to_string(Type::cls("A")) == "A");
}

TEST_CASE("normalize: flatten, dedup, canonical order, Dyn absorption") {
  // Union[None, int] and Optional[int] are the same type.
  CHECK(normalize(Type::unionOf({Type::none(), Type::intT()})) ==
        normalize(Type::optional(Type::intT())));
  // Nested unions flatten; duplicates vanish; order is canonical.
  Type nested = Type::unionOf({Type::strT(), Type::unionOf({Type::intT(), Type::strT()})});
  CHECK(normalize(nested) == normalize(Type::unionOf({Type::intT(), Type::strT()})));
  // Dyn absorbs the whole union.
  CHECK(normalize(Type::unionOf({Type::intT(), Type::dyn()})) == Type::dyn());
  // A one-member union is its member.
  CHECK(normalize(Type::unionOf({Type::intT()})) == Type::intT());
}

TEST_CASE("normalize is idempotent over random types") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1500; ++i) {
    Type t = random_type(rng, 3);
    Type once = normalize(t);
    CHECK(normalize(once) == once);
  }
}

TEST_CASE("retraction produces evaluation types") {
  // Dict parameters are erased.
  CHECK(retract(Type::dict(Type::strT(), Type::intT())) == Type::dict());
  // Non-Optional unions collapse to Dyn.
  CHECK(retract(Type::unionOf({Type::intT(), Type::strT()})) == Type::dyn());
  // None-unions survive as Optional.
  CHECK(retract(Type::unionOf({Type::none(), Type::strT()})) == Type::optional(Type::strT()));
  // Degenerate Optionals collapse.
  CHECK(retract(Type::optional(Type::dyn())) == Type::dyn());
  CHECK(retract(Type::optional(Type::none())) == Type::none());
  // Retraction lands in the evaluation types, always.
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1500; ++i) {
    Type t = retract(random_type(rng, 3));
    CHECK(is_eval_type(t));
    CHECK(retract(t) == t);  // idempotent on its image
  }
}

TEST_CASE("subtyping agrees with a brute-force closure oracle") {
  ClassHierarchy h;
  h.add("A", "object");
  h.add("B", "A");
  h.add("C", "object");

  // Finite universe of evaluation types, closed under one Optional layer.
  std::vector<Type> base = {Type::dyn(),     Type::none(),   Type::intT(),
                            Type::boolT(),   Type::strT(),   Type::cls("A"),
                            Type::cls("B"),  Type::cls("C"), Type::object(),
                            Type::dict(),    Type::checkedDict(Type::strT(), Type::intT()),
                            Type::checkedDict(Type::strT(), Type::dyn())};
  std::vector<Type> uni = base;
  for (const Type& t : base)
    if (t.kind != TypeKind::Dyn && t.kind != TypeKind::NoneT)
      uni.push_back(Type::optional(t));
  const size_t n = uni.size();

  // Seed edges straight from the declarative rules, then take the
  // reflexive-transitive closure.
  std::vector<std::vector<bool>> rel(n, std::vector<bool>(n, false));
  auto idx = [&](const Type& t) {
    for (size_t i = 0; i < n; ++i)
      if (uni[i] == t) return (int)i;
    return -1;
  };
  for (size_t i = 0; i < n; ++i) rel[i][i] = true;            // reflexivity
  for (size_t i = 0; i < n; ++i) {
    if (uni[i].isDyn()) continue;
    rel[i][(size_t)idx(Type::object())] = true;               // T <: Object
  }
  rel[(size_t)idx(Type::boolT())][(size_t)idx(Type::intT())] = true;
  rel[(size_t)idx(Type::cls("A"))][(size_t)idx(Type::object())] = true;
  rel[(size_t)idx(Type::cls("B"))][(size_t)idx(Type::cls("A"))] = true;
  rel[(size_t)idx(Type::cls("C"))][(size_t)idx(Type::object())] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        if (rel[i][j]) continue;
        bool holds = false;
        // transitivity
        for (size_t k = 0; k < n && !holds; ++k) holds = rel[i][k] && rel[k][j];
        if (!holds && uni[j].kind == TypeKind::OptionalT) {
          // None <: Optional[T]; T0 <: T1 => T0 <: Optional[T1];
          // Optional covariance.
          int payload = idx(uni[j].args[0]);
          if (uni[i].kind == TypeKind::NoneT) holds = true;
          if (!holds && payload >= 0 && rel[i][(size_t)payload]) holds = true;
          if (!holds && uni[i].kind == TypeKind::OptionalT) {
            int ip = idx(uni[i].args[0]);
            if (ip >= 0 && payload >= 0 && rel[(size_t)ip][(size_t)payload]) holds = true;
          }
        }
        if (holds) {
          rel[i][j] = true;
          changed = true;
        }
      }
    }
  }

  int checked = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      INFO(to_string(uni[i]), " <: ", to_string(uni[j]));
      CHECK(is_subtype(h, uni[i], uni[j]) == rel[i][j]);
      ++checked;
    }
  }
  CHECK(checked >= 400);
}

TEST_CASE("consistent subtyping and materialization laws") {
  ClassHierarchy h;
  h.add("A", "object");
  h.add("B", "A");
  std::vector<Type> uni = {Type::dyn(),    Type::none(),    Type::intT(),
                           Type::boolT(),  Type::strT(),    Type::cls("A"),
                           Type::cls("B"), Type::object(),  Type::dict(),
                           Type::checkedDict(Type::strT(), Type::intT()),
                           Type::optional(Type::strT())};
  int cases = 0;
  for (const Type& a : uni) {
    for (const Type& b : uni) {
      // Consistent subtyping is subtyping extended by Dyn on the right;
      // Dyn on the left is materialization's job, not acceptance's.
      bool expect = b.isDyn() || is_subtype(h, a, b);
      CHECK(is_consistent_subtype(h, a, b) == expect);
      // Materialization holds exactly from Dyn to non-Dyn.
      CHECK(materializes(a, b) == (a.isDyn() && !b.isDyn()));
      ++cases;
    }
  }
  CHECK(cases == 121);
  // Dyn relates to itself only under plain subtyping.
  for (const Type& t : uni) {
    if (t.isDyn()) continue;
    CHECK(!is_subtype(h, Type::dyn(), t));
    CHECK(!is_subtype(h, t, Type::dyn()));
  }
  CHECK(is_subtype(h, Type::dyn(), Type::dyn()));
}

TEST_CASE("type_compare is a strict total order on normalized types") {
  std::mt19937_64 rng(13);
  std::vector<Type> ts;
  for (int i = 0; i < 60; ++i) ts.push_back(normalize(random_type(rng, 2)));
  for (const Type& a : ts) {
    CHECK(type_compare(a, a) == 0);
    for (const Type& b : ts) {
      int ab = type_compare(a, b);
      CHECK(ab == -type_compare(b, a));
      CHECK((ab == 0) == (a == b));
      for (const Type& c : ts)
        if (ab < 0 && type_compare(b, c) < 0) CHECK(type_compare(a, c) < 0);
    }
  }
}

TEST_CASE("unknown classes surface as errors, not as silent answers") {
  ClassHierarchy h;
  h.add("A", "object");
  CHECK_THROWS_AS((void)is_subtype(h, Type::cls("Nope"), Type::cls("A")), UnknownClassError);
}
