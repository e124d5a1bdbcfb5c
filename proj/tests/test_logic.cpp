#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "nidplan/logic.hpp"
#include "nidplan/rng.hpp"

using namespace nidplan;
using namespace fixtures;

TEST_CASE("apply_substitution grounds a formula") {
  Vocabulary v = ballworld_vocab();
  Builder b(v);
  Conjunction f = b.conj({b.lit("on", {"X", "Y"}), b.lit("ball", {"X"})});
  Substitution sigma;
  sigma.bind(b.var("X"), v.object_id("ball"));
  sigma.bind(b.var("Y"), v.object_id("cube"));
  Conjunction g = apply_substitution(f, sigma);
  REQUIRE(g.is_ground());
  REQUIRE(g.items[0].args[0].obj() == v.object_id("ball"));
  REQUIRE(g.items[0].args[1].obj() == v.object_id("cube"));
  REQUIRE(g.items[1].args[0].obj() == v.object_id("ball"));
}

TEST_CASE("apply_substitution on the empty conjunction") {
  Substitution sigma;
  sigma.bind(0, 0);
  Conjunction empty;
  REQUIRE(apply_substitution(empty, sigma) == empty);
}

TEST_CASE("apply_substitution single literal and unbound error") {
  Vocabulary v = cubeworld_vocab();
  Builder b(v);
  Conjunction f = b.conj({b.lit("clear", {"X"})});
  Substitution sigma;
  sigma.bind(b.var("X"), v.object_id("a"));
  Conjunction g = apply_substitution(f, sigma);
  REQUIRE(g.items[0].args[0].obj() == v.object_id("a"));

  Conjunction two = b.conj({b.lit("on", {"X", "W"})});
  REQUIRE_THROWS_AS(apply_substitution(two, sigma), LogicError);
}

TEST_CASE("holds evaluates ground conjunctions against the cubeworld start") {
  Vocabulary v = cubeworld_vocab();
  State s0 = cubeworld_s0(v);
  Builder b(v);
  REQUIRE(holds(v, s0, b.conj({b.lit("on", {"a", "b"}), b.lit("on", {"b", "c"})})));
  REQUIRE_FALSE(holds(v, s0, b.conj({b.lit("clear", {"b"})})));
  REQUIRE(holds(v, s0, Conjunction{}));
  Conjunction open = b.conj({b.lit("on", {"X", "b"})});
  REQUIRE_THROWS_AS(holds(v, s0, open), LogicError);
}

TEST_CASE("holds splits over conjunction") {
  Vocabulary v = cubeworld_vocab();
  State s0 = cubeworld_s0(v);
  Builder b(v);
  std::vector<Conjunction> parts = {
      b.conj({b.lit("on", {"a", "b"})}),
      b.conj({b.lit("clear", {"a"})}),
      b.conj({b.lit("on", {"b", "a"}, false)}),
      b.conj({b.lit("inhand", {"c"})}),
  };
  for (const auto& f1 : parts)
    for (const auto& f2 : parts) {
      Conjunction both;
      both.items = f1.items;
      both.items.insert(both.items.end(), f2.items.begin(), f2.items.end());
      REQUIRE(holds(v, s0, both) == (holds(v, s0, f1) && holds(v, s0, f2)));
    }
}

TEST_CASE("covering substitutions of rule 2 context with X fixed to a") {
  Vocabulary v = cubeworld_vocab();
  State s0 = cubeworld_s0(v);
  Builder b(v);
  Conjunction ctx = b.conj({b.lit("cube", {"X"}), b.lit("clear", {"X"}),
                            b.lit("on", {"X", "Y"})});
  Substitution fixed;
  fixed.bind(b.var("X"), v.object_id("a"));
  auto subs = enumerate_covering_substitutions(v, ctx, s0, fixed);
  REQUIRE(subs.size() == 1);
  REQUIRE(subs[0].lookup(b.var("Y")) == v.object_id("b"));
}

TEST_CASE("covering substitutions corner cases") {
  Vocabulary v = cubeworld_vocab();
  State s0 = cubeworld_s0(v);
  Builder b(v);
  auto none = enumerate_covering_substitutions(
      v, b.conj({b.lit("on", {"t", "a"})}), s0);
  REQUIRE(none.empty());
  auto one = enumerate_covering_substitutions(
      v, b.conj({b.lit("on", {"a", "b"})}), s0);
  REQUIRE(one.size() == 1);  // the empty substitution
  REQUIRE(one[0].map.empty());
}

TEST_CASE("covering substitutions agree with brute force") {
  Vocabulary v = cubeworld_vocab();
  Rng rng(11);
  Builder b(v);
  std::vector<Conjunction> formulas = {
      b.conj({b.lit("on", {"Y", "X"}), b.lit("on", {"X", "Z"}),
              b.lit("cube", {"X"})}),
      b.conj({b.lit("cube", {"X"}), b.lit("clear", {"X"}),
              b.lit("on", {"X", "Y"})}),
      b.conj({b.lit("on", {"X", "Y"}), b.lit("on", {"Y", "Z"}),
              b.lit("clear", {"X"})}),
      b.conj({b.lit("inhand", {"X"}), b.lit("cube", {"Y"}, false)}),
  };
  for (int round = 0; round < 20; ++round) {
    State s = State::zero(v);
    for (auto& a : s.atoms) a = rng.uniform() < 0.3 ? 1 : 0;
    s = eval_derived(v, s);
    for (const auto& f : formulas) {
      auto fast = enumerate_covering_substitutions(v, f, s);
      // brute force over all |O|^k substitutions
      std::vector<int> vars = f.free_vars();
      std::vector<Substitution> slow;
      int n = v.num_objects();
      int total = 1;
      for (std::size_t i = 0; i < vars.size(); ++i) total *= n;
      for (int code = 0; code < total; ++code) {
        Substitution sigma;
        int rest = code;
        for (int k = static_cast<int>(vars.size()) - 1; k >= 0; --k) {
          sigma.bind(vars[k], rest % n);
          rest /= n;
        }
        if (holds(v, s, apply_substitution(f, sigma))) slow.push_back(sigma);
      }
      REQUIRE(fast.size() == slow.size());
      for (std::size_t i = 0; i < fast.size(); ++i) {
        for (int var : vars)
          REQUIRE(fast[i].lookup(var) == slow[i].lookup(var));
      }
    }
  }
}

TEST_CASE("eval_derived computes clear from the cubeworld start") {
  Vocabulary v = cubeworld_vocab();
  State s0 = cubeworld_s0(v);
  REQUIRE(get_atom(v, s0, "clear", {"a"}));
  REQUIRE_FALSE(get_atom(v, s0, "clear", {"b"}));
  REQUIRE_FALSE(get_atom(v, s0, "clear", {"c"}));
}

TEST_CASE("eval_derived on a state without on-atoms") {
  Vocabulary v = cubeworld_vocab();
  State s = eval_derived(v, State::zero(v));
  for (const auto& obj : {"a", "b", "c", "t"})
    REQUIRE(get_atom(v, s, "clear", {obj}));
}

TEST_CASE("eval_derived is idempotent and preserves primitives") {
  Vocabulary v = cubeworld_vocab();
  Rng rng(3);
  for (int round = 0; round < 10; ++round) {
    State s = State::zero(v);
    for (auto& a : s.atoms) a = rng.uniform() < 0.4 ? 1 : 0;
    State once = eval_derived(v, s);
    State twice = eval_derived(v, once);
    REQUIRE(once == twice);
    int on_pred = *v.find_predicate("on");
    for (int i = 0; i < v.num_atoms(); ++i)
      if (v.atom_predicate(i) == on_pred) REQUIRE(once.atoms[i] == s.atoms[i]);
  }
}

TEST_CASE("vocabulary rejects cyclic derived definitions") {
  std::vector<PredicateDecl> preds = {{"p", 0, PredKind::derived},
                                      {"q", 0, PredKind::derived}};
  DerivedDef dp, dq;
  dp.kind = DerivedDef::Kind::all_of;
  dp.head_pred = 0;
  dp.body = {Conjunct::lit(1, {})};
  dq.kind = DerivedDef::Kind::all_of;
  dq.head_pred = 1;
  dq.body = {Conjunct::lit(0, {})};
  REQUIRE_THROWS_AS(Vocabulary(preds, {}, {"o"}, {dp, dq}), LogicError);
}

TEST_CASE("function values live in declared ranges") {
  std::vector<PredicateDecl> preds = {{"p", 1, PredKind::primitive}};
  std::vector<FunctionDecl> fns = {{"size", 1, 1, 3}};
  Vocabulary v(preds, fns, {"a", "b"});
  State s = State::zero(v);
  REQUIRE(s.fns[v.fn_slot(0, {0})] == 1);
  Builder b(v);
  s.fns[v.fn_slot(0, {v.object_id("a")})] = 2;
  REQUIRE(holds(v, s, b.conj({b.fn_eq("size", {"a"}, 2)})));
  REQUIRE_FALSE(holds(v, s, b.conj({b.fn_eq("size", {"a"}, 3)})));
}
