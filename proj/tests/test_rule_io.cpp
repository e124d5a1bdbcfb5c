#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "nidplan/rule_io.hpp"

using namespace nidplan;
using namespace fixtures;

static std::string domain_path(const std::string& name) {
  return std::string(NIDPLAN_DOMAIN_DIR) + "/" + name;
}

TEST_CASE("parse the grab-ball rule") {
  RuleFile rf = load_rules(domain_path("grab_ball.nid"));
  REQUIRE(rf.rules.size() == 1);
  const AbstractRule& r = rf.rules[0];
  REQUIRE(r.outcomes.size() == 2);
  REQUIRE(r.outcomes[0].prob == Catch::Approx(0.7));
  REQUIRE(r.outcomes[1].prob == Catch::Approx(0.2));
  REQUIRE(r.noise_prob == Catch::Approx(0.1));
  REQUIRE(r.context.items.size() == 4);
  REQUIRE(r.num_vars == 3);
  REQUIRE(r.deictic_vars().size() == 2);
}

TEST_CASE("parse the cubeworld rules") {
  RuleFile rf = load_rules(domain_path("cubeworld.nid"));
  REQUIRE(rf.rules.size() == 3);
  REQUIRE(rf.rules[2].outcomes.size() == 1);
  REQUIRE(rf.rules[2].outcomes[0].prob == Catch::Approx(1.0));
  REQUIRE(rf.rules[2].noise_prob == 0.0);
  REQUIRE(rf.derived.size() == 1);
  REQUIRE(rf.derived[0].kind == DerivedDef::Kind::forall_not);

  // the parsed rules behave exactly like the hand-built fixture
  ProblemFile pf = load_problem(domain_path("cubeworld_tower.prob"), rf);
  LoadedProblem lp = bind_problem(rf, pf);
  Vocabulary fixture_vocab = cubeworld_vocab();
  State s0 = cubeworld_s0(fixture_vocab);
  REQUIRE(lp.start.has_value());
  GroundRuleSet parsed = ground_rules(lp.vocab, lp.rules, *lp.start);
  GroundRuleSet built =
      ground_rules(fixture_vocab, cubeworld_rules(fixture_vocab), s0);
  REQUIRE(parsed.rules.size() == built.rules.size());
}

TEST_CASE("serialize/parse round trip is the identity on the AST") {
  for (const auto& file :
       {"cubeworld.nid", "grab_ball.nid", "twodoor.nid", "correlation.nid",
        "blocksworld.nid"}) {
    RuleFile once = load_rules(domain_path(file));
    std::string text = serialize_rules(once);
    RuleFile twice = parse_rules(text, file);
    REQUIRE(once.predicates == twice.predicates);
    REQUIRE(once.functions == twice.functions);
    REQUIRE(once.derived == twice.derived);
    REQUIRE(once.rules == twice.rules);
    // serialize(parse(x)) is a fixed point
    REQUIRE(serialize_rules(twice) == text);
  }
}

TEST_CASE("parse errors carry file:line:col positions") {
  REQUIRE_THROWS_WITH(parse_rules("predicate on/2\nfoo(X): -> { 1.0: }\n", "f.nid"),
                      Catch::Matchers::ContainsSubstring("f.nid:2:1") &&
                          Catch::Matchers::ContainsSubstring("unknown action"));
  REQUIRE_THROWS_AS(parse_rules("predicate on/2\npredicate on/1\n"),
                    ParseError);
  // arity mismatch
  REQUIRE_THROWS_AS(
      parse_rules("predicate p/2\naction go/0\ngo(): p(X) -> { 1.0: }\n"),
      ParseError);
  // probabilities must sum to one
  REQUIRE_THROWS_AS(parse_rules("predicate p/0\naction go/0\n"
                                "go(): - -> { 0.5: p() }\n"),
                    ParseError);
}

TEST_CASE("parse the tower problem") {
  RuleFile rf = load_rules(domain_path("cubeworld.nid"));
  ProblemFile pf = load_problem(domain_path("cubeworld_tower.prob"), rf);
  REQUIRE(pf.objects == std::vector<std::string>{"a", "b", "c", "t"});
  REQUIRE(pf.has_start_state);
  LoadedProblem lp = bind_problem(rf, pf);
  const State& s0 = *lp.start;
  int on = *lp.vocab.find_predicate("on");
  int count = 0;
  for (int i = 0; i < lp.vocab.num_atoms(); ++i)
    count += lp.vocab.atom_predicate(i) == on && s0.atoms[i];
  REQUIRE(count == 3);  // closed world: only the listed on-atoms
  REQUIRE(lp.goal.items.size() == 1);
  REQUIRE(lp.goal.items[0].symbol == on);
  REQUIRE(lp.gamma == Catch::Approx(0.95));
  REQUIRE(lp.horizon == 4);
  // unlisted atoms default to false
  REQUIRE_FALSE(get_atom(lp.vocab, s0, "inhand", {"a"}));
}

TEST_CASE("belief-start problems carry priors instead of a state") {
  RuleFile rf = load_rules(domain_path("cubeworld.nid"));
  ProblemFile pf = parse_problem(
      "objects a b t\nbelief on(a,b) = 0.5\nbelief cube(a) = 1\ngoal on(b,a)\n",
      rf);
  REQUIRE_FALSE(pf.has_start_state);
  REQUIRE(pf.beliefs.size() == 2);
  REQUIRE(pf.beliefs[0].prob == Catch::Approx(0.5));
  LoadedProblem lp = bind_problem(rf, pf);
  REQUIRE_FALSE(lp.start.has_value());
  REQUIRE(lp.prior.size() == 2);
}

TEST_CASE("a problem without a goal is rejected") {
  RuleFile rf = load_rules(domain_path("cubeworld.nid"));
  REQUIRE_THROWS_AS(
      parse_problem("objects a b\nstart on(a,b), cube(a), cube(b)\n", rf),
      ParseError);
  // unknown object in a fact
  REQUIRE_THROWS_AS(parse_problem("objects a\ngoal on(a,zz)\n", rf),
                    ParseError);
}

TEST_CASE("function declarations, assertions and priors") {
  RuleFile rf = parse_rules(
      "predicate p/1\nfunction size/1 range 1..3\naction bump/1\n"
      "bump(X): size(X)=1 -> { 0.9: size(X)=2 0.1: noise(2) }\n");
  REQUIRE(rf.functions.size() == 1);
  REQUIRE(rf.functions[0].lo == 1);
  REQUIRE(rf.functions[0].hi == 3);
  REQUIRE(rf.rules[0].noise_changes == Catch::Approx(2.0));
  REQUIRE(rf.rules[0].outcomes[0].changes.items[0].kind ==
          Conjunct::Kind::fn_equal);

  ProblemFile pf = parse_problem(
      "objects a\nbelief p(a) = 0.5\nbelief size(a) = {1: 0.2, 2: 0.8, 3: 0}\n"
      "goal size(a)=2\n",
      rf);
  REQUIRE(pf.beliefs[1].is_fn);
  REQUIRE(pf.beliefs[1].categorical.size() == 3);

  std::string text = serialize_rules(rf);
  RuleFile again = parse_rules(text);
  REQUIRE(again.rules == rf.rules);
}

TEST_CASE("per-outcome rewards survive the round trip") {
  RuleFile rf = parse_rules(
      "predicate p/0\naction go/0\n"
      "go(): - -> { 0.5: p() reward(2.5) 0.5: reward(-1) }\n");
  REQUIRE(rf.rules[0].outcomes[0].reward == Catch::Approx(2.5));
  REQUIRE(rf.rules[0].outcomes[1].reward == Catch::Approx(-1.0));
  REQUIRE(rf.rules[0].outcomes[1].changes.items.empty());
  RuleFile again = parse_rules(serialize_rules(rf));
  REQUIRE(again.rules == rf.rules);
}
