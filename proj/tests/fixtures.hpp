#ifndef NIDPLAN_TESTS_FIXTURES_HPP
#define NIDPLAN_TESTS_FIXTURES_HPP

#include <map>
#include <string>
#include <vector>

#include "nidplan/logic.hpp"
#include "nidplan/rules.hpp"

namespace fixtures {

using namespace nidplan;

// Small builder so tests can write literals with named variables.
struct Builder {
  const Vocabulary* v;
  std::map<std::string, int> vars;

  explicit Builder(const Vocabulary& vocab) : v(&vocab) {}

  Term term(const std::string& name) {
    if (auto obj = v->find_object(name)) return Term::object(*obj);
    auto it = vars.find(name);
    if (it == vars.end()) {
      int id = static_cast<int>(vars.size());
      it = vars.emplace(name, id).first;
    }
    return Term::variable(it->second);
  }
  int var(const std::string& name) {
    Term t = term(name);
    return t.var();
  }
  Conjunct lit(const std::string& pred, std::vector<std::string> args,
               bool positive = true) {
    std::vector<Term> ts;
    for (const auto& a : args) ts.push_back(term(a));
    return Conjunct::lit(*v->find_predicate(pred), std::move(ts), positive);
  }
  Conjunct fn_eq(const std::string& fn, std::vector<std::string> args, int val) {
    std::vector<Term> ts;
    for (const auto& a : args) ts.push_back(term(a));
    return Conjunct::fn_eq(*v->find_function(fn), std::move(ts), val);
  }
  Conjunction conj(std::vector<Conjunct> cs) { return Conjunction{std::move(cs)}; }
};

inline void set_atom(const Vocabulary& v, State& s, const std::string& pred,
                     std::vector<std::string> args, bool value = true) {
  std::vector<int> ids;
  for (const auto& a : args) ids.push_back(v.object_id(a));
  s.atoms[v.atom_index(*v.find_predicate(pred), ids)] = value ? 1 : 0;
}

inline bool get_atom(const Vocabulary& v, const State& s,
                     const std::string& pred, std::vector<std::string> args) {
  std::vector<int> ids;
  for (const auto& a : args) ids.push_back(v.object_id(a));
  return s.atoms[v.atom_index(*v.find_predicate(pred), ids)] != 0;
}

inline int ground_action(const Vocabulary& v, const std::string& pred,
                         std::vector<std::string> args) {
  std::vector<int> ids;
  for (const auto& a : args) ids.push_back(v.object_id(a));
  return v.action_index(*v.find_predicate(pred), ids);
}

// --- the worked cubeworld: objects a, b, c and table t ---

inline Vocabulary cubeworld_vocab() {
  std::vector<PredicateDecl> preds = {
      {"on", 2, PredKind::primitive},     {"inhand", 1, PredKind::primitive},
      {"cube", 1, PredKind::primitive},   {"table", 1, PredKind::primitive},
      {"clear", 1, PredKind::derived},    {"grab", 1, PredKind::action},
      {"puton", 1, PredKind::action}};
  DerivedDef clear;
  clear.kind = DerivedDef::Kind::forall_not;
  clear.head_pred = 4;
  clear.quant_var = 1;
  clear.body = {Conjunct::lit(0, {Term::variable(1), Term::variable(0)})};
  return Vocabulary(preds, {}, {"a", "b", "c", "t"}, {clear});
}

inline std::vector<AbstractRule> cubeworld_rules(const Vocabulary& v) {
  std::vector<AbstractRule> rules;
  {
    Builder b(v);
    AbstractRule r;
    r.name = "1";
    r.action_pred = *v.find_predicate("grab");
    r.action_vars = {b.var("X")};
    r.context = b.conj({b.lit("on", {"Y", "X"}), b.lit("on", {"X", "Z"}),
                        b.lit("cube", {"X"}), b.lit("cube", {"Y"}),
                        b.lit("table", {"T"})});
    r.outcomes.push_back(
        {0.5,
         b.conj({b.lit("inhand", {"X"}), b.lit("on", {"Y", "Z"}),
                 b.lit("on", {"Y", "X"}, false), b.lit("on", {"X", "Z"}, false)}),
         0.0});
    r.outcomes.push_back(
        {0.3,
         b.conj({b.lit("inhand", {"X"}), b.lit("on", {"Y", "T"}),
                 b.lit("on", {"Y", "X"}, false), b.lit("on", {"X", "Z"}, false)}),
         0.0});
    r.outcomes.push_back(
        {0.2, b.conj({b.lit("on", {"X", "T"}), b.lit("on", {"X", "Z"}, false)}),
         0.0});
    r.num_vars = static_cast<int>(b.vars.size());
    r.var_names = {"X", "Y", "Z", "T"};
    rules.push_back(r);
  }
  {
    Builder b(v);
    AbstractRule r;
    r.name = "2";
    r.action_pred = *v.find_predicate("grab");
    r.action_vars = {b.var("X")};
    r.context = b.conj({b.lit("cube", {"X"}), b.lit("clear", {"X"}),
                        b.lit("on", {"X", "Y"})});
    r.outcomes.push_back(
        {1.0, b.conj({b.lit("inhand", {"X"}), b.lit("on", {"X", "Y"}, false)}),
         0.0});
    r.num_vars = 2;
    r.var_names = {"X", "Y"};
    rules.push_back(r);
  }
  {
    Builder b(v);
    AbstractRule r;
    r.name = "3";
    r.action_pred = *v.find_predicate("puton");
    r.action_vars = {b.var("X")};
    r.context = b.conj({b.lit("inhand", {"Y"}), b.lit("cube", {"Y"})});
    r.outcomes.push_back(
        {1.0, b.conj({b.lit("on", {"Y", "X"}), b.lit("inhand", {"Y"}, false)}),
         0.0});
    r.num_vars = 2;
    r.var_names = {"X", "Y"};
    rules.push_back(r);
  }
  return rules;
}

inline State cubeworld_s0(const Vocabulary& v) {
  State s = State::zero(v);
  set_atom(v, s, "on", {"a", "b"});
  set_atom(v, s, "on", {"b", "c"});
  set_atom(v, s, "on", {"c", "t"});
  set_atom(v, s, "cube", {"a"});
  set_atom(v, s, "cube", {"b"});
  set_atom(v, s, "cube", {"c"});
  set_atom(v, s, "table", {"t"});
  return eval_derived(v, s);
}

// --- grab-a-ball: a single noisy rule over a ball, a cube and a table ---

inline Vocabulary ballworld_vocab() {
  std::vector<PredicateDecl> preds = {
      {"on", 2, PredKind::primitive},   {"inhand", 1, PredKind::primitive},
      {"ball", 1, PredKind::primitive}, {"cube", 1, PredKind::primitive},
      {"table", 1, PredKind::primitive}, {"grab", 1, PredKind::action}};
  return Vocabulary(preds, {}, {"ball", "cube", "table"});
}

inline AbstractRule grab_ball_rule(const Vocabulary& v) {
  Builder b(v);
  AbstractRule r;
  r.name = "grab-ball";
  r.action_pred = *v.find_predicate("grab");
  r.action_vars = {b.var("X")};
  r.context = b.conj({b.lit("on", {"X", "Y"}), b.lit("ball", {"X"}),
                      b.lit("cube", {"Y"}), b.lit("table", {"Z"})});
  r.outcomes.push_back(
      {0.7, b.conj({b.lit("inhand", {"X"}), b.lit("on", {"X", "Y"}, false)}),
       0.0});
  r.outcomes.push_back(
      {0.2, b.conj({b.lit("on", {"X", "Z"}), b.lit("on", {"X", "Y"}, false)}),
       0.0});
  r.noise_prob = 0.1;
  r.num_vars = 3;
  r.var_names = {"X", "Y", "Z"};
  return r;
}

inline State ballworld_s0(const Vocabulary& v) {
  State s = State::zero(v);
  set_atom(v, s, "on", {"ball", "cube"});
  set_atom(v, s, "ball", {"ball"});
  set_atom(v, s, "cube", {"cube"});
  set_atom(v, s, "table", {"table"});
  return eval_derived(v, s);
}

}  // namespace fixtures

#endif
