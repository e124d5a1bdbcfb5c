#ifndef NIDPLAN_RULES_HPP
#define NIDPLAN_RULES_HPP

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nidplan/logic.hpp"
#include "nidplan/rng.hpp"

namespace nidplan {

constexpr double kProbTolerance = 1e-9;

// One explicit outcome of a rule: probability, the changes it asserts, and
// an optional reward collected when it fires (used by converted PPDDL
// operators carrying state-transition rewards).
struct Outcome {
  double prob = 0.0;
  Conjunction changes;
  double reward = 0.0;
  bool operator==(const Outcome&) const = default;
};

// a_r(X_a) : Phi_r(X) -> { p_i : Omega_i }, p_0 : noise.
// Variables are rule-local ids 0..num_vars-1; action args come first by
// convention of the parser but any subset is accepted.
struct AbstractRule {
  std::string name;  // label used in diagnostics and tables, e.g. "1"
  int action_pred = -1;
  std::vector<int> action_vars;
  int num_vars = 0;
  std::vector<std::string> var_names;
  Conjunction context;
  std::vector<Outcome> outcomes;
  double noise_prob = 0.0;
  double noise_changes = 1.0;  // N^r, expected attributes changed by noise

  bool operator==(const AbstractRule&) const = default;

  std::vector<int> deictic_vars() const {
    std::vector<int> d;
    for (int v = 0; v < num_vars; ++v) {
      bool is_arg = false;
      for (int a : action_vars) is_arg |= a == v;
      if (!is_arg) d.push_back(v);
    }
    return d;
  }
};

// Checks the structural rule invariants: probabilities
// sum to one, outcomes touch only primitive symbols and never assert and
// negate the same literal, deictic variables appear in the context.
inline void validate_rule(const Vocabulary& v, const AbstractRule& r) {
  double total = r.noise_prob;
  for (const auto& o : r.outcomes) {
    if (o.prob < -kProbTolerance)
      throw LogicError("rule " + r.name + ": negative outcome probability");
    total += o.prob;
  }
  if (std::abs(total - 1.0) > kProbTolerance)
    throw LogicError("rule " + r.name +
                     ": outcome probabilities sum to " + std::to_string(total));
  for (const auto& o : r.outcomes) {
    for (std::size_t i = 0; i < o.changes.items.size(); ++i) {
      const auto& c = o.changes.items[i];
      if (c.kind == Conjunct::Kind::literal &&
          v.predicate(c.symbol).kind != PredKind::primitive)
        throw LogicError("rule " + r.name +
                         ": outcome literal over non-primitive predicate " +
                         v.predicate(c.symbol).name);
      for (std::size_t j = 0; j < i; ++j) {
        const auto& d = o.changes.items[j];
        if (d.kind == c.kind && d.symbol == c.symbol && d.args == c.args &&
            (c.kind == Conjunct::Kind::fn_equal
                 ? d.value != c.value
                 : d.positive != c.positive))
          throw LogicError("rule " + r.name +
                           ": outcome asserts and negates the same atom");
      }
    }
  }
  for (int d : r.deictic_vars()) {
    bool in_ctx = false;
    for (const auto& c : r.context.items)
      for (const auto& t : c.args) in_ctx |= t.is_var() && t.var() == d;
    if (!in_ctx)
      throw LogicError("rule " + r.name + ": deictic variable " +
                       (d < static_cast<int>(r.var_names.size())
                            ? r.var_names[d]
                            : "v" + std::to_string(d)) +
                       " does not appear in the context");
  }
}

// (state variable, required/assigned value); atoms cover both primitive and
// derived ids, function slots live in their own index space.
struct VarVal {
  bool is_fn = false;
  int idx = 0;
  int val = 0;
  bool operator==(const VarVal&) const = default;
  bool operator<(const VarVal& o) const {
    if (is_fn != o.is_fn) return !is_fn;
    if (idx != o.idx) return idx < o.idx;
    return val < o.val;
  }
};

struct GroundOutcome {
  double prob = 0.0;
  std::vector<VarVal> sets;  // final values, deletions already folded in
  double reward = 0.0;
};

struct GroundRule {
  int abstract_id = -1;
  Substitution sigma;
  int action = -1;  // ground action id
  std::vector<VarVal> context;
  std::vector<GroundOutcome> outcomes;
  double noise_prob = 0.0;
  double noise_changes = 1.0;

  bool covers(const State& s) const {
    for (const auto& c : context) {
      if (c.is_fn) {
        if (s.fns[c.idx] != c.val) return false;
      } else if ((s.atoms[c.idx] != 0 ? 1 : 0) != c.val) {
        return false;
      }
    }
    return true;
  }
};

// The set Gamma of ground rules, indexed by ground action, plus the
// changeable part S_c of the state (everything some outcome can touch).
struct GroundRuleSet {
  std::vector<GroundRule> rules;
  std::map<int, std::vector<int>> by_action;  // ground action -> rule ids
  std::vector<int> changeable_atoms;          // ascending
  std::vector<int> changeable_fn_slots;       // ascending
  std::vector<bool> atom_changeable;          // size num_atoms
  std::vector<bool> fn_changeable;            // size num_fn_slots

  const std::vector<int>& rules_for(int action) const {
    static const std::vector<int> none;
    auto it = by_action.find(action);
    return it == by_action.end() ? none : it->second;
  }
  int changeable_count() const {
    return static_cast<int>(changeable_atoms.size() +
                            changeable_fn_slots.size());
  }
};

namespace detail {

inline VarVal compile_conjunct(const Vocabulary& v, const Conjunct& c) {
  std::vector<int> args(c.args.size());
  for (std::size_t i = 0; i < c.args.size(); ++i) args[i] = c.args[i].obj();
  if (c.kind == Conjunct::Kind::fn_equal) {
    const auto& f = v.function(c.symbol);
    if (c.value < f.lo || c.value > f.hi)
      throw LogicError("value " + std::to_string(c.value) +
                       " outside range of " + f.name);
    return VarVal{true, v.fn_slot(c.symbol, args), c.value};
  }
  return VarVal{false, v.atom_index(c.symbol, args), c.positive ? 1 : 0};
}

inline std::vector<VarVal> compile_changes(const Vocabulary& v,
                                           const Conjunction& ground) {
  // Deletions apply before additions, so an add wins over a delete of the
  // same ground atom (this can happen after substitution even for rules
  // that are clean at the abstract level).
  std::vector<VarVal> sets;
  for (const auto& c : ground.items) {
    VarVal vv = compile_conjunct(v, c);
    bool merged = false;
    for (auto& prev : sets) {
      if (prev.is_fn == vv.is_fn && prev.idx == vv.idx) {
        // atoms: the addition wins; functions: later assignment overwrites
        prev.val = vv.is_fn ? vv.val : std::max(prev.val, vv.val);
        merged = true;
        break;
      }
    }
    if (!merged) sets.push_back(vv);
  }
  return sets;
}

// Predicates and functions that some outcome of some rule can change,
// closed over derived-definition dependencies.
struct Changeable {
  std::vector<bool> preds;
  std::vector<bool> fns;
};

inline Changeable changeable_symbols(const Vocabulary& v,
                                     const std::vector<AbstractRule>& rules) {
  Changeable ch;
  ch.preds.assign(v.num_predicates(), false);
  ch.fns.assign(v.num_functions(), false);
  for (const auto& r : rules)
    for (const auto& o : r.outcomes)
      for (const auto& c : o.changes.items) {
        if (c.kind == Conjunct::Kind::literal)
          ch.preds[c.symbol] = true;
        else
          ch.fns[c.symbol] = true;
      }
  // propagate through derived definitions (dependency order)
  for (int pred : v.derived_order()) {
    bool any = false;
    for (const auto& c : v.derived_def(pred).body) {
      if (c.kind == Conjunct::Kind::literal)
        any |= ch.preds[c.symbol];
      else
        any |= ch.fns[c.symbol];
    }
    ch.preds[pred] = ch.preds[pred] || any;
  }
  return ch;
}

}  // namespace detail

// Grounds every rule against the object set. Substitutions binding a
// deictic variable to an action argument's object are skipped (a deictic
// reference denotes an object relative to the ones acted upon, never one
// of them).
// A grounding is also pruned when a context conjunct over an unchangeable
// symbol is false in s0, since no reachable state can ever satisfy it.
inline GroundRuleSet ground_rules(const Vocabulary& v,
                                  const std::vector<AbstractRule>& rules,
                                  const State& s0, bool prune = true) {
  for (const auto& r : rules) validate_rule(v, r);
  detail::Changeable ch = detail::changeable_symbols(v, rules);
  State s0d = eval_derived(v, s0);

  GroundRuleSet gamma;
  gamma.atom_changeable.assign(v.num_atoms(), false);
  gamma.fn_changeable.assign(v.num_fn_slots(), false);

  for (std::size_t ri = 0; ri < rules.size(); ++ri) {
    const AbstractRule& r = rules[ri];
    std::vector<int> deictic = r.deictic_vars();
    std::vector<int> assign(r.num_vars, 0);
    std::function<void(int)> enumerate = [&](int var) {
      if (var == r.num_vars) {
        Substitution sigma;
        for (int k = 0; k < r.num_vars; ++k) sigma.bind(k, assign[k]);
        Conjunction ctx = apply_substitution(r.context, sigma);
        if (prune) {
          for (const auto& c : ctx.items) {
            bool changeable = c.kind == Conjunct::Kind::literal
                                  ? ch.preds[c.symbol]
                                  : ch.fns[c.symbol];
            if (!changeable && !detail::conjunct_holds(v, s0d, c)) return;
          }
        }
        GroundRule g;
        g.abstract_id = static_cast<int>(ri);
        g.sigma = sigma;
        std::vector<int> act_args(r.action_vars.size());
        for (std::size_t k = 0; k < r.action_vars.size(); ++k)
          act_args[k] = sigma.lookup(r.action_vars[k]);
        g.action = v.action_index(r.action_pred, act_args);
        for (const auto& c : ctx.items)
          g.context.push_back(detail::compile_conjunct(v, c));
        for (const auto& o : r.outcomes) {
          GroundOutcome go;
          go.prob = o.prob;
          go.reward = o.reward;
          go.sets =
              detail::compile_changes(v, apply_substitution(o.changes, sigma));
          g.outcomes.push_back(std::move(go));
        }
        g.noise_prob = r.noise_prob;
        g.noise_changes = r.noise_changes;
        int id = static_cast<int>(gamma.rules.size());
        gamma.by_action[g.action].push_back(id);
        for (const auto& o : g.outcomes)
          for (const auto& s : o.sets) {
            if (s.is_fn)
              gamma.fn_changeable[s.idx] = true;
            else
              gamma.atom_changeable[s.idx] = true;
          }
        gamma.rules.push_back(std::move(g));
        return;
      }
      bool is_deictic = false;
      for (int d : deictic) is_deictic |= d == var;
      for (int obj = 0; obj < v.num_objects(); ++obj) {
        // deictic/action-argument pairs must bind distinct objects; only
        // already-assigned variables (id < var) need checking here
        bool clash = false;
        if (is_deictic) {
          for (int a : r.action_vars) clash |= a < var && assign[a] == obj;
        } else {
          for (int d : deictic) clash |= d < var && assign[d] == obj;
        }
        if (clash) continue;
        assign[var] = obj;
        enumerate(var + 1);
      }
    };
    enumerate(0);
  }
  for (int i = 0; i < v.num_atoms(); ++i)
    if (gamma.atom_changeable[i]) gamma.changeable_atoms.push_back(i);
  for (int i = 0; i < v.num_fn_slots(); ++i)
    if (gamma.fn_changeable[i]) gamma.changeable_fn_slots.push_back(i);
  return gamma;
}

// The single rule in Gamma(a) whose context holds in s, or nullopt when
// zero or several rules cover (multiple deictic groundings included).
inline std::optional<int> unique_covering_rule(const GroundRuleSet& gamma,
                                               const State& s, int action) {
  int found = -1;
  for (int id : gamma.rules_for(action)) {
    if (!gamma.rules[id].covers(s)) continue;
    if (found >= 0) return std::nullopt;
    found = id;
  }
  if (found < 0) return std::nullopt;
  return found;
}

inline State apply_outcome(const Vocabulary& v, const State& s,
                           const GroundOutcome& o) {
  State next = s;
  for (const auto& set : o.sets) {
    if (set.is_fn)
      next.fns[set.idx] = set.val;
    else
      next.atoms[set.idx] = static_cast<std::uint8_t>(set.val);
  }
  return eval_derived(v, next);
}

struct TransitionDistribution {
  std::vector<std::pair<State, double>> successors;  // duplicates merged
  double noise_mass = 0.0;
};

// The transition distribution made explicit: one entry per distinct
// successor state, with the
// noise probability returned as unassigned mass.
inline TransitionDistribution transition_distribution(const Vocabulary& v,
                                                      const GroundRule& r,
                                                      const State& s) {
  TransitionDistribution dist;
  dist.noise_mass = r.noise_prob;
  for (const auto& o : r.outcomes) {
    State next = apply_outcome(v, s, o);
    bool merged = false;
    for (auto& entry : dist.successors)
      if (entry.first == next) {
        entry.second += o.prob;
        merged = true;
        break;
      }
    if (!merged) dist.successors.emplace_back(std::move(next), o.prob);
  }
  return dist;
}

enum class StepKind { outcome, noise, default_rule };

struct StepResult {
  State next;
  StepKind kind = StepKind::default_rule;
  int rule = -1;
  int outcome = 0;  // 1..m for explicit outcomes, 0 for noise
  double reward = 0.0;
};

// Optional replacement for the stay-in-state noise policy; the experiment
// harness passes a flip-k sampler here.
using NoiseSampler = std::function<State(const Vocabulary&, const GroundRuleSet&,
                                         const GroundRule&, const State&, Rng&)>;

// Draws a successor through the unique covering rule. Noise keeps the state
// (flagged so tree planners can discount) unless a sampler is given; absence
// of a unique covering rule falls back to the noisy default rule, modelled
// as no change.
inline StepResult sample_successor(const Vocabulary& v,
                                   const GroundRuleSet& gamma, const State& s,
                                   int action, Rng& rng,
                                   const NoiseSampler& noise = {}) {
  StepResult res;
  auto rule_id = unique_covering_rule(gamma, s, action);
  if (!rule_id) {
    res.next = s;
    res.kind = StepKind::default_rule;
    return res;
  }
  const GroundRule& r = gamma.rules[*rule_id];
  res.rule = *rule_id;
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
    acc += r.outcomes[i].prob;
    if (u < acc) {
      res.next = apply_outcome(v, s, r.outcomes[i]);
      res.kind = StepKind::outcome;
      res.outcome = static_cast<int>(i) + 1;
      res.reward = r.outcomes[i].reward;
      return res;
    }
  }
  res.kind = StepKind::noise;
  res.outcome = 0;
  res.next = noise ? noise(v, gamma, r, s, rng) : s;
  return res;
}

struct ExperienceTriple {
  State s;
  int action = -1;
  State next;
};

// Rule-set score: sum of transition log-likelihoods under the unique
// covering rule
// (noise mass lower-bounded by p_r0 * p_min, default rule scored p_min /
// 1 - p_min) minus alpha times the total literal count of all rules.
inline double score_ruleset(const Vocabulary& v,
                            const std::vector<AbstractRule>& rules,
                            const std::vector<ExperienceTriple>& triples,
                            double alpha_pen, double p_min) {
  if (alpha_pen <= 0.0) throw LogicError("alpha_pen must be positive");
  if (p_min <= 0.0 || p_min >= 1.0)
    throw LogicError("p_min must lie strictly between 0 and 1");
  double loglik = 0.0;
  for (const auto& triple : triples) {
    State s = eval_derived(v, triple.s);
    State next = eval_derived(v, triple.next);
    GroundRuleSet gamma = ground_rules(v, rules, s);
    auto rule_id = unique_covering_rule(gamma, s, triple.action);
    double p;
    if (rule_id) {
      const GroundRule& r = gamma.rules[*rule_id];
      p = r.noise_prob * p_min;
      for (const auto& o : r.outcomes)
        if (apply_outcome(v, s, o) == next) p += o.prob;
    } else {
      p = (next == s) ? 1.0 - p_min : p_min;
    }
    loglik += std::log(p);
  }
  int pen = 0;
  for (const auto& r : rules) {
    pen += static_cast<int>(r.context.items.size());
    for (const auto& o : r.outcomes)
      pen += static_cast<int>(o.changes.items.size());
  }
  return loglik - alpha_pen * pen;
}


// A start-belief entry: marginal for one ground atom or a categorical for
// one ground function application.
struct PriorEntry {
  bool is_fn = false;
  int symbol = 0;
  std::vector<int> args;
  double prob = 0.0;
  std::vector<std::pair<int, double>> categorical;
};

// Additive state reward: sum of weight * I(conjunction holds). A pure goal
// is the single entry (1, tau).
struct RewardSpec {
  struct Entry {
    double weight = 1.0;
    Conjunction formula;        // kept for serialization and FF products
    std::vector<VarVal> conj;   // compiled ground form
  };
  std::vector<Entry> entries;

  static RewardSpec goal(const Vocabulary& v, const Conjunction& tau) {
    RewardSpec spec;
    Entry e;
    e.weight = 1.0;
    e.formula = tau;
    for (const auto& c : tau.items)
      e.conj.push_back(detail::compile_conjunct(v, c));
    spec.entries.push_back(std::move(e));
    return spec;
  }
  void add(const Vocabulary& v, double weight, const Conjunction& formula) {
    Entry e;
    e.weight = weight;
    e.formula = formula;
    for (const auto& c : formula.items)
      e.conj.push_back(detail::compile_conjunct(v, c));
    entries.push_back(std::move(e));
  }

  double eval(const State& s) const {
    double total = 0.0;
    for (const auto& e : entries) {
      bool sat = true;
      for (const auto& c : e.conj) {
        if (c.is_fn ? s.fns[c.idx] != c.val
                    : (s.atoms[c.idx] != 0 ? 1 : 0) != c.val) {
          sat = false;
          break;
        }
      }
      if (sat) total += e.weight;
    }
    return total;
  }
};

}  // namespace nidplan

#endif
