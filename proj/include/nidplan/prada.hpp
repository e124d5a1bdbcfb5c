#ifndef NIDPLAN_PRADA_HPP
#define NIDPLAN_PRADA_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "nidplan/rules.hpp"

namespace nidplan {

// Factored-frontier belief: one marginal per ground binary atom, one
// categorical per ground function slot. Derived-atom marginals are not
// stored; they are combined from the primitives on demand.
struct Belief {
  std::vector<double> atom_p;             // indexed like State::atoms
  std::vector<std::vector<double>> fn_p;  // per slot, size = range

  bool operator==(const Belief&) const = default;
};

struct PradaConfig {
  int n_samples = 100;
  int horizon = 5;       // T
  double gamma = 0.95;
  double theta = 0.0;
  std::uint64_t seed = 0;
  bool use_prefix_cache = true;
};

// Action sequence with its value and the reward posterior after each step.
struct Plan {
  std::vector<int> actions;
  double q = 0.0;
  std::vector<double> posteriors;  // P(U^t = 1 | a^{0:t-1}), t = 1..T
};

// The ground rule set reindexed for inference: per rule the context
// variables with required values, competing rules for the same action with
// syntactic contradiction flags, and the per-attribute noise change
// probability N^r / |S_c|.
class CompiledModel {
 public:
  struct CompiledRule {
    int action = -1;
    std::vector<VarVal> context;
    std::vector<GroundOutcome> outcomes;
    double noise_prob = 0.0;
    double noise_change_prob = 0.0;
    std::vector<int> competitors;
    std::vector<bool> contradicts;  // parallel to competitors
  };

  CompiledModel(const Vocabulary& vocab, GroundRuleSet gamma,
                Conjunction goal, RewardSpec reward)
      : vocab_(&vocab),
        gamma_(std::move(gamma)),
        goal_(std::move(goal)),
        reward_(std::move(reward)) {
    int sc = gamma_.changeable_count();
    rules_.reserve(gamma_.rules.size());
    for (const auto& r : gamma_.rules) {
      CompiledRule c;
      c.action = r.action;
      c.context = r.context;
      c.outcomes = r.outcomes;
      c.noise_prob = r.noise_prob;
      c.noise_change_prob = sc > 0 ? r.noise_changes / sc : 0.0;
      rules_.push_back(std::move(c));
    }
    for (const auto& [action, ids] : gamma_.by_action) {
      for (int id : ids) {
        for (int other : ids) {
          if (other == id) continue;
          rules_[id].competitors.push_back(other);
          rules_[id].contradicts.push_back(
              contexts_contradict(rules_[id].context, rules_[other].context));
        }
      }
    }
  }

  const Vocabulary& vocab() const { return *vocab_; }
  const GroundRuleSet& gamma() const { return gamma_; }
  const std::vector<CompiledRule>& rules() const { return rules_; }
  const Conjunction& goal() const { return goal_; }
  const RewardSpec& reward() const { return reward_; }

  static bool contexts_contradict(const std::vector<VarVal>& a,
                                  const std::vector<VarVal>& b) {
    for (const auto& x : a)
      for (const auto& y : b)
        if (x.is_fn == y.is_fn && x.idx == y.idx && x.val != y.val)
          return true;
    return false;
  }

 private:
  const Vocabulary* vocab_;
  GroundRuleSet gamma_;
  std::vector<CompiledRule> rules_;
  Conjunction goal_;
  RewardSpec reward_;
};

inline CompiledModel compile(const Vocabulary& vocab, GroundRuleSet gamma,
                             Conjunction goal, RewardSpec reward) {
  return CompiledModel(vocab, std::move(gamma), std::move(goal),
                       std::move(reward));
}

// --- belief construction ---

inline Belief init_belief(const Vocabulary& v, const State& s) {
  Belief b;
  b.atom_p.assign(v.num_atoms(), 0.0);
  for (int i = 0; i < v.num_atoms(); ++i) b.atom_p[i] = s.atoms[i] ? 1.0 : 0.0;
  b.fn_p.resize(v.num_fn_slots());
  for (int i = 0; i < v.num_fn_slots(); ++i) {
    const auto& f = v.function(v.fn_of_slot(i));
    b.fn_p[i].assign(f.range_size(), 0.0);
    b.fn_p[i][s.fns[i] - f.lo] = 1.0;
  }
  return b;
}

// Unlisted atoms start false; unlisted functions sit at the bottom of their
// range with certainty.
inline Belief init_belief(const Vocabulary& v,
                          const std::vector<PriorEntry>& prior) {
  State zero = State::zero(v);
  Belief b = init_belief(v, zero);
  for (const auto& e : prior) {
    if (e.is_fn) {
      const auto& f = v.function(e.symbol);
      std::vector<double> cat(f.range_size(), 0.0);
      double total = 0.0;
      for (const auto& [val, p] : e.categorical) {
        if (val < f.lo || val > f.hi)
          throw LogicError("prior value outside range of " + f.name);
        if (p < 0.0 || p > 1.0)
          throw LogicError("prior probability outside [0,1]");
        cat[val - f.lo] = p;
        total += p;
      }
      if (std::abs(total - 1.0) > kProbTolerance)
        throw LogicError("categorical prior for " + f.name + " sums to " +
                         std::to_string(total));
      b.fn_p[v.fn_slot(e.symbol, e.args)] = std::move(cat);
    } else {
      if (e.prob < 0.0 || e.prob > 1.0)
        throw LogicError("prior probability outside [0,1]");
      if (v.predicate(e.symbol).kind != PredKind::primitive)
        throw LogicError("priors apply to primitive atoms only");
      b.atom_p[v.atom_index(e.symbol, e.args)] = e.prob;
    }
  }
  return b;
}

// --- marginals ---

namespace ff {

// Marginal of a ground atom; derived predicates combine their definition
// bodies as if independent (e.g. clear(x) = prod_y (1 - alpha(on(y,x)))).
inline double atom_marginal(const CompiledModel& m, const Belief& b,
                            int atom);

inline double conjunct_marginal(const CompiledModel& m, const Belief& b,
                                const Conjunct& ground) {
  const Vocabulary& v = m.vocab();
  std::vector<int> args(ground.args.size());
  for (std::size_t i = 0; i < ground.args.size(); ++i)
    args[i] = ground.args[i].obj();
  if (ground.kind == Conjunct::Kind::fn_equal) {
    const auto& f = v.function(ground.symbol);
    return b.fn_p[v.fn_slot(ground.symbol, args)][ground.value - f.lo];
  }
  double p = atom_marginal(m, b, v.atom_index(ground.symbol, args));
  return ground.positive ? p : 1.0 - p;
}

inline double atom_marginal(const CompiledModel& m, const Belief& b,
                            int atom) {
  const Vocabulary& v = m.vocab();
  int pred = v.atom_predicate(atom);
  if (v.predicate(pred).kind == PredKind::primitive) return b.atom_p[atom];
  const DerivedDef& def = v.derived_def(pred);
  std::vector<int> args = v.atom_args(atom);
  Substitution sigma;
  for (std::size_t k = 0; k < args.size(); ++k)
    sigma.bind(static_cast<int>(k), args[k]);
  auto body_product = [&](const Substitution& s) {
    double prod = 1.0;
    for (const auto& c : def.body)
      prod *= conjunct_marginal(
          m, b, apply_substitution(Conjunction{{c}}, s).items.front());
    return prod;
  };
  switch (def.kind) {
    case DerivedDef::Kind::forall_not: {
      double p = 1.0;
      for (int y = 0; y < v.num_objects(); ++y) {
        sigma.bind(def.quant_var, y);
        p *= 1.0 - body_product(sigma);
      }
      return p;
    }
    case DerivedDef::Kind::all_of:
      return body_product(sigma);
    case DerivedDef::Kind::any_of: {
      double miss = 1.0;
      for (const auto& c : def.body)
        miss *= 1.0 - conjunct_marginal(
                          m, b,
                          apply_substitution(Conjunction{{c}}, sigma)
                              .items.front());
      return 1.0 - miss;
    }
  }
  return 0.0;
}

inline double varval_marginal(const CompiledModel& m, const Belief& b,
                              const VarVal& vv, std::uint64_t* ops) {
  if (ops) ++*ops;
  if (vv.is_fn) {
    const auto& f = m.vocab().function(m.vocab().fn_of_slot(vv.idx));
    return b.fn_p[vv.idx][vv.val - f.lo];
  }
  double p = atom_marginal(m, b, vv.idx);
  return vv.val == 1 ? p : 1.0 - p;
}

}  // namespace ff

// Posterior that rule r's context holds: the product of its literals'
// marginals.
inline double context_posterior(const CompiledModel& m, const Belief& b,
                                int rule, std::uint64_t* ops = nullptr) {
  double p = 1.0;
  for (const auto& vv : m.rules()[rule].context)
    p *= ff::varval_marginal(m, b, vv, ops);
  return p;
}

// Posterior that r is the unique covering rule for its action: its context
// posterior times, per competing rule, the probability that the competitor
// does not apply. Contradicting contexts contribute 1 exactly; otherwise
// the competitor's full context posterior is discounted.
inline double unique_rule_posterior(const CompiledModel& m, const Belief& b,
                                    int rule, std::uint64_t* ops = nullptr) {
  const auto& r = m.rules()[rule];
  double p = context_posterior(m, b, rule, ops);
  for (std::size_t k = 0; k < r.competitors.size() && p > 0.0; ++k) {
    if (r.contradicts[k]) continue;
    p *= 1.0 - context_posterior(m, b, r.competitors[k], ops);
  }
  return p;
}

struct PropagateResult {
  Belief belief;
  std::vector<std::pair<int, double>> rule_posterior;  // rule id -> P(R=r|a)
  double no_rule_mass = 1.0;
  double expected_reward = 0.0;  // posterior-weighted outcome rewards
  std::uint64_t context_ops = 0;
};

// One factored-frontier step: mix every rule's prediction by its
// posterior, persist everything else. The noise outcome nudges each
// changeable attribute toward uniform with probability N^r / |S_c|.
inline PropagateResult propagate(const CompiledModel& m, const Belief& b,
                                 int action) {
  const Vocabulary& v = m.vocab();
  PropagateResult out;
  out.belief = b;

  double total = 0.0;
  for (int id : m.gamma().rules_for(action)) {
    double p = unique_rule_posterior(m, b, id, &out.context_ops);
    if (p > 0.0) out.rule_posterior.emplace_back(id, p);
    total += p;
  }
  if (total > 1.0) {
    // the FF products can overshoot; rescale to keep a proper distribution
    for (auto& [id, p] : out.rule_posterior) p /= total;
    total = 1.0;
  }
  out.no_rule_mass = std::max(0.0, 1.0 - total);

  for (const auto& [id, weight] : out.rule_posterior) {
    const auto& rule = m.rules()[id];
    for (const auto& o : rule.outcomes)
      out.expected_reward += weight * o.prob * o.reward;
    double c = rule.noise_prob > 0.0 ? rule.noise_change_prob : 0.0;

    // binary atoms written by some outcome, or subject to noise
    std::vector<int> touched_atoms;
    std::vector<int> touched_fns;
    for (const auto& o : rule.outcomes)
      for (const auto& set : o.sets) {
        if (set.is_fn)
          touched_fns.push_back(set.idx);
        else
          touched_atoms.push_back(set.idx);
        ++out.context_ops;
      }
    if (c > 0.0) {
      touched_atoms.insert(touched_atoms.end(),
                           m.gamma().changeable_atoms.begin(),
                           m.gamma().changeable_atoms.end());
      touched_fns.insert(touched_fns.end(),
                         m.gamma().changeable_fn_slots.begin(),
                         m.gamma().changeable_fn_slots.end());
    }
    std::sort(touched_atoms.begin(), touched_atoms.end());
    touched_atoms.erase(
        std::unique(touched_atoms.begin(), touched_atoms.end()),
        touched_atoms.end());
    std::sort(touched_fns.begin(), touched_fns.end());
    touched_fns.erase(std::unique(touched_fns.begin(), touched_fns.end()),
                      touched_fns.end());

    for (int atom : touched_atoms) {
      double alpha = b.atom_p[atom];
      double pred = 0.0;
      double explicit_mass = 0.0;
      for (const auto& o : rule.outcomes) {
        explicit_mass += o.prob;
        double val = alpha;
        for (const auto& set : o.sets)
          if (!set.is_fn && set.idx == atom) {
            val = set.val;
            break;
          }
        pred += o.prob * val;
      }
      double noise_mass = 1.0 - explicit_mass;
      if (noise_mass > 0.0) {
        bool changeable = m.gamma().atom_changeable[atom];
        double noise_pred =
            changeable ? (1.0 - c) * alpha + c * 0.5 : alpha;
        pred += noise_mass * noise_pred;
      }
      out.belief.atom_p[atom] += weight * (pred - alpha);
    }
    for (int slot : touched_fns) {
      const auto& f = v.function(v.fn_of_slot(slot));
      int range = f.range_size();
      const std::vector<double>& alpha = b.fn_p[slot];
      std::vector<double> pred(range, 0.0);
      double explicit_mass = 0.0;
      for (const auto& o : rule.outcomes) {
        explicit_mass += o.prob;
        int set_val = -1;
        for (const auto& set : o.sets)
          if (set.is_fn && set.idx == slot) set_val = set.val;
        if (set_val >= 0) {
          pred[set_val - f.lo] += o.prob;
        } else {
          for (int k = 0; k < range; ++k) pred[k] += o.prob * alpha[k];
        }
      }
      double noise_mass = 1.0 - explicit_mass;
      if (noise_mass > 0.0) {
        bool changeable = m.gamma().fn_changeable[slot];
        for (int k = 0; k < range; ++k) {
          double nk = changeable ? (1.0 - c) * alpha[k] + c / range : alpha[k];
          pred[k] += noise_mass * nk;
        }
      }
      for (int k = 0; k < range; ++k)
        out.belief.fn_p[slot][k] += weight * (pred[k] - alpha[k]);
    }
  }

  for (auto& p : out.belief.atom_p) p = std::clamp(p, 0.0, 1.0);
  for (auto& cat : out.belief.fn_p)
    for (auto& p : cat) p = std::clamp(p, 0.0, 1.0);
  return out;
}

// Reward posterior: product of the marginals of the required attributes,
// extended
// additively over weighted reward entries.
inline double reward_posterior(const CompiledModel& m, const Belief& b) {
  double total = 0.0;
  for (const auto& e : m.reward().entries) {
    double prod = 1.0;
    for (const auto& vv : e.conj) prod *= ff::varval_marginal(m, b, vv, nullptr);
    total += e.weight * prod;
  }
  return total;
}

// Weights of the PRADA sampling distribution: per action the total
// posterior of having a unique covering rule ("action coverage").
inline std::vector<std::pair<int, double>> action_weights(
    const CompiledModel& m, const Belief& b, std::uint64_t* ops = nullptr) {
  std::vector<std::pair<int, double>> out;
  for (const auto& [action, ids] : m.gamma().by_action) {
    double w = 0.0;
    for (int id : ids) w += unique_rule_posterior(m, b, id, ops);
    out.emplace_back(action, w);
  }
  return out;
}

// Draws an action proportionally to its coverage; nullopt when nothing is
// covered.
inline std::optional<int> sample_action(const CompiledModel& m,
                                        const Belief& b, Rng& rng) {
  auto weights = action_weights(m, b);
  std::vector<double> w;
  w.reserve(weights.size());
  for (const auto& [a, p] : weights) w.push_back(p);
  std::size_t i = rng.weighted(w);
  if (i >= weights.size()) return std::nullopt;
  return weights[i].first;
}

// Sequence value with the t = 1..T convention: filter the belief through the
// sequence and sum the discounted reward posteriors. Linear in T.
inline Plan evaluate_sequence(const CompiledModel& m, const Belief& b0,
                              const std::vector<int>& actions, double gamma) {
  if (actions.empty()) throw LogicError("evaluate_sequence needs T >= 1");
  Plan plan;
  plan.actions = actions;
  Belief b = b0;
  double discount = 1.0;
  for (int a : actions) {
    PropagateResult step = propagate(m, b, a);
    b = std::move(step.belief);
    discount *= gamma;
    double u = reward_posterior(m, b);
    plan.posteriors.push_back(u);
    plan.q += discount * u;
    // action-dependent rewards from converted operators, zero elsewhere
    if (step.expected_reward != 0.0) plan.q += discount * step.expected_reward;
  }
  return plan;
}

namespace detail {

// Belief, step posterior and sampling weights after a fixed action prefix.
// Shared prefixes across sampled sequences are propagated once; results are
// bit-identical to recomputation since propagation never touches the rng.
struct PrefixCache {
  struct Node {
    Belief belief;
    double posterior = 0.0;
    double step_reward = 0.0;
    bool has_weights = false;
    std::vector<std::pair<int, double>> weights;
  };
  std::map<std::vector<int>, Node> nodes;
};

}  // namespace detail

// Samples n_samples sequences step by step from the coverage distribution,
// evaluates each by forward filtering, and returns the best sequence if its
// value exceeds theta. Dead prefixes (no coverage anywhere) are padded with
// doNothing. Deterministic given the seed; ties resolve to the earliest
// sample.
inline std::optional<Plan> prada_plan(const CompiledModel& m,
                                      const Belief& b0,
                                      const PradaConfig& cfg) {
  Rng rng(cfg.seed);
  detail::PrefixCache cache;
  cache.nodes.emplace(std::vector<int>{},
                      detail::PrefixCache::Node{b0, 0.0, 0.0, false, {}});

  std::optional<Plan> best;
  for (int sample = 0; sample < cfg.n_samples; ++sample) {
    std::vector<int> prefix;
    Belief local = b0;  // used only when the cache is disabled
    Plan plan;
    double discount = 1.0;
    for (int t = 0; t < cfg.horizon; ++t) {
      std::vector<std::pair<int, double>> weights;
      if (cfg.use_prefix_cache) {
        detail::PrefixCache::Node& node = cache.nodes.at(prefix);
        if (!node.has_weights) {
          node.weights = action_weights(m, node.belief);
          node.has_weights = true;
        }
        weights = node.weights;
      } else {
        weights = action_weights(m, local);
      }
      std::vector<double> w;
      w.reserve(weights.size());
      for (const auto& [a, p] : weights) w.push_back(p);
      std::size_t pick = rng.weighted(w);
      int action = pick < weights.size() ? weights[pick].first
                                         : m.vocab().do_nothing_action();
      double posterior;
      double step_reward = 0.0;
      if (cfg.use_prefix_cache) {
        const Belief& before = cache.nodes.at(prefix).belief;
        prefix.push_back(action);
        auto it = cache.nodes.find(prefix);
        if (it == cache.nodes.end()) {
          detail::PrefixCache::Node next;
          PropagateResult step = propagate(m, before, action);
          next.belief = std::move(step.belief);
          next.posterior = reward_posterior(m, next.belief);
          next.step_reward = step.expected_reward;
          it = cache.nodes.emplace(prefix, std::move(next)).first;
        }
        posterior = it->second.posterior;
        step_reward = it->second.step_reward;
      } else {
        prefix.push_back(action);
        PropagateResult step = propagate(m, local, action);
        local = std::move(step.belief);
        posterior = reward_posterior(m, local);
        step_reward = step.expected_reward;
      }
      discount *= cfg.gamma;
      plan.posteriors.push_back(posterior);
      plan.q += discount * posterior;
      if (step_reward != 0.0) plan.q += discount * step_reward;
    }
    plan.actions = prefix;
    if (!best || plan.q > best->q) best = std::move(plan);
  }
  if (best && best->q > cfg.theta) return best;
  return std::nullopt;
}

// Plan shortening: walk the plan once and repeatedly drop the action at the
// current position while the shortened sequence evaluates strictly better.
// The returned value never decreases.
inline Plan aprada_refine(const CompiledModel& m, const Belief& b0,
                          const Plan& input, double gamma) {
  Plan current = evaluate_sequence(m, b0, input.actions, gamma);
  for (std::size_t t = 0; t < current.actions.size(); ++t) {
    while (current.actions.size() > 1 && t < current.actions.size()) {
      std::vector<int> shorter = current.actions;
      shorter.erase(shorter.begin() + static_cast<std::ptrdiff_t>(t));
      Plan candidate = evaluate_sequence(m, b0, shorter, gamma);
      if (candidate.q > current.q)
        current = std::move(candidate);
      else
        break;
    }
  }
  return current;
}

}  // namespace nidplan

#endif
