#ifndef NIDPLAN_TREE_PLANNERS_HPP
#define NIDPLAN_TREE_PLANNERS_HPP

#include <cmath>
#include <map>
#include <unordered_map>
#include <vector>

#include "nidplan/rules.hpp"

namespace nidplan {

struct TreePlanConfig {
  int horizon = 4;          // d
  double gamma = 0.95;
  int branch = 1;           // b, SST successor samples per action
  int episodes = 100;       // UCT budget
  double bias = 1.0;        // c in the upper confidence bound
  std::uint64_t seed = 0;
};

// Actions with a unique covering rule in s, in ground-action order, plus the
// built-in doNothing. Everything else would fall to the noisy default rule
// and is discarded up front.
inline std::vector<int> applicable_actions(const Vocabulary& v,
                                           const GroundRuleSet& gamma,
                                           const State& s) {
  std::vector<int> out;
  for (const auto& [action, ids] : gamma.by_action) {
    if (action == v.do_nothing_action()) continue;
    if (unique_covering_rule(gamma, s, action)) out.push_back(action);
  }
  out.push_back(v.do_nothing_action());
  return out;
}

namespace detail {

inline int pick_uniform(Rng& rng, const std::vector<int>& items) {
  return items[rng.below(items.size())];
}

}  // namespace detail

struct SstResult {
  int action = -1;
  double value = 0.0;
  // logical node counts per tree level; duplicate-successor child sharing
  // saves recomputation, never nodes
  std::vector<std::uint64_t> level_nodes;
};

// Full-grown sparse sampling tree: every applicable action at every node,
// b sampled successors per action, Bellman backup from the leaves. Noise
// samples keep the state and shrink the subtree value by one extra gamma.
inline SstResult sst_plan(const Vocabulary& v, const GroundRuleSet& gamma,
                          const State& s0, const RewardSpec& reward,
                          const TreePlanConfig& cfg) {
  Rng rng(cfg.seed);

  struct NodeEval {
    double value = 0.0;
    std::vector<double> qs;
    std::vector<int> actions;
    std::vector<std::uint64_t> levels;  // logical subtree nodes per depth
  };

  std::function<NodeEval(const State&, int)> eval_node =
      [&](const State& s, int depth) -> NodeEval {
    NodeEval out;
    out.levels.assign(cfg.horizon - depth + 1, 0);
    out.levels[0] = 1;
    double r = reward.eval(s);
    if (depth == cfg.horizon) {
      out.value = r;
      return out;
    }
    out.actions = applicable_actions(v, gamma, s);
    std::unordered_map<State, NodeEval, StateHash> shared;
    struct Group {
      State state;
      bool noise = false;
      double reward = 0.0;
      int count = 0;
    };
    double best = 0.0;
    bool first = true;
    for (int a : out.actions) {
      std::vector<Group> groups;
      if (a == v.do_nothing_action()) {
        groups.push_back({s, false, 0.0, cfg.branch});
      } else {
        for (int k = 0; k < cfg.branch; ++k) {
          StepResult step = sample_successor(v, gamma, s, a, rng);
          bool noise = step.kind == StepKind::noise;
          bool merged = false;
          for (auto& g : groups)
            if (g.noise == noise && g.reward == step.reward &&
                g.state == step.next) {
              ++g.count;
              merged = true;
              break;
            }
          if (!merged) groups.push_back({step.next, noise, step.reward, 1});
        }
      }
      double sum = 0.0;
      for (const auto& g : groups) {
        auto it = shared.find(g.state);
        if (it == shared.end())
          it = shared.emplace(g.state, eval_node(g.state, depth + 1)).first;
        const NodeEval& child = it->second;
        for (std::size_t k = 0; k < child.levels.size(); ++k)
          out.levels[k + 1] += child.levels[k] * g.count;
        sum += g.count *
               (g.reward + (g.noise ? cfg.gamma : 1.0) * child.value);
      }
      double q = sum / cfg.branch;
      out.qs.push_back(q);
      if (first || q > best) best = q;
      first = false;
    }
    out.value = r + cfg.gamma * best;
    return out;
  };

  NodeEval root = eval_node(s0, 0);
  SstResult res;
  res.level_nodes = root.levels;
  res.value = root.value;
  double best = root.qs[0];
  for (double q : root.qs) best = std::max(best, q);
  std::vector<int> argmax;
  for (std::size_t i = 0; i < root.qs.size(); ++i)
    if (root.qs[i] >= best - 1e-12) argmax.push_back(root.actions[i]);
  res.action = detail::pick_uniform(rng, argmax);
  return res;
}

struct UctStats {
  int n = 0;
  double q = 0.0;
};

struct UctNode {
  int n_total = 0;
  std::map<int, UctStats> arms;  // per applicable action
};

struct UctResult {
  int action = -1;
  std::map<int, UctStats> root;   // Q_UCT at the root
  std::uint64_t tree_size = 0;
};

// UCT: unexplored actions first (uniformly), then
// argmax of Q + c sqrt(log n_s / n_sa); running-mean value updates at the
// end of each episode. Noise transitions stay in state, with the returns
// beyond them discounted one extra step.
inline UctResult uct_plan(const Vocabulary& v, const GroundRuleSet& gamma,
                          const State& s0, const RewardSpec& reward,
                          const TreePlanConfig& cfg) {
  Rng rng(cfg.seed);
  std::unordered_map<State, UctNode, StateHash> tree;

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    State s = s0;
    std::vector<State> states = {s};
    std::vector<int> chosen;
    std::vector<double> rewards = {reward.eval(s)};
    std::vector<bool> noisy;
    for (int t = 0; t < cfg.horizon; ++t) {
      auto [it, fresh] = tree.try_emplace(s);
      UctNode& node = it->second;
      if (fresh)
        for (int a : applicable_actions(v, gamma, s)) node.arms[a];
      std::vector<int> unexplored;
      for (const auto& [a, st] : node.arms)
        if (st.n == 0) unexplored.push_back(a);
      int a;
      if (!unexplored.empty()) {
        a = detail::pick_uniform(rng, unexplored);
      } else {
        double best = -1e300;
        std::vector<int> argmax;
        for (const auto& [cand, st] : node.arms) {
          double bound =
              st.q + cfg.bias * std::sqrt(std::log(static_cast<double>(
                                              node.n_total)) /
                                          st.n);
          if (bound > best + 1e-12) {
            best = bound;
            argmax = {cand};
          } else if (bound >= best - 1e-12) {
            argmax.push_back(cand);
          }
        }
        a = detail::pick_uniform(rng, argmax);
      }
      double step_reward = 0.0;
      bool noise = false;
      if (a == v.do_nothing_action()) {
        // identity dynamics
      } else {
        StepResult step = sample_successor(v, gamma, s, a, rng);
        noise = step.kind == StepKind::noise;
        s = step.next;
        step_reward = step.reward;
      }
      chosen.push_back(a);
      noisy.push_back(noise);
      states.push_back(s);
      rewards.push_back(reward.eval(s) + step_reward);
    }
    // credit total discounted rewards backwards with running-mean updates
    double g = rewards[cfg.horizon];
    for (int t = cfg.horizon - 1; t >= 0; --t) {
      g = rewards[t] + cfg.gamma * (noisy[t] ? cfg.gamma : 1.0) * g;
      UctNode& node = tree[states[t]];
      UctStats& st = node.arms[chosen[t]];
      st.n += 1;
      st.q += (g - st.q) / st.n;
      node.n_total += 1;
    }
  }

  UctResult res;
  const UctNode& root = tree[s0];
  res.root = root.arms;
  res.tree_size = tree.size();
  double best = -1e300;
  std::vector<int> argmax;
  for (const auto& [a, st] : root.arms) {
    if (st.n == 0) continue;
    if (st.q > best + 1e-12) {
      best = st.q;
      argmax = {a};
    } else if (st.q >= best - 1e-12) {
      argmax.push_back(a);
    }
  }
  res.action = argmax.empty() ? v.do_nothing_action()
                              : detail::pick_uniform(rng, argmax);
  return res;
}

}  // namespace nidplan

#endif
