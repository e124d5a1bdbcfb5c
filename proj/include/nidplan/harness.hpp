#ifndef NIDPLAN_HARNESS_HPP
#define NIDPLAN_HARNESS_HPP

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nidplan/prada.hpp"
#include "nidplan/rule_io.hpp"
#include "nidplan/tree_planners.hpp"

namespace nidplan {

enum class SimNoisePolicy { no_change, flip_k };

// Per-trial rng streams: planner internals must not perturb world
// stochasticity, so the two streams derive independently from the seed.
constexpr std::uint64_t kPlannerStream = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kSimStream = 0x517cc1b727220a95ull;

struct ExperimentConfig {
  std::string rules_path;
  std::string problem_path;
  std::string planner = "prada";  // sst | uct | prada | aprada

  // planner parameters; negative values fall back to the problem file
  int horizon = -1;
  double gamma = -1.0;
  int samples = 300;      // PRADA sequence samples
  double theta = 0.0;
  int sst_branch = 2;
  int uct_episodes = 500;
  double uct_bias = 1.0;

  // trial control
  int max_actions = 30;
  int retries = 10;  // planning attempts per step before the trial fails
  int trials = 1;
  std::uint64_t seed = 1;
  SimNoisePolicy noise_policy = SimNoisePolicy::no_change;
  bool report_times = true;
  std::string out_report = "report.json";
  std::string out_trials = "trials.csv";
};

// key = value lines; '#' comments; unknown keys are errors
inline ExperimentConfig parse_experiment_config(const std::string& text,
                                                const std::string& file) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
    };
    trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(file, lineno, 1, "expected key = value");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    trim(key);
    trim(value);
    try {
      if (key == "rules")
        cfg.rules_path = value;
      else if (key == "problem")
        cfg.problem_path = value;
      else if (key == "planner")
        cfg.planner = value;
      else if (key == "horizon")
        cfg.horizon = std::stoi(value);
      else if (key == "gamma")
        cfg.gamma = std::stod(value);
      else if (key == "samples")
        cfg.samples = std::stoi(value);
      else if (key == "theta")
        cfg.theta = std::stod(value);
      else if (key == "sst_branch")
        cfg.sst_branch = std::stoi(value);
      else if (key == "uct_episodes")
        cfg.uct_episodes = std::stoi(value);
      else if (key == "uct_bias")
        cfg.uct_bias = std::stod(value);
      else if (key == "max_actions")
        cfg.max_actions = std::stoi(value);
      else if (key == "retries")
        cfg.retries = std::stoi(value);
      else if (key == "trials")
        cfg.trials = std::stoi(value);
      else if (key == "seed")
        cfg.seed = std::stoull(value);
      else if (key == "noise_policy")
        cfg.noise_policy = value == "flip-k" ? SimNoisePolicy::flip_k
                                             : SimNoisePolicy::no_change;
      else if (key == "report_times")
        cfg.report_times = value == "true" || value == "1";
      else if (key == "out_report")
        cfg.out_report = value;
      else if (key == "out_trials")
        cfg.out_trials = value;
      else
        throw ParseError(file, lineno, 1, "unknown key: " + key);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(file, lineno, 1, "bad value for " + key);
    }
  }
  if (cfg.trials < 1 || cfg.max_actions < 1 || cfg.retries < 1)
    throw ParseError(file, 1, 1,
                     "trials, max_actions and retries must be at least 1");
  return cfg;
}

// The simulator's noise policy: flip k changeable attributes, k drawn from
// a Poisson with mean N^r truncated at |S_c|.
inline NoiseSampler flip_k_sampler() {
  return [](const Vocabulary& v, const GroundRuleSet& gamma,
            const GroundRule& rule, const State& s, Rng& rng) -> State {
    int sc = gamma.changeable_count();
    if (sc == 0) return s;
    int k = std::min(rng.poisson(rule.noise_changes), sc);
    State next = s;
    std::vector<int> picked;
    for (int flip = 0; flip < k; ++flip) {
      int idx;
      do {
        idx = static_cast<int>(rng.below(sc));
      } while (std::find(picked.begin(), picked.end(), idx) != picked.end());
      picked.push_back(idx);
      if (idx < static_cast<int>(gamma.changeable_atoms.size())) {
        int atom = gamma.changeable_atoms[idx];
        next.atoms[atom] ^= 1;
      } else {
        int slot =
            gamma.changeable_fn_slots[idx - gamma.changeable_atoms.size()];
        const auto& f = v.function(v.fn_of_slot(slot));
        if (f.range_size() > 1) {
          int val;
          do {
            val = f.lo + static_cast<int>(rng.below(f.range_size()));
          } while (val == next.fns[slot]);
          next.fns[slot] = val;
        }
      }
    }
    return eval_derived(v, next);
  };
}

// One generative world step under the configured noise policy.
inline State simulate_step(const Vocabulary& v, const GroundRuleSet& gamma,
                           const State& s, int action, Rng& rng,
                           SimNoisePolicy policy) {
  NoiseSampler sampler;
  if (policy == SimNoisePolicy::flip_k) sampler = flip_k_sampler();
  return sample_successor(v, gamma, s, action, rng, sampler).next;
}

struct StepLog {
  std::uint64_t state_digest = 0;
  int action = -1;
  double planner_value = 0.0;
};

struct TrialResult {
  bool success = false;
  int actions = 0;
  double reward = 0.0;
  double reward_minus_baseline = 0.0;
  double plan_time_ms = 0.0;
  std::vector<StepLog> log;
};

// Owns the loaded problem, the grounded rules and the compiled DBN; trials
// and experiments run against this immutable bundle.
class Harness {
 public:
  Harness(RuleFile rule_file, ProblemFile problem_file)
      : lp_(bind_problem(rule_file, problem_file)) {
    if (!lp_.start)
      throw LogicError("the experiment harness needs a start state");
    gamma_ = ground_rules(lp_.vocab, lp_.rules, *lp_.start);
    model_.emplace(compile(lp_.vocab, gamma_, lp_.goal, lp_.reward));
  }

  Harness(const Harness&) = delete;
  Harness& operator=(const Harness&) = delete;

  const LoadedProblem& problem() const { return lp_; }
  const GroundRuleSet& gamma() const { return gamma_; }
  const CompiledModel& model() const { return *model_; }

  struct PlanChoice {
    bool found = false;
    int action = -1;
    double value = 0.0;
  };

  PlanChoice plan_once(const ExperimentConfig& cfg, const State& s,
                       std::uint64_t seed) const {
    int horizon = cfg.horizon > 0 ? cfg.horizon : lp_.horizon;
    double gamma = cfg.gamma > 0 ? cfg.gamma : lp_.gamma;
    PlanChoice choice;
    if (cfg.planner == "sst") {
      TreePlanConfig tc;
      tc.horizon = horizon;
      tc.gamma = gamma;
      tc.branch = cfg.sst_branch;
      tc.seed = seed;
      SstResult r = sst_plan(lp_.vocab, gamma_, s, lp_.reward, tc);
      choice = {true, r.action, r.value};
    } else if (cfg.planner == "uct") {
      TreePlanConfig tc;
      tc.horizon = horizon;
      tc.gamma = gamma;
      tc.episodes = cfg.uct_episodes;
      tc.bias = cfg.uct_bias;
      tc.seed = seed;
      UctResult r = uct_plan(lp_.vocab, gamma_, s, lp_.reward, tc);
      choice = {true, r.action,
                r.root.count(r.action) ? r.root.at(r.action).q : 0.0};
    } else if (cfg.planner == "prada" || cfg.planner == "aprada") {
      PradaConfig pc;
      pc.n_samples = cfg.samples;
      pc.horizon = horizon;
      pc.gamma = gamma;
      pc.theta = cfg.theta;
      pc.seed = seed;
      Belief b = init_belief(lp_.vocab, s);
      auto plan = prada_plan(*model_, b, pc);
      if (plan && cfg.planner == "aprada")
        plan = aprada_refine(*model_, b, *plan, gamma);
      if (plan && !plan->actions.empty())
        choice = {true, plan->actions.front(), plan->q};
    } else {
      throw LogicError("unknown planner: " + cfg.planner);
    }
    return choice;
  }

  // Closed-loop replanning: check the goal, plan (with retries), execute one
  // action through the simulator, repeat. Deterministic given the seed; the
  // planner and the simulator own independent rng streams.
  TrialResult run_trial(const ExperimentConfig& cfg,
                        std::uint64_t seed) const {
    Rng planner_rng(seed ^ kPlannerStream);
    Rng sim_rng(seed ^ kSimStream);
    double gamma = cfg.gamma > 0 ? cfg.gamma : lp_.gamma;

    TrialResult res;
    State s = *lp_.start;
    double discount = 1.0;
    double baseline = lp_.reward.eval(*lp_.start);
    auto t0 = std::chrono::steady_clock::now();
    for (int step = 0;; ++step) {
      res.reward += discount * lp_.reward.eval(s);
      if (holds(lp_.vocab, s, lp_.goal)) {
        res.success = true;
        res.log.push_back({s.digest(), -1, 0.0});
        break;
      }
      if (step >= cfg.max_actions) break;
      PlanChoice choice;
      for (int attempt = 0; attempt < cfg.retries && !choice.found; ++attempt)
        choice = plan_once(cfg, s, planner_rng.bits());
      if (!choice.found) break;
      res.log.push_back({s.digest(), choice.action, choice.value});
      s = simulate_step(lp_.vocab, gamma_, s, choice.action, sim_rng,
                        cfg.noise_policy);
      ++res.actions;
      discount *= gamma;
    }
    auto t1 = std::chrono::steady_clock::now();
    res.plan_time_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    res.reward_minus_baseline = res.reward - baseline;
    return res;
  }

  struct Aggregate {
    double mean = 0.0;
    double sdm = 0.0;  // sample standard deviation of the mean
  };

  struct Report {
    int trials = 0;
    double success_rate = 0.0;
    Aggregate reward, reward_minus_baseline, actions, plan_time_ms;
    std::vector<TrialResult> results;
  };

  static Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate a;
    if (xs.empty()) return a;
    for (double x : xs) a.mean += x;
    a.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - a.mean) * (x - a.mean);
      double stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
      a.sdm = stddev / std::sqrt(static_cast<double>(xs.size()));
    }
    return a;
  }

  Report run_experiment(const ExperimentConfig& cfg) const {
    Report rep;
    rep.trials = cfg.trials;
    std::vector<double> rewards, baselines, actions, times;
    int successes = 0;
    for (int i = 0; i < cfg.trials; ++i) {
      TrialResult r = run_trial(cfg, cfg.seed + static_cast<std::uint64_t>(i));
      successes += r.success;
      rewards.push_back(r.reward);
      baselines.push_back(r.reward_minus_baseline);
      actions.push_back(r.actions);
      times.push_back(r.plan_time_ms);
      rep.results.push_back(std::move(r));
    }
    rep.success_rate = static_cast<double>(successes) / cfg.trials;
    rep.reward = aggregate(rewards);
    rep.reward_minus_baseline = aggregate(baselines);
    rep.actions = aggregate(actions);
    rep.plan_time_ms = cfg.report_times ? aggregate(times) : Aggregate{};
    return rep;
  }

  std::string trials_csv(const ExperimentConfig& cfg,
                         const Report& rep) const {
    std::ostringstream os;
    os << "trial,seed,success,actions,reward,plan_time_ms\n";
    for (std::size_t i = 0; i < rep.results.size(); ++i) {
      const TrialResult& r = rep.results[i];
      os << i << ',' << cfg.seed + i << ',' << (r.success ? 1 : 0) << ','
         << r.actions << ',' << io::fmt_number(r.reward) << ','
         << (cfg.report_times ? io::fmt_number(r.plan_time_ms) : "0") << "\n";
    }
    return os.str();
  }

 private:
  LoadedProblem lp_;
  GroundRuleSet gamma_;
  std::optional<CompiledModel> model_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace nidplan

#endif
