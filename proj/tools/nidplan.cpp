// Command-line front end: plan one step, run replanning experiments,
// convert between the rule DSL and the PPDDL subset, and score rule sets
// against experience triples.
//
// Exit codes: 0 success, 2 parse error, 3 plan not found, 4 I/O error.

#include <CLI11.hpp>
#include <array>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <set>

#include "nidplan/harness.hpp"
#include "nidplan/ppddl.hpp"
#include "nidplan/prada.hpp"
#include "nidplan/rule_io.hpp"
#include "nidplan/tree_planners.hpp"

using nlohmann::json;
using namespace nidplan;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitNoPlan = 3;
constexpr int kExitIo = 4;

struct NoPlan : std::runtime_error {
  NoPlan() : std::runtime_error("no plan found") {}
};

int run_plan(const std::string& rules_path, const std::string& problem_path,
             const std::string& planner, int horizon, int samples,
             double theta, double gamma_opt, std::uint64_t seed, int branch,
             int episodes, double bias) {
  RuleFile rf = load_rules(rules_path);
  ProblemFile pf = load_problem(problem_path, rf);
  LoadedProblem lp = bind_problem(rf, pf);
  if (!lp.start) throw LogicError("planning needs a start state");
  double gamma = gamma_opt > 0 ? gamma_opt : lp.gamma;
  int T = horizon > 0 ? horizon : lp.horizon;
  GroundRuleSet g = ground_rules(lp.vocab, lp.rules, *lp.start);

  json out;
  out["planner"] = planner;
  out["gamma"] = gamma;
  out["horizon"] = T;
  if (planner == "prada" || planner == "aprada") {
    CompiledModel model = compile(lp.vocab, g, lp.goal, lp.reward);
    PradaConfig cfg;
    cfg.n_samples = samples;
    cfg.horizon = T;
    cfg.gamma = gamma;
    cfg.theta = theta;
    cfg.seed = seed;
    Belief b0 = init_belief(lp.vocab, *lp.start);
    auto plan = prada_plan(model, b0, cfg);
    if (plan && planner == "aprada")
      plan = aprada_refine(model, b0, *plan, gamma);
    if (!plan) throw NoPlan();
    json actions = json::array();
    for (int a : plan->actions) actions.push_back(lp.vocab.action_name(a));
    out["plan"] = actions;
    out["q"] = plan->q;
    out["reward_posteriors"] = plan->posteriors;
  } else if (planner == "sst") {
    TreePlanConfig cfg;
    cfg.horizon = T;
    cfg.gamma = gamma;
    cfg.branch = branch;
    cfg.seed = seed;
    SstResult r = sst_plan(lp.vocab, g, *lp.start, lp.reward, cfg);
    out["plan"] = {lp.vocab.action_name(r.action)};
    out["q"] = r.value;
  } else if (planner == "uct") {
    TreePlanConfig cfg;
    cfg.horizon = T;
    cfg.gamma = gamma;
    cfg.episodes = episodes;
    cfg.bias = bias;
    cfg.seed = seed;
    UctResult r = uct_plan(lp.vocab, g, *lp.start, lp.reward, cfg);
    out["plan"] = {lp.vocab.action_name(r.action)};
    out["q"] = r.root.count(r.action) ? r.root.at(r.action).q : 0.0;
    json table = json::object();
    for (const auto& [a, st] : r.root)
      table[lp.vocab.action_name(a)] = {{"n", st.n}, {"q", st.q}};
    out["q_table"] = table;
  } else {
    throw LogicError("unknown planner: " + planner);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_experiment_cmd(const std::string& config_path) {
  ExperimentConfig cfg =
      parse_experiment_config(read_file(config_path), config_path);
  // resolve data files relative to the config location
  std::filesystem::path base =
      std::filesystem::path(config_path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path.string() : (base / path).string();
  };
  RuleFile rf = load_rules(resolve(cfg.rules_path));
  ProblemFile pf = load_problem(resolve(cfg.problem_path), rf);
  Harness harness(rf, pf);
  Harness::Report rep = harness.run_experiment(cfg);

  json out;
  out["planner"] = cfg.planner;
  out["trials"] = rep.trials;
  out["success_rate"] = rep.success_rate;
  auto agg = [](const Harness::Aggregate& a) {
    return json{{"mean", a.mean}, {"sdm", a.sdm}};
  };
  out["reward"] = agg(rep.reward);
  // measured relative to the start state's reward; interpretation column
  out["reward_minus_baseline"] = agg(rep.reward_minus_baseline);
  out["actions"] = agg(rep.actions);
  out["plan_time_ms"] = agg(rep.plan_time_ms);
  write_file(cfg.out_report, out.dump(2) + "\n");
  write_file(cfg.out_trials, harness.trials_csv(cfg, rep));
  std::cout << "wrote " << cfg.out_report << " and " << cfg.out_trials << "\n";
  return 0;
}

int run_convert(const std::string& from, const std::string& to,
                const std::string& in_path, const std::string& out_path,
                bool unique_referents, bool noise_universal) {
  ConvertOptions opts;
  opts.unique_referents = unique_referents;
  opts.noise_as_universal = noise_universal;
  if (from == "ppddl" && to == "nid") {
    ConvertedRules conv = ppddl_to_nid(read_file(in_path), opts, in_path);
    for (const auto& d : conv.diagnostics) std::cerr << d << "\n";
    write_file(out_path, serialize_rules(conv.rules));
  } else if (from == "nid" && to == "ppddl") {
    RuleFile rf = load_rules(in_path);
    PpddlExport exp = nid_to_ppddl(rf, opts);
    for (const auto& d : exp.diagnostics) std::cerr << d << "\n";
    write_file(out_path, exp.text);
  } else {
    throw LogicError("supported conversions: ppddl->nid, nid->ppddl");
  }
  return 0;
}

// triples CSV: header line, then "state",action,"next_state" rows with
// semicolon-separated ground facts inside the quoted state fields
std::vector<std::array<std::string, 3>> read_csv_rows(
    const std::string& text) {
  std::vector<std::array<std::string, 3>> rows;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {  // header
      first = false;
      continue;
    }
    std::array<std::string, 3> row;
    std::size_t field = 0, i = 0;
    while (i < line.size() && field < 3) {
      std::string value;
      if (line[i] == '"') {
        ++i;
        while (i < line.size() && line[i] != '"') value.push_back(line[i++]);
        ++i;  // closing quote
      } else {
        while (i < line.size() && line[i] != ',') value.push_back(line[i++]);
      }
      if (i < line.size() && line[i] == ',') ++i;
      row[field++] = value;
    }
    if (field != 3)
      throw std::runtime_error("triples row needs 3 fields: " + line);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct FactRef {
  std::string name;
  std::vector<std::string> args;
  bool is_assign = false;
  int value = 0;
};

FactRef parse_fact(const std::string& text) {
  FactRef f;
  auto open = text.find('(');
  auto close = text.find(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw std::runtime_error("malformed fact: " + text);
  f.name = text.substr(0, open);
  std::string args = text.substr(open + 1, close - open - 1);
  std::istringstream in(args);
  std::string a;
  while (std::getline(in, a, ',')) {
    if (!a.empty()) f.args.push_back(a);
  }
  auto eq = text.find('=', close);
  if (eq != std::string::npos) {
    f.is_assign = true;
    f.value = std::stoi(text.substr(eq + 1));
  }
  return f;
}

int run_score(const std::string& rules_path, const std::string& triples_path,
              double alpha, double pmin) {
  RuleFile rf = load_rules(rules_path);
  auto rows = read_csv_rows(read_file(triples_path));

  // objects are whatever constants the triples mention, in sorted order
  std::set<std::string> names;
  std::vector<std::array<std::vector<FactRef>, 2>> states(rows.size());
  std::vector<FactRef> actions(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int side = 0; side < 2; ++side) {
      std::istringstream in(rows[r][side == 0 ? 0 : 2]);
      std::string fact;
      while (std::getline(in, fact, ';')) {
        if (fact.empty()) continue;
        FactRef f = parse_fact(fact);
        for (const auto& a : f.args) names.insert(a);
        states[r][side].push_back(std::move(f));
      }
    }
    actions[r] = parse_fact(rows[r][1]);
    for (const auto& a : actions[r].args) names.insert(a);
  }
  Vocabulary vocab = rf.vocabulary({names.begin(), names.end()});

  auto build_state = [&](const std::vector<FactRef>& facts) {
    State s = State::zero(vocab);
    for (const auto& f : facts) {
      std::vector<int> args;
      for (const auto& a : f.args) args.push_back(vocab.object_id(a));
      if (f.is_assign) {
        s.fns[vocab.fn_slot(*vocab.find_function(f.name), args)] = f.value;
      } else {
        auto pred = vocab.find_predicate(f.name);
        if (!pred) throw std::runtime_error("unknown predicate " + f.name);
        s.atoms[vocab.atom_index(*pred, args)] = 1;
      }
    }
    return eval_derived(vocab, s);
  };

  std::vector<ExperienceTriple> triples;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ExperienceTriple t;
    t.s = build_state(states[r][0]);
    t.next = build_state(states[r][1]);
    std::vector<int> args;
    for (const auto& a : actions[r].args) args.push_back(vocab.object_id(a));
    auto pred = vocab.find_predicate(actions[r].name);
    if (!pred) throw std::runtime_error("unknown action " + actions[r].name);
    t.action = vocab.action_index(*pred, args);
    triples.push_back(std::move(t));
  }
  double score = score_ruleset(vocab, rf.rules, triples, alpha, pmin);
  std::cout << io::fmt_number(score) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planning with noisy indeterministic deictic rules"};
  app.require_subcommand(1);

  auto* plan = app.add_subcommand("plan", "plan from a start state");
  std::string rules, problem, planner = "prada";
  int horizon = -1, samples = 300, branch = 2, episodes = 500;
  double theta = 0.0, gamma = -1.0, bias = 1.0;
  std::uint64_t seed = 1;
  plan->add_option("--rules", rules)->required();
  plan->add_option("--problem", problem)->required();
  plan->add_option("--planner", planner)
      ->check(CLI::IsMember({"sst", "uct", "prada", "aprada"}));
  plan->add_option("--horizon", horizon);
  plan->add_option("--samples", samples);
  plan->add_option("--theta", theta);
  plan->add_option("--gamma", gamma);
  plan->add_option("--seed", seed);
  plan->add_option("--branch", branch);
  plan->add_option("--episodes", episodes);
  plan->add_option("--bias", bias);

  auto* run = app.add_subcommand("run", "run a replanning experiment");
  std::string config;
  run->add_option("--config", config)->required();

  auto* convert = app.add_subcommand("convert", "convert rule formats");
  std::string from, to, in_path, out_path;
  bool unique_referents = false, noise_universal = false;
  convert->add_option("--from", from)->required();
  convert->add_option("--to", to)->required();
  convert->add_option("input", in_path)->required();
  convert->add_option("output", out_path)->required();
  convert->add_flag("--unique-referents", unique_referents);
  convert->add_flag("--noise-as-universal", noise_universal);

  auto* score = app.add_subcommand("score", "score rules on experience triples");
  std::string triples;
  double alpha = 1.0, pmin = 1e-9;
  score->add_option("--rules", rules)->required();
  score->add_option("--triples", triples)->required();
  score->add_option("--alpha", alpha);
  score->add_option("--pmin", pmin);

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed())
      return run_plan(rules, problem, planner, horizon, samples, theta, gamma,
                      seed, branch, episodes, bias);
    if (run->parsed()) return run_experiment_cmd(config);
    if (convert->parsed())
      return run_convert(from, to, in_path, out_path, unique_referents,
                         noise_universal);
    if (score->parsed()) return run_score(rules, triples, alpha, pmin);
  } catch (const NoPlan& e) {
    std::cerr << e.what() << "\n";
    return kExitNoPlan;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitParse;
  } catch (const ConvertError& e) {
    std::cerr << e.what() << "\n";
    return kExitParse;
  } catch (const LogicError& e) {
    std::cerr << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
