#ifndef NIDPLAN_PPDDL_HPP
#define NIDPLAN_PPDDL_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nidplan/rule_io.hpp"
#include "nidplan/rules.hpp"

namespace nidplan {

struct ConvertError : std::runtime_error {
  explicit ConvertError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace ppddl {

// --- s-expressions ---

struct Sexp {
  bool is_list = false;
  std::string atom;
  std::vector<Sexp> kids;
  int line = 1, col = 1;

  const Sexp& kid(std::size_t i) const {
    if (!is_list || i >= kids.size())
      throw ConvertError("malformed form near line " + std::to_string(line));
    return kids[i];
  }
  bool head_is(const std::string& s) const {
    return is_list && !kids.empty() && !kids[0].is_list && kids[0].atom == s;
  }
};

inline std::vector<Sexp> parse_sexps(const std::string& text,
                                     const std::string& file) {
  std::vector<Sexp> stack_guard;
  std::vector<Sexp*> stack;
  std::vector<Sexp> roots;
  int line = 1, col = 1;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError(file, line, col, msg);
  };
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    auto bump = [&]() {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    };
    if (c == ';') {
      while (i < text.size() && text[i] != '\n') bump();
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      bump();
    } else if (c == '(') {
      Sexp s;
      s.is_list = true;
      s.line = line;
      s.col = col;
      if (stack.empty()) {
        roots.push_back(std::move(s));
        stack.push_back(&roots.back());
      } else {
        stack.back()->kids.push_back(std::move(s));
        stack.push_back(&stack.back()->kids.back());
      }
      bump();
    } else if (c == ')') {
      if (stack.empty()) fail("unbalanced ')'");
      stack.pop_back();
      bump();
    } else {
      Sexp s;
      s.line = line;
      s.col = col;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(
                                    text[i])) &&
             text[i] != '(' && text[i] != ')' && text[i] != ';') {
        s.atom.push_back(text[i]);
        bump();
      }
      if (stack.empty())
        fail("top-level atom outside any form");
      else
        stack.back()->kids.push_back(std::move(s));
    }
  }
  if (!stack.empty()) fail("unbalanced '('");
  return roots;
}

inline double parse_prob(const Sexp& s) {
  const std::string& t = s.atom;
  auto slash = t.find('/');
  try {
    if (slash != std::string::npos)
      return std::stod(t.substr(0, slash)) / std::stod(t.substr(slash + 1));
    return std::stod(t);
  } catch (...) {
    throw ConvertError("expected a probability, got '" + t + "' near line " +
                       std::to_string(s.line));
  }
}

// --- AST of the supported subset ---

struct Gd {
  enum class Kind { atom, negation, conj, disj, imply, forall, equals };
  Kind kind = Kind::atom;
  std::string name;
  std::vector<std::string> args;  // ?vars keep their question mark
  std::vector<Gd> kids;
  std::vector<std::pair<std::string, std::string>> quantified;  // (var, type)
};

struct EffectNode {
  enum class Kind { literal, conj, probabilistic, conditional, forall, reward };
  Kind kind = Kind::conj;
  std::string name;               // literal
  std::vector<std::string> args;  // literal
  bool positive = true;           // literal
  std::vector<EffectNode> kids;
  std::vector<double> probs;  // probabilistic, parallel to kids
  std::vector<std::pair<std::string, std::string>> quantified;  // forall
  Gd condition;                                                 // conditional
  double reward_delta = 0.0;                                    // reward
};

struct PpddlAction {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;  // (?b, type)
  std::optional<Gd> precondition;
  EffectNode effect;
};

struct PpddlDomain {
  std::string name;
  std::vector<std::string> requirements;
  std::vector<std::string> types;
  std::vector<std::pair<std::string, int>> predicates;  // name, arity
  std::vector<PpddlAction> actions;
};

// --- parsing the subset ---

inline std::vector<std::pair<std::string, std::string>> parse_typed_list(
    const Sexp& list, std::size_t from = 0) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<std::string> pending;
  for (std::size_t i = from; i < list.kids.size(); ++i) {
    const Sexp& k = list.kids[i];
    if (k.is_list) throw ConvertError("unexpected list in a typed list");
    if (k.atom == "-") {
      if (i + 1 >= list.kids.size())
        throw ConvertError("dangling '-' in typed list");
      const std::string& type = list.kids[i + 1].atom;
      for (auto& p : pending) out.emplace_back(p, type);
      pending.clear();
      ++i;
    } else {
      pending.push_back(k.atom);
    }
  }
  for (auto& p : pending) out.emplace_back(p, "");
  return out;
}

inline Gd parse_gd(const Sexp& s) {
  Gd g;
  if (!s.is_list || s.kids.empty())
    throw ConvertError("malformed condition near line " +
                       std::to_string(s.line));
  const std::string& head = s.kids[0].atom;
  if (s.kids[0].is_list)
    throw ConvertError("malformed condition near line " +
                       std::to_string(s.line));
  if (head == "and" || head == "or") {
    g.kind = head == "and" ? Gd::Kind::conj : Gd::Kind::disj;
    for (std::size_t i = 1; i < s.kids.size(); ++i)
      g.kids.push_back(parse_gd(s.kids[i]));
    return g;
  }
  if (head == "not") {
    g.kind = Gd::Kind::negation;
    g.kids.push_back(parse_gd(s.kid(1)));
    return g;
  }
  if (head == "imply") {
    g.kind = Gd::Kind::imply;
    g.kids.push_back(parse_gd(s.kid(1)));
    g.kids.push_back(parse_gd(s.kid(2)));
    return g;
  }
  if (head == "forall") {
    g.kind = Gd::Kind::forall;
    g.quantified = parse_typed_list(s.kid(1));
    g.kids.push_back(parse_gd(s.kid(2)));
    return g;
  }
  if (head == "=") {
    g.kind = Gd::Kind::equals;
    g.args = {s.kid(1).atom, s.kid(2).atom};
    return g;
  }
  g.kind = Gd::Kind::atom;
  g.name = head;
  for (std::size_t i = 1; i < s.kids.size(); ++i) g.args.push_back(s.kids[i].atom);
  return g;
}

inline EffectNode parse_effect(const Sexp& s) {
  EffectNode e;
  if (!s.is_list || s.kids.empty())
    throw ConvertError("malformed effect near line " + std::to_string(s.line));
  const std::string& head = s.kids[0].atom;
  if (head == "and") {
    e.kind = EffectNode::Kind::conj;
    for (std::size_t i = 1; i < s.kids.size(); ++i)
      e.kids.push_back(parse_effect(s.kids[i]));
    return e;
  }
  if (head == "probabilistic") {
    e.kind = EffectNode::Kind::probabilistic;
    for (std::size_t i = 1; i + 1 < s.kids.size(); i += 2) {
      e.probs.push_back(parse_prob(s.kid(i)));
      e.kids.push_back(parse_effect(s.kid(i + 1)));
    }
    if (e.probs.empty())
      throw ConvertError("empty probabilistic effect near line " +
                         std::to_string(s.line));
    return e;
  }
  if (head == "when") {
    e.kind = EffectNode::Kind::conditional;
    e.condition = parse_gd(s.kid(1));
    e.kids.push_back(parse_effect(s.kid(2)));
    return e;
  }
  if (head == "forall") {
    e.kind = EffectNode::Kind::forall;
    e.quantified = parse_typed_list(s.kid(1));
    e.kids.push_back(parse_effect(s.kid(2)));
    return e;
  }
  if (head == "increase" || head == "decrease") {
    e.kind = EffectNode::Kind::reward;
    if (!s.kid(1).head_is("reward"))
      throw ConvertError("only (increase (reward) k) arithmetic is supported");
    e.reward_delta = parse_prob(s.kid(2));
    if (head == "decrease") e.reward_delta = -e.reward_delta;
    return e;
  }
  if (head == "not") {
    const Sexp& inner = s.kid(1);
    e.kind = EffectNode::Kind::literal;
    e.positive = false;
    e.name = inner.kid(0).atom;
    for (std::size_t i = 1; i < inner.kids.size(); ++i)
      e.args.push_back(inner.kids[i].atom);
    return e;
  }
  e.kind = EffectNode::Kind::literal;
  e.name = head;
  for (std::size_t i = 1; i < s.kids.size(); ++i) e.args.push_back(s.kids[i].atom);
  return e;
}

inline PpddlDomain parse_domain(const std::string& text,
                                const std::string& file = "<ppddl>") {
  std::vector<Sexp> roots = parse_sexps(text, file);
  if (roots.empty() || !roots[0].head_is("define"))
    throw ConvertError("expected (define (domain ...) ...)");
  PpddlDomain d;
  const Sexp& def = roots[0];
  for (std::size_t i = 1; i < def.kids.size(); ++i) {
    const Sexp& sec = def.kids[i];
    if (sec.head_is("domain")) {
      d.name = sec.kid(1).atom;
    } else if (sec.head_is(":requirements")) {
      for (std::size_t k = 1; k < sec.kids.size(); ++k)
        d.requirements.push_back(sec.kids[k].atom);
    } else if (sec.head_is(":types")) {
      for (std::size_t k = 1; k < sec.kids.size(); ++k)
        d.types.push_back(sec.kids[k].atom);
    } else if (sec.head_is(":predicates")) {
      for (std::size_t k = 1; k < sec.kids.size(); ++k) {
        const Sexp& p = sec.kids[k];
        d.predicates.emplace_back(
            p.kid(0).atom, static_cast<int>(parse_typed_list(p, 1).size()));
      }
    } else if (sec.head_is(":action")) {
      PpddlAction a;
      a.name = sec.kid(1).atom;
      std::size_t k = 2;
      while (k + 1 < sec.kids.size() + 1 && k < sec.kids.size()) {
        const std::string& key = sec.kids[k].atom;
        if (key == ":parameters") {
          a.params = parse_typed_list(sec.kid(k + 1));
          k += 2;
        } else if (key == ":precondition") {
          a.precondition = parse_gd(sec.kid(k + 1));
          k += 2;
        } else if (key == ":effect") {
          a.effect = parse_effect(sec.kid(k + 1));
          k += 2;
        } else {
          throw ConvertError("unsupported action section " + key);
        }
      }
      d.actions.push_back(std::move(a));
    } else {
      throw ConvertError("unsupported domain section near line " +
                         std::to_string(sec.line));
    }
  }
  return d;
}

}  // namespace ppddl

// --- PPDDL -> NID ---

struct ConvertOptions {
  // treat universal effects as deictic references that pick a unique object
  bool unique_referents = false;
  // export noise outcomes as independent universal probabilistic effects
  bool noise_as_universal = false;
  int max_rules_per_action = 256;
};

struct ConvertedRules {
  RuleFile rules;
  std::vector<std::string> diagnostics;  // warnings; hard errors throw
};

namespace ppddl_detail {

using ppddl::EffectNode;
using ppddl::Gd;

inline std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) out.push_back(c == '-' ? '_' : c);
  return out;
}

struct Converter {
  const ppddl::PpddlDomain& dom;
  const ConvertOptions& opts;
  ConvertedRules out;
  int aux_counter = 0;

  explicit Converter(const ppddl::PpddlDomain& d, const ConvertOptions& o)
      : dom(d), opts(o) {}

  int predicate_id(const std::string& raw, int arity, int line_hint = 0) {
    std::string name = sanitize(raw);
    if (auto id = out.rules.find_predicate(name)) {
      if (out.rules.predicates[*id].arity != arity)
        throw ConvertError("arity mismatch for predicate " + name);
      return *id;
    }
    (void)line_hint;
    throw ConvertError("unknown predicate: " + name);
  }

  void declare() {
    for (const auto& t : dom.types)
      out.rules.predicates.push_back({sanitize(t), 1, PredKind::primitive});
    for (const auto& [name, arity] : dom.predicates) {
      if (out.rules.find_predicate(sanitize(name))) continue;  // typed twice
      out.rules.predicates.push_back({sanitize(name), arity,
                                      PredKind::primitive});
    }
    for (const auto& a : dom.actions)
      out.rules.predicates.push_back(
          {sanitize(a.name), static_cast<int>(a.params.size()),
           PredKind::action});
  }

  // a rule under construction
  struct Partial {
    std::vector<std::string> var_names;  // index = rule-local id
    std::map<std::string, int> var_ids;  // "?b" -> id
    std::vector<Conjunct> context;
    EffectNode effect;
  };

  int var_of(Partial& p, const std::string& name) {
    auto it = p.var_ids.find(name);
    if (it != p.var_ids.end()) return it->second;
    int id = static_cast<int>(p.var_names.size());
    p.var_names.push_back(name);
    p.var_ids.emplace(name, id);
    return id;
  }

  Conjunct atom_conjunct(Partial& p, const std::string& name,
                         const std::vector<std::string>& args, bool positive) {
    int pred = predicate_id(name, static_cast<int>(args.size()));
    std::vector<Term> terms;
    for (const auto& a : args) {
      if (a.empty() || a[0] != '?')
        throw ConvertError("constant argument '" + a +
                           "' is not supported in operators");
      terms.push_back(Term::variable(var_of(p, a)));
    }
    return Conjunct::lit(pred, std::move(terms), positive);
  }

  void push_unique(std::vector<Conjunct>& ctx, Conjunct c) {
    if (std::find(ctx.begin(), ctx.end(), c) == ctx.end())
      ctx.push_back(std::move(c));
  }

  // Recognize the uniqueness precondition emitted for deictic references:
  // (forall (vars) (imply (and ...) (and (= x y)...))). It is implied by
  // the unique-covering-rule semantics, so on import it carries no extra
  // information and is dropped.
  bool is_uniqueness_pattern(const Gd& g) const {
    if (g.kind != Gd::Kind::forall || g.kids.size() != 1) return false;
    const Gd& body = g.kids[0];
    if (body.kind != Gd::Kind::imply || body.kids.size() != 2) return false;
    const Gd& conclusion = body.kids[1];
    if (conclusion.kind == Gd::Kind::equals) return true;
    if (conclusion.kind != Gd::Kind::conj) return false;
    for (const auto& k : conclusion.kids)
      if (k.kind != Gd::Kind::equals) return false;
    return true;
  }

  // Synthesize a derived predicate equivalent to
  //   forall q1..qk: not (l1 and ... and ln)
  // over the given free variables; multi-variable quantification nests.
  Conjunct synthesize_forall_not(
      Partial& p, const std::vector<std::string>& quantified,
      const std::vector<Conjunct>& body_over_partial_vars) {
    // free variables = every rule variable used by the body minus quantified
    std::vector<int> q_ids;
    for (const auto& q : quantified) q_ids.push_back(var_of(p, q));
    std::vector<int> free;
    for (const auto& c : body_over_partial_vars)
      for (const auto& t : c.args)
        if (t.is_var() &&
            std::find(q_ids.begin(), q_ids.end(), t.var()) == q_ids.end() &&
            std::find(free.begin(), free.end(), t.var()) == free.end())
          free.push_back(t.var());
    std::sort(free.begin(), free.end());

    // innermost definition quantifies the last variable
    auto remap = [&](const std::vector<Conjunct>& body,
                     const std::vector<int>& head_vars,
                     int quant_rule_var) {
      std::vector<Conjunct> out_body;
      for (const auto& c : body) {
        Conjunct g = c;
        for (auto& t : g.args) {
          if (!t.is_var()) continue;
          if (t.var() == quant_rule_var) {
            t = Term::variable(static_cast<int>(head_vars.size()));
          } else {
            auto it = std::find(head_vars.begin(), head_vars.end(), t.var());
            if (it == head_vars.end())
              throw ConvertError("universal effect variable escapes scope");
            t = Term::variable(
                static_cast<int>(it - head_vars.begin()));
          }
        }
        out_body.push_back(std::move(g));
      }
      return out_body;
    };

    std::vector<Conjunct> body = body_over_partial_vars;
    for (int level = static_cast<int>(q_ids.size()) - 1; level >= 0; --level) {
      std::vector<int> head_vars = free;
      for (int j = 0; j < level; ++j) head_vars.push_back(q_ids[j]);
      DerivedDef def;
      def.kind = DerivedDef::Kind::forall_not;
      def.head_pred = static_cast<int>(out.rules.predicates.size());
      def.quant_var = static_cast<int>(head_vars.size());
      def.body = remap(body, head_vars, q_ids[level]);
      out.rules.predicates.push_back(
          {"nocover" + std::to_string(aux_counter++),
           static_cast<int>(head_vars.size()), PredKind::derived});
      out.rules.derived.push_back(def);
      // the next level up sees "not nocover(...)" as its body
      std::vector<Term> args;
      for (int hv : head_vars) args.push_back(Term::variable(hv));
      body = {Conjunct::lit(def.head_pred, args, false)};
    }
    // outermost: body is {not nocover_k(free)}; the predicate itself holds
    // when the quantified body never matches
    Conjunct outer = body[0];
    outer.positive = true;
    return outer;
  }

  // A conjunction that must be negated as a whole becomes an all_of
  // derived predicate, negatable as a single context literal (the derived
  // predicate trick for syntactic limitations of rule contexts).
  Conjunct synthesize_conjunction_pred(const std::vector<Conjunct>& body) {
    std::vector<int> free;
    for (const auto& c : body)
      for (const auto& t : c.args)
        if (t.is_var() &&
            std::find(free.begin(), free.end(), t.var()) == free.end())
          free.push_back(t.var());
    std::sort(free.begin(), free.end());
    DerivedDef def;
    def.kind = DerivedDef::Kind::all_of;
    def.head_pred = static_cast<int>(out.rules.predicates.size());
    for (const auto& c : body) {
      Conjunct g = c;
      for (auto& t : g.args) {
        auto it = std::find(free.begin(), free.end(), t.var());
        t = Term::variable(static_cast<int>(it - free.begin()));
      }
      def.body.push_back(std::move(g));
    }
    out.rules.predicates.push_back({"covers" + std::to_string(aux_counter++),
                                    static_cast<int>(free.size()),
                                    PredKind::derived});
    out.rules.derived.push_back(std::move(def));
    std::vector<Term> args;
    for (int v : free) args.push_back(Term::variable(v));
    return Conjunct::lit(def.head_pred, std::move(args), true);
  }

  // Flatten a when-condition into context literals (guards synthesized).
  std::vector<Conjunct> condition_literals(Partial& p, const Gd& g) {
    std::vector<Conjunct> lits;
    collect_condition(p, g, true, lits);
    return lits;
  }

  void collect_condition(Partial& p, const Gd& g, bool positive,
                         std::vector<Conjunct>& lits) {
    switch (g.kind) {
      case Gd::Kind::atom:
        lits.push_back(atom_conjunct(p, g.name, g.args, positive));
        return;
      case Gd::Kind::negation:
        collect_condition(p, g.kids[0], !positive, lits);
        return;
      case Gd::Kind::conj: {
        if (positive) {
          for (const auto& k : g.kids) collect_condition(p, k, true, lits);
          return;
        }
        if (g.kids.size() == 1) {
          collect_condition(p, g.kids[0], false, lits);
          return;
        }
        std::vector<Conjunct> body;
        for (const auto& k : g.kids) collect_condition(p, k, true, body);
        Conjunct aux = synthesize_conjunction_pred(body);
        aux.positive = false;
        lits.push_back(std::move(aux));
        return;
      }
      case Gd::Kind::forall: {
        if (is_uniqueness_pattern(g)) {
          out.diagnostics.push_back(
              "note: dropped a deictic uniqueness precondition (implied by "
              "unique covering rules)");
          return;
        }
        if (!opts.unique_referents)
          throw ConvertError(
              "universal condition cannot be expressed in a NID rule "
              "(enable unique referents to import it as a guard)");
        if (!positive)
          throw ConvertError("negated universal condition is not supported");
        // expect (forall (v) (not (and lits))) or (forall (v) (not lit))
        const Gd& body = g.kids[0];
        if (body.kind != Gd::Kind::negation)
          throw ConvertError(
              "only universally quantified negations are supported in "
              "conditions");
        std::vector<Conjunct> inner;
        collect_condition(p, body.kids[0], true, inner);
        std::vector<std::string> qnames;
        for (const auto& [v, t] : g.quantified) {
          qnames.push_back(v);
          if (!t.empty())
            inner.push_back(atom_conjunct(p, t, {v}, true));
        }
        lits.push_back(synthesize_forall_not(p, qnames, inner));
        return;
      }
      case Gd::Kind::disj:
      case Gd::Kind::imply:
        throw ConvertError(
            "disjunctions are supported in preconditions, not in "
            "conditional-effect conditions");
      case Gd::Kind::equals:
        throw ConvertError("equality is only supported inside uniqueness "
                           "preconditions");
    }
  }

  // Split a precondition into mutually exclusive literal contexts:
  // A or B becomes {A}, {not A and B}.
  std::vector<std::vector<Conjunct>> precondition_contexts(Partial& base,
                                                           const Gd& g) {
    switch (g.kind) {
      case Gd::Kind::atom:
      case Gd::Kind::negation:
      case Gd::Kind::forall:
      case Gd::Kind::equals: {
        std::vector<Conjunct> lits;
        collect_condition(base, g, true, lits);
        return {lits};
      }
      case Gd::Kind::conj: {
        std::vector<std::vector<Conjunct>> acc = {{}};
        for (const auto& k : g.kids) {
          std::vector<std::vector<Conjunct>> parts =
              precondition_contexts(base, k);
          std::vector<std::vector<Conjunct>> next;
          for (const auto& a : acc)
            for (const auto& b : parts) {
              std::vector<Conjunct> merged = a;
              for (const auto& c : b) merged.push_back(c);
              next.push_back(std::move(merged));
            }
          acc = std::move(next);
        }
        return acc;
      }
      case Gd::Kind::disj:
      case Gd::Kind::imply: {
        // imply(c, d) == or(not c, d)
        std::vector<Gd> alts;
        if (g.kind == Gd::Kind::imply) {
          Gd neg;
          neg.kind = Gd::Kind::negation;
          neg.kids.push_back(g.kids[0]);
          alts.push_back(neg);
          alts.push_back(g.kids[1]);
        } else {
          alts = g.kids;
        }
        std::vector<std::vector<Conjunct>> acc;
        std::vector<Conjunct> guard;  // negations of the earlier alternatives
        for (std::size_t i = 0; i < alts.size(); ++i) {
          std::vector<std::vector<Conjunct>> parts =
              precondition_contexts(base, alts[i]);
          for (const auto& part : parts) {
            std::vector<Conjunct> ctx = guard;
            for (const auto& c : part) ctx.push_back(c);
            acc.push_back(std::move(ctx));
          }
          if (i + 1 < alts.size()) {
            // the next alternatives require this one to fail; that is only
            // expressible when it is a single literal
            std::vector<Conjunct> lits;
            collect_condition(base, alts[i], true, lits);
            if (lits.size() != 1)
              throw ConvertError(
                  "disjuncts before the last one must be single literals "
                  "so their negation stays a conjunction");
            Conjunct negated = lits[0];
            negated.positive = !negated.positive;
            guard.push_back(std::move(negated));
          }
        }
        return acc;
      }
    }
    return {{}};
  }

  // find the first conditional effect, possibly under foralls
  struct WhenSite {
    std::vector<EffectNode*> forall_chain;
    EffectNode* node = nullptr;
  };

  bool find_when(EffectNode& e, std::vector<EffectNode*>& foralls,
                 WhenSite& site) {
    switch (e.kind) {
      case EffectNode::Kind::conditional:
        site.forall_chain = foralls;
        site.node = &e;
        return true;
      case EffectNode::Kind::conj:
      case EffectNode::Kind::probabilistic:
        for (auto& k : e.kids)
          if (find_when(k, foralls, site)) return true;
        return false;
      case EffectNode::Kind::forall:
        foralls.push_back(&e);
        if (find_when(e.kids[0], foralls, site)) return true;
        foralls.pop_back();
        return false;
      default:
        return false;
    }
  }

  static void replace_node(EffectNode& root, const EffectNode* target,
                           const EffectNode& replacement, EffectNode*& found) {
    if (&root == target) {
      EffectNode copy = replacement;
      root = copy;
      found = &root;
      return;
    }
    for (auto& k : root.kids) replace_node(k, target, replacement, found);
  }

  // one weighted branch of a flattened effect
  struct Branch {
    double prob = 1.0;
    std::vector<Conjunct> changes;
    double reward = 0.0;
  };

  std::vector<Branch> flatten(Partial& p, const EffectNode& e) {
    switch (e.kind) {
      case EffectNode::Kind::literal: {
        Branch b;
        b.changes.push_back(atom_conjunct(p, e.name, e.args, e.positive));
        return {b};
      }
      case EffectNode::Kind::reward: {
        Branch b;
        b.reward = e.reward_delta;
        return {b};
      }
      case EffectNode::Kind::conj: {
        std::vector<Branch> acc = {{}};
        for (const auto& k : e.kids) {
          std::vector<Branch> parts = flatten(p, k);
          std::vector<Branch> next;
          for (const auto& a : acc)
            for (const auto& b : parts) {
              Branch m = a;
              m.prob *= b.prob;
              m.reward += b.reward;
              for (const auto& c : b.changes) {
                bool dup = false;
                for (const auto& prev : m.changes) {
                  if (prev.kind != c.kind || prev.symbol != c.symbol ||
                      prev.args != c.args)
                    continue;
                  if (prev.positive != c.positive)
                    throw ConvertError(
                        "effect asserts and negates the same literal");
                  dup = true;
                }
                if (!dup) m.changes.push_back(c);
              }
              next.push_back(std::move(m));
            }
          acc = std::move(next);
        }
        return acc;
      }
      case EffectNode::Kind::probabilistic: {
        std::vector<Branch> acc;
        double total = 0.0;
        for (std::size_t i = 0; i < e.kids.size(); ++i) {
          total += e.probs[i];
          for (Branch b : flatten(p, e.kids[i])) {
            b.prob *= e.probs[i];
            acc.push_back(std::move(b));
          }
        }
        if (total > 1.0 + kProbTolerance)
          throw ConvertError("probabilistic branches exceed probability one");
        if (total < 1.0 - kProbTolerance) {
          Branch rest;
          rest.prob = 1.0 - total;
          acc.push_back(std::move(rest));
        }
        return acc;
      }
      case EffectNode::Kind::forall: {
        if (!opts.unique_referents)
          throw ConvertError(
              "universal effect cannot be expressed in a NID rule framework "
              "(enable unique referents to import it as a deictic "
              "reference)");
        for (const auto& [v, t] : e.quantified) {
          var_of(p, v);
          if (!t.empty())
            push_unique(p.context, atom_conjunct(p, t, {v}, true));
        }
        return flatten(p, e.kids[0]);
      }
      case EffectNode::Kind::conditional:
        throw ConvertError("internal: conditional effect survived splitting");
    }
    return {};
  }

  void convert_action(const ppddl::PpddlAction& action) {
    Partial base;
    std::vector<Conjunct> typing;
    for (const auto& [v, t] : action.params) {
      var_of(base, v);
      if (!t.empty()) typing.push_back(atom_conjunct(base, t, {v}, true));
    }
    std::vector<std::vector<Conjunct>> contexts =
        action.precondition
            ? precondition_contexts(base, *action.precondition)
            : std::vector<std::vector<Conjunct>>{{}};

    std::vector<Partial> work;
    for (auto& ctx : contexts) {
      Partial p = base;
      p.context = typing;
      for (auto& c : ctx) push_unique(p.context, c);
      p.effect = action.effect;
      work.push_back(std::move(p));
    }

    std::deque<Partial> queue(std::make_move_iterator(work.begin()),
                              std::make_move_iterator(work.end()));
    std::vector<Partial> done;
    while (!queue.empty()) {
      Partial p = std::move(queue.front());
      queue.pop_front();
      std::vector<EffectNode*> foralls;
      WhenSite site;
      if (!find_when(p.effect, foralls, site)) {
        done.push_back(std::move(p));
        continue;
      }
      if (static_cast<int>(done.size() + queue.size()) >
          opts.max_rules_per_action)
        throw ConvertError("conditional-effect splitting exceeds " +
                           std::to_string(opts.max_rules_per_action) +
                           " rules for action " + action.name);

      EffectNode empty;
      empty.kind = EffectNode::Kind::conj;
      // a conditional with an empty body changes nothing either way; no
      // split is needed (this covers the exported residual condition)
      if (effect_is_empty(site.node->kids[0]) &&
          !effect_has_reward(site.node->kids[0])) {
        EffectNode* unused = nullptr;
        replace_node(p.effect, site.node, empty, unused);
        queue.push_back(std::move(p));
        continue;
      }
      // drops the conditional body of the first `when` in a fresh copy;
      // the site must be located again because copies have fresh nodes
      auto drop_body = [&](Partial& q) {
        std::vector<EffectNode*> fs;
        WhenSite s;
        find_when(q.effect, fs, s);
        EffectNode* unused = nullptr;
        replace_node(q.effect, s.node, empty, unused);
        strip_foralls(q.effect, {});
      };
      // variants without the condition come first:
      // condition negated, conditional body dropped
      if (!site.forall_chain.empty()) {
        // negating a condition over deictic variables quantifies them
        Partial no = p;
        std::vector<std::string> qnames;
        std::vector<Conjunct> cond;
        for (EffectNode* f : site.forall_chain)
          for (const auto& [v, t] : f->quantified) {
            qnames.push_back(v);
            var_of(no, v);
            if (!t.empty()) cond.push_back(atom_conjunct(no, t, {v}, true));
          }
        for (auto& c : condition_literals(no, site.node->condition))
          cond.push_back(c);
        // the guard lives in a synthesized derived predicate over the
        // remaining free variables
        push_unique(no.context, synthesize_forall_not(no, qnames, cond));
        drop_body(no);
        queue.push_back(std::move(no));
      } else {
        Partial scratch = p;
        std::vector<Conjunct> lits =
            condition_literals(scratch, site.node->condition);
        std::vector<Conjunct> guard;
        for (const auto& lit : lits) {
          Partial no = scratch;
          for (const auto& g : guard) push_unique(no.context, g);
          Conjunct flipped = lit;
          flipped.positive = !flipped.positive;
          push_unique(no.context, flipped);
          drop_body(no);
          queue.push_back(std::move(no));
          guard.push_back(lit);
        }
      }
      // variant with the condition: added to the context, body kept
      {
        Partial yes = p;
        std::vector<EffectNode*> fa;
        WhenSite s2;
        find_when(yes.effect, fa, s2);
        for (EffectNode* f : fa)
          for (const auto& [v, t] : f->quantified) {
            if (!opts.unique_referents)
              throw ConvertError(
                  "universal effect cannot be expressed in a NID rule "
                  "framework (enable unique referents to import it as a "
                  "deictic reference)");
            var_of(yes, v);
            if (!t.empty())
              push_unique(yes.context, atom_conjunct(yes, t, {v}, true));
          }
        for (auto& c : condition_literals(yes, s2.node->condition))
          push_unique(yes.context, c);
        EffectNode body = s2.node->kids[0];
        EffectNode* unused = nullptr;
        replace_node(yes.effect, s2.node, body, unused);
        queue.push_back(std::move(yes));
      }
    }

    // contexts that assert and negate the same literal can never cover
    std::vector<Partial> live;
    for (auto& p : done) {
      bool dead = false;
      for (std::size_t i = 0; i < p.context.size() && !dead; ++i)
        for (std::size_t j = i + 1; j < p.context.size(); ++j) {
          const auto& a = p.context[i];
          const auto& b = p.context[j];
          if (a.kind == b.kind && a.symbol == b.symbol && a.args == b.args &&
              (a.kind == Conjunct::Kind::literal
                   ? a.positive != b.positive
                   : a.value != b.value)) {
            dead = true;
            break;
          }
        }
      if (dead) continue;
      // variants whose effect vanished entirely predict no change, which is
      // exactly the default-rule behavior of an uncovered action; since the
      // split contexts are mutually exclusive, dropping them cannot turn a
      // multiply-covered action into a uniquely covered one
      if (effect_is_empty(p.effect) && !effect_has_reward(p.effect)) {
        out.diagnostics.push_back("note: a no-change branch of " +
                                  action.name +
                                  " maps to the noisy default rule");
        continue;
      }
      live.push_back(std::move(p));
    }
    int action_pred = *out.rules.find_predicate(sanitize(action.name));
    for (auto& p : live) {
      AbstractRule r;
      r.name = sanitize(action.name) + "-" +
               std::to_string(out.rules.rules.size() + 1);
      r.action_pred = action_pred;
      for (std::size_t i = 0; i < action.params.size(); ++i)
        r.action_vars.push_back(static_cast<int>(i));
      r.context.items = p.context;
      std::vector<Branch> branches = flatten(p, p.effect);
      compact_variables(p, action.params.size(), r.context.items, branches);
      // merge identical branches, order by decreasing probability
      std::vector<Branch> merged;
      for (auto& b : branches) {
        bool found = false;
        for (auto& m : merged)
          if (m.changes == b.changes && m.reward == b.reward) {
            m.prob += b.prob;
            found = true;
            break;
          }
        if (!found) merged.push_back(std::move(b));
      }
      std::stable_sort(merged.begin(), merged.end(),
                       [](const Branch& a, const Branch& b) {
                         return a.prob > b.prob;
                       });
      double total = 0.0;
      for (auto& b : merged) {
        Outcome o;
        o.prob = b.prob;
        o.reward = b.reward;
        o.changes.items = b.changes;
        total += b.prob;
        r.outcomes.push_back(std::move(o));
      }
      if (std::abs(total - 1.0) > kProbTolerance)
        throw ConvertError("outcome probabilities of " + action.name +
                           " do not reach one");
      // absorb float dust so the explicit outcomes sum to exactly one
      r.outcomes.back().prob += 1.0 - total;
      r.noise_prob = 0.0;
      r.num_vars = static_cast<int>(p.var_names.size());
      r.var_names.clear();
      for (auto& n : p.var_names) {
        std::string clean = n;
        if (!clean.empty() && clean[0] == '?') clean.erase(0, 1);
        r.var_names.push_back(sanitize(clean));
      }
      out.rules.rules.push_back(std::move(r));
    }

    // overlapping generated contexts break the exclusivity the planners
    // rely on; flag any pair without a contradicting literal
    for (std::size_t i = out.rules.rules.size() - live.size();
         i < out.rules.rules.size(); ++i)
      for (std::size_t j = i + 1; j < out.rules.rules.size(); ++j) {
        const auto& a = out.rules.rules[i];
        const auto& b = out.rules.rules[j];
        bool excl = false;
        for (const auto& ca : a.context.items)
          for (const auto& cb : b.context.items)
            if (ca.kind == cb.kind && ca.symbol == cb.symbol &&
                ca.args == cb.args &&
                (ca.kind == Conjunct::Kind::literal
                     ? ca.positive != cb.positive
                     : ca.value != cb.value))
              excl = true;
        if (!excl)
          out.diagnostics.push_back("warning: contexts of " + a.name +
                                    " and " + b.name +
                                    " may overlap on some state");
      }
  }

  // drop rule variables that no longer occur anywhere (quantified away
  // into synthesized guards); action parameters always stay
  void compact_variables(Partial& p, std::size_t n_params,
                         std::vector<Conjunct>& context,
                         std::vector<Branch>& branches) {
    std::vector<bool> used(p.var_names.size(), false);
    for (std::size_t i = 0; i < n_params && i < used.size(); ++i)
      used[i] = true;
    auto mark = [&](const std::vector<Conjunct>& cs) {
      for (const auto& c : cs)
        for (const auto& t : c.args)
          if (t.is_var()) used[t.var()] = true;
    };
    mark(context);
    for (const auto& b : branches) mark(b.changes);
    std::vector<int> remap(p.var_names.size(), -1);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < used.size(); ++i)
      if (used[i]) {
        remap[i] = static_cast<int>(names.size());
        names.push_back(p.var_names[i]);
      }
    auto apply = [&](std::vector<Conjunct>& cs) {
      for (auto& c : cs)
        for (auto& t : c.args)
          if (t.is_var()) t = Term::variable(remap[t.var()]);
    };
    apply(context);
    for (auto& b : branches) apply(b.changes);
    p.var_names = names;
  }

  static void strip_foralls(EffectNode& root,
                            const std::vector<EffectNode*>& chain) {
    // after dropping a conditional body, the enclosing foralls of that body
    // may quantify nothing; turn them into plain conjunctions
    (void)chain;
    if (root.kind == EffectNode::Kind::forall && effect_is_empty(root.kids[0])) {
      EffectNode empty;
      empty.kind = EffectNode::Kind::conj;
      root = empty;
      return;
    }
    for (auto& k : root.kids) strip_foralls(k, chain);
  }

  static bool effect_is_empty(const EffectNode& e) {
    switch (e.kind) {
      case EffectNode::Kind::conj: {
        for (const auto& k : e.kids)
          if (!effect_is_empty(k)) return false;
        return true;
      }
      case EffectNode::Kind::forall:
        return effect_is_empty(e.kids[0]);
      case EffectNode::Kind::reward:
        return true;  // carries no state change
      default:
        return false;
    }
  }

  static bool effect_has_reward(const EffectNode& e) {
    if (e.kind == EffectNode::Kind::reward) return e.reward_delta != 0.0;
    for (const auto& k : e.kids)
      if (effect_has_reward(k)) return true;
    return false;
  }
};

}  // namespace ppddl_detail

inline ConvertedRules ppddl_to_nid(const ppddl::PpddlDomain& dom,
                                   const ConvertOptions& opts = {}) {
  ppddl_detail::Converter conv(dom, opts);
  conv.declare();
  for (const auto& a : dom.actions) conv.convert_action(a);
  return std::move(conv.out);
}

// --- NID -> PPDDL ---

namespace ppddl_detail {

inline std::string var_token(const std::string& name) {
  return "?" + name;
}

// ground-free printable condition tree built from conjuncts
inline ppddl::Gd conjunct_to_gd(const RuleFile& rf, const Conjunct& c,
                                const std::vector<std::string>& names);

inline ppddl::Gd atom_gd(const RuleFile& rf, int pred,
                         const std::vector<Term>& args,
                         const std::vector<std::string>& names) {
  ppddl::Gd g;
  g.kind = ppddl::Gd::Kind::atom;
  g.name = rf.predicates[pred].name;
  for (const auto& t : args) g.args.push_back(var_token(names.at(t.var())));
  return g;
}

// expand derived predicates into their defining formula
inline ppddl::Gd derived_gd(const RuleFile& rf, const DerivedDef& def,
                            const std::vector<Term>& args,
                            const std::vector<std::string>& names) {
  // head variable i of the definition corresponds to args[i]
  std::vector<std::string> scope;
  for (const auto& t : args) scope.push_back(names.at(t.var()));
  switch (def.kind) {
    case DerivedDef::Kind::forall_not: {
      std::string q = "q_" + rf.predicates[def.head_pred].name;
      scope.push_back(q);
      ppddl::Gd inner;
      inner.kind = ppddl::Gd::Kind::conj;
      for (const auto& b : def.body) {
        // body vars index head vars then the quantifier
        inner.kids.push_back(conjunct_to_gd(rf, b, scope));
      }
      ppddl::Gd neg;
      neg.kind = ppddl::Gd::Kind::negation;
      neg.kids.push_back(inner.kids.size() == 1 ? inner.kids[0] : inner);
      ppddl::Gd fa;
      fa.kind = ppddl::Gd::Kind::forall;
      fa.quantified = {{var_token(q), ""}};
      fa.kids.push_back(std::move(neg));
      return fa;
    }
    case DerivedDef::Kind::all_of:
    case DerivedDef::Kind::any_of: {
      ppddl::Gd node;
      node.kind = def.kind == DerivedDef::Kind::all_of
                      ? ppddl::Gd::Kind::conj
                      : ppddl::Gd::Kind::disj;
      for (const auto& b : def.body)
        node.kids.push_back(conjunct_to_gd(rf, b, scope));
      return node;
    }
  }
  return {};
}

inline ppddl::Gd conjunct_to_gd(const RuleFile& rf, const Conjunct& c,
                                const std::vector<std::string>& names) {
  if (c.kind == Conjunct::Kind::fn_equal)
    throw ConvertError("function assertions have no PPDDL image here");
  const PredicateDecl& p = rf.predicates[c.symbol];
  ppddl::Gd g;
  if (p.kind == PredKind::derived) {
    const DerivedDef* def = nullptr;
    for (const auto& d : rf.derived)
      if (d.head_pred == c.symbol) def = &d;
    if (!def) throw ConvertError("derived predicate without definition");
    g = derived_gd(rf, *def, c.args, names);
  } else {
    g = atom_gd(rf, c.symbol, c.args, names);
  }
  if (!c.positive) {
    ppddl::Gd neg;
    neg.kind = ppddl::Gd::Kind::negation;
    neg.kids.push_back(std::move(g));
    return neg;
  }
  return g;
}

inline void print_gd(std::ostream& os, const ppddl::Gd& g) {
  using K = ppddl::Gd::Kind;
  switch (g.kind) {
    case K::atom:
      os << '(' << g.name;
      for (const auto& a : g.args) os << ' ' << a;
      os << ')';
      return;
    case K::negation:
      os << "(not ";
      print_gd(os, g.kids[0]);
      os << ')';
      return;
    case K::conj:
    case K::disj:
      os << (g.kind == K::conj ? "(and" : "(or");
      for (const auto& k : g.kids) {
        os << ' ';
        print_gd(os, k);
      }
      os << ')';
      return;
    case K::imply:
      os << "(imply ";
      print_gd(os, g.kids[0]);
      os << ' ';
      print_gd(os, g.kids[1]);
      os << ')';
      return;
    case K::forall:
      os << "(forall (";
      for (std::size_t i = 0; i < g.quantified.size(); ++i)
        os << (i ? " " : "") << g.quantified[i].first;
      os << ") ";
      print_gd(os, g.kids[0]);
      os << ')';
      return;
    case K::equals:
      os << "(= " << g.args[0] << ' ' << g.args[1] << ')';
      return;
  }
}

}  // namespace ppddl_detail

struct PpddlExport {
  std::string text;
  std::vector<std::string> diagnostics;
};

// One operator per action predicate. Every rule becomes a conditional
// effect whose condition conjoins the rule context with the negation of
// each competing rule's context, so a foreign planner applies a rule's
// outcomes exactly when it is the unique covering rule;
// deictic references are wrapped in universal conditional effects with an
// explicit uniqueness precondition. A final non-uniqueness condition maps
// to no change, mirroring the planners' noisy default rule.
inline PpddlExport nid_to_ppddl(const RuleFile& rf,
                                const ConvertOptions& opts = {}) {
  using ppddl_detail::print_gd;
  using ppddl_detail::var_token;
  PpddlExport out;
  std::ostringstream os;
  os << "(define (domain converted)\n";
  os << "  (:requirements :probabilistic-effects :conditional-effects "
        ":negative-preconditions :disjunctive-preconditions)\n";
  os << "  (:predicates";
  for (const auto& p : rf.predicates) {
    if (p.kind != PredKind::primitive) continue;
    os << " (" << p.name;
    for (int i = 0; i < p.arity; ++i) os << " ?x" << i;
    os << ")";
  }
  os << ")\n";

  // group rules by action predicate
  std::map<int, std::vector<std::size_t>> by_action;
  for (std::size_t i = 0; i < rf.rules.size(); ++i)
    by_action[rf.rules[i].action_pred].push_back(i);

  for (const auto& [pred, rule_ids] : by_action) {
    const PredicateDecl& action = rf.predicates[pred];
    os << "  (:action " << action.name << "\n";
    os << "    :parameters (";
    for (int i = 0; i < action.arity; ++i) os << (i ? " " : "") << "?a" << i;
    os << ")\n";

    // per rule: canonical variable names (?a0.. for action args, ?dK_i for
    // the rule's deictic references)
    struct Export {
      std::vector<std::string> names;     // rule-local var id -> bare name
      std::vector<int> deictic;           // rule-local deictic ids
      ppddl::Gd cover;                    // exists-free context formula
      const AbstractRule* rule = nullptr;
    };
    std::vector<Export> exps;
    for (std::size_t idx = 0; idx < rule_ids.size(); ++idx) {
      const AbstractRule& r = rf.rules[rule_ids[idx]];
      Export e;
      e.rule = &r;
      e.names.resize(r.num_vars);
      for (std::size_t k = 0; k < r.action_vars.size(); ++k)
        e.names[r.action_vars[k]] = "a" + std::to_string(k);
      e.deictic = r.deictic_vars();
      for (std::size_t k = 0; k < e.deictic.size(); ++k)
        e.names[e.deictic[k]] =
            "d" + std::to_string(idx) + "_" + std::to_string(k);
      ppddl::Gd conj;
      conj.kind = ppddl::Gd::Kind::conj;
      for (const auto& c : r.context.items)
        conj.kids.push_back(ppddl_detail::conjunct_to_gd(rf, c, e.names));
      e.cover = std::move(conj);
      exps.push_back(std::move(e));
    }

    // negation of "rule j covers for some binding": universally quantified
    // negation over j's deictic variables
    auto not_cover = [&](const Export& e) {
      ppddl::Gd neg;
      neg.kind = ppddl::Gd::Kind::negation;
      neg.kids.push_back(e.cover.kids.size() == 1 ? e.cover.kids[0]
                                                  : e.cover);
      if (e.deictic.empty()) return neg;
      ppddl::Gd fa;
      fa.kind = ppddl::Gd::Kind::forall;
      for (int d : e.deictic)
        fa.quantified.emplace_back(var_token(e.names[d]), "");
      fa.kids.push_back(std::move(neg));
      return fa;
    };

    os << "    :effect (and\n";
    for (std::size_t j = 0; j < exps.size(); ++j) {
      const Export& e = exps[j];
      const AbstractRule& r = *e.rule;
      ppddl::Gd cond;
      cond.kind = ppddl::Gd::Kind::conj;
      cond.kids.push_back(e.cover);
      if (!e.deictic.empty()) {
        // uniqueness of the deictic binding: any second binding satisfying
        // the context must coincide with it
        ppddl::Gd prime = e.cover;
        std::vector<std::string> primed = e.names;
        for (std::size_t k = 0; k < e.deictic.size(); ++k)
          primed[e.deictic[k]] += "p";
        ppddl::Gd prime_cover;
        prime_cover.kind = ppddl::Gd::Kind::conj;
        for (const auto& c : r.context.items)
          prime_cover.kids.push_back(
              ppddl_detail::conjunct_to_gd(rf, c, primed));
        ppddl::Gd eqs;
        eqs.kind = ppddl::Gd::Kind::conj;
        for (int d : e.deictic) {
          ppddl::Gd eq;
          eq.kind = ppddl::Gd::Kind::equals;
          eq.args = {var_token(e.names[d]), var_token(primed[d])};
          eqs.kids.push_back(std::move(eq));
        }
        ppddl::Gd imply;
        imply.kind = ppddl::Gd::Kind::imply;
        imply.kids.push_back(std::move(prime_cover));
        imply.kids.push_back(std::move(eqs));
        ppddl::Gd uniq;
        uniq.kind = ppddl::Gd::Kind::forall;
        for (int d : e.deictic)
          uniq.quantified.emplace_back(var_token(primed[d]), "");
        uniq.kids.push_back(std::move(imply));
        cond.kids.push_back(std::move(uniq));
      }
      for (std::size_t k = 0; k < exps.size(); ++k) {
        if (k == j) continue;
        cond.kids.push_back(not_cover(exps[k]));
      }

      os << "      ";
      int closing = 0;
      if (!e.deictic.empty()) {
        os << "(forall (";
        for (std::size_t k = 0; k < e.deictic.size(); ++k)
          os << (k ? " " : "") << var_token(e.names[e.deictic[k]]);
        os << ") ";
        ++closing;
      }
      os << "(when ";
      print_gd(os, cond);
      os << "\n        (probabilistic";
      for (const auto& o : r.outcomes) {
        os << " " << io::fmt_number(o.prob) << " (and";
        for (const auto& c : o.changes.items) {
          os << ' ';
          ppddl::Gd lit = ppddl_detail::conjunct_to_gd(rf, c, e.names);
          print_gd(os, lit);
        }
        if (o.reward > 0)
          os << " (increase (reward) " << io::fmt_number(o.reward) << ")";
        else if (o.reward < 0)
          os << " (decrease (reward) " << io::fmt_number(-o.reward) << ")";
        os << ")";
      }
      if (r.noise_prob > 0.0) {
        if (opts.noise_as_universal) {
          out.diagnostics.push_back(
              "note: noise outcome of a rule for " + action.name +
              " exported as independent universal probabilistic flips");
          os << " " << io::fmt_number(r.noise_prob) << " (and";
          double q = std::min(1.0, r.noise_changes /
                                       std::max<std::size_t>(
                                           1, rf.predicates.size()));
          for (const auto& p : rf.predicates) {
            if (p.kind != PredKind::primitive) continue;
            std::vector<std::string> vars;
            os << " (forall (";
            for (int i = 0; i < p.arity; ++i) {
              os << (i ? " " : "") << "?n" << i;
              vars.push_back("?n" + std::to_string(i));
            }
            os << ") (probabilistic " << io::fmt_number(q) << " (and";
            os << " (when (" << p.name;
            for (const auto& vn : vars) os << ' ' << vn;
            os << ") (not (" << p.name;
            for (const auto& vn : vars) os << ' ' << vn;
            os << ")))";
            os << " (when (not (" << p.name;
            for (const auto& vn : vars) os << ' ' << vn;
            os << ")) (" << p.name;
            for (const auto& vn : vars) os << ' ' << vn;
            os << ")))))";
          }
          os << ")";
        }
        // with the default export the noise mass is simply left to the
        // probabilistic residual, i.e. no change
      }
      os << "))";
      for (int k = 0; k < closing; ++k) os << ")";
      os << "\n";
    }

    // residual: no rule covers uniquely -> no change. For purely
    // propositional contexts the overlap cases are spelled out
    // with the pairwise overlaps spelled out.
    bool all_prop = true;
    for (const auto& e : exps) all_prop &= e.deictic.empty();
    ppddl::Gd residual;
    if (all_prop && exps.size() > 1) {
      residual.kind = ppddl::Gd::Kind::disj;
      ppddl::Gd none;
      none.kind = ppddl::Gd::Kind::conj;
      for (const auto& e : exps) none.kids.push_back(not_cover(e));
      residual.kids.push_back(std::move(none));
      for (std::size_t i = 0; i < exps.size(); ++i)
        for (std::size_t j = i + 1; j < exps.size(); ++j) {
          ppddl::Gd both;
          both.kind = ppddl::Gd::Kind::conj;
          both.kids.push_back(exps[i].cover);
          both.kids.push_back(exps[j].cover);
          residual.kids.push_back(std::move(both));
        }
    } else {
      residual.kind = ppddl::Gd::Kind::conj;
      for (const auto& e : exps) residual.kids.push_back(not_cover(e));
    }
    os << "      (when ";
    print_gd(os, residual);
    os << " (and))\n";
    os << "    ))\n";
  }
  os << ")\n";
  out.text = os.str();
  return out;
}

inline ConvertedRules ppddl_to_nid(const std::string& text,
                                   const ConvertOptions& opts = {},
                                   const std::string& file = "<ppddl>") {
  return ppddl_to_nid(ppddl::parse_domain(text, file), opts);
}

}  // namespace nidplan

#endif
