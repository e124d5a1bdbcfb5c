#ifndef NIDPLAN_RULE_IO_HPP
#define NIDPLAN_RULE_IO_HPP

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nidplan/rules.hpp"

namespace nidplan {

// Diagnostics carry file:line:col positions.
struct ParseError : std::runtime_error {
  ParseError(const std::string& file, int line, int col,
             const std::string& msg)
      : std::runtime_error(file + ":" + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + msg) {}
};

namespace io {

struct Token {
  enum class Kind { ident, number, punct, end };
  Kind kind = Kind::end;
  std::string text;
  double num = 0.0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  Lexer(std::string text, std::string file)
      : text_(std::move(text)), file_(std::move(file)) {
    advance();
  }

  const Token& peek() const { return tok_; }
  const std::string& file() const { return file_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(file_, tok_.line, tok_.col, msg);
  }

  bool at_ident(const std::string& s) const {
    return tok_.kind == Token::Kind::ident && tok_.text == s;
  }
  bool at_punct(const std::string& s) const {
    return tok_.kind == Token::Kind::punct && tok_.text == s;
  }
  bool accept_punct(const std::string& s) {
    if (!at_punct(s)) return false;
    advance();
    return true;
  }
  void expect_punct(const std::string& s) {
    if (!at_punct(s)) fail("expected '" + s + "'");
    advance();
  }
  std::string expect_ident(const std::string& what) {
    if (tok_.kind != Token::Kind::ident) fail("expected " + what);
    std::string s = tok_.text;
    advance();
    return s;
  }
  double expect_number(const std::string& what) {
    if (tok_.kind != Token::Kind::number) fail("expected " + what);
    double x = tok_.num;
    advance();
    return x;
  }

 private:
  void advance() {
    skip_ws();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= text_.size()) {
      tok_.kind = Token::Kind::end;
      tok_.text.clear();
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_'))
        bump();
      tok_.kind = Token::Kind::ident;
      tok_.text = text_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      std::size_t start = pos_;
      if (c == '-') bump();
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '.')) {
        // ".." terminates a number (range syntax)
        if (text_[pos_] == '.' && pos_ + 1 < text_.size() &&
            text_[pos_ + 1] == '.')
          break;
        bump();
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        bump();
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
          bump();
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_])))
          bump();
      }
      tok_.kind = Token::Kind::number;
      tok_.text = text_.substr(start, pos_ - start);
      tok_.num = std::stod(tok_.text);
      return;
    }
    // multi-char punct: -> and ..
    if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
      tok_.kind = Token::Kind::punct;
      tok_.text = "->";
      bump();
      bump();
      return;
    }
    if (c == '.' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '.') {
      tok_.kind = Token::Kind::punct;
      tok_.text = "..";
      bump();
      bump();
      return;
    }
    tok_.kind = Token::Kind::punct;
    tok_.text = std::string(1, c);
    bump();
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string text_, file_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

inline const std::vector<std::string>& keywords() {
  static const std::vector<std::string> kw = {
      "predicate", "function", "action", "derived", "forall", "not",
      "and",       "or",       "noise",  "reward",  "objects", "start",
      "belief",    "goal",     "gamma",  "horizon", "range"};
  return kw;
}

inline bool is_keyword(const std::string& s) {
  for (const auto& k : keywords())
    if (k == s) return true;
  return false;
}

inline std::string fmt_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace io

// Symbol declarations plus abstract rules; objects arrive with a problem
// file, so ids here index the declaration vectors directly.
struct RuleFile {
  std::vector<PredicateDecl> predicates;
  std::vector<FunctionDecl> functions;
  std::vector<DerivedDef> derived;
  std::vector<AbstractRule> rules;

  Vocabulary vocabulary(std::vector<std::string> objects) const {
    return Vocabulary(predicates, functions, std::move(objects), derived);
  }
  std::optional<int> find_predicate(const std::string& name) const {
    for (std::size_t i = 0; i < predicates.size(); ++i)
      if (predicates[i].name == name) return static_cast<int>(i);
    return std::nullopt;
  }
  std::optional<int> find_function(const std::string& name) const {
    for (std::size_t i = 0; i < functions.size(); ++i)
      if (functions[i].name == name) return static_cast<int>(i);
    return std::nullopt;
  }
};

struct ProblemFile {
  std::vector<std::string> objects;
  bool has_start_state = false;
  std::vector<Conjunct> start;  // ground positive facts / fn assignments
  std::vector<PriorEntry> beliefs;
  Conjunction goal;
  std::vector<std::pair<double, Conjunction>> rewards;
  double gamma = 0.95;
  int horizon = 10;

  int object_id(const std::string& name) const {
    for (std::size_t i = 0; i < objects.size(); ++i)
      if (objects[i] == name) return static_cast<int>(i);
    return -1;
  }
};

namespace io {

class RuleParser {
 public:
  RuleParser(std::string text, std::string file)
      : lex_(std::move(text), std::move(file)) {}

  RuleFile parse() {
    while (lex_.peek().kind != Token::Kind::end) {
      if (lex_.at_ident("predicate"))
        parse_predicate(PredKind::primitive);
      else if (lex_.at_ident("action"))
        parse_predicate(PredKind::action);
      else if (lex_.at_ident("derived"))
        parse_derived();
      else if (lex_.at_ident("function"))
        parse_function();
      else
        parse_rule();
    }
    return out_;
  }

 private:
  void parse_predicate(PredKind kind) {
    lex_.next();
    std::string name = lex_.expect_ident("predicate name");
    check_fresh(name);
    lex_.expect_punct("/");
    int arity = static_cast<int>(lex_.expect_number("arity"));
    out_.predicates.push_back({name, arity, kind});
  }

  void parse_function() {
    lex_.next();
    std::string name = lex_.expect_ident("function name");
    check_fresh(name);
    lex_.expect_punct("/");
    int arity = static_cast<int>(lex_.expect_number("arity"));
    if (!lex_.at_ident("range")) lex_.fail("expected 'range'");
    lex_.next();
    int lo = static_cast<int>(lex_.expect_number("range low"));
    lex_.expect_punct("..");
    int hi = static_cast<int>(lex_.expect_number("range high"));
    out_.functions.push_back({name, arity, lo, hi});
  }

  // derived name(V,..) = forall Q: !atom | forall Q: not(conjs)
  //                    | and conjs | or conjs
  void parse_derived() {
    lex_.next();
    std::string name = lex_.expect_ident("derived predicate name");
    check_fresh(name);
    std::map<std::string, int> vars;
    lex_.expect_punct("(");
    if (!lex_.accept_punct(")")) {
      do {
        std::string v = lex_.expect_ident("variable");
        if (vars.count(v)) lex_.fail("repeated head variable " + v);
        vars[v] = static_cast<int>(vars.size());
      } while (lex_.accept_punct(","));
      lex_.expect_punct(")");
    }
    int arity = static_cast<int>(vars.size());
    out_.predicates.push_back({name, arity, PredKind::derived});
    int head = static_cast<int>(out_.predicates.size()) - 1;

    lex_.expect_punct("=");
    DerivedDef def;
    def.head_pred = head;
    if (lex_.at_ident("forall")) {
      lex_.next();
      std::string q = lex_.expect_ident("quantified variable");
      if (vars.count(q)) lex_.fail("quantified variable repeats a head variable");
      vars[q] = arity;
      def.kind = DerivedDef::Kind::forall_not;
      def.quant_var = arity;
      lex_.expect_punct(":");
      if (lex_.accept_punct("!")) {
        def.body = {parse_conjunct(vars, /*allow_new_vars=*/false)};
      } else if (lex_.at_ident("not")) {
        lex_.next();
        lex_.expect_punct("(");
        do {
          bool neg = lex_.accept_punct("!");
          Conjunct c = parse_conjunct(vars, false);
          if (neg && c.kind == Conjunct::Kind::literal) c.positive = false;
          else if (neg) lex_.fail("'!' applies to literals only");
          def.body.push_back(std::move(c));
        } while (lex_.accept_punct(","));
        lex_.expect_punct(")");
      } else {
        lex_.fail("expected '!' or 'not(' after forall");
      }
    } else if (lex_.at_ident("and") || lex_.at_ident("or")) {
      def.kind = lex_.at_ident("and") ? DerivedDef::Kind::all_of
                                      : DerivedDef::Kind::any_of;
      lex_.next();
      do {
        bool neg = lex_.accept_punct("!");
        Conjunct c = parse_conjunct(vars, false);
        if (neg && c.kind == Conjunct::Kind::literal) c.positive = false;
        else if (neg) lex_.fail("'!' applies to literals only");
        def.body.push_back(std::move(c));
      } while (lex_.accept_punct(","));
    } else {
      lex_.fail("expected forall/and/or in derived definition");
    }
    out_.derived.push_back(std::move(def));
  }

  // head(args): context -> { p: outcome... [p: noise[(N)]] }
  void parse_rule() {
    std::map<std::string, int> vars;
    Token head = lex_.peek();
    std::string action = lex_.expect_ident("action name");
    auto pred = out_.find_predicate(action);
    if (!pred || out_.predicates[*pred].kind != PredKind::action)
      throw ParseError(lex_.file(), head.line, head.col,
                       "unknown action: " + action);
    AbstractRule r;
    r.name = std::to_string(out_.rules.size() + 1);
    r.action_pred = *pred;
    lex_.expect_punct("(");
    if (!lex_.accept_punct(")")) {
      do {
        std::string v = lex_.expect_ident("variable");
        if (!vars.count(v)) vars[v] = static_cast<int>(vars.size());
        r.action_vars.push_back(vars[v]);
      } while (lex_.accept_punct(","));
      lex_.expect_punct(")");
    }
    if (static_cast<int>(r.action_vars.size()) !=
        out_.predicates[*pred].arity)
      throw ParseError(lex_.file(), head.line, head.col,
                       "arity mismatch for action " + action);
    lex_.expect_punct(":");
    // context: '-' or comma-separated conjuncts, possibly empty
    if (!lex_.accept_punct("-")) {
      while (!lex_.at_punct("->")) {
        bool neg = lex_.accept_punct("!");
        Conjunct c = parse_conjunct(vars, true);
        if (neg && c.kind == Conjunct::Kind::literal) c.positive = false;
        else if (neg) lex_.fail("'!' applies to literals only");
        if (std::find(r.context.items.begin(), r.context.items.end(), c) !=
            r.context.items.end())
          lex_.fail("duplicate conjunct in context");
        r.context.items.push_back(std::move(c));
        if (!lex_.accept_punct(",")) break;
      }
    }
    lex_.expect_punct("->");
    lex_.expect_punct("{");
    bool saw_noise = false;
    while (!lex_.accept_punct("}")) {
      Token pt = lex_.peek();
      double p = lex_.expect_number("outcome probability");
      lex_.expect_punct(":");
      if (lex_.at_ident("noise")) {
        lex_.next();
        if (saw_noise)
          throw ParseError(lex_.file(), pt.line, pt.col,
                           "multiple noise outcomes");
        saw_noise = true;
        r.noise_prob = p;
        if (lex_.accept_punct("(")) {
          r.noise_changes = lex_.expect_number("expected noise change count");
          lex_.expect_punct(")");
        }
        continue;
      }
      Outcome o;
      o.prob = p;
      auto take_reward = [&]() {
        lex_.next();
        lex_.expect_punct("(");
        o.reward = lex_.expect_number("reward value");
        lex_.expect_punct(")");
      };
      while (lex_.peek().kind == Token::Kind::ident || lex_.at_punct("!")) {
        if (lex_.at_ident("reward")) {
          take_reward();
          break;
        }
        bool neg = lex_.accept_punct("!");
        Conjunct c = parse_conjunct(vars, true);
        if (neg && c.kind == Conjunct::Kind::literal) c.positive = false;
        else if (neg) lex_.fail("'!' applies to literals only");
        o.changes.items.push_back(std::move(c));
        if (!lex_.accept_punct(",")) {
          if (lex_.at_ident("reward")) take_reward();
          break;
        }
      }
      r.outcomes.push_back(std::move(o));
    }
    double total = r.noise_prob;
    for (const auto& o : r.outcomes) total += o.prob;
    if (std::abs(total - 1.0) > kProbTolerance)
      throw ParseError(lex_.file(), head.line, head.col,
                       "outcome probabilities sum to " +
                           io::fmt_number(total) + ", expected 1");
    r.num_vars = static_cast<int>(vars.size());
    r.var_names.resize(vars.size());
    for (const auto& [name, id] : vars) r.var_names[id] = name;
    out_.rules.push_back(std::move(r));
  }

  // pred(args) or fn(args) = value; args are variables here
  Conjunct parse_conjunct(std::map<std::string, int>& vars, bool allow_new) {
    Token t = lex_.peek();
    std::string name = lex_.expect_ident("predicate or function");
    std::vector<Term> args;
    lex_.expect_punct("(");
    if (!lex_.accept_punct(")")) {
      do {
        std::string v = lex_.expect_ident("variable");
        auto it = vars.find(v);
        if (it == vars.end()) {
          if (!allow_new)
            lex_.fail("unknown variable " + v);
          it = vars.emplace(v, static_cast<int>(vars.size())).first;
        }
        args.push_back(Term::variable(it->second));
      } while (lex_.accept_punct(","));
      lex_.expect_punct(")");
    }
    if (auto fn = out_.find_function(name)) {
      if (static_cast<int>(args.size()) != out_.functions[*fn].arity)
        throw ParseError(lex_.file(), t.line, t.col,
                         "arity mismatch for function " + name);
      lex_.expect_punct("=");
      int val = static_cast<int>(lex_.expect_number("function value"));
      if (val < out_.functions[*fn].lo || val > out_.functions[*fn].hi)
        throw ParseError(lex_.file(), t.line, t.col,
                         "value outside declared range of " + name);
      return Conjunct::fn_eq(*fn, std::move(args), val);
    }
    auto pred = out_.find_predicate(name);
    if (!pred)
      throw ParseError(lex_.file(), t.line, t.col, "unknown symbol: " + name);
    if (out_.predicates[*pred].kind == PredKind::action)
      throw ParseError(lex_.file(), t.line, t.col,
                       "action predicate used as a state literal: " + name);
    if (static_cast<int>(args.size()) != out_.predicates[*pred].arity)
      throw ParseError(lex_.file(), t.line, t.col,
                       "arity mismatch for predicate " + name);
    return Conjunct::lit(*pred, std::move(args));
  }

  void check_fresh(const std::string& name) {
    if (io::is_keyword(name)) lex_.fail("reserved word: " + name);
    if (out_.find_predicate(name) || out_.find_function(name))
      lex_.fail("duplicate symbol: " + name);
  }

  Lexer lex_;
  RuleFile out_;
};

}  // namespace io

inline RuleFile parse_rules(const std::string& text,
                            const std::string& file = "<rules>") {
  return io::RuleParser(text, file).parse();
}

namespace io {

inline void write_conjunct(std::ostream& os, const RuleFile& rf,
                           const Conjunct& c,
                           const std::vector<std::string>& var_names) {
  auto term_name = [&](const Term& t) {
    return var_names.at(t.var());
  };
  if (c.kind == Conjunct::Kind::literal) {
    if (!c.positive) os << '!';
    os << rf.predicates[c.symbol].name << '(';
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      if (i) os << ',';
      os << term_name(c.args[i]);
    }
    os << ')';
  } else {
    os << rf.functions[c.symbol].name << '(';
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      if (i) os << ',';
      os << term_name(c.args[i]);
    }
    os << ")=" << c.value;
  }
}

}  // namespace io

inline std::string serialize_rules(const RuleFile& rf) {
  std::ostringstream os;
  // declarations first, in id order so round-trips preserve ids
  for (std::size_t i = 0; i < rf.predicates.size(); ++i) {
    const auto& p = rf.predicates[i];
    switch (p.kind) {
      case PredKind::primitive:
        os << "predicate " << p.name << "/" << p.arity << "\n";
        break;
      case PredKind::action:
        if (p.name != "doNothing")
          os << "action " << p.name << "/" << p.arity << "\n";
        break;
      case PredKind::derived: {
        const DerivedDef* def = nullptr;
        for (const auto& d : rf.derived)
          if (d.head_pred == static_cast<int>(i)) def = &d;
        if (!def) throw LogicError("derived predicate without definition");
        std::vector<std::string> names;
        for (int k = 0; k < p.arity; ++k)
          names.push_back("X" + std::to_string(k));
        os << "derived " << p.name << "(";
        for (int k = 0; k < p.arity; ++k) os << (k ? "," : "") << names[k];
        os << ") = ";
        if (def->kind == DerivedDef::Kind::forall_not) {
          names.push_back("Q");
          os << "forall Q: not(";
          for (std::size_t k = 0; k < def->body.size(); ++k) {
            if (k) os << ", ";
            io::write_conjunct(os, rf, def->body[k], names);
          }
          os << ")";
        } else {
          os << (def->kind == DerivedDef::Kind::all_of ? "and " : "or ");
          for (std::size_t k = 0; k < def->body.size(); ++k) {
            if (k) os << ", ";
            io::write_conjunct(os, rf, def->body[k], names);
          }
        }
        os << "\n";
        break;
      }
    }
  }
  for (const auto& f : rf.functions)
    os << "function " << f.name << "/" << f.arity << " range " << f.lo << ".."
       << f.hi << "\n";
  for (const auto& r : rf.rules) {
    std::vector<std::string> names = r.var_names;
    for (int k = static_cast<int>(names.size()); k < r.num_vars; ++k)
      names.push_back("v" + std::to_string(k));
    os << "\n" << rf.predicates[r.action_pred].name << "(";
    for (std::size_t i = 0; i < r.action_vars.size(); ++i)
      os << (i ? "," : "") << names[r.action_vars[i]];
    os << "): ";
    if (r.context.items.empty()) os << "-";
    for (std::size_t i = 0; i < r.context.items.size(); ++i) {
      if (i) os << ", ";
      io::write_conjunct(os, rf, r.context.items[i], names);
    }
    os << " -> {\n";
    for (const auto& o : r.outcomes) {
      os << "  " << io::fmt_number(o.prob) << ": ";
      for (std::size_t i = 0; i < o.changes.items.size(); ++i) {
        if (i) os << ", ";
        io::write_conjunct(os, rf, o.changes.items[i], names);
      }
      if (o.reward != 0.0) {
        if (!o.changes.items.empty()) os << " ";
        os << "reward(" << io::fmt_number(o.reward) << ")";
      }
      os << "\n";
    }
    if (r.noise_prob > 0.0) {
      os << "  " << io::fmt_number(r.noise_prob) << ": noise";
      if (r.noise_changes != 1.0)
        os << "(" << io::fmt_number(r.noise_changes) << ")";
      os << "\n";
    }
    os << "}\n";
  }
  return os.str();
}

namespace io {

class ProblemParser {
 public:
  ProblemParser(std::string text, std::string file, const RuleFile& rf)
      : lex_(std::move(text), std::move(file)), rf_(rf) {}

  ProblemFile parse() {
    bool saw_goal = false;
    while (lex_.peek().kind != Token::Kind::end) {
      if (lex_.at_ident("objects")) {
        lex_.next();
        while (lex_.peek().kind == Token::Kind::ident &&
               !is_keyword(lex_.peek().text))
          out_.objects.push_back(lex_.next().text);
      } else if (lex_.at_ident("start")) {
        lex_.next();
        out_.has_start_state = true;
        do {
          Token t = lex_.peek();
          Conjunct c = parse_ground_conjunct();
          if (c.kind == Conjunct::Kind::literal && !c.positive)
            throw ParseError(lex_.file(), t.line, t.col,
                             "start lists positive facts only");
          out_.start.push_back(std::move(c));
        } while (lex_.accept_punct(","));
      } else if (lex_.at_ident("belief")) {
        lex_.next();
        parse_belief();
      } else if (lex_.at_ident("goal")) {
        lex_.next();
        saw_goal = true;
        do {
          bool neg = lex_.accept_punct("!");
          Conjunct c = parse_ground_conjunct();
          if (neg && c.kind == Conjunct::Kind::literal) c.positive = false;
          else if (neg) lex_.fail("'!' applies to literals only");
          out_.goal.items.push_back(std::move(c));
        } while (lex_.accept_punct(","));
      } else if (lex_.at_ident("reward")) {
        lex_.next();
        double w = lex_.expect_number("reward weight");
        lex_.expect_punct(":");
        Conjunction f;
        do {
          bool neg = lex_.accept_punct("!");
          Conjunct c = parse_ground_conjunct();
          if (neg && c.kind == Conjunct::Kind::literal) c.positive = false;
          else if (neg) lex_.fail("'!' applies to literals only");
          f.items.push_back(std::move(c));
        } while (lex_.accept_punct(","));
        out_.rewards.emplace_back(w, std::move(f));
      } else if (lex_.at_ident("gamma")) {
        lex_.next();
        out_.gamma = lex_.expect_number("gamma");
      } else if (lex_.at_ident("horizon")) {
        lex_.next();
        out_.horizon = static_cast<int>(lex_.expect_number("horizon"));
      } else {
        lex_.fail("expected objects/start/belief/goal/reward/gamma/horizon");
      }
    }
    if (!saw_goal) lex_.fail("problem file declares no goal");
    if (out_.has_start_state && !out_.beliefs.empty())
      lex_.fail("problem mixes a start state with belief priors");
    return out_;
  }

 private:
  void parse_belief() {
    Token t = lex_.peek();
    std::string name = lex_.expect_ident("predicate or function");
    std::vector<int> args;
    lex_.expect_punct("(");
    if (!lex_.accept_punct(")")) {
      do {
        args.push_back(expect_object());
      } while (lex_.accept_punct(","));
      lex_.expect_punct(")");
    }
    lex_.expect_punct("=");
    PriorEntry e;
    e.args = std::move(args);
    if (auto fn = rf_.find_function(name)) {
      e.is_fn = true;
      e.symbol = *fn;
      lex_.expect_punct("{");
      do {
        int val = static_cast<int>(lex_.expect_number("function value"));
        lex_.expect_punct(":");
        double p = lex_.expect_number("probability");
        e.categorical.emplace_back(val, p);
      } while (lex_.accept_punct(","));
      lex_.expect_punct("}");
    } else if (auto pred = rf_.find_predicate(name)) {
      if (rf_.predicates[*pred].kind != PredKind::primitive)
        throw ParseError(lex_.file(), t.line, t.col,
                         "belief priors apply to primitive atoms only");
      e.symbol = *pred;
      e.prob = lex_.expect_number("probability");
    } else {
      throw ParseError(lex_.file(), t.line, t.col, "unknown symbol: " + name);
    }
    out_.beliefs.push_back(std::move(e));
  }

  int expect_object() {
    Token t = lex_.peek();
    std::string name = lex_.expect_ident("object");
    int id = out_.object_id(name);
    if (id < 0)
      throw ParseError(lex_.file(), t.line, t.col, "unknown object: " + name);
    return id;
  }

  Conjunct parse_ground_conjunct() {
    Token t = lex_.peek();
    std::string name = lex_.expect_ident("predicate or function");
    std::vector<Term> args;
    lex_.expect_punct("(");
    if (!lex_.accept_punct(")")) {
      do {
        args.push_back(Term::object(expect_object()));
      } while (lex_.accept_punct(","));
      lex_.expect_punct(")");
    }
    if (auto fn = rf_.find_function(name)) {
      if (static_cast<int>(args.size()) != rf_.functions[*fn].arity)
        throw ParseError(lex_.file(), t.line, t.col,
                         "arity mismatch for function " + name);
      lex_.expect_punct("=");
      int val = static_cast<int>(lex_.expect_number("function value"));
      return Conjunct::fn_eq(*fn, std::move(args), val);
    }
    auto pred = rf_.find_predicate(name);
    if (!pred)
      throw ParseError(lex_.file(), t.line, t.col, "unknown symbol: " + name);
    if (rf_.predicates[*pred].kind == PredKind::action)
      throw ParseError(lex_.file(), t.line, t.col,
                       "action predicate in a state formula: " + name);
    if (static_cast<int>(args.size()) != rf_.predicates[*pred].arity)
      throw ParseError(lex_.file(), t.line, t.col,
                       "arity mismatch for predicate " + name);
    return Conjunct::lit(*pred, std::move(args));
  }

  Lexer lex_;
  const RuleFile& rf_;
  ProblemFile out_;
};

}  // namespace io

inline ProblemFile parse_problem(const std::string& text, const RuleFile& rf,
                                 const std::string& file = "<problem>") {
  return io::ProblemParser(text, file, rf).parse();
}

// A rule file and a problem file bound together: vocabulary with objects,
// closed-world start state (unlisted atoms false, functions at range low),
// goal and reward ready for the planners.
struct LoadedProblem {
  Vocabulary vocab;
  std::vector<AbstractRule> rules;
  std::optional<State> start;
  std::vector<PriorEntry> prior;
  Conjunction goal;
  RewardSpec reward;
  double gamma = 0.95;
  int horizon = 10;
};

inline LoadedProblem bind_problem(const RuleFile& rf, const ProblemFile& pf) {
  LoadedProblem lp{rf.vocabulary(pf.objects), {}, {}, {}, {}, {}, 0.95, 10};
  lp.rules = rf.rules;
  lp.goal = pf.goal;
  lp.gamma = pf.gamma;
  lp.horizon = pf.horizon;
  if (pf.has_start_state) {
    State s = State::zero(lp.vocab);
    for (const auto& c : pf.start) {
      std::vector<int> args;
      for (const auto& t : c.args) args.push_back(t.obj());
      if (c.kind == Conjunct::Kind::fn_equal)
        s.fns[lp.vocab.fn_slot(c.symbol, args)] = c.value;
      else
        s.atoms[lp.vocab.atom_index(c.symbol, args)] = 1;
    }
    lp.start = eval_derived(lp.vocab, s);
  }
  lp.prior = pf.beliefs;
  if (pf.rewards.empty()) {
    lp.reward = RewardSpec::goal(lp.vocab, pf.goal);
  } else {
    for (const auto& [w, f] : pf.rewards) lp.reward.add(lp.vocab, w, f);
  }
  return lp;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RuleFile load_rules(const std::string& path) {
  return parse_rules(read_file(path), path);
}

inline ProblemFile load_problem(const std::string& path, const RuleFile& rf) {
  return parse_problem(read_file(path), rf, path);
}

}  // namespace nidplan

#endif
