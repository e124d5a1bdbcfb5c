#ifndef NIDPLAN_LOGIC_HPP
#define NIDPLAN_LOGIC_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nidplan {

struct LogicError : std::runtime_error {
  explicit LogicError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class PredKind { primitive, derived, action };

struct PredicateDecl {
  std::string name;
  int arity = 0;
  PredKind kind = PredKind::primitive;
  bool operator==(const PredicateDecl&) const = default;
};

// Functions take values from a declared finite integer range [lo, hi].
struct FunctionDecl {
  std::string name;
  int arity = 0;
  int lo = 0;
  int hi = 0;
  int range_size() const { return hi - lo + 1; }
  bool operator==(const FunctionDecl&) const = default;
};

// A term is either an object constant (id >= 0) or a logical variable
// (encoded as -1 - var_id).
struct Term {
  int code = 0;
  static Term object(int id) { return Term{id}; }
  static Term variable(int v) { return Term{-1 - v}; }
  bool is_var() const { return code < 0; }
  int var() const { return -1 - code; }
  int obj() const { return code; }
  bool operator==(const Term&) const = default;
};

// One conjunct of a context, outcome or goal: either a (possibly negated)
// predicate literal or an equality `f(args) = value`.
struct Conjunct {
  enum class Kind { literal, fn_equal };
  Kind kind = Kind::literal;
  int symbol = 0;  // predicate id or function id
  std::vector<Term> args;
  bool positive = true;  // literals only
  int value = 0;         // fn_equal only

  static Conjunct lit(int pred, std::vector<Term> a, bool pos = true) {
    Conjunct c;
    c.kind = Kind::literal;
    c.symbol = pred;
    c.args = std::move(a);
    c.positive = pos;
    return c;
  }
  static Conjunct fn_eq(int fn, std::vector<Term> a, int v) {
    Conjunct c;
    c.kind = Kind::fn_equal;
    c.symbol = fn;
    c.args = std::move(a);
    c.value = v;
    return c;
  }
  bool operator==(const Conjunct&) const = default;
};

struct Conjunction {
  std::vector<Conjunct> items;

  bool empty() const { return items.empty(); }

  // Union of argument variables, ascending.
  std::vector<int> free_vars() const {
    std::vector<int> vs;
    for (const auto& c : items)
      for (const auto& t : c.args)
        if (t.is_var()) vs.push_back(t.var());
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    return vs;
  }
  bool is_ground() const {
    for (const auto& c : items)
      for (const auto& t : c.args)
        if (t.is_var()) return false;
    return true;
  }
  bool operator==(const Conjunction&) const = default;
};

// Definition forms for derived predicates. Head variables are 0..arity-1.
//   forall_not: head(X..) holds iff no binding of the quantified variable
//               (var id == head arity) satisfies the body conjunction.
//   all_of / any_of: conjunction / disjunction of the body over head vars.
struct DerivedDef {
  enum class Kind { forall_not, all_of, any_of };
  Kind kind = Kind::all_of;
  int head_pred = -1;
  int quant_var = -1;  // forall_not only
  std::vector<Conjunct> body;
  bool operator==(const DerivedDef&) const = default;
};

struct Substitution {
  std::vector<int> map;  // var id -> object id, -1 unbound

  int lookup(int var) const {
    return var < static_cast<int>(map.size()) ? map[var] : -1;
  }
  void bind(int var, int obj) {
    if (var >= static_cast<int>(map.size())) map.resize(var + 1, -1);
    map[var] = obj;
  }
  bool operator==(const Substitution&) const = default;
};

// Vocabulary: symbol declarations, the ordered object set, derived-predicate
// definitions, plus the flat index of every ground atom / function slot /
// ground action. Immutable after construction; shareable across threads.
class Vocabulary {
 public:
  Vocabulary(std::vector<PredicateDecl> preds, std::vector<FunctionDecl> fns,
             std::vector<std::string> objects,
             std::vector<DerivedDef> derived = {})
      : preds_(std::move(preds)),
        fns_(std::move(fns)),
        objects_(std::move(objects)),
        derived_(std::move(derived)) {
    ensure_do_nothing();
    validate_names();
    build_indexes();
    validate_derived();
  }

  int num_objects() const { return static_cast<int>(objects_.size()); }
  const std::string& object_name(int id) const { return objects_.at(id); }
  int object_id(const std::string& name) const {
    auto it = object_ids_.find(name);
    if (it == object_ids_.end()) throw LogicError("unknown object: " + name);
    return it->second;
  }
  std::optional<int> find_object(const std::string& name) const {
    auto it = object_ids_.find(name);
    if (it == object_ids_.end()) return std::nullopt;
    return it->second;
  }

  int num_predicates() const { return static_cast<int>(preds_.size()); }
  const PredicateDecl& predicate(int id) const { return preds_.at(id); }
  int num_functions() const { return static_cast<int>(fns_.size()); }
  const FunctionDecl& function(int id) const { return fns_.at(id); }

  std::optional<int> find_predicate(const std::string& name) const {
    auto it = pred_ids_.find(name);
    if (it == pred_ids_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> find_function(const std::string& name) const {
    auto it = fn_ids_.find(name);
    if (it == fn_ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<DerivedDef>& derived_defs() const { return derived_; }
  const DerivedDef& derived_def(int pred) const {
    for (const auto& d : derived_)
      if (d.head_pred == pred) return d;
    throw LogicError("no definition for derived predicate " +
                     preds_.at(pred).name);
  }
  // Derived predicate ids in dependency order.
  const std::vector<int>& derived_order() const { return derived_order_; }

  // --- flat ground-atom index (primitive and derived predicates) ---
  int num_atoms() const { return num_atoms_; }
  int atom_index(int pred, const std::vector<int>& args) const {
    return flat_index(atom_base_, pred, args);
  }
  int atom_predicate(int atom) const { return owner(atom_base_, atom); }
  std::vector<int> atom_args(int atom) const {
    int p = atom_predicate(atom);
    return unflatten(atom - atom_base_[p], preds_[p].arity);
  }

  // --- flat ground-action index (action predicates only) ---
  int num_actions() const { return num_actions_; }
  int action_index(int pred, const std::vector<int>& args) const {
    return flat_index(action_base_, pred, args);
  }
  int action_predicate(int action) const { return owner(action_base_, action); }
  std::vector<int> action_args(int action) const {
    int p = action_predicate(action);
    return unflatten(action - action_base_[p], preds_[p].arity);
  }
  int do_nothing_action() const { return do_nothing_action_; }

  // --- flat function-slot index ---
  int num_fn_slots() const { return num_fn_slots_; }
  int fn_slot(int fn, const std::vector<int>& args) const {
    return flat_index(fn_base_, fn, args);
  }
  int fn_of_slot(int slot) const { return owner(fn_base_, slot); }
  std::vector<int> fn_slot_args(int slot) const {
    int f = fn_of_slot(slot);
    return unflatten(slot - fn_base_[f], fns_[f].arity);
  }

  std::string atom_name(int atom) const {
    return format(preds_[atom_predicate(atom)].name, atom_args(atom));
  }
  std::string action_name(int action) const {
    return format(preds_[action_predicate(action)].name, action_args(action));
  }
  std::string fn_slot_name(int slot) const {
    return format(fns_[fn_of_slot(slot)].name, fn_slot_args(slot));
  }

 private:
  void ensure_do_nothing() {
    for (const auto& p : preds_)
      if (p.name == "doNothing" && p.kind == PredKind::action) return;
    preds_.push_back({"doNothing", 0, PredKind::action});
  }

  void validate_names() {
    std::map<std::string, int> seen;
    for (const auto& p : preds_)
      if (++seen[p.name] > 1) throw LogicError("duplicate symbol: " + p.name);
    for (const auto& f : fns_) {
      if (++seen[f.name] > 1) throw LogicError("duplicate symbol: " + f.name);
      if (f.lo > f.hi)
        throw LogicError("empty range for function " + f.name);
    }
  }

  void build_indexes() {
    for (int i = 0; i < static_cast<int>(preds_.size()); ++i)
      pred_ids_[preds_[i].name] = i;
    for (int i = 0; i < static_cast<int>(fns_.size()); ++i)
      fn_ids_[fns_[i].name] = i;
    for (int i = 0; i < static_cast<int>(objects_.size()); ++i) {
      if (object_ids_.count(objects_[i]))
        throw LogicError("duplicate object: " + objects_[i]);
      object_ids_[objects_[i]] = i;
    }
    int n = num_objects();
    atom_base_.assign(preds_.size() + 1, 0);
    action_base_.assign(preds_.size() + 1, 0);
    int atoms = 0, actions = 0;
    for (std::size_t i = 0; i < preds_.size(); ++i) {
      atom_base_[i] = atoms;
      action_base_[i] = actions;
      int count = 1;
      for (int k = 0; k < preds_[i].arity; ++k) count *= n;
      if (preds_[i].kind == PredKind::action)
        actions += count;
      else
        atoms += count;
    }
    atom_base_[preds_.size()] = atoms;
    action_base_[preds_.size()] = actions;
    num_atoms_ = atoms;
    num_actions_ = actions;

    fn_base_.assign(fns_.size() + 1, 0);
    int slots = 0;
    for (std::size_t i = 0; i < fns_.size(); ++i) {
      fn_base_[i] = slots;
      int count = 1;
      for (int k = 0; k < fns_[i].arity; ++k) count *= n;
      slots += count;
    }
    fn_base_[fns_.size()] = slots;
    num_fn_slots_ = slots;

    do_nothing_action_ = action_index(*find_predicate("doNothing"), {});
  }

  void validate_derived() {
    for (const auto& d : derived_) {
      const auto& head = preds_.at(d.head_pred);
      if (head.kind != PredKind::derived)
        throw LogicError("definition given for non-derived predicate " +
                         head.name);
      if (d.kind == DerivedDef::Kind::forall_not && d.quant_var != head.arity)
        throw LogicError("quantified variable of " + head.name +
                         " must follow the head variables");
      for (const auto& c : d.body) {
        if (c.kind == Conjunct::Kind::literal &&
            preds_.at(c.symbol).kind == PredKind::action)
          throw LogicError("action predicate in derived definition of " +
                           head.name);
        int max_var = head.arity - 1;
        if (d.kind == DerivedDef::Kind::forall_not) max_var = head.arity;
        for (const auto& t : c.args)
          if (t.is_var() && t.var() > max_var)
            throw LogicError("unknown variable in definition of " + head.name);
      }
    }
    for (const auto& p : preds_) {
      if (p.kind != PredKind::derived) continue;
      int id = pred_ids_[p.name];
      bool found = false;
      for (const auto& d : derived_) found |= d.head_pred == id;
      if (!found)
        throw LogicError("derived predicate " + p.name + " has no definition");
    }
    // Topological order over derived-derived dependencies; throws on cycles.
    derived_order_.clear();
    std::vector<int> state(preds_.size(), 0);  // 0 new, 1 visiting, 2 done
    std::function<void(int)> visit = [&](int pred) {
      if (state[pred] == 2) return;
      if (state[pred] == 1)
        throw LogicError("cyclic derived definition involving " +
                         preds_[pred].name);
      state[pred] = 1;
      for (const auto& c : derived_def(pred).body)
        if (c.kind == Conjunct::Kind::literal &&
            preds_[c.symbol].kind == PredKind::derived)
          visit(c.symbol);
      state[pred] = 2;
      derived_order_.push_back(pred);
    };
    for (std::size_t i = 0; i < preds_.size(); ++i)
      if (preds_[i].kind == PredKind::derived) visit(static_cast<int>(i));
  }

  int flat_index(const std::vector<int>& base, int sym,
                 const std::vector<int>& args) const {
    int idx = 0;
    for (int a : args) idx = idx * num_objects() + a;
    return base[sym] + idx;
  }
  int owner(const std::vector<int>& base, int flat) const {
    auto it = std::upper_bound(base.begin(), base.end(), flat);
    if (it == base.begin() || flat >= base.back())
      throw LogicError("flat index out of range");
    return static_cast<int>(it - base.begin()) - 1;
  }
  std::vector<int> unflatten(int idx, int arity) const {
    std::vector<int> args(arity, 0);
    for (int k = arity - 1; k >= 0; --k) {
      args[k] = idx % num_objects();
      idx /= num_objects();
    }
    return args;
  }
  std::string format(const std::string& name,
                     const std::vector<int>& args) const {
    std::ostringstream os;
    os << name << '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) os << ',';
      os << objects_[args[i]];
    }
    os << ')';
    return os.str();
  }

  std::vector<PredicateDecl> preds_;
  std::vector<FunctionDecl> fns_;
  std::vector<std::string> objects_;
  std::vector<DerivedDef> derived_;
  std::map<std::string, int> pred_ids_, fn_ids_, object_ids_;
  std::vector<int> atom_base_, action_base_, fn_base_;
  std::vector<int> derived_order_;
  int num_atoms_ = 0, num_actions_ = 0, num_fn_slots_ = 0;
  int do_nothing_action_ = 0;
};

// Total truth assignment over ground atoms plus ground function values.
// Value-semantic snapshot; nothing here mutates shared data.
struct State {
  std::vector<std::uint8_t> atoms;  // primitive and derived
  std::vector<int> fns;             // absolute values within declared ranges

  static State zero(const Vocabulary& v) {
    State s;
    s.atoms.assign(v.num_atoms(), 0);
    s.fns.resize(v.num_fn_slots());
    for (int i = 0; i < v.num_fn_slots(); ++i)
      s.fns[i] = v.function(v.fn_of_slot(i)).lo;
    return s;
  }

  bool operator==(const State&) const = default;

  std::uint64_t digest() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t x) {
      h ^= x;
      h *= 1099511628211ull;
    };
    for (auto b : atoms) mix(b);
    for (auto f : fns) mix(static_cast<std::uint64_t>(f) + 0x9e3779b9ull);
    return h;
  }
};

struct StateHash {
  std::size_t operator()(const State& s) const {
    return static_cast<std::size_t>(s.digest());
  }
};

inline int resolve(const Term& t, const Substitution& sigma) {
  if (!t.is_var()) return t.obj();
  int o = sigma.lookup(t.var());
  if (o < 0) throw LogicError("unbound variable v" + std::to_string(t.var()));
  return o;
}

// Applies sigma to every term; the result must be ground.
inline Conjunction apply_substitution(const Conjunction& formula,
                                      const Substitution& sigma) {
  Conjunction out;
  out.items.reserve(formula.items.size());
  for (const auto& c : formula.items) {
    Conjunct g = c;
    for (auto& t : g.args) t = Term::object(resolve(t, sigma));
    out.items.push_back(std::move(g));
  }
  return out;
}

namespace detail {

inline bool conjunct_holds(const Vocabulary& v, const State& s,
                           const Conjunct& c) {
  std::vector<int> args(c.args.size());
  for (std::size_t i = 0; i < c.args.size(); ++i) {
    if (c.args[i].is_var()) throw LogicError("formula is not ground");
    args[i] = c.args[i].obj();
  }
  if (c.kind == Conjunct::Kind::fn_equal)
    return s.fns.at(v.fn_slot(c.symbol, args)) == c.value;
  bool val = s.atoms.at(v.atom_index(c.symbol, args)) != 0;
  return val == c.positive;
}

}  // namespace detail

// True iff every conjunct holds in the state. Derived atoms are read from
// the state, so callers pass states with derived values up to date.
inline bool holds(const Vocabulary& v, const State& s,
                  const Conjunction& formula) {
  for (const auto& c : formula.items)
    if (!detail::conjunct_holds(v, s, c)) return false;
  return true;
}

// Recomputes every derived ground atom from the primitives, in dependency
// order. Primitive atoms and function values are untouched; idempotent.
inline State eval_derived(const Vocabulary& v, const State& in) {
  State s = in;
  for (int pred : v.derived_order()) {
    const DerivedDef& def = v.derived_def(pred);
    int arity = v.predicate(pred).arity;
    std::vector<int> args(arity, 0);
    // walk all argument tuples in index order
    int count = 1;
    for (int k = 0; k < arity; ++k) count *= v.num_objects();
    for (int flat = 0; flat < count; ++flat) {
      int rest = flat;
      for (int k = arity - 1; k >= 0; --k) {
        args[k] = rest % v.num_objects();
        rest /= v.num_objects();
      }
      Substitution sigma;
      for (int k = 0; k < arity; ++k) sigma.bind(k, args[k]);
      bool value = false;
      switch (def.kind) {
        case DerivedDef::Kind::forall_not: {
          value = true;
          for (int y = 0; y < v.num_objects() && value; ++y) {
            sigma.bind(def.quant_var, y);
            bool body = true;
            for (const auto& c : def.body)
              if (!detail::conjunct_holds(
                      v, s, apply_substitution(Conjunction{{c}}, sigma)
                                .items.front())) {
                body = false;
                break;
              }
            if (body) value = false;
          }
          break;
        }
        case DerivedDef::Kind::all_of: {
          value = true;
          for (const auto& c : def.body)
            if (!detail::conjunct_holds(
                    v, s,
                    apply_substitution(Conjunction{{c}}, sigma).items.front())) {
              value = false;
              break;
            }
          break;
        }
        case DerivedDef::Kind::any_of: {
          value = false;
          for (const auto& c : def.body)
            if (detail::conjunct_holds(
                    v, s,
                    apply_substitution(Conjunction{{c}}, sigma).items.front())) {
              value = true;
              break;
            }
          break;
        }
      }
      s.atoms[v.atom_index(pred, args)] = value ? 1 : 0;
    }
  }
  return s;
}

// All substitutions over the formula's free variables under which it holds,
// in lexicographic order of object indices. Backtracking search; conjuncts
// are checked as soon as their arguments are bound.
inline std::vector<Substitution> enumerate_covering_substitutions(
    const Vocabulary& v, const Conjunction& formula, const State& state,
    const Substitution& fixed = {}) {
  std::vector<int> vars = formula.free_vars();
  std::vector<int> open;
  Substitution sigma = fixed;
  for (int var : vars)
    if (sigma.lookup(var) < 0) open.push_back(var);

  // conjuncts grouped by the last open variable they mention; group 0 holds
  // conjuncts that are already fully bound
  std::vector<std::vector<const Conjunct*>> groups(open.size() + 1);
  for (const auto& c : formula.items) {
    int last = -1;
    for (const auto& t : c.args) {
      if (!t.is_var() || sigma.lookup(t.var()) >= 0) continue;
      for (std::size_t d = 0; d < open.size(); ++d)
        if (open[d] == t.var()) last = std::max(last, static_cast<int>(d));
    }
    groups[last + 1].push_back(&c);
  }

  std::vector<Substitution> out;
  std::function<bool(std::size_t)> check = [&](std::size_t depth) {
    for (const Conjunct* c : groups[depth]) {
      Conjunct g = *c;
      for (auto& t : g.args) t = Term::object(resolve(t, sigma));
      if (!detail::conjunct_holds(v, state, g)) return false;
    }
    return true;
  };
  std::function<void(std::size_t)> descend = [&](std::size_t depth) {
    if (depth == open.size()) {
      Substitution result;
      for (int var : vars) result.bind(var, sigma.lookup(var));
      out.push_back(std::move(result));
      return;
    }
    for (int obj = 0; obj < v.num_objects(); ++obj) {
      sigma.bind(open[depth], obj);
      if (check(depth + 1)) descend(depth + 1);
    }
    sigma.map[open[depth]] = -1;
  };
  if (check(0)) descend(0);
  return out;
}

}  // namespace nidplan

#endif
