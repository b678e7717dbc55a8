#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsmalc/error.hpp"
#include "dsmalc/formula.hpp"
#include "dsmalc/signature.hpp"

namespace dsmalc {

enum class RuleId {
  // Full Lambek axioms. Identity is admitted as a primitive schema.
  Identity, Top, Bot, AssocLR, AssocRL, UnitLeftIntro, UnitLeftElim, UnitRightIntro,
  UnitRightElim, DisjIntro1, DisjIntro2, ConjElim1, ConjElim2,
  // Full Lambek rules.
  ConjIntro, DisjElim, ProdMono, LDivResUp, LDivResDown, RDivResUp, RDivResDown, Substitution, Cut,
  // Subexponential axioms and the monotone bang rule.
  Dereliction, Four, Promotion, BangUnit, ContractionLeft, ContractionRight, Weakening, ExchangeLR,
  ExchangeRL, BangMono,
  // Distributive extras.
  Distributivity, BangMeet, BangTop,
};

inline constexpr std::size_t rule_count = static_cast<std::size_t>(RuleId::BangTop) + 1;

enum class SideCondition { None, PromotionOrder, InC, InW, InE, BangMonoOrder };

struct RuleInfo {
  RuleId id;
  const char* name;
  std::vector<const char*> premises;
  const char* conclusion;
  SideCondition side;
};

/// Metavariables: p, q, r, p1, p2 in axioms; phi, psi, theta, tau in rules;
/// i, j, k range over signature indices. `!i p * q * !i p` brackets to the left.
inline const std::vector<RuleInfo>& rule_table() {
  using S = SideCondition;
  static const std::vector<RuleInfo> table = {
      {RuleId::Identity, "identity", {}, "p |- p", S::None},
      {RuleId::Top, "top", {}, "p |- T", S::None},
      {RuleId::Bot, "bot", {}, "F |- p", S::None},
      {RuleId::AssocLR, "assoc-lr", {}, "p * (q * r) |- (p * q) * r", S::None},
      {RuleId::AssocRL, "assoc-rl", {}, "(p * q) * r |- p * (q * r)", S::None},
      {RuleId::UnitLeftIntro, "unit-left-intro", {}, "p |- 1 * p", S::None},
      {RuleId::UnitLeftElim, "unit-left-elim", {}, "1 * p |- p", S::None},
      {RuleId::UnitRightIntro, "unit-right-intro", {}, "p |- p * 1", S::None},
      {RuleId::UnitRightElim, "unit-right-elim", {}, "p * 1 |- p", S::None},
      {RuleId::DisjIntro1, "disj-intro-1", {}, "p1 |- p1 \\/ p2", S::None},
      {RuleId::DisjIntro2, "disj-intro-2", {}, "p2 |- p1 \\/ p2", S::None},
      {RuleId::ConjElim1, "conj-elim-1", {}, "p1 /\\ p2 |- p1", S::None},
      {RuleId::ConjElim2, "conj-elim-2", {}, "p1 /\\ p2 |- p2", S::None},
      {RuleId::ConjIntro, "conj-intro", {"phi |- psi", "phi |- theta"}, "phi |- psi /\\ theta", S::None},
      {RuleId::DisjElim, "disj-elim", {"phi |- theta", "psi |- theta"}, "phi \\/ psi |- theta", S::None},
      {RuleId::ProdMono, "prod-mono", {"phi |- psi", "theta |- tau"}, "phi * theta |- psi * tau", S::None},
      {RuleId::LDivResUp, "ldiv-res-up", {"phi * psi |- theta"}, "psi |- phi \\ theta", S::None},
      {RuleId::LDivResDown, "ldiv-res-down", {"psi |- phi \\ theta"}, "phi * psi |- theta", S::None},
      {RuleId::RDivResUp, "rdiv-res-up", {"phi * psi |- theta"}, "phi |- theta / psi", S::None},
      {RuleId::RDivResDown, "rdiv-res-down", {"phi |- theta / psi"}, "phi * psi |- theta", S::None},
      {RuleId::Substitution, "substitution", {"phi |- psi"}, "phi |- psi", S::None},
      {RuleId::Cut, "cut", {"phi |- psi", "psi |- theta"}, "phi |- theta", S::None},
      {RuleId::Dereliction, "dereliction", {}, "![i]p |- p", S::None},
      {RuleId::Four, "four", {}, "![i]p |- ![i]![i]p", S::None},
      {RuleId::Promotion, "promotion", {}, "![i]p * ![j]q |- ![k](p * q)", S::PromotionOrder},
      {RuleId::BangUnit, "bang-unit", {}, "1 |- ![i]1", S::None},
      {RuleId::ContractionLeft, "contraction-left", {}, "![i]p * q |- ![i]p * q * ![i]p", S::InC},
      {RuleId::ContractionRight, "contraction-right", {}, "q * ![i]p |- ![i]p * q * ![i]p", S::InC},
      {RuleId::Weakening, "weakening", {}, "![i]p |- 1", S::InW},
      {RuleId::ExchangeLR, "exchange-lr", {}, "![i]p * q |- q * ![i]p", S::InE},
      {RuleId::ExchangeRL, "exchange-rl", {}, "q * ![i]p |- ![i]p * q", S::InE},
      {RuleId::BangMono, "bang-mono", {"phi |- psi"}, "![i]phi |- ![j]psi", S::BangMonoOrder},
      {RuleId::Distributivity, "distributivity", {}, "p /\\ (q \\/ r) |- (p /\\ q) \\/ (p /\\ r)", S::None},
      {RuleId::BangMeet, "bang-meet", {}, "![i]p /\\ ![i]q |- ![i](p /\\ q)", S::None},
      {RuleId::BangTop, "bang-top", {}, "T |- ![i]T", S::None},
  };
  return table;
}

inline const RuleInfo& rule_info(RuleId r) { return rule_table()[static_cast<std::size_t>(r)]; }
inline const char* rule_name(RuleId r) { return rule_info(r).name; }
inline std::size_t rule_arity(RuleId r) { return rule_info(r).premises.size(); }

inline std::optional<RuleId> rule_from_name(std::string_view name) {
  for (const auto& info : rule_table())
    if (name == info.name) return info.id;
  return std::nullopt;
}

inline bool is_index_metavariable(const std::string& name) { return name == "i" || name == "j" || name == "k"; }

/// Index metavariables occurring in a rule's schemas.
inline std::vector<std::string> rule_index_metavariables(RuleId r) {
  switch (r) {
    case RuleId::Promotion: return {"i", "j", "k"};
    case RuleId::BangMono: return {"i", "j"};
    default: break;
  }
  const std::string concl = rule_info(r).conclusion;
  return concl.find("![i]") != std::string::npos ? std::vector<std::string>{"i"} : std::vector<std::string>{};
}

/// Schema metavariables bound to formulas and to signature indices.
struct Instantiation {
  std::map<std::string, Formula> formulas;
  std::map<std::string, std::string> indices;

  friend bool operator==(const Instantiation&, const Instantiation&) = default;
};

struct CalculusOptions {
  /// Read the promotion side condition as k ⪰ i, j instead of k ⪯ i, j.
  bool promotion_upward = false;
};

// --------------------------------------------------------------------------
// Schemas and matching.

namespace detail {

struct ParsedRule {
  std::vector<Sequent> premises;
  Sequent conclusion;
};

inline const std::vector<ParsedRule>& parsed_rules() {
  static const std::vector<ParsedRule> parsed = [] {
    std::vector<ParsedRule> out;
    for (const auto& info : rule_table()) {
      ParsedRule r{{}, parse_sequent_unchecked(info.conclusion)};
      for (const char* p : info.premises) r.premises.push_back(parse_sequent_unchecked(p));
      out.push_back(std::move(r));
    }
    return out;
  }();
  return parsed;
}

/// Extends `inst` so that `schema` instantiated equals `f`.
inline bool match(const Formula& schema, const Formula& f, Instantiation& inst) {
  switch (schema.kind()) {
    case Kind::Var: {
      auto [it, fresh] = inst.formulas.emplace(schema.name(), f);
      return fresh || it->second == f;
    }
    case Kind::Bot:
    case Kind::Top:
    case Kind::One: return f.kind() == schema.kind();
    case Kind::Bang: {
      if (f.kind() != Kind::Bang) return false;
      auto [it, fresh] = inst.indices.emplace(schema.name(), f.name());
      if (!fresh && it->second != f.name()) return false;
      return match(schema.body(), f.body(), inst);
    }
    default:
      return f.kind() == schema.kind() && match(schema.left(), f.left(), inst) &&
             match(schema.right(), f.right(), inst);
  }
}

inline bool match(const Sequent& schema, const Sequent& s, Instantiation& inst) {
  return match(schema.lhs, s.lhs, inst) && match(schema.rhs, s.rhs, inst);
}

/// Replaces bound metavariables; unbound ones stay as they are.
inline Formula instantiate(const Formula& schema, const Instantiation& inst) {
  switch (schema.kind()) {
    case Kind::Var: {
      auto it = inst.formulas.find(schema.name());
      return it == inst.formulas.end() ? schema : it->second;
    }
    case Kind::Bot:
    case Kind::Top:
    case Kind::One: return schema;
    case Kind::Bang: {
      auto it = inst.indices.find(schema.name());
      return Formula::bang(it == inst.indices.end() ? schema.name() : it->second, instantiate(schema.body(), inst));
    }
    default:
      return Formula::binary(schema.kind(), instantiate(schema.left(), inst), instantiate(schema.right(), inst));
  }
}

inline Sequent instantiate(const Sequent& schema, const Instantiation& inst) {
  return Sequent{instantiate(schema.lhs, inst), instantiate(schema.rhs, inst)};
}

/// Empty when the side condition holds; otherwise a description.
inline std::optional<std::string> side_condition_failure(SideCondition side, const Instantiation& inst,
                                                         const SubexpSignature& sig,
                                                         const CalculusOptions& opts) {
  for (const auto& [meta, index] : inst.indices)
    if (!sig.find(index)) return "index '" + index + "' bound to " + meta + " is not in the signature";
  auto pos = [&](const char* meta) { return *sig.find(inst.indices.at(meta)); };
  auto name = [&](const char* meta) { return inst.indices.at(meta); };
  switch (side) {
    case SideCondition::None: return std::nullopt;
    case SideCondition::PromotionOrder: {
      const std::size_t i = pos("i"), j = pos("j"), k = pos("k");
      const bool ok = opts.promotion_upward ? (sig.preceq(i, k) && sig.preceq(j, k))
                                            : (sig.preceq(k, i) && sig.preceq(k, j));
      if (ok) return std::nullopt;
      return std::string("promotion needs ") + name("k") + (opts.promotion_upward ? " >= " : " <= ") + name("i") +
             " and " + name("k") + (opts.promotion_upward ? " >= " : " <= ") + name("j");
    }
    case SideCondition::InC:
      if (sig.contraction(pos("i"))) return std::nullopt;
      return name("i") + " is not in C";
    case SideCondition::InW:
      if (sig.weakening(pos("i"))) return std::nullopt;
      return name("i") + " is not in W";
    case SideCondition::InE:
      if (sig.exchange(pos("i"))) return std::nullopt;
      return name("i") + " is not in E";
    case SideCondition::BangMonoOrder:
      if (sig.preceq(pos("j"), pos("i"))) return std::nullopt;
      return "bang-mono needs " + name("j") + " <= " + name("i");
  }
  return std::nullopt;
}

}  // namespace detail

/// One axiom schema with its indices fixed to signature indices.
struct AxiomSchema {
  RuleId rule;
  Sequent schema;
  std::string side_condition;
};

/// Every axiom schema instantiable over `sig`: one entry per admissible
/// choice of indices for the indexed families. Identity comes first.
inline std::vector<AxiomSchema> axiom_schemas(const SubexpSignature& sig, const CalculusOptions& opts = {}) {
  std::vector<AxiomSchema> out;
  const auto& parsed = detail::parsed_rules();
  const std::size_t m = sig.size();
  for (const auto& info : rule_table()) {
    if (!info.premises.empty()) continue;
    const Sequent& schema = parsed[static_cast<std::size_t>(info.id)].conclusion;
    const auto metas = rule_index_metavariables(info.id);
    std::vector<std::size_t> choice(metas.size(), 0);
    while (true) {
      Instantiation inst;
      for (std::size_t k = 0; k < metas.size(); ++k) inst.indices[metas[k]] = sig.name(choice[k]);
      if (!detail::side_condition_failure(info.side, inst, sig, opts)) {
        std::string desc;
        for (const auto& [meta, index] : inst.indices) desc += (desc.empty() ? "" : ", ") + meta + "=" + index;
        out.push_back({info.id, detail::instantiate(schema, inst), desc});
      }
      std::size_t k = metas.size();
      while (k > 0 && ++choice[k - 1] == m) choice[--k] = 0;
      if (k == 0) break;
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Step and derivation checking.

enum class StepErrorKind { ArityMismatch, SchemaMismatch, SideConditionFailed };

inline const char* to_string(StepErrorKind k) {
  switch (k) {
    case StepErrorKind::ArityMismatch: return "ArityMismatch";
    case StepErrorKind::SchemaMismatch: return "SchemaMismatch";
    case StepErrorKind::SideConditionFailed: return "SideConditionFailed";
  }
  return "?";
}

struct StepError {
  StepErrorKind kind;
  std::string message;
  /// Schema text (partially instantiated) and the sequent it was compared with.
  std::string expected;
  std::string got;
};

namespace detail {

inline std::optional<StepError> check_substitution(const Sequent& conclusion, const Sequent& premise,
                                                   Instantiation& inst) {
  auto p = inst.formulas.find("p");
  auto theta = inst.formulas.find("theta");
  if (p == inst.formulas.end() || theta == inst.formulas.end() || p->second.kind() != Kind::Var)
    return StepError{StepErrorKind::SchemaMismatch, "substitution needs a variable p and a formula theta", "", ""};
  const Sequent expected = substitute(premise, p->second.name(), theta->second);
  if (expected != conclusion)
    return StepError{StepErrorKind::SchemaMismatch, "conclusion is not the premise under the substitution",
                     print_sequent(expected), print_sequent(conclusion)};
  for (const char* meta : {"phi", "psi"}) {
    auto it = inst.formulas.find(meta);
    const Formula& actual = std::string(meta) == "phi" ? premise.lhs : premise.rhs;
    if (it != inst.formulas.end() && it->second != actual)
      return StepError{StepErrorKind::SchemaMismatch, std::string(meta) + " does not match the premise",
                       print_formula(it->second), print_formula(actual)};
  }
  inst.formulas.emplace("phi", premise.lhs);
  inst.formulas.emplace("psi", premise.rhs);
  return std::nullopt;
}

}  // namespace detail

/// Checks one inference. `inst` seeds the match: any metavariable it binds
/// must agree with the sequents. On success the completed instantiation is
/// written to `completed` when given.
inline std::optional<StepError> check_step(const Sequent& conclusion, RuleId rule, const std::vector<Sequent>& premises,
                                           const Instantiation& inst, const SubexpSignature& sig,
                                           const CalculusOptions& opts = {}, Instantiation* completed = nullptr) {
  const RuleInfo& info = rule_info(rule);
  if (premises.size() != info.premises.size())
    return StepError{StepErrorKind::ArityMismatch,
                     std::string(info.name) + " takes " + std::to_string(info.premises.size()) + " premise(s), got " +
                         std::to_string(premises.size()),
                     std::to_string(info.premises.size()), std::to_string(premises.size())};
  const auto& parsed = detail::parsed_rules()[static_cast<std::size_t>(rule)];
  Instantiation work = inst;
  for (const auto& [meta, index] : work.indices)
    if (!sig.find(index))
      return StepError{StepErrorKind::SideConditionFailed, "index '" + index + "' is not in the signature", "", index};

  auto mismatch = [&](const Sequent& schema, const Sequent& got, const std::string& where) {
    return StepError{StepErrorKind::SchemaMismatch, where + " does not match " + info.name,
                     print_sequent(detail::instantiate(schema, work)), print_sequent(got)};
  };
  if (rule == RuleId::Substitution) {
    if (auto e = detail::check_substitution(conclusion, premises[0], work)) return e;
  } else {
    for (std::size_t k = 0; k < premises.size(); ++k) {
      Instantiation attempt = work;
      if (!detail::match(parsed.premises[k], premises[k], attempt))
        return mismatch(parsed.premises[k], premises[k], "premise " + std::to_string(k));
      work = std::move(attempt);
    }
    Instantiation attempt = work;
    if (!detail::match(parsed.conclusion, conclusion, attempt)) return mismatch(parsed.conclusion, conclusion, "conclusion");
    work = std::move(attempt);
  }
  if (auto why = detail::side_condition_failure(info.side, work, sig, opts))
    return StepError{StepErrorKind::SideConditionFailed, *why, "", ""};
  if (completed) *completed = std::move(work);
  return std::nullopt;
}

struct Derivation {
  Sequent conclusion;
  RuleId rule;
  Instantiation inst;
  std::vector<Derivation> premises;
};

struct DerivationError {
  /// "root", then ".k" per premise index: "root.0.1".
  std::string path;
  StepError error;
};

namespace detail {

inline std::optional<DerivationError> check_derivation_at(const Derivation& d, const std::string& path,
                                                          const SubexpSignature& sig, const CalculusOptions& opts) {
  std::vector<Sequent> premises;
  for (const auto& p : d.premises) premises.push_back(p.conclusion);
  if (auto e = check_step(d.conclusion, d.rule, premises, d.inst, sig, opts)) return DerivationError{path, *e};
  for (std::size_t k = 0; k < d.premises.size(); ++k)
    if (auto e = check_derivation_at(d.premises[k], path + "." + std::to_string(k), sig, opts)) return e;
  return std::nullopt;
}

}  // namespace detail

/// Checks every node in pre-order; reports the first failing node.
inline std::optional<DerivationError> check_derivation(const Derivation& d, const SubexpSignature& sig,
                                                       const CalculusOptions& opts = {}) {
  return detail::check_derivation_at(d, "root", sig, opts);
}

// --------------------------------------------------------------------------
// Bounded forward search.

struct DeriveLimits {
  std::size_t max_universe = 20'000;
  std::size_t max_facts = 4'000'000;
};

namespace detail {

/// All formulas of size ≤ bound over `atoms` and the signature's indices,
/// in order of size.
inline std::vector<Formula> formula_universe(const std::vector<Formula>& atoms, const SubexpSignature& sig,
                                             std::size_t bound, std::size_t cap) {
  std::vector<std::vector<Formula>> by_size(bound + 1);
  if (bound >= 1) by_size[1] = atoms;
  static constexpr Kind binaries[] = {Kind::Prod, Kind::LDiv, Kind::RDiv, Kind::Or, Kind::And};
  std::size_t total = by_size.size() > 1 ? by_size[1].size() : 0;
  for (std::size_t s = 2; s <= bound; ++s) {
    for (std::size_t i = 0; i < sig.size(); ++i)
      for (const auto& b : by_size[s - 1]) by_size[s].push_back(Formula::bang(sig.name(i), b));
    for (std::size_t ls = 1; ls + 1 < s; ++ls) {
      const std::size_t rs = s - 1 - ls;
      for (Kind k : binaries)
        for (const auto& l : by_size[ls])
          for (const auto& r : by_size[rs]) by_size[s].push_back(Formula::binary(k, l, r));
    }
    total += by_size[s].size();
    if (total > cap) throw budget_exceeded("formula universe exceeds cap", total);
  }
  std::vector<Formula> out;
  for (auto& level : by_size) out.insert(out.end(), level.begin(), level.end());
  return out;
}

class Saturation {
 public:
  Saturation(const Sequent& goal, const SubexpSignature& sig, std::size_t bound, const CalculusOptions& opts,
             const DeriveLimits& limits)
      : sig_(sig), opts_(opts), limits_(limits) {
    std::vector<Formula> atoms;
    std::set<std::string> vars;
    collect_variables(goal.lhs, vars);
    collect_variables(goal.rhs, vars);
    for (const auto& v : vars) atoms.push_back(Formula::var(v));
    bool has_const[3] = {false, false, false};
    for (const auto& side : {goal.lhs, goal.rhs})
      for (const auto& f : subformulas(side)) {
        if (f.kind() == Kind::Bot) has_const[0] = true;
        if (f.kind() == Kind::Top) has_const[1] = true;
        if (f.kind() == Kind::One) has_const[2] = true;
      }
    if (has_const[0]) atoms.push_back(Formula::bot());
    if (has_const[1]) atoms.push_back(Formula::top());
    if (has_const[2]) atoms.push_back(Formula::one());
    universe_ = formula_universe(atoms, sig, bound, limits.max_universe);
    const std::size_t n = universe_.size();
    for (std::size_t x = 0; x < n; ++x) index_.emplace(universe_[x], static_cast<int>(x));
    words_ = (n + 63) / 64;
    fwd_.assign(n * words_, 0);
    back_.assign(n * words_, 0);
    kids_.assign(n, {-1, -1});
    bang_of_.assign(n * sig.size(), -1);
    for (std::size_t x = 0; x < n; ++x) {
      const Formula& f = universe_[x];
      if (f.kind() == Kind::Bang) {
        kids_[x] = {index_.at(f.body()), static_cast<int>(*sig.find(f.name()))};
        bang_of_[kids_[x][0] * sig.size() + kids_[x][1]] = static_cast<int>(x);
      } else if (f.is_binary()) {
        kids_[x] = {index_.at(f.left()), index_.at(f.right())};
        binary_.emplace(key(f.kind(), kids_[x][0], kids_[x][1]), static_cast<int>(x));
        if (f.kind() == Kind::Prod) prods_left_[kids_[x][0]].push_back({kids_[x][1], static_cast<int>(x)});
        if (f.kind() == Kind::Prod) prods_right_[kids_[x][1]].push_back({kids_[x][0], static_cast<int>(x)});
      }
    }
    const auto lhs = index_.find(goal.lhs), rhs = index_.find(goal.rhs);
    if (lhs == index_.end() || rhs == index_.end()) throw input_error("size bound is smaller than the goal");
    goal_ = {lhs->second, rhs->second};
  }

  std::optional<Derivation> run() {
    seed_axioms();
    while (!queue_.empty() && !found()) {
      const int id = queue_.front();
      queue_.pop_front();
      expand(id);
    }
    if (!found()) return std::nullopt;
    return rebuild(fact_id_.at(pair_key(goal_[0], goal_[1])));
  }

 private:
  struct Fact {
    int lhs, rhs;
    RuleId rule;
    int p1 = -1, p2 = -1;
  };

  static std::uint64_t key(Kind k, int l, int r) {
    return (static_cast<std::uint64_t>(k) << 56) | (static_cast<std::uint64_t>(l) << 28) | static_cast<std::uint64_t>(r);
  }
  static std::uint64_t pair_key(int l, int r) { return (static_cast<std::uint64_t>(l) << 32) | static_cast<std::uint32_t>(r); }

  int op(Kind k, int l, int r) const {
    auto it = binary_.find(key(k, l, r));
    return it == binary_.end() ? -1 : it->second;
  }
  bool known(int x, int y) const { return (fwd_[x * words_ + y / 64] >> (y % 64)) & 1; }
  bool found() const { return known(goal_[0], goal_[1]); }

  void add(int x, int y, RuleId rule, int p1 = -1, int p2 = -1) {
    if (x < 0 || y < 0 || known(x, y)) return;
    if (facts_.size() >= limits_.max_facts) throw budget_exceeded("derive: fact budget exhausted", facts_.size());
    fwd_[x * words_ + y / 64] |= std::uint64_t{1} << (y % 64);
    back_[y * words_ + x / 64] |= std::uint64_t{1} << (x % 64);
    fact_id_.emplace(pair_key(x, y), static_cast<int>(facts_.size()));
    facts_.push_back({x, y, rule, p1, p2});
    queue_.push_back(static_cast<int>(facts_.size()) - 1);
  }

  int id_of(int x, int y) const { return fact_id_.at(pair_key(x, y)); }

  template <class Fn>
  void each(const std::vector<std::uint64_t>& bits, int row, Fn&& fn) const {
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t word = bits[row * words_ + w];
      while (word) {
        const int b = std::countr_zero(word);
        word &= word - 1;
        fn(static_cast<int>(w * 64 + b));
      }
    }
  }

  void seed_axioms() {
    const auto& parsed = parsed_rules();
    const int n = static_cast<int>(universe_.size());
    for (const auto& info : rule_table()) {
      if (!info.premises.empty()) continue;
      const Sequent& schema = parsed[static_cast<std::size_t>(info.id)].conclusion;
      for (int x = 0; x < n; ++x) {
        Instantiation lhs_inst;
        if (!match(schema.lhs, universe_[x], lhs_inst)) continue;
        for (int y = 0; y < n; ++y) {
          if (known(x, y)) continue;
          Instantiation inst = lhs_inst;
          if (match(schema.rhs, universe_[y], inst) && !side_condition_failure(info.side, inst, sig_, opts_))
            add(x, y, info.id);
        }
      }
    }
  }

  void expand(int id) {
    const int x = facts_[id].lhs, y = facts_[id].rhs;
    // cut, with this fact on either side
    each(fwd_, y, [&](int z) { add(x, z, RuleId::Cut, id, id_of(y, z)); });
    each(back_, x, [&](int w) { add(w, y, RuleId::Cut, id_of(w, x), id); });
    // conj-intro
    each(fwd_, x, [&](int z) {
      add(x, op(Kind::And, y, z), RuleId::ConjIntro, id, id_of(x, z));
      add(x, op(Kind::And, z, y), RuleId::ConjIntro, id_of(x, z), id);
    });
    // disj-elim
    each(back_, y, [&](int w) {
      add(op(Kind::Or, x, w), y, RuleId::DisjElim, id, id_of(w, y));
      add(op(Kind::Or, w, x), y, RuleId::DisjElim, id_of(w, y), id);
    });
    // prod-mono
    if (auto it = prods_left_.find(x); it != prods_left_.end())
      for (auto [z, xz] : it->second)
        each(fwd_, z, [&](int t) { add(xz, op(Kind::Prod, y, t), RuleId::ProdMono, id, id_of(z, t)); });
    if (auto it = prods_right_.find(x); it != prods_right_.end())
      for (auto [z, zx] : it->second)
        each(fwd_, z, [&](int t) { add(zx, op(Kind::Prod, t, y), RuleId::ProdMono, id_of(z, t), id); });
    // residuation
    const Formula& lf = universe_[x];
    const Formula& rf = universe_[y];
    if (lf.kind() == Kind::Prod) {
      const int a = kids_[x][0], b = kids_[x][1];
      add(b, op(Kind::LDiv, a, y), RuleId::LDivResUp, id);
      add(a, op(Kind::RDiv, y, b), RuleId::RDivResUp, id);
    }
    if (rf.kind() == Kind::LDiv) add(op(Kind::Prod, kids_[y][0], x), kids_[y][1], RuleId::LDivResDown, id);
    if (rf.kind() == Kind::RDiv) add(op(Kind::Prod, x, kids_[y][1]), kids_[y][0], RuleId::RDivResDown, id);
    // bang-mono: !i x ⊢ !j y for j ⪯ i
    const std::size_t m = sig_.size();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (sig_.preceq(j, i)) add(bang_of_[x * m + i], bang_of_[y * m + j], RuleId::BangMono, id);
  }

  Derivation rebuild(int id) const {
    const Fact& f = facts_[id];
    Derivation d{Sequent{universe_[f.lhs], universe_[f.rhs]}, f.rule, {}, {}};
    if (f.p1 >= 0) d.premises.push_back(rebuild(f.p1));
    if (f.p2 >= 0) d.premises.push_back(rebuild(f.p2));
    std::vector<Sequent> premises;
    for (const auto& p : d.premises) premises.push_back(p.conclusion);
    check_step(d.conclusion, d.rule, premises, {}, sig_, opts_, &d.inst);
    return d;
  }

  const SubexpSignature& sig_;
  CalculusOptions opts_;
  DeriveLimits limits_;
  std::vector<Formula> universe_;
  std::unordered_map<Formula, int, FormulaHash> index_;
  std::unordered_map<std::uint64_t, int> binary_;
  std::unordered_map<int, std::vector<std::pair<int, int>>> prods_left_, prods_right_;
  std::vector<std::array<int, 2>> kids_;
  std::vector<int> bang_of_;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> fwd_, back_;
  std::vector<Fact> facts_;
  std::unordered_map<std::uint64_t, int> fact_id_;
  std::deque<int> queue_;
  std::array<int, 2> goal_{};
};

}  // namespace detail

/// Forward saturation over all formulas of size ≤ `size_bound` built from the
/// goal's variables and constants. Applies every rule except substitution,
/// whose instances are already covered by seeding axioms over the whole
/// universe. An empty result is not a refutation. Throws budget_exceeded.
inline std::optional<Derivation> derive_bounded(const Sequent& goal, const SubexpSignature& sig, std::size_t size_bound,
                                                const CalculusOptions& opts = {}, const DeriveLimits& limits = {}) {
  if (size_bound < std::max(goal.lhs.size(), goal.rhs.size()))
    throw input_error("size bound is smaller than the goal");
  if (!indices_known(goal.lhs, sig) || !indices_known(goal.rhs, sig))
    throw input_error("goal mentions an index outside the signature");
  detail::Saturation run(goal, sig, size_bound, opts, limits);
  return run.run();
}

}  // namespace dsmalc
