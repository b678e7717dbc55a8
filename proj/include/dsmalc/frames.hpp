#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dsmalc/error.hpp"
#include "dsmalc/formula.hpp"
#include "dsmalc/order.hpp"
#include "dsmalc/signature.hpp"

namespace dsmalc {

/// (W, ≤, R, O). `fusion[u * n + v]` holds {w : R u v w}.
struct TernaryFrame {
  FinitePoset order;
  std::vector<WorldSet> fusion;
  WorldSet unit = 0;

  std::size_t size() const noexcept { return order.size(); }
  WorldSet image(std::size_t u, std::size_t v) const { return fusion[u * size() + v]; }
  bool r(std::size_t u, std::size_t v, std::size_t w) const { return has(image(u, v), w); }
};

/// Ternary frame plus one accessibility relation per signature index;
/// `access[i][u]` holds {w : u Rᵢ w}.
struct SigmaFrame {
  TernaryFrame base;
  std::vector<std::vector<WorldSet>> access;
  SubexpSignature sig;

  std::size_t size() const noexcept { return base.size(); }
  bool related(std::size_t i, std::size_t u, std::size_t w) const { return has(access[i][u], w); }
};

/// Switches for individual Σ-frame conditions. Everything is on by default;
/// turning a condition off exists only to mutation-test the harnesses.
struct FrameConditions {
  bool promotion = true;
};

/// Builds a frame from explicit triples; throws input_error on out-of-range worlds.
inline TernaryFrame make_ternary_frame(FinitePoset order,
                                       const std::vector<std::array<int, 3>>& triples,
                                       WorldSet unit) {
  TernaryFrame f;
  const std::size_t n = order.size();
  f.order = std::move(order);
  f.fusion.assign(n * n, 0);
  for (const auto& t : triples) {
    for (int x : t)
      if (x < 0 || static_cast<std::size_t>(x) >= n) throw input_error("R triple out of range");
    f.fusion[t[0] * n + t[1]] |= bit(t[2]);
  }
  if (!subset(unit, full_set(n))) throw input_error("O mentions a world out of range");
  f.unit = unit;
  return f;
}

// --------------------------------------------------------------------------
// Operations of the complex algebra on subsets of worlds.

/// A·B = {w : ∃u∈A, v∈B, Ruvw}.
inline WorldSet fuse(const TernaryFrame& f, WorldSet a, WorldSet b) {
  WorldSet out = 0;
  for (int u : members(a))
    for (int v : members(b)) out |= f.image(u, v);
  return out;
}

/// A\B = {w : ∀u,v (Ruwv ∧ u∈A) ⇒ v∈B}.
inline WorldSet under(const TernaryFrame& f, WorldSet a, WorldSet b) {
  WorldSet out = 0;
  for (std::size_t w = 0; w < f.size(); ++w) {
    bool ok = true;
    for (int u : members(a))
      if (!subset(f.image(u, w), b)) { ok = false; break; }
    if (ok) out |= bit(w);
  }
  return out;
}

/// A/B = {w : ∀u,v (Rwuv ∧ u∈B) ⇒ v∈A}.
inline WorldSet over(const TernaryFrame& f, WorldSet a, WorldSet b) {
  WorldSet out = 0;
  for (std::size_t w = 0; w < f.size(); ++w) {
    bool ok = true;
    for (int u : members(b))
      if (!subset(f.image(w, u), a)) { ok = false; break; }
    if (ok) out |= bit(w);
  }
  return out;
}

/// [Rᵢ]A = {u : ∀w (u Rᵢ w ⇒ w∈A)}.
inline WorldSet box(const SigmaFrame& f, std::size_t i, WorldSet a) {
  WorldSet out = 0;
  for (std::size_t u = 0; u < f.size(); ++u)
    if (subset(f.access[i][u], a)) out |= bit(u);
  return out;
}

// --------------------------------------------------------------------------
// Condition checks. Each failing condition is reported once, with its first witness.

namespace detail {

class ViolationLog {
 public:
  void add(const std::string& condition, const std::string& witness) {
    for (const auto& v : out_)
      if (v.condition == condition) return;
    out_.push_back({condition, witness});
  }
  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

inline std::string tuple_str(std::initializer_list<std::size_t> xs) {
  std::string s = "(";
  bool first = true;
  for (auto x : xs) {
    if (!first) s += ", ";
    s += std::to_string(x);
    first = false;
  }
  return s + ")";
}

inline std::string set_str(WorldSet s) {
  std::string out = "{";
  bool first = true;
  for (int x : members(s)) {
    if (!first) out += ",";
    out += std::to_string(x);
    first = false;
  }
  return out + "}";
}

inline void check_ternary(const TernaryFrame& f, ViolationLog& log) {
  const std::size_t n = f.size();
  if (auto why = f.order.defect()) {
    log.add("order.partial_order", *why);
    return;
  }
  if (f.fusion.size() != n * n) {
    log.add("R.shape", "fusion table has wrong size");
    return;
  }
  const FinitePoset& le = f.order;
  // ∃x Ruwx ∧ Rxu'v' ⇔ ∃y Rwu'y ∧ Ruyv'
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t w = 0; w < n; ++w)
      for (std::size_t u2 = 0; u2 < n; ++u2) {
        WorldSet lhs = 0, rhs = 0;
        for (int x : members(f.image(u, w))) lhs |= f.image(x, u2);
        for (int y : members(f.image(w, u2))) rhs |= f.image(u, y);
        if (lhs != rhs) {
          const std::size_t v2 = static_cast<std::size_t>(std::countr_zero(lhs ^ rhs));
          log.add("R.associativity", tuple_str({u, w, u2, v2}));
        }
      }
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      const WorldSet img = f.image(u, v);
      for (int u2 : members(le.down(u)))
        if (!subset(img, f.image(u2, v)))
          log.add("R.monotone_first", tuple_str({u, v, static_cast<std::size_t>(u2)}));
      for (int v2 : members(le.down(v)))
        if (!subset(img, f.image(u, v2)))
          log.add("R.monotone_second", tuple_str({u, v, static_cast<std::size_t>(v2)}));
      if (!le.is_upset(img)) log.add("R.monotone_third", tuple_str({u, v}));
    }
  if (!le.is_upset(f.unit)) log.add("O.upset", set_str(f.unit));
  for (int o : members(f.unit))
    for (std::size_t v = 0; v < n; ++v)
      if (!subset(f.image(v, o) | f.image(o, v), le.up(v)))
        log.add("O.unit_below", tuple_str({v, static_cast<std::size_t>(o)}));
  for (std::size_t v = 0; v < n; ++v) {
    WorldSet right = 0, left = 0;
    for (int o : members(f.unit)) {
      right |= f.image(v, o);
      left |= f.image(o, v);
    }
    if (!subset(le.up(v), right)) {
      const std::size_t w = static_cast<std::size_t>(std::countr_zero(le.up(v) & ~right));
      log.add("O.unit_cover", tuple_str({v, w}));
    }
    if (!subset(le.up(v), left)) {
      const std::size_t w = static_cast<std::size_t>(std::countr_zero(le.up(v) & ~left));
      log.add("O.unit_cover_left", tuple_str({v, w}));
    }
  }
}

}  // namespace detail

/// Verifies the poset axioms, associativity, the three monotonicity
/// conditions and the unit conditions on O: O is an upset, v≤w ⇒ ∃o∈O Rvow,
/// v≤w ⇒ ∃o∈O Rovw, and Rvow or Rovw with o∈O implies v≤w.
inline std::vector<Violation> check_ternary_frame(const TernaryFrame& f) {
  detail::ViolationLog log;
  detail::check_ternary(f, log);
  return log.take();
}

/// Verifies `check_ternary_frame` plus, for every index: Rᵢ is a preorder
/// absorbing ≤ on both sides; promotion for all k ⪯ i, j; i ⪯ j ⇒ Rᵢ ⊆ Rⱼ;
/// O ⊆ [Rᵢ]O; and the exchange, contraction and weakening conditions over
/// all pairs of upsets. Throws size_cap_exceeded if upsets cannot be enumerated.
inline std::vector<Violation> check_sigma_frame(const SigmaFrame& f, const FrameConditions& which = {},
                                                const UpsetLimits& limits = {}) {
  detail::ViolationLog log;
  detail::check_ternary(f.base, log);
  {
    auto base = log.take();
    if (!base.empty()) return base;
  }
  const std::size_t n = f.size();
  const std::size_t m = f.sig.size();
  if (f.access.size() != m) {
    log.add("Ri.shape", "expected one relation per signature index");
    return log.take();
  }
  for (const auto& rel : f.access) {
    if (rel.size() != n) {
      log.add("Ri.shape", "relation has wrong size");
      return log.take();
    }
  }
  const FinitePoset& le = f.base.order;
  const TernaryFrame& t = f.base;
  using detail::tuple_str;
  auto name = [&](std::size_t i) { return "[" + f.sig.name(i) + "]"; };

  for (std::size_t i = 0; i < m; ++i) {
    const auto& R = f.access[i];
    for (std::size_t u = 0; u < n; ++u) {
      if (!has(R[u], u)) log.add("Ri.reflexive" + name(i), tuple_str({u}));
      for (int w : members(R[u]))
        if (!subset(R[w], R[u])) log.add("Ri.transitive" + name(i), tuple_str({u, static_cast<std::size_t>(w)}));
      // u' ≤ u Rᵢ w ≤ w' ⇒ u' Rᵢ w'
      const WorldSet closed = le.upward_closure(R[u]);
      if (closed != R[u]) log.add("Ri.compatible" + name(i), tuple_str({u}));
      for (int lower : members(le.down(u)))
        if (!subset(R[u], R[lower]))
          log.add("Ri.compatible" + name(i), tuple_str({static_cast<std::size_t>(lower), u}));
    }
  }

  if (which.promotion) {
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t i = 0; i < m; ++i) {
        if (!f.sig.preceq(k, i)) continue;
        for (std::size_t j = 0; j < m; ++j) {
          if (!f.sig.preceq(k, j)) continue;
          for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = 0; v < n; ++v) {
              WorldSet reachable = 0;  // {w' : ∃x,y Rxyw', uRᵢx, vRⱼy}
              for (int x : members(f.access[i][u]))
                for (int y : members(f.access[j][v])) reachable |= t.image(x, y);
              for (int w : members(t.image(u, v)))
                if (!subset(f.access[k][w], reachable))
                  log.add("Ri.promotion" + name(i) + name(j) + name(k),
                          tuple_str({u, v, static_cast<std::size_t>(w)}));
            }
        }
      }
  }

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j || !f.sig.preceq(i, j)) continue;
      for (std::size_t u = 0; u < n; ++u)
        if (!subset(f.access[i][u], f.access[j][u]))
          log.add("Ri.order" + name(i) + name(j), tuple_str({u}));
    }

  for (std::size_t i = 0; i < m; ++i)
    if (!subset(t.unit, box(f, i, t.unit))) log.add("Ri.unit" + name(i), detail::set_str(t.unit));

  bool structural = false;
  for (std::size_t i = 0; i < m; ++i)
    structural = structural || f.sig.exchange(i) || f.sig.contraction(i) || f.sig.weakening(i);
  if (structural) {
    const auto ups = upsets(le, limits);
    for (std::size_t i = 0; i < m; ++i) {
      for (WorldSet a : ups) {
        const WorldSet ba = box(f, i, a);
        if (f.sig.weakening(i) && !subset(ba, t.unit))
          log.add("Ri.weakening" + name(i), detail::set_str(a));
        if (!f.sig.exchange(i) && !f.sig.contraction(i)) continue;
        for (WorldSet b : ups) {
          const WorldSet left = fuse(t, ba, b);
          const WorldSet right = fuse(t, b, ba);
          if (f.sig.exchange(i) && left != right)
            log.add("Ri.exchange" + name(i), detail::set_str(a) + " " + detail::set_str(b));
          if (f.sig.contraction(i)) {
            const WorldSet both = fuse(t, left, ba);
            if (!subset(left, both))
              log.add("Ri.contraction_left" + name(i), detail::set_str(a) + " " + detail::set_str(b));
            if (!subset(right, both))
              log.add("Ri.contraction_right" + name(i), detail::set_str(a) + " " + detail::set_str(b));
          }
        }
      }
    }
  }
  return log.take();
}

// --------------------------------------------------------------------------
// Models and truth.

class unbound_variable : public error {
 public:
  explicit unbound_variable(const std::string& var)
      : error("variable '" + var + "' has no value in the valuation"), var_(var) {}
  const std::string& variable() const noexcept { return var_; }

 private:
  std::string var_;
};

struct Model {
  SigmaFrame frame;
  std::map<std::string, WorldSet> valuation;
};

/// Throws input_error unless every valuation value is an upset of the frame.
inline Model make_model(SigmaFrame frame, std::map<std::string, WorldSet> valuation) {
  for (const auto& [var, set] : valuation) {
    if (!subset(set, full_set(frame.size())) || !frame.base.order.is_upset(set))
      throw input_error("valuation of '" + var + "' is not an upset");
  }
  return Model{std::move(frame), std::move(valuation)};
}

namespace detail {

inline std::size_t index_in(const SubexpSignature& sig, const std::string& index) {
  auto pos = sig.find(index);
  if (!pos) throw input_error("subexponential index '" + index + "' is not in the signature");
  return *pos;
}

inline WorldSet truth_set(const SigmaFrame& f, const std::map<std::string, WorldSet>& val,
                          const Formula& phi) {
  const std::size_t n = f.size();
  const TernaryFrame& t = f.base;
  switch (phi.kind()) {
    case Kind::Var: {
      auto it = val.find(phi.name());
      if (it == val.end()) throw unbound_variable(phi.name());
      return it->second;
    }
    case Kind::Bot: return 0;
    case Kind::Top: return full_set(n);
    case Kind::One: return t.unit;
    case Kind::Bang: {
      const std::size_t i = index_in(f.sig, phi.name());
      const WorldSet body = truth_set(f, val, phi.body());
      WorldSet out = 0;
      for (std::size_t w = 0; w < n; ++w) {
        bool all = true;
        for (std::size_t u = 0; u < n && all; ++u)
          if (f.related(i, w, u) && !has(body, u)) all = false;
        if (all) out |= bit(w);
      }
      return out;
    }
    default: break;
  }
  const WorldSet a = truth_set(f, val, phi.left());
  const WorldSet b = truth_set(f, val, phi.right());
  WorldSet out = 0;
  for (std::size_t w = 0; w < n; ++w) {
    bool holds = false;
    switch (phi.kind()) {
      case Kind::Or: holds = has(a, w) || has(b, w); break;
      case Kind::And: holds = has(a, w) && has(b, w); break;
      case Kind::Prod:
        for (std::size_t u = 0; u < n && !holds; ++u)
          for (std::size_t v = 0; v < n && !holds; ++v)
            holds = t.r(u, v, w) && has(a, u) && has(b, v);
        break;
      case Kind::LDiv:  // w ⊨ φ\ψ iff ∀u,v (Ruwv ∧ u⊨φ) ⇒ v⊨ψ
        holds = true;
        for (std::size_t u = 0; u < n && holds; ++u)
          for (std::size_t v = 0; v < n && holds; ++v)
            if (t.r(u, w, v) && has(a, u) && !has(b, v)) holds = false;
        break;
      case Kind::RDiv:  // w ⊨ ψ/φ iff ∀u,v (Rwuv ∧ u⊨φ) ⇒ v⊨ψ
        holds = true;
        for (std::size_t u = 0; u < n && holds; ++u)
          for (std::size_t v = 0; v < n && holds; ++v)
            if (t.r(w, u, v) && has(b, u) && !has(a, v)) holds = false;
        break;
      default: break;
    }
    if (holds) out |= bit(w);
  }
  return out;
}

}  // namespace detail

/// Truth set [[φ]] computed clause by clause from the Kripke truth definition.
inline WorldSet eval(const Model& m, const Formula& phi) {
  return detail::truth_set(m.frame, m.valuation, phi);
}

/// M ⊨ φ ⊢ ψ, i.e. [[φ]] ⊆ [[ψ]].
inline bool sequent_holds(const Model& m, const Sequent& s) {
  return subset(eval(m, s.lhs), eval(m, s.rhs));
}

/// M, w ⊨ φ ⊢ ψ: if w ⊨ φ then w ⊨ ψ.
inline bool holds_at(const Model& m, std::size_t w, const Sequent& s) {
  return !has(eval(m, s.lhs), w) || has(eval(m, s.rhs), w);
}

/// M ⊨ φ ⊢ ψ through the pointwise definition.
inline bool sequent_holds_pointwise(const Model& m, const Sequent& s) {
  for (std::size_t w = 0; w < m.frame.size(); ++w)
    if (!holds_at(m, w, s)) return false;
  return true;
}

struct ValidityLimits {
  UpsetLimits upsets{};
  std::size_t max_valuations = 1'000'000;
};

/// Calls `fn(valuation)` for every assignment of upsets to `vars`, in
/// odometer order over the canonical upset list (last variable fastest).
/// Stops early when `fn` returns false. Returns false iff stopped early.
template <class Fn>
bool for_each_valuation(const std::vector<std::string>& vars,
                        const std::vector<WorldSet>& ups, const ValidityLimits& limits, Fn&& fn) {
  double total = 1;
  for (std::size_t k = 0; k < vars.size(); ++k) total *= static_cast<double>(ups.size());
  if (total > static_cast<double>(limits.max_valuations))
    throw size_cap_exceeded("valuation space of " + std::to_string(static_cast<long double>(total)) +
                            " exceeds cap of " + std::to_string(limits.max_valuations));
  std::vector<std::size_t> pos(vars.size(), 0);
  std::map<std::string, WorldSet> val;
  for (const auto& v : vars) val[v] = ups.front();
  while (true) {
    if (!fn(static_cast<const std::map<std::string, WorldSet>&>(val))) return false;
    std::size_t k = vars.size();
    while (k > 0) {
      --k;
      if (++pos[k] < ups.size()) {
        val[vars[k]] = ups[pos[k]];
        break;
      }
      pos[k] = 0;
      val[vars[k]] = ups[0];
      if (k == 0) return true;
    }
    if (vars.empty()) return true;
  }
}

/// F ⊨ φ ⊢ ψ: the sequent holds under every valuation of its variables into upsets.
inline bool frame_validates(const SigmaFrame& f, const Sequent& s, const ValidityLimits& limits = {}) {
  const auto ups = upsets(f.base.order, limits.upsets);
  const auto vars = variables(s);
  return for_each_valuation(vars, ups, limits, [&](const std::map<std::string, WorldSet>& val) {
    return subset(detail::truth_set(f, val, s.lhs), detail::truth_set(f, val, s.rhs));
  });
}

}  // namespace dsmalc
