#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsmalc/error.hpp"

namespace dsmalc {

/// Subset of a finite carrier of at most 64 points; bit x set iff x is a member.
using WorldSet = std::uint64_t;
using Elem = int;

inline constexpr std::size_t max_carrier = 64;

constexpr WorldSet bit(std::size_t x) { return WorldSet{1} << x; }
constexpr bool has(WorldSet s, std::size_t x) { return (s >> x) & 1U; }
constexpr WorldSet full_set(std::size_t n) { return n >= 64 ? ~WorldSet{0} : bit(n) - 1; }
constexpr bool subset(WorldSet a, WorldSet b) { return (a & ~b) == 0; }

inline std::vector<int> members(WorldSet s) {
  std::vector<int> out;
  while (s) {
    out.push_back(std::countr_zero(s));
    s &= s - 1;
  }
  return out;
}

/// A single recorded failure of some condition. `condition` names the clause;
/// `witness` renders the offending elements.
struct Violation {
  std::string condition;
  std::string witness;
};

enum class OrderErrorKind { NotAPartialOrder, NotALattice, NotDistributive, NotJoinIrreducible };

class order_error : public error {
 public:
  order_error(OrderErrorKind kind, const std::string& message, std::vector<int> witness)
      : error(message), kind_(kind), witness_(std::move(witness)) {}

  OrderErrorKind kind() const noexcept { return kind_; }
  const std::vector<int>& witness() const noexcept { return witness_; }

 private:
  OrderErrorKind kind_;
  std::vector<int> witness_;
};

/// Finite partial order on {0..n-1}, stored as the principal upsets.
class FinitePoset {
 public:
  FinitePoset() = default;

  /// Validates reflexivity, antisymmetry and transitivity.
  static FinitePoset from_matrix(const std::vector<std::vector<bool>>& leq) {
    const std::size_t n = leq.size();
    if (n > max_carrier) throw input_error("poset larger than 64 elements");
    FinitePoset p;
    p.up_.assign(n, 0);
    for (std::size_t x = 0; x < n; ++x) {
      if (leq[x].size() != n) throw input_error("poset matrix is not square");
      for (std::size_t y = 0; y < n; ++y)
        if (leq[x][y]) p.up_[x] |= bit(y);
    }
    p.rebuild_down();
    if (auto why = p.defect()) throw order_error(OrderErrorKind::NotAPartialOrder, *why, {});
    return p;
  }

  /// `up[x]` lists {y : x <= y}. Not validated; see `defect()`.
  static FinitePoset from_upsets_unchecked(std::vector<WorldSet> up) {
    FinitePoset p;
    p.up_ = std::move(up);
    p.rebuild_down();
    return p;
  }

  static FinitePoset chain(std::size_t n) {
    std::vector<WorldSet> up(n);
    for (std::size_t x = 0; x < n; ++x) up[x] = full_set(n) & ~(bit(x) - 1);
    return from_upsets_unchecked(std::move(up));
  }

  static FinitePoset antichain(std::size_t n) {
    std::vector<WorldSet> up(n);
    for (std::size_t x = 0; x < n; ++x) up[x] = bit(x);
    return from_upsets_unchecked(std::move(up));
  }

  std::size_t size() const noexcept { return up_.size(); }
  bool leq(std::size_t x, std::size_t y) const { return has(up_[x], y); }
  bool less(std::size_t x, std::size_t y) const { return x != y && leq(x, y); }
  WorldSet up(std::size_t x) const { return up_[x]; }
  WorldSet down(std::size_t x) const { return down_[x]; }
  WorldSet all() const { return full_set(size()); }

  /// Describes the first failing partial-order axiom, if any.
  std::optional<std::string> defect() const {
    const std::size_t n = size();
    for (std::size_t x = 0; x < n; ++x) {
      if (!leq(x, x)) return "not reflexive at " + std::to_string(x);
      for (std::size_t y = 0; y < n; ++y) {
        if (x != y && leq(x, y) && leq(y, x))
          return "not antisymmetric at (" + std::to_string(x) + ", " + std::to_string(y) + ")";
        if (leq(x, y) && !subset(up_[y], up_[x]))
          return "not transitive through (" + std::to_string(x) + ", " + std::to_string(y) + ")";
      }
    }
    return std::nullopt;
  }

  bool is_upset(WorldSet s) const {
    for (int x : members(s))
      if (!subset(up_[x], s)) return false;
    return true;
  }

  WorldSet upward_closure(WorldSet s) const {
    WorldSet out = 0;
    for (int x : members(s)) out |= up_[x];
    return out;
  }

  WorldSet downward_closure(WorldSet s) const {
    WorldSet out = 0;
    for (int x : members(s)) out |= down_[x];
    return out;
  }

  /// Same order with every pair reversed.
  FinitePoset dual() const { return from_upsets_unchecked(down_); }

  friend bool operator==(const FinitePoset& a, const FinitePoset& b) { return a.up_ == b.up_; }

 private:
  void rebuild_down() {
    down_.assign(up_.size(), 0);
    for (std::size_t x = 0; x < up_.size(); ++x)
      for (int y : members(up_[x])) down_[y] |= bit(x);
  }

  std::vector<WorldSet> up_;
  std::vector<WorldSet> down_;
};

/// Bounded lattice over a finite poset with precomputed meet/join tables.
/// Produced by `lattice_from_poset` (which also demands distributivity) or by
/// `bounded_lattice_from_poset`.
class FiniteLattice {
 public:
  const FinitePoset& poset() const noexcept { return poset_; }
  std::size_t size() const noexcept { return poset_.size(); }
  bool leq(Elem a, Elem b) const { return poset_.leq(a, b); }
  Elem meet(Elem a, Elem b) const { return meet_[a * size() + b]; }
  Elem join(Elem a, Elem b) const { return join_[a * size() + b]; }
  Elem top() const noexcept { return top_; }
  Elem bot() const noexcept { return bot_; }

  /// Join of a set; bot for the empty set.
  Elem join_all(WorldSet s) const {
    Elem acc = bot_;
    for (int x : members(s)) acc = join(acc, x);
    return acc;
  }

  /// Meet of a set; top for the empty set.
  Elem meet_all(WorldSet s) const {
    Elem acc = top_;
    for (int x : members(s)) acc = meet(acc, x);
    return acc;
  }

  /// First triple violating a∧(b∨c) = (a∧b)∨(a∧c), if any.
  std::optional<std::vector<int>> distributivity_witness() const {
    const int n = static_cast<int>(size());
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          if (meet(a, join(b, c)) != join(meet(a, b), meet(a, c))) return std::vector<int>{a, b, c};
    return std::nullopt;
  }

  bool is_distributive() const { return !distributivity_witness(); }

 private:
  friend FiniteLattice bounded_lattice_from_poset(const FinitePoset&);
  FinitePoset poset_;
  std::vector<Elem> meet_, join_;
  Elem top_ = 0, bot_ = 0;
};

/// Computes meet and join tables; throws NotALattice when some pair lacks an
/// infimum or supremum (or the poset is empty).
inline FiniteLattice bounded_lattice_from_poset(const FinitePoset& p) {
  const std::size_t n = p.size();
  if (n == 0) throw order_error(OrderErrorKind::NotALattice, "empty poset has no bounds", {});
  FiniteLattice L;
  L.poset_ = p;
  L.meet_.assign(n * n, -1);
  L.join_.assign(n * n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const WorldSet lower = p.down(a) & p.down(b);
      const WorldSet upper = p.up(a) & p.up(b);
      for (int x : members(lower))
        if (subset(lower, p.down(x))) L.meet_[a * n + b] = x;
      for (int x : members(upper))
        if (subset(upper, p.up(x))) L.join_[a * n + b] = x;
      if (L.meet_[a * n + b] < 0 || L.join_[a * n + b] < 0) {
        throw order_error(OrderErrorKind::NotALattice,
                          "no " + std::string(L.meet_[a * n + b] < 0 ? "meet" : "join") + " for (" +
                              std::to_string(a) + ", " + std::to_string(b) + ")",
                          {static_cast<int>(a), static_cast<int>(b)});
      }
    }
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (p.up(x) == bit(x)) L.top_ = static_cast<Elem>(x);
    if (p.down(x) == bit(x)) L.bot_ = static_cast<Elem>(x);
  }
  if (p.down(L.top_) != p.all() || p.up(L.bot_) != p.all())
    throw order_error(OrderErrorKind::NotALattice, "poset is not bounded", {});
  return L;
}

/// A distributive lattice over `p`, or NotALattice / NotDistributive.
inline FiniteLattice lattice_from_poset(const FinitePoset& p) {
  FiniteLattice L = bounded_lattice_from_poset(p);
  if (auto w = L.distributivity_witness()) {
    const auto& t = *w;
    throw order_error(OrderErrorKind::NotDistributive,
                      "not distributive at (" + std::to_string(t[0]) + ", " +
                          std::to_string(t[1]) + ", " + std::to_string(t[2]) + ")",
                      t);
  }
  return L;
}

/// a is join-irreducible iff a is not bot and a differs from the join of
/// everything strictly below it. In a finite lattice this coincides with
/// complete join-irreducibility.
inline std::vector<Elem> join_irreducibles(const FiniteLattice& L) {
  std::vector<Elem> out;
  for (std::size_t a = 0; a < L.size(); ++a) {
    const Elem below = L.join_all(L.poset().down(a) & ~bit(a));
    if (below != static_cast<Elem>(a)) out.push_back(static_cast<Elem>(a));
  }
  return out;
}

inline std::vector<Elem> meet_irreducibles(const FiniteLattice& L) {
  std::vector<Elem> out;
  for (std::size_t a = 0; a < L.size(); ++a) {
    const Elem above = L.meet_all(L.poset().up(a) & ~bit(a));
    if (above != static_cast<Elem>(a)) out.push_back(static_cast<Elem>(a));
  }
  return out;
}

inline bool is_join_irreducible(const FiniteLattice& L, Elem a) {
  return L.join_all(L.poset().down(a) & ~bit(a)) != a;
}

/// κ(j) = ⋁{x : j ≰ x}.
inline Elem kappa(const FiniteLattice& L, Elem j) {
  if (j < 0 || static_cast<std::size_t>(j) >= L.size() || !is_join_irreducible(L, j))
    throw order_error(OrderErrorKind::NotJoinIrreducible,
                      std::to_string(j) + " is not join-irreducible", {j});
  return L.join_all(L.poset().all() & ~L.poset().up(j));
}

struct UpsetLimits {
  std::size_t max_elements = 12;
  std::size_t max_count = std::size_t{1} << 12;
};

namespace detail {

inline void upsets_rec(const FinitePoset& p, const std::vector<int>& order, std::size_t k,
                       WorldSet in, std::vector<WorldSet>& acc,
                       std::size_t max_count) {
  if (k == order.size()) {
    if (acc.size() >= max_count)
      throw size_cap_exceeded("upset count exceeds cap of " + std::to_string(max_count));
    acc.push_back(in);
    return;
  }
  const int x = order[k];
  // Elements are visited along a linear extension, so everything below x is decided.
  const bool forced_in = (p.down(x) & ~bit(x) & in) != 0;
  if (!forced_in) upsets_rec(p, order, k + 1, in, acc, max_count);
  upsets_rec(p, order, k + 1, in | bit(x), acc, max_count);
}

}  // namespace detail

/// A linear extension of `p` (minimal elements first).
inline std::vector<int> linear_extension(const FinitePoset& p) {
  std::vector<int> order;
  WorldSet placed = 0;
  while (order.size() < p.size()) {
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (has(placed, x)) continue;
      if (subset(p.down(x) & ~bit(x), placed)) {
        order.push_back(static_cast<int>(x));
        placed |= bit(x);
        break;
      }
    }
  }
  return order;
}

/// All upward-closed subsets, in ascending order of their bit encoding.
inline std::vector<WorldSet> upsets(const FinitePoset& p, const UpsetLimits& limits = {}) {
  if (p.size() > limits.max_elements)
    throw size_cap_exceeded("upset enumeration over " + std::to_string(p.size()) +
                            " elements exceeds cap of " + std::to_string(limits.max_elements));
  std::vector<WorldSet> acc;
  detail::upsets_rec(p, linear_extension(p), 0, 0, acc, limits.max_count);
  std::sort(acc.begin(), acc.end());
  return acc;
}

}  // namespace dsmalc
