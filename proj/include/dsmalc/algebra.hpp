#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dsmalc/error.hpp"
#include "dsmalc/formula.hpp"
#include "dsmalc/frames.hpp"
#include "dsmalc/order.hpp"
#include "dsmalc/signature.hpp"

namespace dsmalc {

/// Square operation table over a finite carrier.
class Table {
 public:
  Table() = default;
  explicit Table(std::size_t n, Elem fill = 0) : n_(n), cells_(n * n, fill) {}

  static Table from_rows(const std::vector<std::vector<Elem>>& rows) {
    Table t(rows.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (rows[a].size() != rows.size()) throw input_error("operation table is not square");
      for (std::size_t b = 0; b < rows.size(); ++b) t.at(a, b) = rows[a][b];
    }
    return t;
  }

  std::size_t size() const noexcept { return n_; }
  Elem operator()(std::size_t a, std::size_t b) const { return cells_[a * n_ + b]; }
  Elem& at(std::size_t a, std::size_t b) { return cells_[a * n_ + b]; }

  std::vector<std::vector<Elem>> rows() const {
    std::vector<std::vector<Elem>> out(n_, std::vector<Elem>(n_));
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t b = 0; b < n_; ++b) out[a][b] = (*this)(a, b);
    return out;
  }

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Elem> cells_;
};

/// Thrown when a product has no residuals; (a, b, c) is a triple where the
/// three-way equivalence b ≤ a\c ⇔ a·b ≤ c ⇔ a ≤ c/b breaks.
class not_residuated : public error {
 public:
  not_residuated(Elem a, Elem b, Elem c)
      : error("product is not residuated at (" + std::to_string(a) + ", " + std::to_string(b) +
              ", " + std::to_string(c) + ")"),
        witness_{a, b, c} {}
  const std::array<Elem, 3>& witness() const noexcept { return witness_; }

 private:
  std::array<Elem, 3> witness_;
};

struct Residuals {
  Table ldiv;  // ldiv(a, c) = a\c
  Table rdiv;  // rdiv(c, b) = c/b
};

namespace detail {

inline Residuals residual_candidates(const FiniteLattice& L, const Table& prod) {
  const std::size_t n = L.size();
  Residuals r{Table(n), Table(n)};
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      WorldSet right = 0, left = 0;
      for (std::size_t z = 0; z < n; ++z) {
        if (L.leq(prod(x, z), static_cast<Elem>(y))) right |= bit(z);  // x·z ≤ y
        if (L.leq(prod(z, y), static_cast<Elem>(x))) left |= bit(z);   // z·y ≤ x
      }
      r.ldiv.at(x, y) = L.join_all(right);
      r.rdiv.at(x, y) = L.join_all(left);
    }
  return r;
}

inline std::optional<std::array<Elem, 3>> residuation_witness(const FiniteLattice& L, const Table& prod,
                                                             const Table& ldiv, const Table& rdiv) {
  const int n = static_cast<int>(L.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const bool mid = L.leq(prod(a, b), c);
        if (L.leq(b, ldiv(a, c)) != mid || L.leq(a, rdiv(c, b)) != mid) return std::array<Elem, 3>{a, b, c};
      }
  return std::nullopt;
}

}  // namespace detail

/// a\c := ⋁{b : a·b ≤ c} and c/b := ⋁{a : a·b ≤ c}, then checks the
/// residuation law on every triple. Throws not_residuated on failure.
inline Residuals residual_synthesize(const FiniteLattice& L, const Table& prod) {
  if (prod.size() != L.size()) throw input_error("product table does not match lattice size");
  Residuals r = detail::residual_candidates(L, prod);
  if (auto w = detail::residuation_witness(L, prod, r.ldiv, r.rdiv)) throw not_residuated((*w)[0], (*w)[1], (*w)[2]);
  return r;
}

/// Finite lattice with monoid, residuals and one operator per signature
/// index. Construction only checks shapes; the Σ-algebra laws are checked by
/// `check_sigma_algebra`. The lattice may be non-distributive so that such
/// algebras can be represented and rejected.
class FiniteSigmaAlgebra {
 public:
  /// Residuals are synthesized as joins and not verified here.
  FiniteSigmaAlgebra(FiniteLattice lattice, Table prod, Elem unit, std::vector<std::vector<Elem>> bang,
                     SubexpSignature sig)
      : lattice_(std::move(lattice)), prod_(std::move(prod)), unit_(unit), bang_(std::move(bang)),
        sig_(std::move(sig)) {
    validate_shape(false);
    Residuals r = detail::residual_candidates(lattice_, prod_);
    ldiv_ = std::move(r.ldiv);
    rdiv_ = std::move(r.rdiv);
  }

  /// Strict form: residual tables are supplied and kept as given.
  FiniteSigmaAlgebra(FiniteLattice lattice, Table prod, Table ldiv, Table rdiv, Elem unit,
                     std::vector<std::vector<Elem>> bang, SubexpSignature sig)
      : lattice_(std::move(lattice)), prod_(std::move(prod)), ldiv_(std::move(ldiv)),
        rdiv_(std::move(rdiv)), unit_(unit), bang_(std::move(bang)), sig_(std::move(sig)) {
    validate_shape(true);
  }

  const FiniteLattice& lattice() const noexcept { return lattice_; }
  std::size_t size() const noexcept { return lattice_.size(); }
  const SubexpSignature& sig() const noexcept { return sig_; }
  bool leq(Elem a, Elem b) const { return lattice_.leq(a, b); }
  Elem meet(Elem a, Elem b) const { return lattice_.meet(a, b); }
  Elem join(Elem a, Elem b) const { return lattice_.join(a, b); }
  Elem top() const { return lattice_.top(); }
  Elem bot() const { return lattice_.bot(); }
  Elem prod(Elem a, Elem b) const { return prod_(a, b); }
  /// a\c
  Elem ldiv(Elem a, Elem c) const { return ldiv_(a, c); }
  /// c/b
  Elem rdiv(Elem c, Elem b) const { return rdiv_(c, b); }
  Elem unit() const noexcept { return unit_; }
  Elem bang(std::size_t i, Elem a) const { return bang_[i][a]; }

  const Table& prod_table() const noexcept { return prod_; }
  const Table& ldiv_table() const noexcept { return ldiv_; }
  const Table& rdiv_table() const noexcept { return rdiv_; }
  const std::vector<std::vector<Elem>>& bang_tables() const noexcept { return bang_; }

 private:
  void validate_shape(bool with_residuals) const {
    const std::size_t n = lattice_.size();
    auto in_range = [n](Elem x) { return x >= 0 && static_cast<std::size_t>(x) < n; };
    auto check_table = [&](const Table& t, const char* what) {
      if (t.size() != n) throw input_error(std::string(what) + " table does not match lattice size");
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          if (!in_range(t(a, b))) throw input_error(std::string(what) + " table entry out of range");
    };
    check_table(prod_, "prod");
    if (with_residuals) {
      check_table(ldiv_, "ldiv");
      check_table(rdiv_, "rdiv");
    }
    if (!in_range(unit_)) throw input_error("unit out of range");
    if (bang_.size() != sig_.size()) throw input_error("need one bang table per signature index");
    for (const auto& b : bang_) {
      if (b.size() != n) throw input_error("bang table does not match lattice size");
      for (Elem x : b)
        if (!in_range(x)) throw input_error("bang table entry out of range");
    }
  }

  FiniteLattice lattice_;
  Table prod_, ldiv_, rdiv_;
  Elem unit_ = 0;
  std::vector<std::vector<Elem>> bang_;
  SubexpSignature sig_;
};

/// Operation tables, unit and signature all agree.
inline bool same_operations(const FiniteSigmaAlgebra& a, const FiniteSigmaAlgebra& b) {
  return a.lattice().poset() == b.lattice().poset() && a.prod_table() == b.prod_table() &&
         a.ldiv_table() == b.ldiv_table() && a.rdiv_table() == b.rdiv_table() &&
         a.unit() == b.unit() && a.bang_tables() == b.bang_tables() && a.sig() == b.sig();
}

/// Evaluates every Σ-algebra law on all tuples of elements. Each failing law
/// appears once with its first witness.
inline std::vector<Violation> check_sigma_algebra(const FiniteSigmaAlgebra& A) {
  detail::ViolationLog log;
  const int n = static_cast<int>(A.size());
  const std::size_t m = A.sig().size();
  auto w = [](std::initializer_list<int> xs) {
    std::string s;
    for (int x : xs) s += (s.empty() ? "" : " ") + std::to_string(x);
    return s;
  };
  auto idx = [&](std::size_t i) { return "i=" + A.sig().name(i); };

  if (auto t = A.lattice().distributivity_witness()) log.add("lattice.distributive", w({(*t)[0], (*t)[1], (*t)[2]}));

  for (int a = 0; a < n; ++a) {
    if (A.prod(A.unit(), a) != a || A.prod(a, A.unit()) != a) log.add("monoid.unit", w({a}));
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (A.prod(A.prod(a, b), c) != A.prod(a, A.prod(b, c))) log.add("monoid.associative", w({a, b, c}));
  }
  if (auto t = detail::residuation_witness(A.lattice(), A.prod_table(), A.ldiv_table(), A.rdiv_table()))
    log.add("residuation", w({(*t)[0], (*t)[1], (*t)[2]}));

  for (std::size_t i = 0; i < m; ++i) {
    if (A.bang(i, A.top()) != A.top()) log.add("bang.top", idx(i));
    if (!A.leq(A.unit(), A.bang(i, A.unit()))) log.add("bang.unit", idx(i));
    for (int a = 0; a < n; ++a) {
      const Elem ba = A.bang(i, a);
      if (A.bang(i, ba) != ba) log.add("bang.idempotent", idx(i) + " " + w({a}));
      if (!A.leq(ba, a)) log.add("bang.deflationary", idx(i) + " " + w({a}));
      if (A.sig().weakening(i) && !A.leq(ba, A.unit())) log.add("weakening", idx(i) + " " + w({a}));
      for (int b = 0; b < n; ++b) {
        if (A.bang(i, A.meet(a, b)) != A.meet(ba, A.bang(i, b))) log.add("bang.meet", idx(i) + " " + w({a, b}));
        if (A.sig().exchange(i) && A.prod(ba, b) != A.prod(b, ba)) log.add("exchange", idx(i) + " " + w({a, b}));
        if (A.sig().contraction(i)) {
          const Elem both = A.prod(A.prod(ba, b), ba);
          if (!A.leq(A.prod(ba, b), both)) log.add("contraction.left", idx(i) + " " + w({a, b}));
          if (!A.leq(A.prod(b, ba), both)) log.add("contraction.right", idx(i) + " " + w({a, b}));
        }
      }
    }
  }
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (!A.sig().preceq(k, i) || !A.sig().preceq(k, j)) continue;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            if (!A.leq(A.prod(A.bang(i, a), A.bang(j, b)), A.bang(k, A.prod(a, b))))
              log.add("promotion", "i=" + A.sig().name(i) + " j=" + A.sig().name(j) + " k=" +
                                       A.sig().name(k) + " " + w({a, b}));
      }
  return log.take();
}

/// Value of φ in A under `assignment`; throws unbound_variable or input_error
/// (unknown index).
inline Elem interpret(const FiniteSigmaAlgebra& A, const Formula& phi,
                      const std::map<std::string, Elem>& assignment) {
  switch (phi.kind()) {
    case Kind::Bot: return A.bot();
    case Kind::Top: return A.top();
    case Kind::One: return A.unit();
    case Kind::Var: {
      auto it = assignment.find(phi.name());
      if (it == assignment.end()) throw unbound_variable(phi.name());
      return it->second;
    }
    case Kind::Bang: return A.bang(detail::index_in(A.sig(), phi.name()), interpret(A, phi.body(), assignment));
    default: break;
  }
  const Elem a = interpret(A, phi.left(), assignment);
  const Elem b = interpret(A, phi.right(), assignment);
  switch (phi.kind()) {
    case Kind::Prod: return A.prod(a, b);
    case Kind::LDiv: return A.ldiv(a, b);
    case Kind::RDiv: return A.rdiv(a, b);
    case Kind::Or: return A.join(a, b);
    case Kind::And: return A.meet(a, b);
    default: return a;
  }
}

// --------------------------------------------------------------------------
// Atom structure.

/// The frame on J∞(A). World k stands for the element `worlds[k]`.
struct AtomStructure {
  SigmaFrame frame;
  std::vector<Elem> worlds;
};

/// Worlds are the join-irreducibles, ordered by the dual of the lattice
/// order. R u v w ⇔ w ≤ u·v; O = {j : j ≤ ε}; u Rᵢ w ⇔ !ᵢκ(w) ≤ κ(u).
inline AtomStructure atom_structure(const FiniteSigmaAlgebra& A) {
  AtomStructure at;
  at.worlds = join_irreducibles(A.lattice());
  const std::size_t n = at.worlds.size();
  if (n > max_carrier) throw input_error("too many join-irreducibles");
  const auto& J = at.worlds;
  std::vector<std::vector<bool>> leq(n, std::vector<bool>(n));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) leq[u][v] = A.leq(J[v], J[u]);

  TernaryFrame& t = at.frame.base;
  t.order = FinitePoset::from_matrix(leq);
  t.fusion.assign(n * n, 0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t w = 0; w < n; ++w)
        if (A.leq(J[w], A.prod(J[u], J[v]))) t.fusion[u * n + v] |= bit(w);
  for (std::size_t u = 0; u < n; ++u)
    if (A.leq(J[u], A.unit())) t.unit |= bit(u);

  std::vector<Elem> k(n);
  for (std::size_t u = 0; u < n; ++u) k[u] = kappa(A.lattice(), J[u]);
  at.frame.sig = A.sig();
  at.frame.access.assign(A.sig().size(), std::vector<WorldSet>(n, 0));
  for (std::size_t i = 0; i < A.sig().size(); ++i)
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t w = 0; w < n; ++w)
        if (A.leq(A.bang(i, k[w]), k[u])) at.frame.access[i][u] |= bit(w);
  return at;
}

/// η(a) = {k : worlds[k] ≤ a}, an upset of the atom structure.
inline WorldSet eta(const FiniteSigmaAlgebra& A, const AtomStructure& at, Elem a) {
  WorldSet out = 0;
  for (std::size_t k = 0; k < at.worlds.size(); ++k)
    if (A.leq(at.worlds[k], a)) out |= bit(k);
  return out;
}

// --------------------------------------------------------------------------
// Canonical extension. In a finite lattice every element is both a filter
// element and an ideal element, so the extension formulas can be applied
// verbatim over the carrier itself.

inline FiniteSigmaAlgebra canonical_extension_finite(const FiniteSigmaAlgebra& A) {
  const std::size_t n = A.size();
  const FiniteLattice& L = A.lattice();
  const FinitePoset& P = L.poset();

  // x·y for filter elements: ⋀{a·b : x ≤ a, y ≤ b}.
  Table filter_prod(n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      Elem acc = L.top();
      for (int a : members(P.up(x)))
        for (int b : members(P.up(y))) acc = L.meet(acc, A.prod(a, b));
      filter_prod.at(x, y) = acc;
    }
  // u·σv = ⋁{x·y : x ≤ u, y ≤ v, x, y filter elements}.
  Table prod(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      Elem acc = L.bot();
      for (int x : members(P.down(u)))
        for (int y : members(P.down(v))) acc = L.join(acc, filter_prod(x, y));
      prod.at(u, v) = acc;
    }

  // x\y for x filter, y ideal: ⋁{a\b : x ≤ a, b ≤ y}; then
  // u\πv = ⋀{x\y : x ≤ u, v ≤ y}. The right residual is the mirror image.
  auto pi_extend = [&](auto op, bool antitone_left) {
    Table base(n), out(n);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y) {
        Elem acc = L.bot();
        const WorldSet xs = antitone_left ? P.up(x) : P.down(x);
        const WorldSet ys = antitone_left ? P.down(y) : P.up(y);
        for (int a : members(xs))
          for (int b : members(ys)) acc = L.join(acc, op(a, b));
        base.at(x, y) = acc;
      }
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) {
        Elem acc = L.top();
        const WorldSet xs = antitone_left ? P.down(u) : P.up(u);
        const WorldSet ys = antitone_left ? P.up(v) : P.down(v);
        for (int x : members(xs))
          for (int y : members(ys)) acc = L.meet(acc, base(x, y));
        out.at(u, v) = acc;
      }
    return out;
  };
  Table ldiv = pi_extend([&](Elem a, Elem b) { return A.ldiv(a, b); }, true);
  Table rdiv = pi_extend([&](Elem a, Elem b) { return A.rdiv(a, b); }, false);

  // !σ on filter elements: ⋀{!a : x ≤ a}; in general ⋁ over filter elements below.
  std::vector<std::vector<Elem>> bang(A.sig().size(), std::vector<Elem>(n));
  for (std::size_t i = 0; i < A.sig().size(); ++i) {
    std::vector<Elem> filter_bang(n);
    for (std::size_t x = 0; x < n; ++x) {
      Elem acc = L.top();
      for (int a : members(P.up(x))) acc = L.meet(acc, A.bang(i, a));
      filter_bang[x] = acc;
    }
    for (std::size_t u = 0; u < n; ++u) {
      Elem acc = L.bot();
      for (int x : members(P.down(u))) acc = L.join(acc, filter_bang[x]);
      bang[i][u] = acc;
    }
  }
  return FiniteSigmaAlgebra(L, std::move(prod), std::move(ldiv), std::move(rdiv), A.unit(), std::move(bang), A.sig());
}

struct CanonicityReport {
  /// Laws the input algebra already fails; no canonicity verdict is given then.
  std::vector<Violation> precondition;
  /// Laws the extension fails.
  std::vector<Violation> extension;
  /// Operations whose extended table differs from the original.
  std::vector<std::string> mismatches;

  bool precondition_ok() const { return precondition.empty(); }
  bool ok() const { return precondition.empty() && extension.empty() && mismatches.empty(); }
};

inline CanonicityReport check_canonicity_instance(const FiniteSigmaAlgebra& A) {
  CanonicityReport r;
  r.precondition = check_sigma_algebra(A);
  if (!r.precondition.empty()) return r;
  const FiniteSigmaAlgebra ext = canonical_extension_finite(A);
  r.extension = check_sigma_algebra(ext);
  if (ext.prod_table() != A.prod_table()) r.mismatches.push_back("prod");
  if (ext.ldiv_table() != A.ldiv_table()) r.mismatches.push_back("ldiv");
  if (ext.rdiv_table() != A.rdiv_table()) r.mismatches.push_back("rdiv");
  for (std::size_t i = 0; i < A.sig().size(); ++i)
    if (ext.bang_tables()[i] != A.bang_tables()[i]) r.mismatches.push_back("bang[" + A.sig().name(i) + "]");
  return r;
}

}  // namespace dsmalc
