#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dsmalc/algebra.hpp"
#include "dsmalc/frames.hpp"

namespace dsmalc {

/// Cm(F) together with the upset each carrier element stands for.
struct ComplexAlgebra {
  FiniteSigmaAlgebra algebra;
  std::vector<WorldSet> carrier;

  /// Carrier position of an upset; throws input_error if it is not one.
  Elem element(WorldSet s) const {
    auto it = std::lower_bound(carrier.begin(), carrier.end(), s);
    if (it == carrier.end() || *it != s) throw input_error("set is not an upset of the frame");
    return static_cast<Elem>(it - carrier.begin());
  }
};

/// Upsets ordered by inclusion with the relational operations. Residuals and
/// boxes are computed from the frame, never synthesized.
inline ComplexAlgebra complex_algebra(const SigmaFrame& f, const UpsetLimits& limits = {}) {
  std::vector<WorldSet> ups = upsets(f.base.order, limits);
  const std::size_t n = ups.size();
  if (n > max_carrier) throw size_cap_exceeded("complex algebra has more than 64 elements");
  std::vector<std::vector<bool>> leq(n, std::vector<bool>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) leq[a][b] = subset(ups[a], ups[b]);
  FiniteLattice L = bounded_lattice_from_poset(FinitePoset::from_matrix(leq));

  auto pos = [&](WorldSet s) -> Elem {
    auto it = std::lower_bound(ups.begin(), ups.end(), s);
    if (it == ups.end() || *it != s) throw input_error("frame operation left the upsets; check the frame first");
    return static_cast<Elem>(it - ups.begin());
  };
  Table prod(n), ldiv(n), rdiv(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      prod.at(a, b) = pos(fuse(f.base, ups[a], ups[b]));
      ldiv.at(a, b) = pos(under(f.base, ups[a], ups[b]));
      rdiv.at(a, b) = pos(over(f.base, ups[a], ups[b]));
    }
  std::vector<std::vector<Elem>> bang(f.sig.size(), std::vector<Elem>(n));
  for (std::size_t i = 0; i < f.sig.size(); ++i)
    for (std::size_t a = 0; a < n; ++a) bang[i][a] = pos(box(f, i, ups[a]));
  const Elem unit = pos(f.base.unit);
  return ComplexAlgebra{
      FiniteSigmaAlgebra(std::move(L), std::move(prod), std::move(ldiv), std::move(rdiv), unit, std::move(bang), f.sig),
      std::move(ups)};
}

inline FiniteSigmaAlgebra cm(const SigmaFrame& f, const UpsetLimits& limits = {}) {
  return complex_algebra(f, limits).algebra;
}

/// [[φ]] obtained by interpreting φ in Cm(F) under the valuation.
inline WorldSet interpret_in_cm(const ComplexAlgebra& C, const Formula& phi,
                                const std::map<std::string, WorldSet>& valuation) {
  std::map<std::string, Elem> assignment;
  for (const auto& [var, set] : valuation) assignment[var] = C.element(set);
  return C.carrier[interpret(C.algebra, phi, assignment)];
}

/// First point where η fails to be an isomorphism A ≅ Cm(At(A)).
struct DualityFailure {
  std::string operation;
  std::vector<Elem> args;
  std::string detail;
};

/// Builds At(A) and Cm(At(A)) and checks that η is a bijection onto the
/// upsets commuting with every operation and constant.
inline std::optional<DualityFailure> duality_check(const FiniteSigmaAlgebra& A) {
  const AtomStructure at = atom_structure(A);
  const ComplexAlgebra C = complex_algebra(at.frame);
  const int n = static_cast<int>(A.size());
  std::vector<WorldSet> image(n);
  for (int a = 0; a < n; ++a) image[a] = eta(A, at, a);

  std::vector<WorldSet> sorted = image;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    return DualityFailure{"eta", {}, "eta is not injective"};
  if (sorted != C.carrier) return DualityFailure{"eta", {}, "eta is not onto the upsets"};

  auto check = [&](const char* op, std::vector<Elem> args, Elem lhs, WorldSet rhs) -> std::optional<DualityFailure> {
    if (image[lhs] == rhs) return std::nullopt;
    return DualityFailure{op, std::move(args),
                          "eta gives " + detail::set_str(image[lhs]) + ", Cm gives " + detail::set_str(rhs)};
  };
  auto cm_op = [&](const Table& t, Elem a, Elem b) {
    return C.carrier[t(C.element(image[a]), C.element(image[b]))];
  };
  if (auto f = check("unit", {}, A.unit(), at.frame.base.unit)) return f;
  if (auto f = check("top", {}, A.top(), full_set(at.worlds.size()))) return f;
  if (auto f = check("bot", {}, A.bot(), 0)) return f;
  for (int a = 0; a < n; ++a) {
    for (std::size_t i = 0; i < A.sig().size(); ++i) {
      const WorldSet boxed = box(at.frame, i, image[a]);
      if (auto f = check(("bang[" + A.sig().name(i) + "]").c_str(), {a}, A.bang(i, a), boxed)) return f;
    }
    for (int b = 0; b < n; ++b) {
      if (auto f = check("meet", {a, b}, A.meet(a, b), image[a] & image[b])) return f;
      if (auto f = check("join", {a, b}, A.join(a, b), image[a] | image[b])) return f;
      if (auto f = check("prod", {a, b}, A.prod(a, b), cm_op(C.algebra.prod_table(), a, b))) return f;
      if (auto f = check("ldiv", {a, b}, A.ldiv(a, b), cm_op(C.algebra.ldiv_table(), a, b))) return f;
      if (auto f = check("rdiv", {a, b}, A.rdiv(a, b), cm_op(C.algebra.rdiv_table(), a, b))) return f;
    }
  }
  return std::nullopt;
}

}  // namespace dsmalc
