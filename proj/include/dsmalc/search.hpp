#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "dsmalc/algebra.hpp"
#include "dsmalc/calculus.hpp"
#include "dsmalc/complex_algebra.hpp"
#include "dsmalc/frames.hpp"

namespace dsmalc {

struct SearchBudget {
  std::size_t max_worlds = 3;
  /// Search nodes (partial structures tried) before budget_exceeded.
  std::size_t max_candidates = 200'000'000;
  std::uint64_t seed = 0;
  /// Zero means no deadline.
  std::chrono::milliseconds timeout{0};
};

// --------------------------------------------------------------------------
// Deterministic randomness. Draws avoid std::uniform_int_distribution so that
// sequences agree across standard libraries.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t next() { return gen_(); }
  /// Uniform-enough value in [0, k).
  std::size_t below(std::size_t k) { return k == 0 ? 0 : static_cast<std::size_t>(gen_() % k); }
  bool chance(unsigned percent) { return below(100) < percent; }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

/// SplitMix64 step; derives independent per-trial seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// --------------------------------------------------------------------------
// Posets.

/// One representative per isomorphism class of posets on n points, each
/// labeled so that x ≤ y implies x ≤ y numerically.
inline std::vector<FinitePoset> enumerate_posets(std::size_t n) {
  std::vector<std::vector<WorldSet>> downs{{}};
  for (std::size_t b = 0; b < n; ++b) {
    std::vector<std::vector<WorldSet>> next;
    for (const auto& d : downs) {
      for (WorldSet s = 0; s < (WorldSet{1} << b); ++s) {
        bool closed = true;  // s must be a downset of the poset on 0..b-1
        for (int x : members(s))
          if (!subset(d[x], s | bit(x))) closed = false;
        if (!closed) continue;
        auto e = d;
        e.push_back(s | bit(b));
        next.push_back(std::move(e));
      }
    }
    downs = std::move(next);
  }
  std::vector<std::size_t> perm(n);
  std::set<std::vector<WorldSet>> seen;
  std::vector<FinitePoset> out;
  for (const auto& d : downs) {
    std::vector<WorldSet> best;
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::vector<WorldSet> code(n, 0);
      for (std::size_t x = 0; x < n; ++x)
        for (int y : members(d[x])) code[perm[x]] |= bit(perm[y]);
      if (best.empty() || code < best) best = code;
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (!seen.insert(best).second) continue;
    std::vector<std::vector<bool>> leq(n, std::vector<bool>(n));
    for (std::size_t y = 0; y < n; ++y)
      for (int x : members(d[y])) leq[x][y] = true;
    out.push_back(FinitePoset::from_matrix(leq));
  }
  return out;
}

// --------------------------------------------------------------------------
// Frame enumeration.

namespace detail {

/// Lexicographically least encoding of a frame over all relabelings, and the
/// frame relabeled accordingly.
inline std::pair<std::vector<std::uint64_t>, SigmaFrame> canonical_form(const SigmaFrame& f) {
  const std::size_t n = f.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto map_set = [&](WorldSet s) {
    WorldSet out = 0;
    for (int x : members(s)) out |= bit(perm[x]);
    return out;
  };
  std::vector<std::uint64_t> best;
  std::vector<std::size_t> best_perm;
  do {
    std::vector<std::uint64_t> code;
    std::vector<WorldSet> up(n), access_code;
    for (std::size_t x = 0; x < n; ++x) up[perm[x]] = map_set(f.base.order.up(x));
    code.insert(code.end(), up.begin(), up.end());
    code.push_back(map_set(f.base.unit));
    std::vector<WorldSet> img(n * n);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) img[perm[u] * n + perm[v]] = map_set(f.base.image(u, v));
    code.insert(code.end(), img.begin(), img.end());
    for (const auto& rel : f.access) {
      std::vector<WorldSet> r(n);
      for (std::size_t u = 0; u < n; ++u) r[perm[u]] = map_set(rel[u]);
      code.insert(code.end(), r.begin(), r.end());
    }
    if (best.empty() || code < best) {
      best = std::move(code);
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  perm = best_perm;
  SigmaFrame g;
  g.sig = f.sig;
  std::vector<WorldSet> up(n);
  for (std::size_t x = 0; x < n; ++x) up[perm[x]] = map_set(f.base.order.up(x));
  g.base.order = FinitePoset::from_upsets_unchecked(up);
  g.base.unit = map_set(f.base.unit);
  g.base.fusion.assign(n * n, 0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) g.base.fusion[perm[u] * n + perm[v]] = map_set(f.base.image(u, v));
  g.access.assign(f.access.size(), std::vector<WorldSet>(n));
  for (std::size_t i = 0; i < f.access.size(); ++i)
    for (std::size_t u = 0; u < n; ++u) g.access[i][perm[u]] = map_set(f.access[i][u]);
  return {std::move(best), std::move(g)};
}

class budget_tick {
 public:
  budget_tick(const SearchBudget& b, std::size_t& counter)
      : budget_(b), counter_(counter), start_(std::chrono::steady_clock::now()) {}
  void operator()() {
    if (++counter_ > budget_.max_candidates) throw budget_exceeded("search candidate budget exhausted", counter_);
    if (budget_.timeout.count() > 0 && (counter_ & 0xfff) == 0 &&
        std::chrono::steady_clock::now() - start_ > budget_.timeout)
      throw budget_exceeded("search timed out", counter_);
  }

 private:
  const SearchBudget& budget_;
  std::size_t& counter_;
  std::chrono::steady_clock::time_point start_;
};

/// Backtracking over O, R and the Rᵢ for one fixed poset. Every structure it
/// emits has passed `check_sigma_frame`; the pruning only discards partial
/// structures that already violate some condition.
class FrameEngine {
 public:
  using Emit = std::function<bool(const SigmaFrame&)>;

  FrameEngine(const FinitePoset& order, const SubexpSignature& sig, const FrameConditions& which, budget_tick& tick,
              Rng* rng, std::size_t node_cap)
      : P_(order), sig_(sig), which_(which), tick_(tick), rng_(rng), node_cap_(node_cap) {
    n_ = P_.size();
    ups_ = upsets(P_);
  }

  /// Returns false if `emit` asked to stop (or the node cap was hit).
  bool run(const Emit& emit) {
    emit_ = &emit;
    std::vector<WorldSet> units;
    for (WorldSet o : ups_)
      if (o != 0) units.push_back(o);
    if (rng_) rng_->shuffle(units);
    for (WorldSet o : units) {
      O_ = o;
      S_.assign(n_ * n_, 0);
      assigned_.assign(n_ * n_, false);
      if (!assign_pair(0)) return false;
    }
    return true;
  }

  bool capped() const { return capped_; }

 private:
  bool step() {
    tick_();
    if (node_cap_ && ++nodes_ > node_cap_) {
      capped_ = true;
      return false;
    }
    return true;
  }

  bool assoc_ok() const {
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t w = 0; w < n_; ++w) {
        if (!assigned_[u * n_ + w]) continue;
        for (std::size_t u2 = 0; u2 < n_; ++u2) {
          if (!assigned_[w * n_ + u2]) continue;
          WorldSet lhs = 0, rhs = 0;
          bool ready = true;
          for (int x : members(S_[u * n_ + w])) {
            if (!assigned_[x * n_ + u2]) { ready = false; break; }
            lhs |= S_[x * n_ + u2];
          }
          if (!ready) continue;
          for (int y : members(S_[w * n_ + u2])) {
            if (!assigned_[u * n_ + y]) { ready = false; break; }
            rhs |= S_[u * n_ + y];
          }
          if (ready && lhs != rhs) return false;
        }
      }
    return true;
  }

  bool assign_pair(std::size_t t) {
    if (t == n_ * n_) {
      for (std::size_t v = 0; v < n_; ++v) {
        WorldSet reach = 0;
        for (int o : members(O_)) reach |= S_[o * n_ + v];
        if (!subset(P_.up(v), reach)) return true;
      }
      return assign_indices();
    }
    const std::size_t a = t / n_, b = t % n_;
    WorldSet allowed = full_set(n_);
    for (int a2 : members(P_.down(a) & ~bit(a))) allowed &= S_[a2 * n_ + b];
    for (int b2 : members(P_.down(b) & ~bit(b))) allowed &= S_[a * n_ + b2];
    if (has(O_, b)) allowed &= P_.up(a);
    if (has(O_, a)) allowed &= P_.up(b);
    std::vector<WorldSet> choices;
    for (WorldSet s : ups_)
      if (subset(s, allowed)) choices.push_back(s);
    if (rng_) rng_->shuffle(choices);
    for (WorldSet s : choices) {
      if (!step()) return false;
      S_[t] = s;
      assigned_[t] = true;
      bool ok = assoc_ok();
      if (ok && b + 1 == n_) {  // row a complete: unit coverage for a
        WorldSet reach = 0;
        for (int o : members(O_)) reach |= S_[a * n_ + o];
        ok = subset(P_.up(a), reach);
      }
      if (ok && !assign_pair(t + 1)) return false;
      assigned_[t] = false;
    }
    S_[t] = 0;
    return true;
  }

  // ---- Rᵢ stage

  WorldSet box_with(const std::vector<WorldSet>& R, WorldSet a) const {
    WorldSet out = 0;
    for (std::size_t u = 0; u < n_; ++u)
      if (subset(R[u], a)) out |= bit(u);
    return out;
  }
  WorldSet fuse_sets(WorldSet a, WorldSet b) const {
    WorldSet out = 0;
    for (int u : members(a))
      for (int v : members(b)) out |= S_[u * n_ + v];
    return out;
  }
  bool promotion_ok(const std::vector<WorldSet>& Ri, const std::vector<WorldSet>& Rj,
                    const std::vector<WorldSet>& Rk) const {
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t v = 0; v < n_; ++v) {
        WorldSet reach = 0;
        for (int x : members(Ri[u]))
          for (int y : members(Rj[v])) reach |= S_[x * n_ + y];
        for (int w : members(S_[u * n_ + v]))
          if (!subset(Rk[w], reach)) return false;
      }
    return true;
  }

  /// Compatible preorders: R[u] ⊇ ↑u, R[u] an upset, u' ≤ u ⇒ R[u'] ⊇ R[u], transitive.
  void preorders(std::size_t u, std::vector<WorldSet>& R, std::vector<std::vector<WorldSet>>& out) {
    if (u == n_) {
      for (std::size_t x = 0; x < n_; ++x)
        for (int y : members(R[x]))
          if (!subset(R[y], R[x])) return;
      out.push_back(R);
      return;
    }
    // Worlds are naturally labeled, so everything below u is already fixed.
    WorldSet floor = P_.up(u);
    for (WorldSet s : ups_) {
      if (!subset(floor, s)) continue;
      bool ok = true;
      for (int lower : members(P_.down(u) & ~bit(u)))
        if (!subset(s, R[lower])) ok = false;
      if (!ok) continue;
      R[u] = s;
      preorders(u + 1, R, out);
    }
  }

  bool index_alone_ok(std::size_t i, const std::vector<WorldSet>& R) const {
    if (!subset(O_, box_with(R, O_))) return false;
    if (which_.promotion && !promotion_ok(R, R, R)) return false;
    const bool w = sig_.weakening(i), e = sig_.exchange(i), c = sig_.contraction(i);
    if (!w && !e && !c) return true;
    for (WorldSet a : ups_) {
      const WorldSet ba = box_with(R, a);
      if (w && !subset(ba, O_)) return false;
      if (!e && !c) continue;
      for (WorldSet b : ups_) {
        const WorldSet left = fuse_sets(ba, b), right = fuse_sets(b, ba);
        if (e && left != right) return false;
        if (c) {
          const WorldSet both = fuse_sets(left, ba);
          if (!subset(left, both) || !subset(right, both)) return false;
        }
      }
    }
    return true;
  }

  bool assign_indices() {
    const std::size_t m = sig_.size();
    if (all_preorders_.empty()) {
      std::vector<WorldSet> R(n_, 0);
      preorders(0, R, all_preorders_);
    }
    candidates_.assign(m, {});
    for (std::size_t i = 0; i < m; ++i) {
      for (const auto& R : all_preorders_)
        if (index_alone_ok(i, R)) candidates_[i].push_back(&R);
      if (candidates_[i].empty()) return true;
      if (rng_) rng_->shuffle(candidates_[i]);
    }
    chosen_.assign(m, nullptr);
    return assign_index(0);
  }

  bool assign_index(std::size_t i) {
    const std::size_t m = sig_.size();
    if (i == m) return finish();
    for (const auto* R : candidates_[i]) {
      if (!step()) return false;
      chosen_[i] = R;
      bool ok = true;
      for (std::size_t j = 0; j < i && ok; ++j) {
        for (std::size_t u = 0; u < n_ && ok; ++u) {
          if (sig_.preceq(i, j) && !subset((*R)[u], (*chosen_[j])[u])) ok = false;
          if (sig_.preceq(j, i) && !subset((*chosen_[j])[u], (*R)[u])) ok = false;
        }
      }
      if (ok && which_.promotion) {
        for (std::size_t a = 0; a <= i && ok; ++a)
          for (std::size_t b = 0; b <= i && ok; ++b)
            for (std::size_t k = 0; k <= i && ok; ++k) {
              if (a != i && b != i && k != i) continue;
              if (a == i && b == i && k == i) continue;
              if (sig_.preceq(k, a) && sig_.preceq(k, b))
                ok = promotion_ok(*chosen_[a], *chosen_[b], *chosen_[k]);
            }
      }
      if (ok && !assign_index(i + 1)) return false;
    }
    return true;
  }

  bool finish() {
    SigmaFrame f;
    f.base.order = P_;
    f.base.fusion = S_;
    f.base.unit = O_;
    f.sig = sig_;
    for (const auto* R : chosen_) f.access.push_back(*R);
    if (!check_sigma_frame(f, which_).empty()) return true;
    return (*emit_)(f);
  }

  const FinitePoset& P_;
  const SubexpSignature& sig_;
  FrameConditions which_;
  budget_tick& tick_;
  Rng* rng_;
  std::size_t node_cap_;
  std::size_t nodes_ = 0;
  bool capped_ = false;
  std::size_t n_ = 0;
  std::vector<WorldSet> ups_;
  WorldSet O_ = 0;
  std::vector<WorldSet> S_;
  std::vector<bool> assigned_;
  std::vector<std::vector<WorldSet>> all_preorders_;
  std::vector<std::vector<const std::vector<WorldSet>*>> candidates_;
  std::vector<const std::vector<WorldSet>*> chosen_;
  const Emit* emit_ = nullptr;
};

}  // namespace detail

/// Calls `fn` on every Σ-frame with n worlds, one per relabeling class
/// (lexicographically least labeling), in a fixed order. Stops when `fn`
/// returns false. Throws budget_exceeded.
inline void for_each_frame(const SubexpSignature& sig, std::size_t n, const SearchBudget& budget,
                           const std::function<bool(const SigmaFrame&)>& fn, const FrameConditions& which = {}) {
  if (n == 0 || n > 6) throw input_error("exhaustive frame enumeration supports 1 to 6 worlds");
  std::size_t counter = 0;
  detail::budget_tick tick(budget, counter);
  std::set<std::vector<std::uint64_t>> seen;
  for (const auto& P : enumerate_posets(n)) {
    detail::FrameEngine engine(P, sig, which, tick, nullptr, 0);
    const bool go_on = engine.run([&](const SigmaFrame& f) {
      auto [code, canonical] = detail::canonical_form(f);
      if (!seen.insert(std::move(code)).second) return true;
      return fn(canonical);
    });
    if (!go_on) return;
  }
}

inline std::vector<SigmaFrame> enumerate_frames(const SubexpSignature& sig, std::size_t n, const SearchBudget& budget = {},
                                                const FrameConditions& which = {}) {
  std::vector<SigmaFrame> out;
  for_each_frame(sig, n, budget, [&](const SigmaFrame& f) {
    out.push_back(f);
    return true;
  }, which);
  return out;
}

/// A Σ-frame with n worlds found by randomized backtracking: the poset, O and
/// each choice of R and Rᵢ are drawn in random order, and each attempt is
/// abandoned after a node cap. Reproducible per seed. Throws budget_exceeded.
inline SigmaFrame random_frame(const SubexpSignature& sig, std::size_t n, std::uint64_t seed,
                               const SearchBudget& budget = {}, const FrameConditions& which = {}) {
  if (n == 0 || n > 6) throw input_error("random frames support 1 to 6 worlds");
  static thread_local std::map<std::size_t, std::vector<FinitePoset>> posets;
  auto& pool = posets[n];
  if (pool.empty()) pool = enumerate_posets(n);
  Rng rng(seed);
  std::size_t counter = 0;
  detail::budget_tick tick(budget, counter);
  while (true) {
    const FinitePoset& P = pool[rng.below(pool.size())];
    detail::FrameEngine engine(P, sig, which, tick, &rng, 4000);
    std::optional<SigmaFrame> found;
    engine.run([&](const SigmaFrame& f) {
      found = f;
      return false;
    });
    if (found) return *found;
  }
}

// --------------------------------------------------------------------------
// Countermodels.

struct Countermodel {
  Model model;
  Sequent sequent;
  std::size_t witness_world = 0;
};

namespace detail {

/// Valuations in canonical order over Cm(F); returns the first that refutes s.
inline std::optional<Countermodel> refute_on(const SigmaFrame& f, const Sequent& s, const std::vector<std::string>& vars) {
  const ComplexAlgebra C = complex_algebra(f);
  const std::size_t k = C.carrier.size();
  std::vector<std::size_t> pos(vars.size(), 0);
  std::map<std::string, Elem> assignment;
  while (true) {
    for (std::size_t v = 0; v < vars.size(); ++v) assignment[vars[v]] = static_cast<Elem>(pos[v]);
    const WorldSet lhs = C.carrier[interpret(C.algebra, s.lhs, assignment)];
    const WorldSet rhs = C.carrier[interpret(C.algebra, s.rhs, assignment)];
    if (!subset(lhs, rhs)) {
      std::map<std::string, WorldSet> val;
      for (std::size_t v = 0; v < vars.size(); ++v) val[vars[v]] = C.carrier[pos[v]];
      Model m{f, std::move(val)};
      const WorldSet bad = eval(m, s.lhs) & ~eval(m, s.rhs);
      if (bad == 0) throw std::logic_error("complex algebra and truth clauses disagree");
      return Countermodel{std::move(m), s, static_cast<std::size_t>(std::countr_zero(bad))};
    }
    std::size_t v = vars.size();
    while (v > 0 && ++pos[v - 1] == k) pos[--v] = 0;
    if (v == 0) return std::nullopt;
  }
}

}  // namespace detail

/// Searches frame sizes 1..frames_by_size.size() in order, then valuations in
/// canonical upset order. `frames_by_size[k]` lists the frames with k+1 worlds.
inline std::optional<Countermodel> find_countermodel(const Sequent& s,
                                                     const std::vector<std::vector<SigmaFrame>>& frames_by_size) {
  const auto vars = variables(s);
  for (const auto& frames : frames_by_size)
    for (const auto& f : frames)
      if (auto cm = detail::refute_on(f, s, vars)) return cm;
  return std::nullopt;
}

inline std::optional<Countermodel> find_countermodel(const Sequent& s, const SubexpSignature& sig,
                                                     const SearchBudget& budget = {}) {
  if (!indices_known(s.lhs, sig) || !indices_known(s.rhs, sig))
    throw input_error("sequent mentions an index outside the signature");
  const auto vars = variables(s);
  std::optional<Countermodel> found;
  for (std::size_t n = 1; n <= budget.max_worlds && !found; ++n) {
    for_each_frame(sig, n, budget, [&](const SigmaFrame& f) {
      found = detail::refute_on(f, s, vars);
      return !found;
    });
  }
  return found;
}

// --------------------------------------------------------------------------
// Random formulas and the soundness fuzzer.

struct FormulaShape {
  std::vector<std::string> variables{"p", "q"};
  std::size_t max_depth = 3;
  /// Percent chance that a leaf is a constant rather than a variable.
  unsigned constant_percent = 15;
};

inline Formula random_formula(Rng& rng, const SubexpSignature& sig, const FormulaShape& shape, std::size_t depth) {
  if (depth == 0 || rng.chance(25)) {
    if (shape.variables.empty() || rng.chance(shape.constant_percent)) {
      switch (rng.below(3)) {
        case 0: return Formula::bot();
        case 1: return Formula::top();
        default: return Formula::one();
      }
    }
    return Formula::var(shape.variables[rng.below(shape.variables.size())]);
  }
  const std::size_t pick = rng.below(6);
  if (pick == 5) return Formula::bang(sig.name(rng.below(sig.size())), random_formula(rng, sig, shape, depth - 1));
  static constexpr Kind binaries[] = {Kind::Prod, Kind::LDiv, Kind::RDiv, Kind::Or, Kind::And};
  Formula l = random_formula(rng, sig, shape, depth - 1);
  Formula r = random_formula(rng, sig, shape, depth - 1);
  return Formula::binary(binaries[pick], std::move(l), std::move(r));
}

struct FuzzOptions {
  std::size_t max_worlds = 4;
  std::size_t instances_per_schema = 5;
  std::size_t rule_samples = 5;
  FormulaShape shape{};
  std::size_t jobs = 1;
  FrameConditions frame_conditions{};
  CalculusOptions calculus{};
};

struct FuzzFailure {
  std::size_t trial = 0;
  std::string check;  // rule name
  std::string sequent;
  std::string detail;
};

struct FuzzTrial {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t worlds = 0;
  std::size_t axiom_checks = 0;
  std::size_t rule_checks = 0;
  std::vector<FuzzFailure> failures;
};

struct FuzzReport {
  std::vector<FuzzTrial> trials;
  std::size_t axiom_checks() const {
    std::size_t s = 0;
    for (const auto& t : trials) s += t.axiom_checks;
    return s;
  }
  std::size_t rule_checks() const {
    std::size_t s = 0;
    for (const auto& t : trials) s += t.rule_checks;
    return s;
  }
  std::vector<FuzzFailure> failures() const {
    std::vector<FuzzFailure> out;
    for (const auto& t : trials) out.insert(out.end(), t.failures.begin(), t.failures.end());
    return out;
  }
};

namespace detail {

/// Calls fn(assignment) for every assignment of carrier elements to vars.
template <class Fn>
bool for_each_assignment(std::size_t carrier, const std::vector<std::string>& vars, Fn&& fn) {
  std::vector<std::size_t> pos(vars.size(), 0);
  std::map<std::string, Elem> a;
  while (true) {
    for (std::size_t v = 0; v < vars.size(); ++v) a[vars[v]] = static_cast<Elem>(pos[v]);
    if (!fn(static_cast<const std::map<std::string, Elem>&>(a))) return false;
    std::size_t v = vars.size();
    while (v > 0 && ++pos[v - 1] == carrier) pos[--v] = 0;
    if (v == 0) return true;
  }
}

inline FuzzTrial fuzz_trial(const SubexpSignature& sig, std::size_t trial, std::uint64_t seed, const FuzzOptions& opts,
                            const std::vector<AxiomSchema>& schemas) {
  FuzzTrial out;
  out.trial = trial;
  out.seed = mix_seed(seed + trial);
  Rng rng(out.seed);
  out.worlds = 1 + rng.below(opts.max_worlds);
  const SigmaFrame f = random_frame(sig, out.worlds, rng.next(), SearchBudget{}, opts.frame_conditions);
  const ComplexAlgebra C = complex_algebra(f);
  const FiniteSigmaAlgebra& A = C.algebra;
  const std::size_t k = C.carrier.size();
  const auto& vars = opts.shape.variables;

  auto random_depth = [&] { return rng.below(opts.shape.max_depth + 1); };
  auto fail = [&](const char* check, const Sequent& s, std::string detail) {
    out.failures.push_back({trial, check, print_sequent(s), std::move(detail)});
  };

  for (const auto& axiom : schemas) {
    for (std::size_t rep = 0; rep < opts.instances_per_schema; ++rep) {
      Instantiation inst;
      for (const char* meta : {"p", "q", "r", "p1", "p2"})
        inst.formulas.emplace(meta, random_formula(rng, sig, opts.shape, random_depth()));
      const Sequent s = instantiate(axiom.schema, inst);
      ++out.axiom_checks;
      for_each_assignment(k, vars, [&](const std::map<std::string, Elem>& a) {
        if (A.leq(interpret(A, s.lhs, a), interpret(A, s.rhs, a))) return true;
        std::string val;
        for (const auto& [v, e] : a) val += v + "=" + set_str(C.carrier[e]) + " ";
        fail(rule_name(axiom.rule), s, "refuted on a " + std::to_string(out.worlds) + "-world frame with " + val);
        return false;
      });
    }
  }

  const auto& parsed = parsed_rules();
  const std::size_t m = sig.size();
  for (const auto& info : rule_table()) {
    if (info.premises.empty()) continue;
    const ParsedRule& r = parsed[static_cast<std::size_t>(info.id)];
    for (std::size_t rep = 0; rep < opts.rule_samples; ++rep) {
      Instantiation inst;
      for (const char* meta : {"phi", "psi", "theta", "tau"})
        inst.formulas.emplace(meta, random_formula(rng, sig, opts.shape, rng.below(3)));
      ++out.rule_checks;
      if (info.id == RuleId::Substitution) {
        // [[φ[p:=θ]]]_V = [[φ]]_{V[p := [[θ]]_V]}
        const std::string p = vars[rng.below(vars.size())];
        const Formula& theta = inst.formulas.at("theta");
        for (const Formula& phi : {inst.formulas.at("phi"), inst.formulas.at("psi")}) {
          const Formula sub = substitute(phi, p, theta);
          for_each_assignment(k, vars, [&](const std::map<std::string, Elem>& a) {
            auto b = a;
            b[p] = interpret(A, theta, a);
            if (interpret(A, sub, a) == interpret(A, phi, b)) return true;
            fail("substitution", Sequent{phi, sub}, "substitution lemma fails for " + p);
            return false;
          });
        }
        continue;
      }
      if (info.id == RuleId::BangMono) {
        std::size_t i = rng.below(m), j = rng.below(m);
        while (!sig.preceq(j, i)) i = rng.below(m), j = rng.below(m);
        inst.indices = {{"i", sig.name(i)}, {"j", sig.name(j)}};
      }
      std::vector<Sequent> premises;
      for (const auto& p : r.premises) premises.push_back(instantiate(p, inst));
      const Sequent concl = instantiate(r.conclusion, inst);
      const bool equivalence = info.id == RuleId::LDivResUp || info.id == RuleId::LDivResDown ||
                               info.id == RuleId::RDivResUp || info.id == RuleId::RDivResDown;
      for_each_assignment(k, vars, [&](const std::map<std::string, Elem>& a) {
        auto holds = [&](const Sequent& s) { return A.leq(interpret(A, s.lhs, a), interpret(A, s.rhs, a)); };
        bool prem = true;
        for (const auto& p : premises) prem = prem && holds(p);
        const bool concl_holds = holds(concl);
        if ((prem && !concl_holds) || (equivalence && concl_holds != prem)) {
          fail(info.name, concl, "rule does not preserve truth in a model");
          return false;
        }
        return true;
      });
    }
  }
  return out;
}

}  // namespace detail

/// Random frames (1..max_worlds worlds); every axiom schema instantiated with
/// random formulas must be valid on the frame, and every rule must preserve
/// truth in each model of it. Trial t uses the seed mix_seed(seed + t), so
/// the report does not depend on `jobs`.
inline FuzzReport soundness_fuzz(const SubexpSignature& sig, std::size_t trials, std::uint64_t seed,
                                 const FuzzOptions& opts = {}) {
  if (trials == 0) throw input_error("trials must be at least 1");
  const auto schemas = axiom_schemas(sig, opts.calculus);
  FuzzReport report;
  report.trials.resize(trials);
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, trials));
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t t = w; t < trials; t += jobs) report.trials[t] = detail::fuzz_trial(sig, t, seed, opts, schemas);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return report;
}

// --------------------------------------------------------------------------
// Finite Σ-algebra corpus.

/// The distributive lattices with at most `max_size` elements, one per
/// isomorphism class, each realized as the upsets of a poset ordered by ⊆.
inline std::vector<FiniteLattice> distributive_lattices(std::size_t max_size) {
  std::vector<FiniteLattice> out;
  // A poset with n points has at least n + 1 upsets.
  for (std::size_t n = 0; n + 1 <= max_size; ++n) {
    for (const auto& P : n == 0 ? std::vector<FinitePoset>{FinitePoset::chain(0)} : enumerate_posets(n)) {
      const auto ups = upsets(P);
      if (ups.size() > max_size) continue;
      std::vector<std::vector<bool>> leq(ups.size(), std::vector<bool>(ups.size()));
      for (std::size_t a = 0; a < ups.size(); ++a)
        for (std::size_t b = 0; b < ups.size(); ++b) leq[a][b] = subset(ups[a], ups[b]);
      out.push_back(lattice_from_poset(FinitePoset::from_matrix(leq)));
    }
  }
  return out;
}

/// Residuated monoids on L: join-preserving products (determined by monotone
/// values on pairs of join-irreducibles) that are associative and have a unit.
inline std::vector<std::pair<Table, Elem>> residuated_monoids(const FiniteLattice& L) {
  const std::size_t n = L.size();
  const auto J = join_irreducibles(L);
  const std::size_t k = J.size();
  std::vector<std::pair<Table, Elem>> out;
  std::vector<Elem> g(k * k, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t t) {
    if (t == k * k) {
      Table prod(n);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          Elem acc = L.bot();
          for (std::size_t x = 0; x < k; ++x)
            for (std::size_t y = 0; y < k; ++y)
              if (L.leq(J[x], a) && L.leq(J[y], b)) acc = L.join(acc, g[x * k + y]);
          prod.at(a, b) = acc;
        }
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t c = 0; c < n; ++c)
            if (prod(prod(a, b), c) != prod(a, prod(b, c))) return;
      for (std::size_t e = 0; e < n; ++e) {
        bool unit = true;
        for (std::size_t a = 0; a < n && unit; ++a)
          unit = prod(e, a) == static_cast<Elem>(a) && prod(a, e) == static_cast<Elem>(a);
        if (unit) {
          out.emplace_back(std::move(prod), static_cast<Elem>(e));
          return;
        }
      }
      return;
    }
    const std::size_t x = t / k, y = t % k;
    for (std::size_t v = 0; v < n; ++v) {
      bool ok = true;  // monotone in both coordinates against earlier cells
      for (std::size_t x2 = 0; x2 < x && ok; ++x2)
        if (L.leq(J[x2], J[x]) && !L.leq(g[x2 * k + y], static_cast<Elem>(v))) ok = false;
      for (std::size_t y2 = 0; y2 < y && ok; ++y2)
        if (L.leq(J[y2], J[y]) && !L.leq(g[x * k + y2], static_cast<Elem>(v))) ok = false;
      for (std::size_t x2 = 0; x2 < x && ok; ++x2)
        if (L.leq(J[x], J[x2]) && !L.leq(static_cast<Elem>(v), g[x2 * k + y])) ok = false;
      for (std::size_t y2 = 0; y2 < y && ok; ++y2)
        if (L.leq(J[y], J[y2]) && !L.leq(static_cast<Elem>(v), g[x * k + y2])) ok = false;
      if (!ok) continue;
      g[t] = static_cast<Elem>(v);
      rec(t + 1);
    }
  };
  rec(0);
  return out;
}

/// Maps preserving ⊤ and binary meets that are deflationary and idempotent.
inline std::vector<std::vector<Elem>> interior_operators(const FiniteLattice& L) {
  const std::size_t n = L.size();
  std::vector<std::vector<Elem>> out;
  std::vector<Elem> f(n, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t a) {
    if (a == n) {
      if (f[L.top()] != L.top()) return;
      for (std::size_t x = 0; x < n; ++x) {
        if (f[f[x]] != f[x]) return;
        for (std::size_t y = 0; y < n; ++y)
          if (f[L.meet(x, y)] != L.meet(f[x], f[y])) return;
      }
      out.push_back(f);
      return;
    }
    for (int v : members(L.poset().down(a))) {
      f[a] = v;
      rec(a + 1);
    }
  };
  rec(0);
  return out;
}

/// Every Σ-algebra over `sig` whose lattice has at most `max_size` elements,
/// in a fixed order. Calls fn for each; stops when fn returns false.
inline void for_each_algebra(const SubexpSignature& sig, std::size_t max_size,
                             const std::function<bool(const FiniteSigmaAlgebra&)>& fn) {
  const std::size_t m = sig.size();
  for (const auto& L : distributive_lattices(max_size)) {
    const auto bangs = interior_operators(L);
    for (auto& [prod, unit] : residuated_monoids(L)) {
      std::vector<std::size_t> choice(m, 0);
      while (true) {
        std::vector<std::vector<Elem>> b;
        for (std::size_t i = 0; i < m; ++i) b.push_back(bangs[choice[i]]);
        FiniteSigmaAlgebra A(L, prod, unit, std::move(b), sig);
        if (check_sigma_algebra(A).empty() && !fn(A)) return;
        std::size_t i = m;
        while (i > 0 && ++choice[i - 1] == bangs.size()) choice[--i] = 0;
        if (i == 0) break;
      }
    }
  }
}

}  // namespace dsmalc
