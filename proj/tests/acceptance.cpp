// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>

#include "dsmalc/io.hpp"
#include "dsmalc/search.hpp"

using namespace dsmalc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

SubexpSignature structural_sig() {
  return validate_signature({{"a", "b"}, {{"a", "b"}}, {"b"}, {"a", "b"}, {"a", "b"}});
}

SubexpSignature chain3_sig() { return validate_signature({{"x", "y", "z"}, {{"x", "y"}, {"y", "z"}}, {}, {}, {}}); }

std::vector<SubexpSignature> signatures() { return {trivial_signature(), structural_sig(), chain3_sig()}; }

std::string fmt(const char* f, auto... xs) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

Outcome soundness() {
  Outcome o;
  const auto sigs = signatures();
  const std::size_t per[] = {167, 167, 166};
  std::size_t frames = 0, axioms = 0, rules = 0, failures = 0;
  for (std::size_t s = 0; s < sigs.size(); ++s) {
    FuzzOptions opts;
    opts.max_worlds = 4;
    opts.instances_per_schema = 5;
    opts.shape.max_depth = 3;
    opts.jobs = 8;
    const auto r = soundness_fuzz(sigs[s], per[s], 1000 + s, opts);
    frames += r.trials.size();
    axioms += r.axiom_checks();
    rules += r.rule_checks();
    for (const auto& f : r.failures()) {
      if (failures++ < 5) std::printf("  violation: %s %s (%s)\n", f.check.c_str(), f.sequent.c_str(), f.detail.c_str());
    }
  }
  o.pass = failures == 0 && frames == 500;
  o.detail = fmt("%zu frames, %zu axiom instances, %zu rule instances, %zu violations", frames, axioms, rules, failures);
  return o;
}

// Criteria 2 and 3 share the corpus walk.
struct CorpusStats {
  std::size_t algebras = 0, duality_failures = 0, canon_failures = 0;
};

CorpusStats corpus_walk() {
  CorpusStats st;
  for (const auto& sig : signatures()) {
    for_each_algebra(sig, 5, [&](const FiniteSigmaAlgebra& A) {
      ++st.algebras;
      if (auto f = duality_check(A)) {
        if (st.duality_failures++ < 5) std::printf("  duality: %s %s\n", f->operation.c_str(), f->detail.c_str());
      }
      const auto rep = check_canonicity_instance(A);
      if (!rep.ok() || !same_operations(canonical_extension_finite(A), A)) {
        if (st.canon_failures++ < 5) std::printf("  canonicity mismatch on algebra %zu\n", st.algebras);
      }
      return true;
    });
  }
  return st;
}

Outcome cm_laws() {
  Outcome o;
  std::size_t frames = 0, triples = 0, failures = 0;
  for (const auto& sig : signatures()) {
    for (std::size_t n = 1; n <= 3; ++n) {
      for_each_frame(sig, n, SearchBudget{}, [&](const SigmaFrame& f) {
        ++frames;
        const TernaryFrame& t = f.base;
        const auto ups = upsets(f.base.order);
        for (WorldSet a : ups) {
          if (fuse(t, t.unit, a) != a || fuse(t, a, t.unit) != a) ++failures;
          for (WorldSet b : ups)
            for (WorldSet c : ups) {
              ++triples;
              const bool prod = subset(fuse(t, a, b), c);
              const bool left = subset(b, under(t, a, c));
              const bool right = subset(a, over(t, c, b));
              if (prod != left || prod != right) ++failures;
            }
        }
        return true;
      });
    }
  }
  o.pass = failures == 0 && frames > 0;
  o.detail = fmt("%zu frames, %zu upset triples, %zu failures", frames, triples, failures);
  return o;
}

Outcome countermodels() {
  Outcome o;
  std::string d;
  const auto triv = trivial_signature();
  auto search = [](const std::string& text, const SubexpSignature& sig) {
    SearchBudget b;
    b.max_worlds = 3;
    return find_countermodel(parse_sequent(text, sig), sig, b);
  };
  const auto pq = search("p |- q", triv);
  if (!pq || pq->model.frame.size() != 1) o.pass = false;
  d += fmt("p|-q: %s", pq ? fmt("size %zu", pq->model.frame.size()).c_str() : "none");

  const auto bang = search("p |- ![i]p", triv);
  if (!bang) o.pass = false;
  d += fmt("; p|-![i]p: %s", bang ? fmt("size %zu", bang->model.frame.size()).c_str() : "none");

  const auto incomparable = validate_signature({{"i", "j"}, {}, {}, {}, {}});
  const auto ij = search("![i]p |- ![j]p", incomparable);
  if (!ij) o.pass = false;
  d += fmt("; ![i]p|-![j]p with i,j incomparable: %s", ij ? fmt("size %zu", ij->model.frame.size()).c_str() : "none");

  std::size_t core = 0, refuted = 0;
  for (const auto& ax : axiom_schemas(triv)) {
    if (static_cast<int>(ax.rule) > static_cast<int>(RuleId::ConjElim2)) continue;
    ++core;
    if (search(print_sequent(ax.schema), triv)) {
      ++refuted;
      std::printf("  refuted core schema %s\n", rule_name(ax.rule));
    }
  }
  if (core != 13 || refuted != 0) o.pass = false;
  d += fmt("; %zu core schemas, %zu refuted through size 3", core, refuted);

  std::size_t sub = 0, sub_refuted = 0;
  const auto structural = structural_sig();
  for (const auto& ax : axiom_schemas(structural)) {
    if (static_cast<int>(ax.rule) <= static_cast<int>(RuleId::ConjElim2)) continue;
    ++sub;
    if (search(print_sequent(ax.schema), structural)) {
      ++sub_refuted;
      std::printf("  refuted schema %s (%s)\n", rule_name(ax.rule), ax.side_condition.c_str());
    }
  }
  if (sub_refuted != 0) o.pass = false;
  d += fmt("; %zu remaining schemas over a structural signature, %zu refuted", sub, sub_refuted);
  o.detail = d;
  return o;
}

bool uses(const Derivation& d, const std::function<bool(const Derivation&)>& pred) {
  if (pred(d)) return true;
  for (const auto& p : d.premises)
    if (uses(p, pred)) return true;
  return false;
}

Outcome proof_checking() {
  Outcome o;
  const fs::path root(DSMALC_DATA_DIR);
  const auto sig = io::signature_from_json(io::read_json_file(root / "signatures/corpus.json"));
  std::size_t valid = 0, valid_ok = 0, mutated = 0, mutated_ok = 0;
  bool contraction = false, exchange = false;
  for (const auto& e : fs::directory_iterator(root / "derivations/valid")) {
    ++valid;
    const Derivation d = io::derivation_from_json(io::read_json_file(e.path()).at("derivation"), sig);
    if (auto err = check_derivation(d, sig)) {
      std::printf("  %s: %s at %s\n", e.path().filename().c_str(), err->error.message.c_str(), err->path.c_str());
      continue;
    }
    ++valid_ok;
    // The structural axioms have `![i]p * q` or `q * ![i]p` on the left.
    auto indexed = [&](std::vector<RuleId> rules, bool (SubexpSignature::*in)(std::size_t) const) {
      return [&sig, rules, in](const Derivation& n) {
        for (RuleId r : rules) {
          if (n.rule != r) continue;
          const Formula& lhs = n.conclusion.lhs;
          const Formula& bang = lhs.left().kind() == Kind::Bang ? lhs.left() : lhs.right();
          return (sig.*in)(*sig.find(bang.name()));
        }
        return false;
      };
    };
    contraction |= uses(d, indexed({RuleId::ContractionLeft, RuleId::ContractionRight}, &SubexpSignature::contraction));
    exchange |= uses(d, indexed({RuleId::ExchangeLR, RuleId::ExchangeRL}, &SubexpSignature::exchange));
  }
  for (const auto& e : fs::directory_iterator(root / "derivations/mutated")) {
    ++mutated;
    const auto doc = io::read_json_file(e.path());
    const auto err = check_derivation(io::derivation_from_json(doc.at("derivation"), sig), sig);
    if (err && err->path == doc.at("expect").at("path").get<std::string>() &&
        to_string(err->error.kind) == doc.at("expect").at("kind").get<std::string>())
      ++mutated_ok;
    else
      std::printf("  %s: wrong or missing failure\n", e.path().filename().c_str());
  }
  o.pass = valid >= 10 && valid_ok == valid && mutated >= 10 && mutated_ok == mutated && contraction && exchange;
  o.detail = fmt("%zu/%zu derivations verify (contraction: %s, exchange: %s); %zu/%zu mutations fail at the recorded node",
                 valid_ok, valid, contraction ? "yes" : "no", exchange ? "yes" : "no", mutated_ok, mutated);
  return o;
}

Outcome oracle_agreement() {
  Outcome o;
  const auto sigs = signatures();
  Rng rng(77);
  FormulaShape shape;
  shape.variables = {"p", "q", "r"};
  std::size_t failures = 0;
  for (std::size_t k = 0; k < 1000; ++k) {
    const auto& sig = sigs[k % sigs.size()];
    const SigmaFrame f = random_frame(sig, 1 + rng.below(4), rng.next());
    const auto ups = upsets(f.base.order);
    std::map<std::string, WorldSet> val;
    for (const auto& v : shape.variables) val[v] = ups[rng.below(ups.size())];
    const Model m = make_model(f, val);
    const Formula phi = random_formula(rng, sig, shape, 1 + rng.below(4));
    const ComplexAlgebra C = complex_algebra(f);
    if (eval(m, phi) != interpret_in_cm(C, phi, val)) {
      if (failures++ < 5) std::printf("  disagreement on %s\n", print_formula(phi).c_str());
    }
  }
  o.pass = failures == 0;
  o.detail = fmt("1000 pairs, %zu disagreements", failures);
  return o;
}

Outcome round_trip() {
  Outcome o;
  const auto sigs = signatures();
  Rng rng(2024);
  FormulaShape shape;
  shape.variables = {"p", "q", "r1", "s"};
  shape.max_depth = 6;
  std::size_t failures = 0;
  for (std::size_t k = 0; k < 10000; ++k) {
    const auto& sig = sigs[k % sigs.size()];
    const Formula f = random_formula(rng, sig, shape, rng.below(7));
    const std::string text = print_formula(f);
    bool ok = false;
    try {
      ok = parse_formula(text, sig) == f;
    } catch (const error&) {
    }
    if (!ok && failures++ < 5) std::printf("  round trip failed: %s\n", text.c_str());
  }
  o.pass = failures == 0;
  o.detail = fmt("10000 formulas, %zu failures", failures);
  return o;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  bool all = true;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& fn) {
    const auto t0 = clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  };

  report(1, "soundness", soundness);
  CorpusStats corpus;
  const auto t0 = clock::now();
  bool corpus_error = false;
  std::string corpus_msg;
  try {
    corpus = corpus_walk();
  } catch (const std::exception& e) {
    corpus_error = true;
    corpus_msg = e.what();
  }
  const double corpus_secs = std::chrono::duration<double>(clock::now() - t0).count();
  report(2, "duality", [&] {
    if (corpus_error) return Outcome{false, "exception: " + corpus_msg};
    return Outcome{corpus.duality_failures == 0 && corpus.algebras >= 200,
                   fmt("%zu algebras on lattices of size <= 5, %zu failures, corpus walk %.1fs", corpus.algebras,
                       corpus.duality_failures, corpus_secs)};
  });
  report(3, "canonicity", [&] {
    if (corpus_error) return Outcome{false, "exception: " + corpus_msg};
    return Outcome{corpus.canon_failures == 0 && corpus.algebras > 0,
                   fmt("%zu algebras, %zu failures", corpus.algebras, corpus.canon_failures)};
  });
  report(4, "complex algebra laws", cm_laws);
  report(5, "countermodels", countermodels);
  report(6, "proof checking", proof_checking);
  report(7, "eval vs complex algebra", oracle_agreement);
  report(8, "parser round trip", round_trip);
  return all ? 0 : 1;
}
