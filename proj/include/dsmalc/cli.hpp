#pragma once

#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsmalc/complex_algebra.hpp"
#include "dsmalc/io.hpp"
#include "dsmalc/search.hpp"

namespace dsmalc::cli {

using json = nlohmann::json;

/// 0: done, verdict positive; 1: well-formed input, negative verdict;
/// 2: usage or input error; 3: budget or size cap exhausted.
struct CommandResult {
  int exit_code = 0;
  json payload;
};

namespace detail {

struct Flags {
  std::string sig, frame, algebra, model, sequent, derivation, out, text;
  std::size_t max_worlds = 3;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 100;
  std::size_t jobs = 1;
  std::size_t bound = 0;
};

inline json error_payload(const std::string& kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw CLI::ValidationError(std::string("missing required flag ") + flag);
}

inline std::optional<SubexpSignature> sig_flag(const Flags& f) {
  if (f.sig.empty()) return std::nullopt;
  return io::signature_from_json(io::read_json_file(f.sig));
}

inline CommandResult verdict(bool ok, json payload) { return {ok ? 0 : 1, std::move(payload)}; }

inline CommandResult check_sig(const Flags& f) {
  require(f.sig, "--sig");
  const RawSignature raw = io::raw_signature_from_json(io::read_json_file(f.sig));
  try {
    const SubexpSignature sig = validate_signature(raw);
    json added = json::array();
    for (const auto& [a, b] : sig.closure_added()) added.push_back({a, b});
    return {0, {{"valid", true}, {"signature", io::to_json(sig)}, {"closure_added", added}}};
  } catch (const signature_error& e) {
    json witness = json::array();
    if (!e.first().empty()) witness.push_back(e.first());
    if (!e.second().empty()) witness.push_back(e.second());
    json out = {{"valid", false}, {"error", to_string(e.kind())}, {"message", e.what()}, {"witness", witness}};
    if (!e.set_name().empty()) out["set"] = e.set_name();
    return {1, out};
  }
}

inline CommandResult parse(const Flags& f) {
  const SubexpSignature sig = sig_flag(f).value_or(SubexpSignature{});
  const bool checked = !f.sig.empty();
  if (!f.sequent.empty()) {
    const Sequent s = checked ? parse_sequent(f.sequent, sig) : parse_sequent_unchecked(f.sequent);
    return {0, {{"sequent", print_sequent(s)}, {"lhs", io::ast_json(s.lhs)}, {"rhs", io::ast_json(s.rhs)}}};
  }
  require(f.text, "<formula>");
  const Formula phi = checked ? parse_formula(f.text, sig) : parse_formula_unchecked(f.text);
  return {0, {{"formula", print_formula(phi)}, {"ast", io::ast_json(phi)}}};
}

inline CommandResult check_derivation_cmd(const Flags& f) {
  require(f.derivation, "--derivation");
  json doc = io::read_json_file(f.derivation);
  std::optional<SubexpSignature> sig = sig_flag(f);
  if (!sig && doc.contains("sig")) sig = io::signature_from_json(doc.at("sig"));
  if (!sig) throw input_error("no signature: pass --sig or embed \"sig\"");
  const json& tree = doc.contains("derivation") ? doc.at("derivation") : doc;
  const Derivation d = io::derivation_from_json(tree, *sig);
  if (auto e = check_derivation(d, *sig))
    return {1,
            {{"ok", false},
             {"path", e->path},
             {"kind", to_string(e->error.kind)},
             {"message", e->error.message},
             {"expected", e->error.expected},
             {"got", e->error.got}}};
  return {0, {{"ok", true}, {"nodes", io::derivation_size(d)}, {"conclusion", print_sequent(d.conclusion)}}};
}

inline CommandResult derive(const Flags& f) {
  require(f.sig, "--sig");
  require(f.sequent, "--sequent");
  const SubexpSignature sig = *sig_flag(f);
  const Sequent goal = parse_sequent(f.sequent, sig);
  const std::size_t bound = f.bound ? f.bound : std::max(goal.lhs.size(), goal.rhs.size()) + 1;
  if (auto d = derive_bounded(goal, sig, bound))
    return {0, {{"found", true}, {"bound", bound}, {"derivation", io::to_json(*d)}}};
  return {1, {{"found", false}, {"bound", bound}}};
}

inline CommandResult check_frame(const Flags& f) {
  require(f.frame, "--frame");
  const auto sig = sig_flag(f);
  const SigmaFrame frame = io::frame_from_json(io::read_json_file(f.frame), sig ? &*sig : nullptr, false);
  const auto v = check_sigma_frame(frame);
  return verdict(v.empty(), {{"ok", v.empty()}, {"worlds", frame.size()}, {"violations", io::to_json(v)}});
}

inline FiniteSigmaAlgebra load_algebra(const Flags& f) {
  require(f.algebra, "--algebra");
  const auto sig = sig_flag(f);
  return io::algebra_from_json(io::read_json_file(f.algebra), sig ? &*sig : nullptr);
}

inline SigmaFrame load_frame(const Flags& f) {
  require(f.frame, "--frame");
  const auto sig = sig_flag(f);
  return io::frame_from_json(io::read_json_file(f.frame), sig ? &*sig : nullptr);
}

inline CommandResult check_algebra(const Flags& f) {
  const auto v = check_sigma_algebra(load_algebra(f));
  return verdict(v.empty(), {{"ok", v.empty()}, {"violations", io::to_json(v)}});
}

inline CommandResult cm_cmd(const Flags& f) {
  const SigmaFrame frame = load_frame(f);
  const auto v = check_sigma_frame(frame);
  if (!v.empty()) return {1, {{"ok", false}, {"precondition", io::to_json(v)}}};
  const ComplexAlgebra C = complex_algebra(frame);
  json carrier = json::array();
  for (WorldSet s : C.carrier) carrier.push_back(io::set_to_json(s));
  return {0, {{"ok", true}, {"algebra", io::to_json(C.algebra)}, {"carrier", carrier}}};
}

inline CommandResult at_cmd(const Flags& f) {
  const FiniteSigmaAlgebra A = load_algebra(f);
  const auto v = check_sigma_algebra(A);
  if (!v.empty()) return {1, {{"ok", false}, {"precondition", io::to_json(v)}}};
  const AtomStructure at = atom_structure(A);
  return {0, {{"ok", true}, {"frame", io::to_json(at.frame)}, {"worlds", at.worlds}}};
}

inline CommandResult canonical_cmd(const Flags& f) {
  const FiniteSigmaAlgebra A = load_algebra(f);
  const CanonicityReport r = check_canonicity_instance(A);
  json out = {{"ok", r.ok()}, {"precondition", io::to_json(r.precondition)}};
  if (r.precondition_ok()) {
    out["algebra"] = io::to_json(canonical_extension_finite(A));
    out["violations"] = io::to_json(r.extension);
    out["mismatches"] = r.mismatches;
  }
  return verdict(r.ok(), out);
}

inline CommandResult eval_cmd(const Flags& f) {
  require(f.model, "--model");
  const auto sig = sig_flag(f);
  const Model m = io::model_from_json(io::read_json_file(f.model), sig ? &*sig : nullptr);
  if (!f.sequent.empty()) {
    const Sequent s = parse_sequent(f.sequent, m.frame.sig);
    const WorldSet l = eval(m, s.lhs), r = eval(m, s.rhs);
    return {0, {{"lhs", io::set_to_json(l)}, {"rhs", io::set_to_json(r)}, {"holds", subset(l, r)}}};
  }
  require(f.text, "<formula>");
  return {0, {{"truth_set", io::set_to_json(eval(m, parse_formula(f.text, m.frame.sig)))}}};
}

inline CommandResult valid_cmd(const Flags& f) {
  require(f.sequent, "--sequent");
  const SigmaFrame frame = load_frame(f);
  const Sequent s = parse_sequent(f.sequent, frame.sig);
  return verdict(frame_validates(frame, s), {{"valid", frame_validates(frame, s)}});
}

inline CommandResult countermodel_cmd(const Flags& f) {
  require(f.sig, "--sig");
  require(f.sequent, "--sequent");
  const SubexpSignature sig = *sig_flag(f);
  const Sequent s = parse_sequent(f.sequent, sig);
  SearchBudget budget;
  budget.max_worlds = f.max_worlds;
  if (auto c = find_countermodel(s, sig, budget)) {
    json out = io::to_json(*c);
    out["found"] = true;
    return {0, out};
  }
  return {1, {{"found", false}, {"max_worlds", f.max_worlds}, {"sequent", print_sequent(s)}}};
}

inline CommandResult duality_cmd(const Flags& f) {
  const FiniteSigmaAlgebra A = load_algebra(f);
  const auto v = check_sigma_algebra(A);
  if (!v.empty()) return {1, {{"ok", false}, {"precondition", io::to_json(v)}}};
  if (auto fail = duality_check(A))
    return {1, {{"ok", false}, {"failure", {{"operation", fail->operation}, {"args", fail->args}, {"detail", fail->detail}}}}};
  return {0, {{"ok", true}, {"worlds", atom_structure(A).worlds.size()}}};
}

inline CommandResult fuzz_cmd(const Flags& f) {
  require(f.sig, "--sig");
  if (!f.seed) throw CLI::ValidationError("fuzz-soundness requires --seed");
  const SubexpSignature sig = *sig_flag(f);
  FuzzOptions opts;
  opts.jobs = f.jobs;
  opts.max_worlds = std::min<std::size_t>(f.max_worlds, 6);
  const FuzzReport r = soundness_fuzz(sig, f.trials, *f.seed, opts);
  if (!f.out.empty()) {
    std::ofstream out(f.out);
    if (!out) throw input_error("cannot write '" + f.out + "'");
    for (const auto& t : r.trials) out << io::to_json(t).dump() << "\n";
  }
  json failures = json::array();
  for (const auto& x : r.failures()) failures.push_back(io::to_json(x));
  const bool ok = failures.empty();
  return verdict(ok, {{"trials", r.trials.size()},
                      {"seed", *f.seed},
                      {"axiom_checks", r.axiom_checks()},
                      {"rule_checks", r.rule_checks()},
                      {"failures", failures}});
}

inline CommandResult export_dot(const Flags& f) {
  const SigmaFrame frame = load_frame(f);
  const std::string dot = io::to_dot(frame);
  if (!f.out.empty()) {
    std::ofstream out(f.out);
    if (!out) throw input_error("cannot write '" + f.out + "'");
    out << dot;
    return {0, {{"written", f.out}}};
  }
  return {0, {{"dot", dot}}};
}

}  // namespace detail

/// Parses `args` (without the program name) and runs one subcommand.
/// Diagnostics go to `err`; the payload is returned, not printed.
inline CommandResult run(const std::vector<std::string>& args, std::ostream& err) {
  detail::Flags flags;
  CLI::App app{"Toolkit for the distributive full Lambek calculus with subexponentials", "dsmalc"};
  app.require_subcommand(1);
  using Handler = CommandResult (*)(const detail::Flags&);
  struct Entry {
    const char* name;
    const char* help;
    Handler handler;
  };
  const Entry entries[] = {
      {"check-sig", "validate a signature", detail::check_sig},
      {"parse", "parse and print a formula or sequent", detail::parse},
      {"check-derivation", "verify a derivation tree", detail::check_derivation_cmd},
      {"derive", "bounded forward proof search", detail::derive},
      {"check-frame", "check the Σ-frame conditions", detail::check_frame},
      {"check-algebra", "check the Σ-algebra laws", detail::check_algebra},
      {"cm", "complex algebra of a frame", detail::cm_cmd},
      {"at", "atom structure of an algebra", detail::at_cmd},
      {"canonical", "finite canonical extension", detail::canonical_cmd},
      {"eval", "truth set of a formula or sequent sides in a model", detail::eval_cmd},
      {"valid", "frame validity of a sequent", detail::valid_cmd},
      {"countermodel", "search for a falsifying model", detail::countermodel_cmd},
      {"duality", "check A against Cm(At(A))", detail::duality_cmd},
      {"fuzz-soundness", "random soundness trials", detail::fuzz_cmd},
      {"export-dot", "Graphviz rendering of a frame", detail::export_dot},
  };
  std::vector<std::pair<CLI::App*, Handler>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--sig", flags.sig, "signature JSON file");
    sub->add_option("--frame", flags.frame, "frame JSON file");
    sub->add_option("--algebra", flags.algebra, "algebra JSON file");
    sub->add_option("--model", flags.model, "model JSON file");
    sub->add_option("--sequent", flags.sequent, "sequent text, e.g. \"p |- q\"");
    sub->add_option("--derivation", flags.derivation, "derivation JSON file");
    sub->add_option("--max-worlds", flags.max_worlds, "largest frame size to search")->check(CLI::Range(1, 6));
    sub->add_option("--seed", flags.seed, "random seed");
    sub->add_option("--trials", flags.trials, "number of trials")->check(CLI::Range(1, 1'000'000));
    sub->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::Range(1, 256));
    sub->add_option("--bound", flags.bound, "formula size bound for derive");
    sub->add_option("--out", flags.out, "output file");
    sub->add_option("text", flags.text, "formula text");
    subs.emplace_back(sub, e.handler);
  }

  std::vector<std::string> argv_store{"dsmalc"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    return {0, {{"help", app.help()}}};
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return {2, detail::error_payload("usage", e.what())};
  }
  try {
    for (const auto& [sub, handler] : subs)
      if (sub->parsed()) return handler(flags);
    return {2, detail::error_payload("usage", "no subcommand")};
  } catch (const CLI::Error& e) {
    err << e.what() << "\n";
    return {2, detail::error_payload("usage", e.what())};
  } catch (const parse_error& e) {
    err << e.what() << "\n";
    json p = detail::error_payload("parse", e.what());
    p["position"] = e.position();
    return {2, p};
  } catch (const signature_error& e) {
    err << e.what() << "\n";
    return {2, detail::error_payload("signature", e.what())};
  } catch (const budget_exceeded& e) {
    err << e.what() << "\n";
    json p = detail::error_payload("budget", e.what());
    p["explored"] = e.explored();
    return {3, p};
  } catch (const size_cap_exceeded& e) {
    err << e.what() << "\n";
    return {3, detail::error_payload("size_cap", e.what())};
  } catch (const error& e) {
    err << e.what() << "\n";
    return {2, detail::error_payload("input", e.what())};
  }
}

}  // namespace dsmalc::cli
