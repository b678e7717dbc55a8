#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsmalc/algebra.hpp"
#include "dsmalc/calculus.hpp"
#include "dsmalc/frames.hpp"
#include "dsmalc/search.hpp"

namespace dsmalc::io {

using json = nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw input_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

namespace detail {

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw input_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T as(const json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw input_error(std::string("field '") + what + "' has the wrong type");
  }
}

inline int world(const json& j, std::size_t n, const char* what) {
  const int w = as<int>(j, what);
  if (w < 0 || static_cast<std::size_t>(w) >= n) throw input_error(std::string(what) + " mentions world out of range");
  return w;
}

inline WorldSet world_set(const json& j, std::size_t n, const char* what) {
  if (!j.is_array()) throw input_error(std::string("field '") + what + "' must be an array");
  WorldSet s = 0;
  for (const auto& x : j) s |= bit(world(x, n, what));
  return s;
}

inline json set_json(WorldSet s) {
  json out = json::array();
  for (int x : members(s)) out.push_back(x);
  return out;
}

}  // namespace detail

// ---- signatures

inline RawSignature raw_signature_from_json(const json& j) {
  RawSignature raw;
  raw.indices = detail::as<std::vector<std::string>>(detail::field(j, "indices"), "indices");
  if (j.contains("preceq")) {
    for (const auto& pair : j.at("preceq")) {
      if (!pair.is_array() || pair.size() != 2) throw input_error("preceq entries must be pairs");
      raw.preceq.emplace_back(detail::as<std::string>(pair[0], "preceq"), detail::as<std::string>(pair[1], "preceq"));
    }
  }
  for (auto [key, dest] : {std::pair{"W", &raw.W}, std::pair{"E", &raw.E}, std::pair{"C", &raw.C}})
    if (j.contains(key)) *dest = detail::as<std::vector<std::string>>(j.at(key), key);
  return raw;
}

inline SubexpSignature signature_from_json(const json& j) { return validate_signature(raw_signature_from_json(j)); }

inline json to_json(const SubexpSignature& sig) {
  const RawSignature raw = sig.to_raw();
  json pairs = json::array();
  for (const auto& [a, b] : raw.preceq) pairs.push_back({a, b});
  return {{"indices", raw.indices}, {"preceq", pairs}, {"W", raw.W}, {"E", raw.E}, {"C", raw.C}};
}

// ---- posets

/// Reads {"n": k, "leq": [[...]]}. The relation is not validated when
/// `checked` is false, so frame checks can report a broken order as data.
inline FinitePoset poset_from_json(const json& j, bool checked = true) {
  const std::size_t n = detail::as<std::size_t>(detail::field(j, "n"), "n");
  if (n > max_carrier) throw input_error("poset too large");
  const json& rows = detail::field(j, "leq");
  if (!rows.is_array() || rows.size() != n) throw input_error("leq must be an n by n matrix");
  std::vector<std::vector<bool>> leq(n, std::vector<bool>(n));
  for (std::size_t a = 0; a < n; ++a) {
    if (!rows[a].is_array() || rows[a].size() != n) throw input_error("leq must be an n by n matrix");
    for (std::size_t b = 0; b < n; ++b) {
      const json& cell = rows[a][b];
      if (cell.is_boolean()) leq[a][b] = cell.get<bool>();
      else if (cell.is_number_integer()) leq[a][b] = cell.get<int>() != 0;
      else throw input_error("leq entries must be booleans");
    }
  }
  if (checked) {
    try {
      return FinitePoset::from_matrix(leq);
    } catch (const order_error& e) {
      throw input_error(std::string("invalid poset: ") + e.what());
    }
  }
  std::vector<WorldSet> up(n, 0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (leq[a][b]) up[a] |= bit(b);
  return FinitePoset::from_upsets_unchecked(up);
}

inline json to_json(const FinitePoset& p) {
  json rows = json::array();
  for (std::size_t a = 0; a < p.size(); ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < p.size(); ++b) row.push_back(p.leq(a, b));
    rows.push_back(row);
  }
  return {{"n", p.size()}, {"leq", rows}};
}

// ---- frames and models

/// Reads a frame. The signature comes from the document's "sig", else from
/// `fallback`, else is built from the keys of "Ri" with no structural rules.
/// Indices missing from "Ri" get the relation ≤.
inline SigmaFrame frame_from_json(const json& j, const SubexpSignature* fallback = nullptr, bool checked_order = true) {
  SigmaFrame f;
  f.base.order = poset_from_json(detail::field(j, "poset"), checked_order);
  const std::size_t n = f.size();
  std::vector<std::array<int, 3>> triples;
  for (const auto& t : detail::field(j, "R")) {
    if (!t.is_array() || t.size() != 3) throw input_error("R entries must be triples");
    triples.push_back({detail::world(t[0], n, "R"), detail::world(t[1], n, "R"), detail::world(t[2], n, "R")});
  }
  const WorldSet unit = detail::world_set(detail::field(j, "O"), n, "O");
  f.base.fusion.assign(n * n, 0);
  for (const auto& t : triples) f.base.fusion[t[0] * n + t[1]] |= bit(t[2]);
  f.base.unit = unit;

  const json ri = j.contains("Ri") ? j.at("Ri") : json::object();
  if (!ri.is_object()) throw input_error("Ri must be an object keyed by index");
  if (j.contains("sig")) f.sig = signature_from_json(j.at("sig"));
  else if (fallback) f.sig = *fallback;
  else {
    RawSignature raw;
    for (const auto& [key, _] : ri.items()) raw.indices.push_back(key);
    if (raw.indices.empty()) throw input_error("frame has no signature and no Ri");
    f.sig = validate_signature(raw);
  }
  f.access.assign(f.sig.size(), std::vector<WorldSet>(n, 0));
  for (std::size_t i = 0; i < f.sig.size(); ++i) {
    if (!ri.contains(f.sig.name(i))) {
      for (std::size_t u = 0; u < n; ++u) f.access[i][u] = f.base.order.up(u);
      continue;
    }
    for (const auto& pair : ri.at(f.sig.name(i))) {
      if (!pair.is_array() || pair.size() != 2) throw input_error("Ri entries must be pairs");
      f.access[i][detail::world(pair[0], n, "Ri")] |= bit(detail::world(pair[1], n, "Ri"));
    }
  }
  for (const auto& [key, _] : ri.items())
    if (!f.sig.find(key)) throw input_error("Ri mentions index '" + key + "' outside the signature");
  return f;
}

inline json to_json(const SigmaFrame& f) {
  const std::size_t n = f.size();
  json R = json::array();
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      for (int w : members(f.base.image(u, v))) R.push_back({u, v, w});
  json ri = json::object();
  for (std::size_t i = 0; i < f.sig.size(); ++i) {
    json pairs = json::array();
    for (std::size_t u = 0; u < n; ++u)
      for (int w : members(f.access[i][u])) pairs.push_back({u, w});
    ri[f.sig.name(i)] = pairs;
  }
  return {{"poset", to_json(f.base.order)}, {"R", R}, {"O", detail::set_json(f.base.unit)}, {"Ri", ri},
          {"sig", to_json(f.sig)}};
}

/// {"frame": ..., "valuation": {"p": [worlds], ...}}
inline Model model_from_json(const json& j, const SubexpSignature* fallback = nullptr) {
  SigmaFrame f = frame_from_json(detail::field(j, "frame"), fallback);
  std::map<std::string, WorldSet> val;
  const json& v = detail::field(j, "valuation");
  if (!v.is_object()) throw input_error("valuation must be an object");
  for (const auto& [var, set] : v.items()) val[var] = detail::world_set(set, f.size(), "valuation");
  return make_model(std::move(f), std::move(val));
}

inline json to_json(const Model& m) {
  json val = json::object();
  for (const auto& [var, set] : m.valuation) val[var] = detail::set_json(set);
  return {{"frame", to_json(m.frame)}, {"valuation", val}};
}

inline json set_to_json(WorldSet s) { return detail::set_json(s); }

// ---- algebras

/// Reads an algebra. With "ldiv" and "rdiv" present the residual tables are
/// taken as given; otherwise they are synthesized.
inline FiniteSigmaAlgebra algebra_from_json(const json& j, const SubexpSignature* fallback = nullptr) {
  FiniteLattice L;
  try {
    L = bounded_lattice_from_poset(poset_from_json(detail::field(j, "lattice")));
  } catch (const order_error& e) {
    throw input_error(std::string("lattice: ") + e.what());
  }
  auto table = [&](const char* key) {
    return Table::from_rows(detail::as<std::vector<std::vector<Elem>>>(detail::field(j, key), key));
  };
  SubexpSignature sig;
  if (j.contains("sig")) sig = signature_from_json(j.at("sig"));
  else if (fallback) sig = *fallback;
  else throw input_error("algebra has no signature");
  const json& bang = detail::field(j, "bang");
  std::vector<std::vector<Elem>> bangs;
  for (const auto& name : sig.names()) {
    if (!bang.contains(name)) throw input_error("bang table missing for index '" + name + "'");
    bangs.push_back(detail::as<std::vector<Elem>>(bang.at(name), "bang"));
  }
  const Elem unit = detail::as<Elem>(detail::field(j, "unit"), "unit");
  if (j.contains("ldiv") || j.contains("rdiv"))
    return FiniteSigmaAlgebra(std::move(L), table("prod"), table("ldiv"), table("rdiv"), unit, std::move(bangs), sig);
  return FiniteSigmaAlgebra(std::move(L), table("prod"), unit, std::move(bangs), sig);
}

inline json to_json(const FiniteSigmaAlgebra& A) {
  json bang = json::object();
  for (std::size_t i = 0; i < A.sig().size(); ++i) bang[A.sig().name(i)] = A.bang_tables()[i];
  return {{"lattice", to_json(A.lattice().poset())}, {"prod", A.prod_table().rows()},
          {"ldiv", A.ldiv_table().rows()},          {"rdiv", A.rdiv_table().rows()},
          {"unit", A.unit()},                       {"bang", bang},
          {"sig", to_json(A.sig())}};
}

inline json to_json(const std::vector<Violation>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back({{"condition", v.condition}, {"witness", v.witness}});
  return out;
}

// ---- derivations

inline Derivation derivation_from_json(const json& j, const SubexpSignature& sig) {
  const std::string rule_text = detail::as<std::string>(detail::field(j, "rule"), "rule");
  const auto rule = rule_from_name(rule_text);
  if (!rule) throw input_error("unknown rule '" + rule_text + "'");
  Derivation d{parse_sequent(detail::as<std::string>(detail::field(j, "conclusion"), "conclusion"), sig), *rule, {}, {}};
  if (j.contains("inst")) {
    const json& inst = j.at("inst");
    if (!inst.is_object()) throw input_error("inst must be an object");
    for (const auto& [key, value] : inst.items()) {
      const std::string text = detail::as<std::string>(value, "inst");
      if (is_index_metavariable(key)) d.inst.indices[key] = text;
      else d.inst.formulas.emplace(key, parse_formula(text, sig));
    }
  }
  if (j.contains("premises")) {
    if (!j.at("premises").is_array()) throw input_error("premises must be an array");
    for (const auto& p : j.at("premises")) d.premises.push_back(derivation_from_json(p, sig));
  }
  return d;
}

inline json to_json(const Derivation& d) {
  json inst = json::object();
  for (const auto& [k, f] : d.inst.formulas) inst[k] = print_formula(f);
  for (const auto& [k, i] : d.inst.indices) inst[k] = i;
  json premises = json::array();
  for (const auto& p : d.premises) premises.push_back(to_json(p));
  return {{"rule", rule_name(d.rule)}, {"conclusion", print_sequent(d.conclusion)}, {"inst", inst},
          {"premises", premises}};
}

inline std::size_t derivation_size(const Derivation& d) {
  std::size_t n = 1;
  for (const auto& p : d.premises) n += derivation_size(p);
  return n;
}

// ---- formulas

inline json ast_json(const Formula& f) {
  switch (f.kind()) {
    case Kind::Bot: return {{"kind", "Bot"}};
    case Kind::Top: return {{"kind", "Top"}};
    case Kind::One: return {{"kind", "One"}};
    case Kind::Var: return {{"kind", "Var"}, {"name", f.name()}};
    case Kind::Bang: return {{"kind", "Bang"}, {"index", f.name()}, {"body", ast_json(f.body())}};
    default: break;
  }
  static const char* names[] = {"Bot", "Top", "One", "Var", "Prod", "LDiv", "RDiv", "Or", "And", "Bang"};
  return {{"kind", names[static_cast<int>(f.kind())]}, {"left", ast_json(f.left())}, {"right", ast_json(f.right())}};
}

// ---- search

inline json to_json(const Countermodel& c) {
  return {{"model", to_json(c.model)},
          {"sequent", print_sequent(c.sequent)},
          {"witness_world", c.witness_world},
          {"worlds", c.model.frame.size()}};
}

inline json to_json(const FuzzFailure& f) {
  return {{"trial", f.trial}, {"check", f.check}, {"sequent", f.sequent}, {"detail", f.detail}};
}

inline json to_json(const FuzzTrial& t) {
  json failures = json::array();
  for (const auto& f : t.failures) failures.push_back(to_json(f));
  return {{"trial", t.trial},
          {"seed", t.seed},
          {"worlds", t.worlds},
          {"axiom_checks", t.axiom_checks},
          {"rule_checks", t.rule_checks},
          {"failures", failures}};
}

// ---- DOT

/// (W, ≤) as its Hasse diagram, each R triple as a small hub node with edges
/// from u and v into the hub and from the hub to w, and each Rᵢ pair not
/// implied by ≤ as a dashed labeled edge. Worlds in O are double circles.
inline std::string to_dot(const SigmaFrame& f) {
  const std::size_t n = f.size();
  const FinitePoset& P = f.base.order;
  std::ostringstream out;
  out << "digraph frame {\n  rankdir=BT;\n";
  for (std::size_t w = 0; w < n; ++w)
    out << "  w" << w << " [label=\"" << w << "\", shape=" << (has(f.base.unit, w) ? "doublecircle" : "circle")
        << "];\n";
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (!P.less(a, b)) continue;
      bool cover = true;
      for (std::size_t c = 0; c < n; ++c)
        if (P.less(a, c) && P.less(c, b)) cover = false;
      if (cover) out << "  w" << a << " -> w" << b << " [arrowhead=none];\n";
    }
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      for (int w : members(f.base.image(u, v))) {
        const std::string hub = "r" + std::to_string(u) + "_" + std::to_string(v) + "_" + std::to_string(w);
        out << "  " << hub << " [shape=point];\n";
        out << "  w" << u << " -> " << hub << " [color=gray, taillabel=\"1\"];\n";
        out << "  w" << v << " -> " << hub << " [color=gray, taillabel=\"2\"];\n";
        out << "  " << hub << " -> w" << w << " [color=gray];\n";
      }
  for (std::size_t i = 0; i < f.sig.size(); ++i)
    for (std::size_t u = 0; u < n; ++u)
      for (int w : members(f.access[i][u] & ~P.up(u)))
        out << "  w" << u << " -> w" << w << " [style=dashed, label=\"" << f.sig.name(i) << "\"];\n";
  out << "}\n";
  return out.str();
}

}  // namespace dsmalc::io
