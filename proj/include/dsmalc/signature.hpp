#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dsmalc/error.hpp"

namespace dsmalc {

/// Unvalidated signature as authored: index names, generating pairs of the
/// preorder, and the three structural subsets.
struct RawSignature {
  std::vector<std::string> indices;
  std::vector<std::pair<std::string, std::string>> preceq;
  std::vector<std::string> W;
  std::vector<std::string> E;
  std::vector<std::string> C;
};

enum class SignatureErrorKind {
  Empty,
  DuplicateIndex,
  UnknownIndex,
  NotPreorder,
  NotUpwardClosed,
  WCNotInE,
};

class signature_error : public error {
 public:
  signature_error(SignatureErrorKind kind, std::string message, std::string set_name = {},
                  std::string first = {}, std::string second = {})
      : error(std::move(message)),
        kind_(kind),
        set_name_(std::move(set_name)),
        first_(std::move(first)),
        second_(std::move(second)) {}

  SignatureErrorKind kind() const noexcept { return kind_; }
  /// "W", "E" or "C" for NotUpwardClosed.
  const std::string& set_name() const noexcept { return set_name_; }
  /// Witness index (or first index of a witness pair).
  const std::string& first() const noexcept { return first_; }
  const std::string& second() const noexcept { return second_; }

 private:
  SignatureErrorKind kind_;
  std::string set_name_;
  std::string first_;
  std::string second_;
};

inline const char* to_string(SignatureErrorKind k) {
  switch (k) {
    case SignatureErrorKind::Empty: return "Empty";
    case SignatureErrorKind::DuplicateIndex: return "DuplicateIndex";
    case SignatureErrorKind::UnknownIndex: return "UnknownIndex";
    case SignatureErrorKind::NotPreorder: return "NotPreorder";
    case SignatureErrorKind::NotUpwardClosed: return "NotUpwardClosed";
    case SignatureErrorKind::WCNotInE: return "WCNotInE";
  }
  return "?";
}

/// A validated subexponential signature (I, ⪯, W, E, C). Indices are
/// addressed by position; positions follow the authored order.
class SubexpSignature {
 public:
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::optional<std::size_t> find(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
  }

  bool preceq(std::size_t i, std::size_t j) const { return leq_[i * size() + j]; }
  bool weakening(std::size_t i) const { return w_[i]; }
  bool exchange(std::size_t i) const { return e_[i]; }
  bool contraction(std::size_t i) const { return c_[i]; }

  /// Pairs that were missing from the authored relation and were added by
  /// reflexive-transitive closure.
  const std::vector<std::pair<std::string, std::string>>& closure_added() const noexcept {
    return closure_added_;
  }

  /// Round-trips to an authored form; `preceq` lists the full closed relation.
  RawSignature to_raw() const {
    RawSignature raw;
    raw.indices = names_;
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t j = 0; j < size(); ++j) {
        if (preceq(i, j)) raw.preceq.emplace_back(names_[i], names_[j]);
      }
      if (w_[i]) raw.W.push_back(names_[i]);
      if (e_[i]) raw.E.push_back(names_[i]);
      if (c_[i]) raw.C.push_back(names_[i]);
    }
    return raw;
  }

  friend bool operator==(const SubexpSignature& a, const SubexpSignature& b) {
    return a.names_ == b.names_ && a.leq_ == b.leq_ && a.w_ == b.w_ && a.e_ == b.e_ &&
           a.c_ == b.c_;
  }

 private:
  friend struct SignatureBuilder;
  std::vector<std::string> names_;
  std::vector<bool> leq_;
  std::vector<bool> w_, e_, c_;
  std::vector<std::pair<std::string, std::string>> closure_added_;
};

struct ValidateOptions {
  /// Close ⪯ reflexively and transitively instead of rejecting it.
  bool close_preorder = true;
};

struct SignatureBuilder {
  static SubexpSignature build(const RawSignature& raw, const ValidateOptions& opts) {
    SubexpSignature sig;
    const std::size_t n = raw.indices.size();
    if (n == 0) throw signature_error(SignatureErrorKind::Empty, "signature has no indices");
    sig.names_ = raw.indices;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (raw.indices[i] == raw.indices[j]) {
          throw signature_error(SignatureErrorKind::DuplicateIndex,
                                "duplicate index '" + raw.indices[i] + "'", {}, raw.indices[i]);
        }
      }
    }
    auto lookup = [&](const std::string& name, const char* where) {
      auto pos = sig.find(name);
      if (!pos) {
        throw signature_error(SignatureErrorKind::UnknownIndex,
                              std::string("unknown index '") + name + "' in " + where, where,
                              name);
      }
      return *pos;
    };

    std::vector<bool> given(n * n, false);
    for (const auto& [a, b] : raw.preceq) given[lookup(a, "preceq") * n + lookup(b, "preceq")] = true;

    std::vector<bool> closed = given;
    for (std::size_t i = 0; i < n; ++i) closed[i * n + i] = true;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        if (closed[i * n + k])
          for (std::size_t j = 0; j < n; ++j)
            if (closed[k * n + j]) closed[i * n + j] = true;

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (closed[i * n + j] && !given[i * n + j]) {
          if (!opts.close_preorder) {
            throw signature_error(
                SignatureErrorKind::NotPreorder,
                "preceq is not a preorder: missing (" + sig.names_[i] + ", " + sig.names_[j] + ")",
                {}, sig.names_[i], sig.names_[j]);
          }
          sig.closure_added_.emplace_back(sig.names_[i], sig.names_[j]);
        }
      }
    }
    sig.leq_ = std::move(closed);

    auto subset = [&](const std::vector<std::string>& members, const char* set_name) {
      std::vector<bool> bits(n, false);
      for (const auto& m : members) bits[lookup(m, set_name)] = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (!bits[i]) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (sig.leq_[i * n + j] && !bits[j]) {
            throw signature_error(SignatureErrorKind::NotUpwardClosed,
                                  std::string(set_name) + " is not upward closed: " +
                                      sig.names_[i] + " in " + set_name + ", " + sig.names_[i] +
                                      " <= " + sig.names_[j] + ", but " + sig.names_[j] +
                                      " not in " + set_name,
                                  set_name, sig.names_[i], sig.names_[j]);
          }
        }
      }
      return bits;
    };
    sig.w_ = subset(raw.W, "W");
    sig.e_ = subset(raw.E, "E");
    sig.c_ = subset(raw.C, "C");
    for (std::size_t i = 0; i < n; ++i) {
      if (sig.w_[i] && sig.c_[i] && !sig.e_[i]) {
        throw signature_error(SignatureErrorKind::WCNotInE,
                              "index " + sig.names_[i] + " is in W and C but not in E", {},
                              sig.names_[i]);
      }
    }
    return sig;
  }
};

/// Validates an authored signature. The preorder is closed (and the closure
/// recorded) unless `opts.close_preorder` is false; W, E and C are never
/// repaired.
inline SubexpSignature validate_signature(const RawSignature& raw, const ValidateOptions& opts = {}) {
  return SignatureBuilder::build(raw, opts);
}

/// One index `i`, no structural rules.
inline SubexpSignature trivial_signature(const std::string& index = "i") {
  return validate_signature(RawSignature{{index}, {}, {}, {}, {}});
}

}  // namespace dsmalc
