#pragma once

#include <cctype>
#include <cstddef>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsmalc/error.hpp"
#include "dsmalc/signature.hpp"

namespace dsmalc {

enum class Kind : unsigned char { Bot, Top, One, Var, Prod, LDiv, RDiv, Or, And, Bang };

/// Immutable formula tree. Copies share structure; equality is structural.
class Formula {
 public:
  static Formula bot() { return Formula(make(Kind::Bot, {}, {}, {})); }
  static Formula top() { return Formula(make(Kind::Top, {}, {}, {})); }
  static Formula one() { return Formula(make(Kind::One, {}, {}, {})); }
  static Formula var(std::string name) { return Formula(make(Kind::Var, std::move(name), {}, {})); }
  static Formula prod(Formula l, Formula r) { return binary(Kind::Prod, std::move(l), std::move(r)); }
  static Formula ldiv(Formula l, Formula r) { return binary(Kind::LDiv, std::move(l), std::move(r)); }
  static Formula rdiv(Formula l, Formula r) { return binary(Kind::RDiv, std::move(l), std::move(r)); }
  static Formula disj(Formula l, Formula r) { return binary(Kind::Or, std::move(l), std::move(r)); }
  static Formula conj(Formula l, Formula r) { return binary(Kind::And, std::move(l), std::move(r)); }
  static Formula bang(std::string index, Formula body) {
    return Formula(make(Kind::Bang, std::move(index), std::move(body), {}));
  }
  static Formula binary(Kind k, Formula l, Formula r) {
    return Formula(make(k, {}, std::move(l), std::move(r)));
  }

  Kind kind() const noexcept;
  bool is_binary() const noexcept { return kind() >= Kind::Prod && kind() <= Kind::And; }
  /// Variable name, or subexponential index for Bang.
  const std::string& name() const noexcept;
  const Formula& left() const;
  const Formula& right() const;
  const Formula& body() const;

  /// Node count.
  std::size_t size() const noexcept;
  std::size_t depth() const noexcept;
  std::size_t hash() const noexcept;
  /// Identity of the shared node; equal ids imply equal formulas.
  const void* id() const noexcept { return node_.get(); }

  friend bool operator==(const Formula& a, const Formula& b);
  friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

 private:
  struct Node;
  Formula() = default;
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static std::shared_ptr<const Node> make(Kind k, std::string name, Formula l, Formula r);

  std::shared_ptr<const Node> node_;
};

struct Formula::Node {
  Kind kind;
  std::string name;
  Formula left;
  Formula right;
  std::size_t size;
  std::size_t depth;
  std::size_t hash;
};

inline Kind Formula::kind() const noexcept { return node_->kind; }
inline const std::string& Formula::name() const noexcept { return node_->name; }
inline const Formula& Formula::left() const { return node_->left; }
inline const Formula& Formula::right() const { return node_->right; }
inline const Formula& Formula::body() const { return node_->left; }
inline std::size_t Formula::size() const noexcept { return node_->size; }
inline std::size_t Formula::depth() const noexcept { return node_->depth; }
inline std::size_t Formula::hash() const noexcept { return node_->hash; }

inline bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.node_->hash != b.node_->hash || a.node_->kind != b.node_->kind ||
      a.node_->size != b.node_->size || a.node_->name != b.node_->name)
    return false;
  switch (a.kind()) {
    case Kind::Bot:
    case Kind::Top:
    case Kind::One:
    case Kind::Var: return true;
    case Kind::Bang: return a.body() == b.body();
    default: return a.left() == b.left() && a.right() == b.right();
  }
}

inline std::shared_ptr<const Formula::Node> Formula::make(Kind k, std::string name, Formula l,
                                                          Formula r) {
  std::size_t size = 1, depth = 0;
  std::size_t h = std::hash<int>{}(static_cast<int>(k)) * 0x9e3779b97f4a7c15ULL;
  auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  mix(std::hash<std::string>{}(name));
  if (l.node_) {
    size += l.size();
    depth = l.depth() + 1;
    mix(l.hash());
  }
  if (r.node_) {
    size += r.size();
    depth = std::max(depth, r.depth() + 1);
    mix(r.hash());
  }
  return std::make_shared<const Node>(
      Node{k, std::move(name), std::move(l), std::move(r), size, depth, h});
}

struct FormulaHash {
  std::size_t operator()(const Formula& f) const noexcept { return f.hash(); }
};

struct Sequent {
  Formula lhs;
  Formula rhs;

  friend bool operator==(const Sequent& a, const Sequent& b) {
    return a.lhs == b.lhs && a.rhs == b.rhs;
  }
  friend bool operator!=(const Sequent& a, const Sequent& b) { return !(a == b); }
};

// --------------------------------------------------------------------------
// Printing. Precedence, loosest first: \/ , /\ , \ and / , * , ![i].
// \/, /\ and * associate to the left; \ and / do not associate.

namespace detail {

inline int precedence(Kind k) {
  switch (k) {
    case Kind::Or: return 0;
    case Kind::And: return 1;
    case Kind::LDiv:
    case Kind::RDiv: return 2;
    case Kind::Prod: return 3;
    default: return 4;
  }
}

inline const char* operator_token(Kind k) {
  switch (k) {
    case Kind::Or: return "\\/";
    case Kind::And: return "/\\";
    case Kind::LDiv: return "\\";
    case Kind::RDiv: return "/";
    case Kind::Prod: return "*";
    default: return "";
  }
}

inline void print_at(const Formula& f, int min_level, std::string& out) {
  const int level = precedence(f.kind());
  const bool parens = level < min_level;
  if (parens) out += '(';
  switch (f.kind()) {
    case Kind::Bot: out += 'F'; break;
    case Kind::Top: out += 'T'; break;
    case Kind::One: out += '1'; break;
    case Kind::Var: out += f.name(); break;
    case Kind::Bang:
      out += "![";
      out += f.name();
      out += ']';
      print_at(f.body(), 4, out);
      break;
    default: {
      int left_min = level, right_min = level + 1;
      if (f.kind() == Kind::LDiv || f.kind() == Kind::RDiv) left_min = right_min = 3;
      print_at(f.left(), left_min, out);
      out += ' ';
      out += operator_token(f.kind());
      out += ' ';
      print_at(f.right(), right_min, out);
    }
  }
  if (parens) out += ')';
}

}  // namespace detail

inline std::string print_formula(const Formula& f) {
  std::string out;
  detail::print_at(f, 0, out);
  return out;
}

inline std::string print_sequent(const Sequent& s) {
  return print_formula(s.lhs) + " |- " + print_formula(s.rhs);
}

// --------------------------------------------------------------------------
// Parsing.

enum class ParseErrorKind { Syntax, UnknownIndex };

class parse_error : public error {
 public:
  parse_error(ParseErrorKind kind, std::size_t position, const std::string& message,
              std::string index = {})
      : error(message + " at position " + std::to_string(position)),
        kind_(kind),
        position_(position),
        index_(std::move(index)) {}

  ParseErrorKind kind() const noexcept { return kind_; }
  std::size_t position() const noexcept { return position_; }
  /// The offending index for UnknownIndex.
  const std::string& index() const noexcept { return index_; }

 private:
  ParseErrorKind kind_;
  std::size_t position_;
  std::string index_;
};

namespace detail {

enum class Tok { End, Ident, Bot, Top, One, Bang, Prod, LDiv, RDiv, Or, And, LParen, RParen, Turnstile };

class Parser {
 public:
  /// `sig` may be null, in which case Bang indices are not checked (used for
  /// rule schemas whose indices are metavariables).
  Parser(std::string_view text, const SubexpSignature* sig) : text_(text), sig_(sig) { advance(); }

  Formula formula() { return disjunction(); }

  Sequent sequent() {
    Formula lhs = disjunction();
    expect(Tok::Turnstile, "'|-'");
    Formula rhs = disjunction();
    return {std::move(lhs), std::move(rhs)};
  }

  void finish() {
    if (tok_ != Tok::End) fail("unexpected trailing input");
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw parse_error(ParseErrorKind::Syntax, tok_pos_, msg);
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok_pos_ = pos_;
    lexeme_.clear();
    if (pos_ >= text_.size()) {
      tok_ = Tok::End;
      return;
    }
    const char c = text_[pos_];
    auto next_is = [&](char d) { return pos_ + 1 < text_.size() && text_[pos_ + 1] == d; };
    switch (c) {
      case '(': tok_ = Tok::LParen; ++pos_; return;
      case ')': tok_ = Tok::RParen; ++pos_; return;
      case '*': tok_ = Tok::Prod; ++pos_; return;
      case '\\':
        if (next_is('/')) { tok_ = Tok::Or; pos_ += 2; } else { tok_ = Tok::LDiv; ++pos_; }
        return;
      case '/':
        if (next_is('\\')) { tok_ = Tok::And; pos_ += 2; } else { tok_ = Tok::RDiv; ++pos_; }
        return;
      case '|':
        if (next_is('-')) { tok_ = Tok::Turnstile; pos_ += 2; return; }
        break;
      case '!': {
        if (!next_is('[')) break;
        const std::size_t close = text_.find(']', pos_ + 2);
        if (close == std::string_view::npos) fail("unterminated '![' index");
        lexeme_ = std::string(text_.substr(pos_ + 2, close - pos_ - 2));
        if (lexeme_.empty()) fail("empty subexponential index");
        for (char d : lexeme_)
          if (!ident_char(d)) fail("invalid character in subexponential index");
        tok_ = Tok::Bang;
        pos_ = close + 1;
        return;
      }
      default: break;
    }
    if (ident_char(c)) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      lexeme_ = std::string(text_.substr(start, pos_ - start));
      if (lexeme_ == "F") tok_ = Tok::Bot;
      else if (lexeme_ == "T") tok_ = Tok::Top;
      else if (lexeme_ == "1") tok_ = Tok::One;
      else if (std::isalpha(static_cast<unsigned char>(lexeme_[0])) || lexeme_[0] == '_') tok_ = Tok::Ident;
      else fail("invalid identifier '" + lexeme_ + "'");
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  void expect(Tok t, const char* what) {
    if (tok_ != t) fail(std::string("expected ") + what);
    advance();
  }

  Formula disjunction() {
    Formula f = conjunction();
    while (tok_ == Tok::Or) {
      advance();
      f = Formula::disj(std::move(f), conjunction());
    }
    return f;
  }

  Formula conjunction() {
    Formula f = division();
    while (tok_ == Tok::And) {
      advance();
      f = Formula::conj(std::move(f), division());
    }
    return f;
  }

  Formula division() {
    Formula f = product();
    if (tok_ == Tok::LDiv || tok_ == Tok::RDiv) {
      const Kind k = tok_ == Tok::LDiv ? Kind::LDiv : Kind::RDiv;
      advance();
      f = Formula::binary(k, std::move(f), product());
      if (tok_ == Tok::LDiv || tok_ == Tok::RDiv) fail("'\\' and '/' do not associate; add parentheses");
    }
    return f;
  }

  Formula product() {
    Formula f = unary();
    while (tok_ == Tok::Prod) {
      advance();
      f = Formula::prod(std::move(f), unary());
    }
    return f;
  }

  Formula unary() {
    if (tok_ == Tok::Bang) {
      std::string index = lexeme_;
      if (sig_ && !sig_->find(index))
        throw parse_error(ParseErrorKind::UnknownIndex, tok_pos_,
                          "unknown subexponential index '" + index + "'", index);
      advance();
      return Formula::bang(std::move(index), unary());
    }
    return atom();
  }

  Formula atom() {
    switch (tok_) {
      case Tok::Bot: advance(); return Formula::bot();
      case Tok::Top: advance(); return Formula::top();
      case Tok::One: advance(); return Formula::one();
      case Tok::Ident: {
        Formula f = Formula::var(lexeme_);
        advance();
        return f;
      }
      case Tok::LParen: {
        advance();
        Formula f = disjunction();
        expect(Tok::RParen, "')'");
        return f;
      }
      default: fail("expected a formula");
    }
  }

  std::string_view text_;
  const SubexpSignature* sig_;
  std::size_t pos_ = 0;
  std::size_t tok_pos_ = 0;
  Tok tok_ = Tok::End;
  std::string lexeme_;
};

}  // namespace detail

inline Formula parse_formula(std::string_view text, const SubexpSignature& sig) {
  detail::Parser p(text, &sig);
  Formula f = p.formula();
  p.finish();
  return f;
}

inline Sequent parse_sequent(std::string_view text, const SubexpSignature& sig) {
  detail::Parser p(text, &sig);
  Sequent s = p.sequent();
  p.finish();
  return s;
}

/// Parses without checking Bang indices against a signature.
inline Formula parse_formula_unchecked(std::string_view text) {
  detail::Parser p(text, nullptr);
  Formula f = p.formula();
  p.finish();
  return f;
}

inline Sequent parse_sequent_unchecked(std::string_view text) {
  detail::Parser p(text, nullptr);
  Sequent s = p.sequent();
  p.finish();
  return s;
}

// --------------------------------------------------------------------------

inline Formula substitute(const Formula& f, const std::string& var, const Formula& replacement) {
  switch (f.kind()) {
    case Kind::Var: return f.name() == var ? replacement : f;
    case Kind::Bot:
    case Kind::Top:
    case Kind::One: return f;
    case Kind::Bang: {
      Formula body = substitute(f.body(), var, replacement);
      return body.id() == f.body().id() ? f : Formula::bang(f.name(), std::move(body));
    }
    default: {
      Formula l = substitute(f.left(), var, replacement);
      Formula r = substitute(f.right(), var, replacement);
      if (l.id() == f.left().id() && r.id() == f.right().id()) return f;
      return Formula::binary(f.kind(), std::move(l), std::move(r));
    }
  }
}

inline Sequent substitute(const Sequent& s, const std::string& var, const Formula& replacement) {
  return {substitute(s.lhs, var, replacement), substitute(s.rhs, var, replacement)};
}

inline void collect_variables(const Formula& f, std::set<std::string>& out) {
  switch (f.kind()) {
    case Kind::Var: out.insert(f.name()); break;
    case Kind::Bot:
    case Kind::Top:
    case Kind::One: break;
    case Kind::Bang: collect_variables(f.body(), out); break;
    default:
      collect_variables(f.left(), out);
      collect_variables(f.right(), out);
  }
}

/// Sorted variable names.
inline std::vector<std::string> variables(const Sequent& s) {
  std::set<std::string> vars;
  collect_variables(s.lhs, vars);
  collect_variables(s.rhs, vars);
  return {vars.begin(), vars.end()};
}

inline std::vector<std::string> variables(const Formula& f) {
  std::set<std::string> vars;
  collect_variables(f, vars);
  return {vars.begin(), vars.end()};
}

/// Whether every Bang index of `f` belongs to `sig`.
inline bool indices_known(const Formula& f, const SubexpSignature& sig) {
  switch (f.kind()) {
    case Kind::Bang: return sig.find(f.name()).has_value() && indices_known(f.body(), sig);
    case Kind::Var:
    case Kind::Bot:
    case Kind::Top:
    case Kind::One: return true;
    default: return indices_known(f.left(), sig) && indices_known(f.right(), sig);
  }
}

/// All distinct subformulas, children before parents.
inline std::vector<Formula> subformulas(const Formula& f) {
  std::vector<Formula> out;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    if (g.kind() == Kind::Bang) {
      walk(g.body());
    } else if (g.is_binary()) {
      walk(g.left());
      walk(g.right());
    }
    for (const auto& seen : out)
      if (seen == g) return;
    out.push_back(g);
  };
  walk(f);
  return out;
}

}  // namespace dsmalc

template <>
struct std::hash<dsmalc::Formula> {
  std::size_t operator()(const dsmalc::Formula& f) const noexcept { return f.hash(); }
};
