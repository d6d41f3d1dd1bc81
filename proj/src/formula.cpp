#include "psw/formula.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "psw/errors.hpp"

namespace psw {

namespace {

std::string atom_label(const Term::Atom& a) {
  return a.is_factor ? "factor(" + a.column + ")" : a.column;
}

struct Tokenizer {
  // Tokens: NAME, FACTOR-CALL handled at parse level via NAME + '(',
  // operators '+', '*', ':', parens.
  std::string src;
  size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }

  bool eof() {
    skip_ws();
    return pos >= src.size();
  }

  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  char get() {
    skip_ws();
    return pos < src.size() ? src[pos++] : '\0';
  }

  static bool is_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  std::string name() {
    skip_ws();
    if (pos >= src.size() || !is_name_start(src[pos])) {
      throw config_error("formula syntax error: expected a column name at '" +
                         src.substr(pos) + "'");
    }
    size_t start = pos;
    while (pos < src.size() && is_name_char(src[pos])) ++pos;
    return src.substr(start, pos - start);
  }
};

using TermSet = std::vector<Term>;

void append_unique(TermSet& out, const Term& t) {
  for (const auto& existing : out) {
    if (existing.canonical_key() == t.canonical_key()) return;
  }
  out.push_back(t);
}

Term interact(const Term& a, const Term& b) {
  Term t = a;
  for (const auto& atom : b.atoms) {
    if (std::find(t.atoms.begin(), t.atoms.end(), atom) == t.atoms.end()) {
      t.atoms.push_back(atom);  // a:a reduces to a
    }
  }
  return t;
}

class Parser {
 public:
  explicit Parser(const std::string& rhs) : tok_{rhs} {}

  TermSet parse() {
    TermSet terms = sum();
    if (!tok_.eof()) {
      throw config_error("formula syntax error: unexpected '" +
                         std::string(1, tok_.peek()) + "'");
    }
    return terms;
  }

 private:
  // sum := cross ('+' cross)*
  TermSet sum() {
    TermSet out = cross();
    while (tok_.peek() == '+') {
      tok_.get();
      for (const auto& t : cross()) append_unique(out, t);
    }
    return out;
  }

  // cross := inter ('*' inter)*   with A*B = A + B + A:B
  TermSet cross() {
    TermSet left = inter();
    while (tok_.peek() == '*') {
      tok_.get();
      TermSet right = inter();
      TermSet expanded = left;
      for (const auto& t : right) append_unique(expanded, t);
      for (const auto& a : left) {
        for (const auto& b : right) append_unique(expanded, interact(a, b));
      }
      left = std::move(expanded);
    }
    return left;
  }

  // inter := atom (':' atom)*
  TermSet inter() {
    Term t = atom();
    while (tok_.peek() == ':') {
      tok_.get();
      t = interact(t, atom());
    }
    return {t};
  }

  Term atom() {
    const char c = tok_.peek();
    if (c == '(') {
      throw config_error(
          "formula syntax error: grouping parentheses are not supported");
    }
    const std::string ident = tok_.name();
    if (tok_.peek() == '(') {
      if (ident != "factor") {
        throw config_error("unsupported term function '" + ident +
                           "' (only factor(...) is recognized)");
      }
      tok_.get();  // '('
      const std::string col = tok_.name();
      if (tok_.peek() == '(') {
        throw config_error("nested functions are not supported in formulas");
      }
      if (tok_.get() != ')') {
        throw config_error("formula syntax error: unbalanced parentheses");
      }
      return Term{{Term::Atom{col, true}}};
    }
    return Term{{Term::Atom{ident, false}}};
  }

  Tokenizer tok_;
};

}  // namespace

std::string Term::label() const {
  std::string out;
  for (size_t k = 0; k < atoms.size(); ++k) {
    if (k) out += ':';
    out += atom_label(atoms[k]);
  }
  return out;
}

std::string Term::canonical_key() const {
  std::vector<std::string> parts;
  parts.reserve(atoms.size());
  for (const auto& a : atoms) parts.push_back(atom_label(a));
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) {
    out += p;
    out += '\x1f';
  }
  return out;
}

std::string Formula::render() const {
  std::string out = response + " ~ ";
  for (size_t k = 0; k < terms.size(); ++k) {
    if (k) out += " + ";
    out += terms[k].label();
  }
  return out;
}

Formula parse_formula(const std::string& text) {
  const size_t tilde = text.find('~');
  if (tilde == std::string::npos) {
    throw config_error("formula syntax error: missing '~' in '" + text + "'");
  }
  if (text.find('~', tilde + 1) != std::string::npos) {
    throw config_error("formula syntax error: more than one '~'");
  }

  Formula f;
  {
    Tokenizer lhs{text.substr(0, tilde)};
    if (lhs.eof()) throw config_error("formula syntax error: empty response side");
    f.response = lhs.name();
    if (!lhs.eof()) {
      throw config_error("formula syntax error: response must be a single column");
    }
  }
  {
    Tokenizer probe{text.substr(tilde + 1)};
    if (probe.eof()) throw config_error("formula syntax error: empty term side");
  }
  f.terms = Parser(text.substr(tilde + 1)).parse();
  return f;
}

}  // namespace psw
