#pragma once

#include <string>
#include <vector>

namespace psw {

// One multiplicative term of a model formula: a single column reference,
// optionally wrapped in factor(), or an interaction of several.
struct Term {
  struct Atom {
    std::string column;
    bool is_factor = false;

    bool operator==(const Atom&) const = default;
  };

  std::vector<Atom> atoms;  // size >= 1; interaction when > 1

  bool is_interaction() const { return atoms.size() > 1; }
  std::string label() const;  // "a", "factor(x)", "a:factor(b)"
  // Order-insensitive identity, so a:b and b:a collapse to one term.
  std::string canonical_key() const;

  bool operator==(const Term&) const = default;
};

// Parsed `response ~ term + term ...` with * already expanded, duplicates
// removed, first-occurrence order preserved.
struct Formula {
  std::string response;
  std::vector<Term> terms;

  std::string render() const;

  bool operator==(const Formula&) const = default;
};

// Grammar: `+` separates terms; `*` crosses (a*b -> a, b, a:b); `:` forms the
// interaction alone; factor(x) marks categorical expansion. `:` binds tighter
// than `*`, `*` tighter than `+` (the usual Wilkinson-Rogers convention).
// Throws config_error on syntax errors and on unsupported term functions
// (bs, ns, poly, log, ...).
Formula parse_formula(const std::string& text);

}  // namespace psw
