#pragma once

// Scalar expression language: immutable ASTs over named real variables with
// parsing, evaluation, symbolic differentiation and deterministic printing.
//
// Grammar (function set: exp, log, sqrt, cbrt, abs; '^' takes a numeric
// literal exponent only):
//
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := ('-')? power
//   power  := atom ('^' signed_number)?
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>

namespace twistlab {

// Parse failure; `offset` is the byte position of the offending input.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Evaluation failure (unbound variable, or a domain violation below).
class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

// Math-domain violation: log(u<=0), sqrt(u<0), x/0, 0^k for k<0,
// or a negative base raised to a non-integer power.
class DomainError : public EvalError {
 public:
  explicit DomainError(const std::string& what) : EvalError(what) {}
};

enum class UnaryOp { Neg, Exp, Log, Sqrt, Cbrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div };

// Variable bindings for evaluation.
class Env {
 public:
  Env() = default;
  Env(std::initializer_list<std::pair<const std::string, double>> init)
      : values_(init) {}

  void set(std::string name, double value) { values_[std::move(name)] = value; }
  // Throws EvalError if `name` is unbound.
  double get(std::string_view name) const;
  const double* find(std::string_view name) const;

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  std::size_t size() const { return values_.size(); }

 private:
  std::map<std::string, double, std::less<>> values_;
};

// Immutable expression handle; cheap to copy, structurally shared.
//
// The factory functions perform conservative simplification: constant
// subtrees fold only when the result is finite and within the operation's
// domain, and algebraic identities (u+0, u*1, u*0, u^1, u^0, -(-u),
// 0-u -> -u) collapse. Anything else is preserved verbatim, so printed
// output re-parses to a structurally identical tree.
class Expr {
 public:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  struct Constant {
    double value;
  };
  struct Variable {
    std::string name;
  };
  struct Unary {
    UnaryOp op;
    NodePtr child;
  };
  struct Binary {
    BinaryOp op;
    NodePtr lhs;
    NodePtr rhs;
  };
  struct Power {
    NodePtr base;
    double exponent;
  };

  struct Node {
    std::variant<Constant, Variable, Unary, Binary, Power> v;
  };

  static Expr constant(double value);
  static Expr variable(std::string name);

  static Expr neg(const Expr& u);
  static Expr exp(const Expr& u);
  static Expr log(const Expr& u);
  static Expr sqrt(const Expr& u);
  static Expr cbrt(const Expr& u);
  static Expr abs(const Expr& u);

  static Expr add(const Expr& a, const Expr& b);
  static Expr sub(const Expr& a, const Expr& b);
  static Expr mul(const Expr& a, const Expr& b);
  static Expr div(const Expr& a, const Expr& b);
  static Expr pow(const Expr& base, double exponent);

  bool is_constant() const;
  // Requires is_constant().
  double constant_value() const;

  const Node& node() const { return *node_; }
  const NodePtr& ptr() const { return node_; }

  static Expr wrap(NodePtr n) { return Expr(std::move(n)); }

 private:
  explicit Expr(NodePtr n) : node_(std::move(n)) {}
  NodePtr node_;
};

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::mul(a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return Expr::div(a, b); }
inline Expr operator-(const Expr& u) { return Expr::neg(u); }
inline Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
inline Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
inline Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
inline Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
inline Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }
inline Expr operator/(double a, const Expr& b) { return Expr::constant(a) / b; }

// Parses source text; throws ParseError on malformed input. The overload
// taking `constants` substitutes those names by their numeric values at
// parse time (they fold like literals and never appear as variables).
Expr parse(std::string_view source);
Expr parse(std::string_view source,
           const std::map<std::string, double>& constants);

// Evaluates at a point; throws EvalError/DomainError.
double eval(const Expr& e, const Env& env);

// Memoizing evaluator for batches of expressions that share subtrees
// (results are identical to plain eval). One cache serves exactly one
// point: reset() or a fresh instance is required when the Env changes.
class EvalCache {
 public:
  double eval(const Expr& e, const Env& env);
  void reset() { memo_.clear(); }

 private:
  double eval_node(const Expr::Node& n, const Env& env);
  std::unordered_map<const Expr::Node*, double> memo_;
};

// Exact partial derivative with respect to `var`.
Expr diff(const Expr& e, std::string_view var);

// Fully parenthesized infix form; parse(print(e)) is structurally
// identical to e, and printing is deterministic (shortest round-trip
// numeral for every constant).
std::string print(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

std::set<std::string> free_vars(const Expr& e);

}  // namespace twistlab
