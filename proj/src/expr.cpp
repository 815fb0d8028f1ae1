#include "twistlab/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <vector>

namespace twistlab {

namespace {

// Shortest decimal numeral that round-trips to the same double.
std::string format_number(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool is_const(const Expr& e, double v) {
  return e.is_constant() && e.constant_value() == v;
}

double checked_pow(double base, double k, bool* ok) {
  if ((base == 0.0 && k < 0.0) ||
      (base < 0.0 && k != std::floor(k))) {
    *ok = false;
    return 0.0;
  }
  *ok = true;
  return std::pow(base, k);
}

}  // namespace

double Env::get(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end())
    throw EvalError("unbound variable '" + std::string(name) + "'");
  return it->second;
}

const double* Env::find(std::string_view name) const {
  auto it = values_.find(name);
  return it == values_.end() ? nullptr : &it->second;
}

Expr Expr::constant(double value) {
  return Expr(std::make_shared<Node>(Node{Constant{value}}));
}

Expr Expr::variable(std::string name) {
  return Expr(std::make_shared<Node>(Node{Variable{std::move(name)}}));
}

bool Expr::is_constant() const {
  return std::holds_alternative<Constant>(node_->v);
}

double Expr::constant_value() const {
  return std::get<Constant>(node_->v).value;
}

Expr Expr::neg(const Expr& u) {
  if (u.is_constant()) return constant(-u.constant_value());
  if (auto* un = std::get_if<Unary>(&u.node().v); un && un->op == UnaryOp::Neg)
    return wrap(un->child);
  return Expr(std::make_shared<Node>(Node{Unary{UnaryOp::Neg, u.ptr()}}));
}

Expr Expr::exp(const Expr& u) {
  if (u.is_constant()) {
    double r = std::exp(u.constant_value());
    if (std::isfinite(r)) return constant(r);
  }
  return Expr(std::make_shared<Node>(Node{Unary{UnaryOp::Exp, u.ptr()}}));
}

Expr Expr::log(const Expr& u) {
  if (u.is_constant() && u.constant_value() > 0.0) {
    double r = std::log(u.constant_value());
    if (std::isfinite(r)) return constant(r);
  }
  return Expr(std::make_shared<Node>(Node{Unary{UnaryOp::Log, u.ptr()}}));
}

Expr Expr::sqrt(const Expr& u) {
  if (u.is_constant() && u.constant_value() >= 0.0) {
    double r = std::sqrt(u.constant_value());
    if (std::isfinite(r)) return constant(r);
  }
  return Expr(std::make_shared<Node>(Node{Unary{UnaryOp::Sqrt, u.ptr()}}));
}

Expr Expr::cbrt(const Expr& u) {
  if (u.is_constant()) {
    double r = std::cbrt(u.constant_value());
    if (std::isfinite(r)) return constant(r);
  }
  return Expr(std::make_shared<Node>(Node{Unary{UnaryOp::Cbrt, u.ptr()}}));
}

Expr Expr::abs(const Expr& u) {
  if (u.is_constant()) return constant(std::fabs(u.constant_value()));
  return Expr(std::make_shared<Node>(Node{Unary{UnaryOp::Abs, u.ptr()}}));
}

Expr Expr::add(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    double r = a.constant_value() + b.constant_value();
    if (std::isfinite(r)) return constant(r);
  }
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return Expr(
      std::make_shared<Node>(Node{Binary{BinaryOp::Add, a.ptr(), b.ptr()}}));
}

Expr Expr::sub(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    double r = a.constant_value() - b.constant_value();
    if (std::isfinite(r)) return constant(r);
  }
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(b);
  return Expr(
      std::make_shared<Node>(Node{Binary{BinaryOp::Sub, a.ptr(), b.ptr()}}));
}

Expr Expr::mul(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    double r = a.constant_value() * b.constant_value();
    if (std::isfinite(r)) return constant(r);
  }
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return Expr(
      std::make_shared<Node>(Node{Binary{BinaryOp::Mul, a.ptr(), b.ptr()}}));
}

Expr Expr::div(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0) {
    double r = a.constant_value() / b.constant_value();
    if (std::isfinite(r)) return constant(r);
  }
  if (is_const(b, 1.0)) return a;
  return Expr(
      std::make_shared<Node>(Node{Binary{BinaryOp::Div, a.ptr(), b.ptr()}}));
}

Expr Expr::pow(const Expr& base, double exponent) {
  if (exponent == 1.0) return base;
  if (exponent == 0.0) return constant(1.0);
  if (base.is_constant()) {
    bool ok = false;
    double r = checked_pow(base.constant_value(), exponent, &ok);
    if (ok && std::isfinite(r)) return constant(r);
  }
  return Expr(std::make_shared<Node>(Node{Power{base.ptr(), exponent}}));
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum Kind {
    kNumber,
    kIdent,
    kPlus,
    kMinus,
    kStar,
    kSlash,
    kCaret,
    kLParen,
    kRParen,
    kEnd
  } kind;
  double number = 0.0;
  std::string text;
  std::size_t offset = 0;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      while (i < src.size() &&
             std::isdigit(static_cast<unsigned char>(src[i])))
        ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        while (i < src.size() &&
               std::isdigit(static_cast<unsigned char>(src[i])))
          ++i;
      }
      if (i - start == 1 && src[start] == '.')
        throw ParseError("malformed number", start);
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t mark = i;
        ++i;
        if (i < src.size() && (src[i] == '+' || src[i] == '-')) ++i;
        if (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
          while (i < src.size() &&
                 std::isdigit(static_cast<unsigned char>(src[i])))
            ++i;
        } else {
          i = mark;  // "2e" is the number 2 followed by the identifier "e"
        }
      }
      double value = 0.0;
      auto res = std::from_chars(src.data() + start, src.data() + i, value);
      if (res.ec != std::errc() || res.ptr != src.data() + i)
        throw ParseError("malformed number", start);
      out.push_back({Token::kNumber, value, std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) ||
              src[i] == '_'))
        ++i;
      out.push_back({Token::kIdent, 0.0,
                     std::string(src.substr(start, i - start)), start});
      continue;
    }
    Token::Kind kind;
    switch (c) {
      case '+': kind = Token::kPlus; break;
      case '-': kind = Token::kMinus; break;
      case '*': kind = Token::kStar; break;
      case '/': kind = Token::kSlash; break;
      case '^': kind = Token::kCaret; break;
      case '(': kind = Token::kLParen; break;
      case ')': kind = Token::kRParen; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'",
                         start);
    }
    out.push_back({kind, 0.0, std::string(1, c), start});
    ++i;
  }
  out.push_back({Token::kEnd, 0.0, "", src.size()});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens,
         const std::map<std::string, double>* constants)
      : tokens_(std::move(tokens)), constants_(constants) {}

  Expr run() {
    Expr e = parse_expr();
    if (peek().kind != Token::kEnd)
      throw ParseError("unexpected trailing input", peek().offset);
    return e;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }
  bool match(Token::Kind k) {
    if (peek().kind == k) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr() {
    Expr e = parse_term();
    while (true) {
      if (match(Token::kPlus))
        e = Expr::add(e, parse_term());
      else if (match(Token::kMinus))
        e = Expr::sub(e, parse_term());
      else
        return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    while (true) {
      if (match(Token::kStar))
        e = Expr::mul(e, parse_factor());
      else if (match(Token::kSlash))
        e = Expr::div(e, parse_factor());
      else
        return e;
    }
  }

  Expr parse_factor() {
    if (match(Token::kMinus)) return Expr::neg(parse_power());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (match(Token::kCaret)) return Expr::pow(base, parse_signed_number());
    return base;
  }

  double parse_signed_number() {
    double sign = 1.0;
    if (match(Token::kMinus))
      sign = -1.0;
    else
      match(Token::kPlus);
    if (peek().kind != Token::kNumber)
      throw ParseError("exponent must be a numeric literal", peek().offset);
    return sign * advance().number;
  }

  Expr parse_atom() {
    const Token& tok = peek();
    switch (tok.kind) {
      case Token::kNumber:
        advance();
        return Expr::constant(tok.number);
      case Token::kIdent: {
        advance();
        if (match(Token::kLParen)) {
          Expr arg = parse_expr();
          if (!match(Token::kRParen))
            throw ParseError("expected ')'", peek().offset);
          if (tok.text == "exp") return Expr::exp(arg);
          if (tok.text == "log") return Expr::log(arg);
          if (tok.text == "sqrt") return Expr::sqrt(arg);
          if (tok.text == "cbrt") return Expr::cbrt(arg);
          if (tok.text == "abs") return Expr::abs(arg);
          throw ParseError("unknown function '" + tok.text + "'", tok.offset);
        }
        if (constants_) {
          auto it = constants_->find(tok.text);
          if (it != constants_->end()) return Expr::constant(it->second);
        }
        return Expr::variable(tok.text);
      }
      case Token::kLParen: {
        advance();
        Expr e = parse_expr();
        if (!match(Token::kRParen))
          throw ParseError("expected ')'", peek().offset);
        return e;
      }
      default:
        throw ParseError("expected a number, name, or '('", tok.offset);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const std::map<std::string, double>* constants_;
};

}  // namespace

Expr parse(std::string_view source) {
  return Parser(tokenize(source), nullptr).run();
}

Expr parse(std::string_view source,
           const std::map<std::string, double>& constants) {
  return Parser(tokenize(source), &constants).run();
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double eval_node(const Expr::Node& n, const Env& env);

double eval_unary(UnaryOp op, double u) {
  switch (op) {
    case UnaryOp::Neg:
      return -u;
    case UnaryOp::Exp:
      return std::exp(u);
    case UnaryOp::Log:
      if (u <= 0.0)
        throw DomainError("log of non-positive value " + format_number(u));
      return std::log(u);
    case UnaryOp::Sqrt:
      if (u < 0.0)
        throw DomainError("sqrt of negative value " + format_number(u));
      return std::sqrt(u);
    case UnaryOp::Cbrt:
      return std::cbrt(u);
    case UnaryOp::Abs:
      return std::fabs(u);
  }
  return 0.0;  // unreachable
}

double eval_binary(BinaryOp op, double l, double r) {
  switch (op) {
    case BinaryOp::Add:
      return l + r;
    case BinaryOp::Sub:
      return l - r;
    case BinaryOp::Mul:
      return l * r;
    case BinaryOp::Div:
      if (r == 0.0) throw DomainError("division by zero");
      return l / r;
  }
  return 0.0;  // unreachable
}

double eval_power(double base, double exponent) {
  bool ok = false;
  double r = checked_pow(base, exponent, &ok);
  if (!ok)
    throw DomainError("invalid power base " + format_number(base) +
                      " for exponent " + format_number(exponent));
  return r;
}

double eval_node(const Expr::Node& n, const Env& env) {
  if (auto* c = std::get_if<Expr::Constant>(&n.v)) return c->value;
  if (auto* var = std::get_if<Expr::Variable>(&n.v)) return env.get(var->name);
  if (auto* u = std::get_if<Expr::Unary>(&n.v))
    return eval_unary(u->op, eval_node(*u->child, env));
  if (auto* b = std::get_if<Expr::Binary>(&n.v))
    return eval_binary(b->op, eval_node(*b->lhs, env),
                       eval_node(*b->rhs, env));
  const auto& p = std::get<Expr::Power>(n.v);
  return eval_power(eval_node(*p.base, env), p.exponent);
}

}  // namespace

double eval(const Expr& e, const Env& env) { return eval_node(e.node(), env); }

double EvalCache::eval(const Expr& e, const Env& env) {
  return eval_node(e.node(), env);
}

double EvalCache::eval_node(const Expr::Node& n, const Env& env) {
  if (auto* c = std::get_if<Expr::Constant>(&n.v)) return c->value;
  if (auto* var = std::get_if<Expr::Variable>(&n.v)) return env.get(var->name);
  auto it = memo_.find(&n);
  if (it != memo_.end()) return it->second;
  double r;
  if (auto* u = std::get_if<Expr::Unary>(&n.v)) {
    r = eval_unary(u->op, eval_node(*u->child, env));
  } else if (auto* b = std::get_if<Expr::Binary>(&n.v)) {
    double l = eval_node(*b->lhs, env);
    double rhs = eval_node(*b->rhs, env);
    r = eval_binary(b->op, l, rhs);
  } else {
    const auto& p = std::get<Expr::Power>(n.v);
    r = eval_power(eval_node(*p.base, env), p.exponent);
  }
  memo_.emplace(&n, r);
  return r;
}

// ---------------------------------------------------------------------------
// Differentiation

Expr diff(const Expr& e, std::string_view var) {
  const auto& n = e.node();
  if (std::holds_alternative<Expr::Constant>(n.v)) return Expr::constant(0.0);
  if (auto* v = std::get_if<Expr::Variable>(&n.v))
    return Expr::constant(v->name == var ? 1.0 : 0.0);
  if (auto* u = std::get_if<Expr::Unary>(&n.v)) {
    Expr child = Expr::wrap(u->child);
    Expr dc = diff(child, var);
    switch (u->op) {
      case UnaryOp::Neg:
        return Expr::neg(dc);
      case UnaryOp::Exp:
        return Expr::mul(Expr::exp(child), dc);
      case UnaryOp::Log:
        return Expr::div(dc, child);
      case UnaryOp::Sqrt:
        return Expr::div(dc, Expr::mul(Expr::constant(2.0), Expr::sqrt(child)));
      case UnaryOp::Cbrt:
        // d/dx cbrt(u) = (1/3) * cbrt(u)^(-2) * u'
        return Expr::mul(
            Expr::mul(Expr::constant(1.0 / 3.0),
                      Expr::pow(Expr::cbrt(child), -2.0)),
            dc);
      case UnaryOp::Abs:
        // d/dx |u| = u/|u| * u'  (undefined at u = 0: evaluation divides by 0)
        return Expr::mul(Expr::div(child, Expr::abs(child)), dc);
    }
  }
  if (auto* b = std::get_if<Expr::Binary>(&n.v)) {
    Expr l = Expr::wrap(b->lhs);
    Expr r = Expr::wrap(b->rhs);
    Expr dl = diff(l, var);
    Expr dr = diff(r, var);
    switch (b->op) {
      case BinaryOp::Add:
        return Expr::add(dl, dr);
      case BinaryOp::Sub:
        return Expr::sub(dl, dr);
      case BinaryOp::Mul:
        return Expr::add(Expr::mul(dl, r), Expr::mul(l, dr));
      case BinaryOp::Div:
        return Expr::div(Expr::sub(Expr::mul(dl, r), Expr::mul(l, dr)),
                         Expr::pow(r, 2.0));
    }
  }
  const auto& p = std::get<Expr::Power>(n.v);
  Expr base = Expr::wrap(p.base);
  return Expr::mul(Expr::mul(Expr::constant(p.exponent),
                             Expr::pow(base, p.exponent - 1.0)),
                   diff(base, var));
}

// ---------------------------------------------------------------------------
// Printing

namespace {

void print_node(const Expr::Node& n, std::string& out) {
  if (auto* c = std::get_if<Expr::Constant>(&n.v)) {
    out += format_number(c->value);
    return;
  }
  if (auto* v = std::get_if<Expr::Variable>(&n.v)) {
    out += v->name;
    return;
  }
  if (auto* u = std::get_if<Expr::Unary>(&n.v)) {
    if (u->op == UnaryOp::Neg) {
      out += "(-";
      print_node(*u->child, out);
      out += ')';
      return;
    }
    switch (u->op) {
      case UnaryOp::Exp: out += "exp("; break;
      case UnaryOp::Log: out += "log("; break;
      case UnaryOp::Sqrt: out += "sqrt("; break;
      case UnaryOp::Cbrt: out += "cbrt("; break;
      case UnaryOp::Abs: out += "abs("; break;
      default: break;
    }
    print_node(*u->child, out);
    out += ')';
    return;
  }
  if (auto* b = std::get_if<Expr::Binary>(&n.v)) {
    out += '(';
    print_node(*b->lhs, out);
    switch (b->op) {
      case BinaryOp::Add: out += " + "; break;
      case BinaryOp::Sub: out += " - "; break;
      case BinaryOp::Mul: out += " * "; break;
      case BinaryOp::Div: out += " / "; break;
    }
    print_node(*b->rhs, out);
    out += ')';
    return;
  }
  const auto& p = std::get<Expr::Power>(n.v);
  out += '(';
  // A bare negative numeral as the base would re-parse as -(base ^ k),
  // because '^' binds tighter than unary minus.
  bool paren_base = false;
  if (auto* c = std::get_if<Expr::Constant>(&p.base->v))
    paren_base = std::signbit(c->value);
  if (paren_base) out += '(';
  print_node(*p.base, out);
  if (paren_base) out += ')';
  out += " ^ ";
  out += format_number(p.exponent);
  out += ')';
}

}  // namespace

std::string print(const Expr& e) {
  std::string out;
  print_node(e.node(), out);
  return out;
}

// ---------------------------------------------------------------------------
// Structure

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.ptr() == b.ptr()) return true;
  const auto& na = a.node();
  const auto& nb = b.node();
  if (na.v.index() != nb.v.index()) return false;
  if (auto* ca = std::get_if<Expr::Constant>(&na.v))
    return ca->value == std::get<Expr::Constant>(nb.v).value;
  if (auto* va = std::get_if<Expr::Variable>(&na.v))
    return va->name == std::get<Expr::Variable>(nb.v).name;
  if (auto* ua = std::get_if<Expr::Unary>(&na.v)) {
    const auto& ub = std::get<Expr::Unary>(nb.v);
    return ua->op == ub.op &&
           structurally_equal(Expr::wrap(ua->child), Expr::wrap(ub.child));
  }
  if (auto* ba = std::get_if<Expr::Binary>(&na.v)) {
    const auto& bb = std::get<Expr::Binary>(nb.v);
    return ba->op == bb.op &&
           structurally_equal(Expr::wrap(ba->lhs), Expr::wrap(bb.lhs)) &&
           structurally_equal(Expr::wrap(ba->rhs), Expr::wrap(bb.rhs));
  }
  const auto& pa = std::get<Expr::Power>(na.v);
  const auto& pb = std::get<Expr::Power>(nb.v);
  return pa.exponent == pb.exponent &&
         structurally_equal(Expr::wrap(pa.base), Expr::wrap(pb.base));
}

namespace {

void collect_vars(const Expr::Node& n, std::set<std::string>& out) {
  if (auto* v = std::get_if<Expr::Variable>(&n.v)) {
    out.insert(v->name);
    return;
  }
  if (auto* u = std::get_if<Expr::Unary>(&n.v)) {
    collect_vars(*u->child, out);
    return;
  }
  if (auto* b = std::get_if<Expr::Binary>(&n.v)) {
    collect_vars(*b->lhs, out);
    collect_vars(*b->rhs, out);
    return;
  }
  if (auto* p = std::get_if<Expr::Power>(&n.v)) collect_vars(*p->base, out);
}

}  // namespace

std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect_vars(e.node(), out);
  return out;
}

}  // namespace twistlab
