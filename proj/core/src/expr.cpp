#include "dtflat/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include "dtflat/errors.hpp"

namespace dtflat {

struct ExprNode {
  NodeKind kind;
  std::int64_t int_value = 0;  // Integer value, or Rational numerator
  std::int64_t den = 1;        // Rational denominator
  double real_value = 0.0;
  VarRef var{};
  int exponent = 0;
  std::shared_ptr<const ExprNode> a;
  std::shared_ptr<const ExprNode> b;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_node(ExprNode&& n) { return std::make_shared<const ExprNode>(std::move(n)); }

const NodePtr& zero_node() {
  static const NodePtr n = make_node({.kind = NodeKind::Integer, .int_value = 0});
  return n;
}

const NodePtr& one_node() {
  static const NodePtr n = make_node({.kind = NodeKind::Integer, .int_value = 1});
  return n;
}

bool is_zero_constant(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Integer:
    case NodeKind::Rational:
      return n.int_value == 0;
    case NodeKind::Real:
      return n.real_value == 0.0;
    default:
      return false;
  }
}

bool is_one_constant(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Integer:
      return n.int_value == 1;
    case NodeKind::Rational:
      return n.int_value == 1 && n.den == 1;
    case NodeKind::Real:
      return n.real_value == 1.0;
    default:
      return false;
  }
}

std::optional<Rational> as_exact(const ExprNode& n) {
  if (n.kind == NodeKind::Integer) return Rational{n.int_value, 1};
  if (n.kind == NodeKind::Rational) return Rational{n.int_value, n.den};
  return std::nullopt;
}

bool is_constant_node(const ExprNode& n) {
  return n.kind == NodeKind::Integer || n.kind == NodeKind::Rational ||
         n.kind == NodeKind::Real;
}

double constant_value(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Integer:
      return static_cast<double>(n.int_value);
    case NodeKind::Rational:
      return Rational{n.int_value, n.den}.to_double();
    default:
      return n.real_value;
  }
}

}  // namespace

bool is_delta_group(VarGroup g) {
  switch (g) {
    case VarGroup::DeltaState:
    case VarGroup::DeltaInput:
    case VarGroup::DeltaZeta:
    case VarGroup::DeltaFlatOut:
      return true;
    default:
      return false;
  }
}

VarGroup delta_of(VarGroup g) {
  switch (g) {
    case VarGroup::State:
      return VarGroup::DeltaState;
    case VarGroup::Input:
      return VarGroup::DeltaInput;
    case VarGroup::Zeta:
      return VarGroup::DeltaZeta;
    case VarGroup::FlatOut:
      return VarGroup::DeltaFlatOut;
    default:
      return g;
  }
}

VarGroup base_of(VarGroup g) {
  switch (g) {
    case VarGroup::DeltaState:
      return VarGroup::State;
    case VarGroup::DeltaInput:
      return VarGroup::Input;
    case VarGroup::DeltaZeta:
      return VarGroup::Zeta;
    case VarGroup::DeltaFlatOut:
      return VarGroup::FlatOut;
    default:
      return g;
  }
}

std::string_view group_prefix(VarGroup g) {
  switch (g) {
    case VarGroup::State:
      return "x";
    case VarGroup::Input:
      return "u";
    case VarGroup::Zeta:
      return "z";
    case VarGroup::FlatOut:
      return "y";
    case VarGroup::DeltaState:
      return "dx";
    case VarGroup::DeltaInput:
      return "du";
    case VarGroup::DeltaZeta:
      return "dz";
    case VarGroup::DeltaFlatOut:
      return "dy";
  }
  return "?";
}

std::string VarRef::name() const {
  std::string out{group_prefix(group)};
  out += std::to_string(component);
  if (shift != 0) {
    out += "_[";
    out += std::to_string(shift);
    out += ']';
  }
  return out;
}

Expr::Expr() : node_(zero_node()) {}

NodeKind Expr::kind() const { return node_->kind; }

std::int64_t Expr::integer_value() const { return node_->int_value; }

Rational Expr::rational_value() const {
  auto r = as_exact(*node_);
  if (!r) throw Error("rational_value() on a non-exact node");
  return *r;
}

double Expr::real_value() const { return node_->real_value; }

VarRef Expr::var_ref() const { return node_->var; }

int Expr::exponent() const { return node_->exponent; }

Expr Expr::child(int i) const { return Expr(i == 0 ? node_->a : node_->b); }

bool Expr::is_constant() const { return is_constant_node(*node_); }

bool Expr::is_integer_constant(std::int64_t v) const {
  return node_->kind == NodeKind::Integer && node_->int_value == v;
}

Expr Expr::integer(std::int64_t v) {
  if (v == 0) return Expr(zero_node());
  if (v == 1) return Expr(one_node());
  return Expr(make_node({.kind = NodeKind::Integer, .int_value = v}));
}

Expr Expr::rational(const Rational& r) {
  if (r.den == 1) return integer(r.num);
  return Expr(make_node({.kind = NodeKind::Rational, .int_value = r.num, .den = r.den}));
}

Expr Expr::rational(std::int64_t num, std::int64_t den) {
  auto r = Rational::make(num, den);
  if (!r) throw Error("rational constant with zero denominator");
  return rational(*r);
}

Expr Expr::real(double v) {
  return Expr(make_node({.kind = NodeKind::Real, .real_value = v}));
}

Expr Expr::time_symbol() {
  static const NodePtr n = make_node({.kind = NodeKind::Time});
  return Expr(n);
}

Expr Expr::var(VarRef v) {
  return Expr(make_node({.kind = NodeKind::Var, .var = v}));
}

Expr operator-(const Expr& a) {
  const ExprNode& n = *a.raw();
  if (auto r = as_exact(n)) {
    auto neg = Rational::make(-__int128(r->num), r->den);
    if (neg) return Expr::rational(*neg);
  }
  if (n.kind == NodeKind::Real) return Expr::real(-n.real_value);
  if (n.kind == NodeKind::Neg) return Expr(n.a);
  return Expr(make_node({.kind = NodeKind::Neg, .a = a.node_}));
}

Expr operator+(const Expr& a, const Expr& b) {
  if (is_zero_constant(*a.raw())) return b;
  if (is_zero_constant(*b.raw())) return a;
  auto ra = as_exact(*a.raw());
  auto rb = as_exact(*b.raw());
  if (ra && rb) {
    if (auto r = rat_add(*ra, *rb)) return Expr::rational(*r);
  } else if (a.is_constant() && b.is_constant()) {
    return Expr::real(constant_value(*a.raw()) + constant_value(*b.raw()));
  }
  return Expr(make_node({.kind = NodeKind::Add, .a = a.node_, .b = b.node_}));
}

Expr operator-(const Expr& a, const Expr& b) {
  if (is_zero_constant(*b.raw())) return a;
  if (is_zero_constant(*a.raw())) return -b;
  auto ra = as_exact(*a.raw());
  auto rb = as_exact(*b.raw());
  if (ra && rb) {
    if (auto r = rat_sub(*ra, *rb)) return Expr::rational(*r);
  } else if (a.is_constant() && b.is_constant()) {
    return Expr::real(constant_value(*a.raw()) - constant_value(*b.raw()));
  }
  return Expr(make_node({.kind = NodeKind::Sub, .a = a.node_, .b = b.node_}));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (is_zero_constant(*a.raw()) || is_zero_constant(*b.raw())) return Expr::integer(0);
  if (is_one_constant(*a.raw())) return b;
  if (is_one_constant(*b.raw())) return a;
  auto ra = as_exact(*a.raw());
  auto rb = as_exact(*b.raw());
  if (ra && rb) {
    if (auto r = rat_mul(*ra, *rb)) return Expr::rational(*r);
  } else if (a.is_constant() && b.is_constant()) {
    return Expr::real(constant_value(*a.raw()) * constant_value(*b.raw()));
  }
  if (ra && ra->num == -1 && ra->den == 1) return -b;
  if (rb && rb->num == -1 && rb->den == 1) return -a;
  return Expr(make_node({.kind = NodeKind::Mul, .a = a.node_, .b = b.node_}));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_constant() && is_zero_constant(*b.raw()))
    throw DivisionNearZeroError("division by the literal zero constant");
  if (is_one_constant(*b.raw())) return a;
  // 0/e folds only for a constant (hence nonzero) denominator; a symbolic
  // denominator must keep its division so near-zero evaluation still traps.
  if (is_zero_constant(*a.raw()) && b.is_constant()) return Expr::integer(0);
  auto ra = as_exact(*a.raw());
  auto rb = as_exact(*b.raw());
  if (ra && rb) {
    if (auto r = rat_div(*ra, *rb)) return Expr::rational(*r);
  } else if (a.is_constant() && b.is_constant()) {
    return Expr::real(constant_value(*a.raw()) / constant_value(*b.raw()));
  }
  return Expr(make_node({.kind = NodeKind::Div, .a = a.node_, .b = b.node_}));
}

double pow_double(double base, int exponent) {
  bool invert = exponent < 0;
  unsigned long long e = invert ? -static_cast<long long>(exponent)
                                : static_cast<long long>(exponent);
  double acc = 1.0;
  double sq = base;
  while (e > 0) {
    if (e & 1) acc *= sq;
    e >>= 1;
    if (e > 0) sq *= sq;
  }
  return invert ? 1.0 / acc : acc;
}

Expr Expr::pow(const Expr& base, int exponent) {
  if (exponent == 0) return integer(1);
  if (exponent == 1) return base;
  if (auto r = as_exact(*base.raw())) {
    if (r->is_zero() && exponent < 0)
      throw DivisionNearZeroError("literal zero raised to a negative power");
    if (auto p = rat_pow(*r, exponent)) return rational(*p);
  } else if (base.is_constant()) {
    return real(pow_double(constant_value(*base.raw()), exponent));
  }
  return Expr(make_node(
      {.kind = NodeKind::Pow, .exponent = exponent, .a = base.node_}));
}

Expr Expr::sin(const Expr& a) {
  if (a.raw()->kind == NodeKind::Integer && a.raw()->int_value == 0) return integer(0);
  return Expr(make_node({.kind = NodeKind::Sin, .a = a.node_}));
}

Expr Expr::cos(const Expr& a) {
  if (a.raw()->kind == NodeKind::Integer && a.raw()->int_value == 0) return integer(1);
  return Expr(make_node({.kind = NodeKind::Cos, .a = a.node_}));
}

bool structurally_equal(const Expr& a, const Expr& b) {
  const ExprNode* na = a.raw();
  const ExprNode* nb = b.raw();
  if (na == nb) return true;
  if (na->kind != nb->kind) return false;
  switch (na->kind) {
    case NodeKind::Integer:
      return na->int_value == nb->int_value;
    case NodeKind::Rational:
      return na->int_value == nb->int_value && na->den == nb->den;
    case NodeKind::Real:
      return na->real_value == nb->real_value;
    case NodeKind::Time:
      return true;
    case NodeKind::Var:
      return na->var == nb->var;
    case NodeKind::Neg:
    case NodeKind::Sin:
    case NodeKind::Cos:
      return structurally_equal(Expr(na->a), Expr(nb->a));
    case NodeKind::Pow:
      return na->exponent == nb->exponent &&
             structurally_equal(Expr(na->a), Expr(nb->a));
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      return structurally_equal(Expr(na->a), Expr(nb->a)) &&
             structurally_equal(Expr(na->b), Expr(nb->b));
  }
  return false;
}

namespace {

void collect_vars(const ExprNode& n, std::set<VarRef>& out) {
  switch (n.kind) {
    case NodeKind::Var:
      out.insert(n.var);
      return;
    case NodeKind::Neg:
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Pow:
      collect_vars(*n.a, out);
      return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      collect_vars(*n.a, out);
      collect_vars(*n.b, out);
      return;
    default:
      return;
  }
}

bool node_references_time(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Time:
      return true;
    case NodeKind::Neg:
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Pow:
      return node_references_time(*n.a);
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      return node_references_time(*n.a) || node_references_time(*n.b);
    default:
      return false;
  }
}

}  // namespace

std::set<VarRef> Expr::variables() const {
  std::set<VarRef> out;
  collect_vars(*node_, out);
  return out;
}

bool Expr::references_time() const { return node_references_time(*node_); }

bool Expr::references(VarRef v) const {
  auto vars = variables();
  return vars.contains(v);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok : std::uint8_t {
  Number,
  TimeSym,
  Variable,
  Function,
  Plus,
  Minus,
  Star,
  Slash,
  Caret,
  LParen,
  RParen,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::size_t pos = 0;
  bool is_real = false;        // Number
  std::int64_t int_value = 0;  // Number
  double real_value = 0.0;     // Number
  VarRef var{};                // Variable
  bool is_sin = false;         // Function
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    Token t;
    t.pos = pos_;
    if (pos_ >= text_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = text_[pos_];
    switch (c) {
      case '+':
        ++pos_;
        t.kind = Tok::Plus;
        return t;
      case '-':
        ++pos_;
        t.kind = Tok::Minus;
        return t;
      case '*':
        ++pos_;
        t.kind = Tok::Star;
        return t;
      case '/':
        ++pos_;
        t.kind = Tok::Slash;
        return t;
      case '^':
        ++pos_;
        t.kind = Tok::Caret;
        return t;
      case '(':
        ++pos_;
        t.kind = Tok::LParen;
        return t;
      case ')':
        ++pos_;
        t.kind = Tok::RParen;
        return t;
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return lex_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return lex_word();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  // Signed integer immediately after '^' or inside a shift subscript.
  std::int64_t lex_signed_integer(const char* what) {
    skip_space();
    std::size_t start = pos_;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
    std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == digits) throw ParseError(std::string("expected ") + what, start);
    std::int64_t value = 0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc{}) throw ParseError(std::string(what) + " out of range", start);
    return value;
  }

  [[nodiscard]] std::size_t position() const { return pos_; }

 private:
  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  Token lex_number() {
    Token t;
    t.pos = pos_;
    t.kind = Tok::Number;
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    bool real = false;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      real = true;
      ++pos_;
      std::size_t frac = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == frac) throw ParseError("expected digits after decimal point", pos_);
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      real = true;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      std::size_t expo = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == expo) throw ParseError("expected digits in exponent", pos_);
    }
    std::string_view body = text_.substr(start, pos_ - start);
    if (real) {
      t.is_real = true;
      t.real_value = std::stod(std::string(body));
    } else {
      auto res = std::from_chars(body.data(), body.data() + body.size(), t.int_value);
      if (res.ec != std::errc{}) throw ParseError("integer literal out of range", start);
    }
    return t;
  }

  Token lex_word() {
    Token t;
    t.pos = pos_;
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string_view letters = text_.substr(start, pos_ - start);
    std::size_t digits_start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string_view digits = text_.substr(digits_start, pos_ - digits_start);

    if (digits.empty()) {
      if (letters == "k") {
        if (pos_ < text_.size() && text_[pos_] == '_')
          throw ParseError("the time symbol k does not take a shift subscript", pos_);
        t.kind = Tok::TimeSym;
        return t;
      }
      if (letters == "sin" || letters == "cos") {
        t.kind = Tok::Function;
        t.is_sin = (letters == "sin");
        return t;
      }
      throw ParseError("unknown symbol '" + std::string(letters) + "'", start);
    }

    VarGroup group;
    if (letters == "x")
      group = VarGroup::State;
    else if (letters == "u")
      group = VarGroup::Input;
    else if (letters == "z")
      group = VarGroup::Zeta;
    else if (letters == "y")
      group = VarGroup::FlatOut;
    else if (letters == "dx")
      group = VarGroup::DeltaState;
    else if (letters == "du")
      group = VarGroup::DeltaInput;
    else if (letters == "dz")
      group = VarGroup::DeltaZeta;
    else if (letters == "dy")
      group = VarGroup::DeltaFlatOut;
    else
      throw ParseError("unknown variable group '" + std::string(letters) + "'", start);

    int component = 0;
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), component);
    if (res.ec != std::errc{} || component < 1)
      throw ParseError("component index must be a positive integer", digits_start);

    int shift = 0;
    if (pos_ < text_.size() && text_[pos_] == '_') {
      ++pos_;
      if (pos_ >= text_.size() || text_[pos_] != '[')
        throw ParseError("expected '[' after '_' in shift subscript", pos_);
      ++pos_;
      std::int64_t s = lex_signed_integer("shift index");
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ']')
        throw ParseError("expected ']' closing shift subscript", pos_);
      ++pos_;
      shift = static_cast<int>(s);
    }

    switch (group) {
      case VarGroup::State:
      case VarGroup::DeltaState:
        if (shift != 0)
          throw ParseError("state variables do not take a shift subscript", start);
        break;
      case VarGroup::Zeta:
      case VarGroup::DeltaZeta:
        if (shift > -1)
          throw ParseError("zeta history requires an explicit shift <= -1, like z1_[-1]", start);
        break;
      case VarGroup::Input:
      case VarGroup::DeltaInput:
        if (shift < 0)
          throw ParseError("input shifts must be >= 0", start);
        break;
      default:
        break;  // flat outputs accept any shift
    }

    t.kind = Tok::Variable;
    t.var = VarRef{group, component, shift};
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { advance(); }

  Expr run() {
    Expr e = parse_expression();
    if (current_.kind != Tok::End)
      throw ParseError("unexpected trailing input", current_.pos);
    return e;
  }

 private:
  void advance() { current_ = lexer_.next(); }

  Expr parse_expression() {
    Expr e = parse_term();
    while (current_.kind == Tok::Plus || current_.kind == Tok::Minus) {
      bool plus = current_.kind == Tok::Plus;
      advance();
      Expr rhs = parse_term();
      e = plus ? e + rhs : e - rhs;
    }
    return e;
  }

  Expr parse_term() {
    Expr e = parse_factor();
    while (current_.kind == Tok::Star || current_.kind == Tok::Slash) {
      bool star = current_.kind == Tok::Star;
      std::size_t pos = current_.pos;
      advance();
      Expr rhs = parse_factor();
      if (star) {
        e = e * rhs;
      } else {
        if (rhs.is_constant() && rhs.kind() == NodeKind::Integer &&
            rhs.integer_value() == 0)
          throw ParseError("division by the literal zero constant", pos);
        e = e / rhs;
      }
    }
    return e;
  }

  Expr parse_factor() {
    if (current_.kind == Tok::Minus) {
      advance();
      return -parse_factor();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (current_.kind == Tok::Caret) {
      advance();
      // The exponent is part of the Pow node, not a child expression, so it
      // is lexed directly instead of parsed as a subexpression.
      std::int64_t e = take_exponent();
      return Expr::pow(base, static_cast<int>(e));
    }
    return base;
  }

  std::int64_t take_exponent() {
    if (current_.kind == Tok::Minus) {
      advance();
      return -take_unsigned_exponent();
    }
    return take_unsigned_exponent();
  }

  std::int64_t take_unsigned_exponent() {
    if (current_.kind != Tok::Number || current_.is_real)
      throw ParseError("exponent must be an integer literal", current_.pos);
    std::int64_t v = current_.int_value;
    advance();
    return v;
  }

  Expr parse_atom() {
    switch (current_.kind) {
      case Tok::Number: {
        Expr e = current_.is_real ? Expr::real(current_.real_value)
                                  : Expr::integer(current_.int_value);
        advance();
        return e;
      }
      case Tok::TimeSym:
        advance();
        return Expr::time_symbol();
      case Tok::Variable: {
        Expr e = Expr::var(current_.var);
        advance();
        return e;
      }
      case Tok::Function: {
        bool is_sin = current_.is_sin;
        advance();
        expect(Tok::LParen, "expected '(' after function name");
        advance();
        Expr inner = parse_expression();
        expect(Tok::RParen, "expected ')'");
        advance();
        return is_sin ? Expr::sin(inner) : Expr::cos(inner);
      }
      case Tok::LParen: {
        advance();
        Expr inner = parse_expression();
        expect(Tok::RParen, "expected ')'");
        advance();
        return inner;
      }
      default:
        throw ParseError("expected a number, variable, or '('", current_.pos);
    }
  }

  void expect(Tok kind, const char* message) const {
    if (current_.kind != kind) throw ParseError(message, current_.pos);
  }

  Lexer lexer_;
  Token current_;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// Printer

namespace {

// Effective precedence as the emitted text will re-parse: 1 additive,
// 2 multiplicative, 3 unary minus, 4 power, 5 atoms. Negative constants
// re-parse through unary minus and rationals through '/', so they report
// the corresponding operator precedence.
int print_precedence(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Integer:
      return n.int_value < 0 ? 3 : 5;
    case NodeKind::Rational:
      return 2;
    case NodeKind::Real:
      return n.real_value < 0 ? 3 : 5;
    case NodeKind::Add:
    case NodeKind::Sub:
      return 1;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 2;
    case NodeKind::Neg:
      return 3;
    case NodeKind::Pow:
      return 4;
    default:
      return 5;
  }
}

void print_real(std::string& out, double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string_view body(buf.data(), res.ptr - buf.data());
  out.append(body);
  // Keep integral doubles lexically real so they re-parse as Real nodes.
  if (body.find('.') == std::string_view::npos &&
      body.find('e') == std::string_view::npos &&
      body.find("inf") == std::string_view::npos &&
      body.find("nan") == std::string_view::npos)
    out += ".0";
}

void print_node(std::string& out, const ExprNode& n, int min_prec);

void print_child(std::string& out, const ExprNode& child, int min_prec) {
  if (print_precedence(child) < min_prec) {
    out += '(';
    print_node(out, child, 0);
    out += ')';
  } else {
    print_node(out, child, 0);
  }
}

void print_node(std::string& out, const ExprNode& n, int /*min_prec*/) {
  switch (n.kind) {
    case NodeKind::Integer:
      out += std::to_string(n.int_value);
      return;
    case NodeKind::Rational:
      out += std::to_string(n.int_value);
      out += '/';
      out += std::to_string(n.den);
      return;
    case NodeKind::Real:
      print_real(out, n.real_value);
      return;
    case NodeKind::Time:
      out += 'k';
      return;
    case NodeKind::Var:
      out += n.var.name();
      return;
    case NodeKind::Neg:
      out += '-';
      print_child(out, *n.a, 3);
      return;
    case NodeKind::Add:
      print_child(out, *n.a, 1);
      out += " + ";
      print_child(out, *n.b, 2);
      return;
    case NodeKind::Sub:
      print_child(out, *n.a, 1);
      out += " - ";
      print_child(out, *n.b, 2);
      return;
    case NodeKind::Mul:
      print_child(out, *n.a, 2);
      out += '*';
      print_child(out, *n.b, 3);
      return;
    case NodeKind::Div:
      print_child(out, *n.a, 2);
      out += '/';
      print_child(out, *n.b, 3);
      return;
    case NodeKind::Pow:
      print_child(out, *n.a, 5);
      out += '^';
      out += std::to_string(n.exponent);
      return;
    case NodeKind::Sin:
    case NodeKind::Cos:
      out += (n.kind == NodeKind::Sin) ? "sin(" : "cos(";
      print_node(out, *n.a, 0);
      out += ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print_node(out, *e.raw(), 0);
  return out;
}

std::string Expr::str() const { return to_string(*this); }

std::ostream& operator<<(std::ostream& os, const Expr& e) {
  return os << to_string(e);
}

// ---------------------------------------------------------------------------
// Calculus

Expr differentiate(const Expr& e, VarRef v) {
  const ExprNode& n = *e.raw();
  switch (n.kind) {
    case NodeKind::Integer:
    case NodeKind::Rational:
    case NodeKind::Real:
    case NodeKind::Time:
      return Expr::integer(0);
    case NodeKind::Var:
      return Expr::integer(n.var == v ? 1 : 0);
    case NodeKind::Neg:
      return -differentiate(e.child(), v);
    case NodeKind::Add:
      return differentiate(e.child(0), v) + differentiate(e.child(1), v);
    case NodeKind::Sub:
      return differentiate(e.child(0), v) - differentiate(e.child(1), v);
    case NodeKind::Mul: {
      Expr a = e.child(0);
      Expr b = e.child(1);
      return differentiate(a, v) * b + a * differentiate(b, v);
    }
    case NodeKind::Div: {
      Expr a = e.child(0);
      Expr b = e.child(1);
      return (differentiate(a, v) * b - a * differentiate(b, v)) / Expr::pow(b, 2);
    }
    case NodeKind::Pow: {
      Expr a = e.child(0);
      return Expr::integer(n.exponent) * Expr::pow(a, n.exponent - 1) *
             differentiate(a, v);
    }
    case NodeKind::Sin:
      return Expr::cos(e.child()) * differentiate(e.child(), v);
    case NodeKind::Cos:
      return -Expr::sin(e.child()) * differentiate(e.child(), v);
  }
  throw Error("unhandled node kind in differentiate");
}

Expr substitute(const Expr& e, const Substitution& s) {
  const ExprNode& n = *e.raw();
  switch (n.kind) {
    case NodeKind::Integer:
    case NodeKind::Rational:
    case NodeKind::Real:
      return e;
    case NodeKind::Time:
      return s.time ? *s.time : e;
    case NodeKind::Var: {
      auto it = s.vars.find(n.var);
      return it == s.vars.end() ? e : it->second;
    }
    case NodeKind::Neg:
      return -substitute(e.child(), s);
    case NodeKind::Add:
      return substitute(e.child(0), s) + substitute(e.child(1), s);
    case NodeKind::Sub:
      return substitute(e.child(0), s) - substitute(e.child(1), s);
    case NodeKind::Mul:
      return substitute(e.child(0), s) * substitute(e.child(1), s);
    case NodeKind::Div:
      return substitute(e.child(0), s) / substitute(e.child(1), s);
    case NodeKind::Pow:
      return Expr::pow(substitute(e.child(), s), n.exponent);
    case NodeKind::Sin:
      return Expr::sin(substitute(e.child(), s));
    case NodeKind::Cos:
      return Expr::cos(substitute(e.child(), s));
  }
  throw Error("unhandled node kind in substitute");
}

double evaluate(const Expr& e, const Binding& b) {
  const ExprNode& n = *e.raw();
  switch (n.kind) {
    case NodeKind::Integer:
      return static_cast<double>(n.int_value);
    case NodeKind::Rational:
      return Rational{n.int_value, n.den}.to_double();
    case NodeKind::Real:
      return n.real_value;
    case NodeKind::Time:
      return static_cast<double>(b.k);
    case NodeKind::Var: {
      auto it = b.values.find(n.var);
      if (it == b.values.end())
        throw MissingVariableError("unbound variable " + n.var.name());
      return it->second;
    }
    case NodeKind::Neg:
      return -evaluate(e.child(), b);
    case NodeKind::Add:
      return evaluate(e.child(0), b) + evaluate(e.child(1), b);
    case NodeKind::Sub:
      return evaluate(e.child(0), b) - evaluate(e.child(1), b);
    case NodeKind::Mul:
      return evaluate(e.child(0), b) * evaluate(e.child(1), b);
    case NodeKind::Div: {
      double den = evaluate(e.child(1), b);
      if (std::abs(den) < 1e-300)
        throw DivisionNearZeroError("denominator magnitude below 1e-300 in " +
                                    to_string(e.child(1)));
      return evaluate(e.child(0), b) / den;
    }
    case NodeKind::Pow: {
      double base = evaluate(e.child(), b);
      if (n.exponent < 0 && std::abs(base) < 1e-300)
        throw DivisionNearZeroError("negative power of near-zero base in " +
                                    to_string(e));
      return pow_double(base, n.exponent);
    }
    case NodeKind::Sin:
      return std::sin(evaluate(e.child(), b));
    case NodeKind::Cos:
      return std::cos(evaluate(e.child(), b));
  }
  throw Error("unhandled node kind in evaluate");
}

std::optional<Rational> evaluate_exact(const Expr& e, const ExactBinding& b) {
  const ExprNode& n = *e.raw();
  switch (n.kind) {
    case NodeKind::Integer:
      return Rational{n.int_value, 1};
    case NodeKind::Rational:
      return Rational{n.int_value, n.den};
    case NodeKind::Real:
      return std::nullopt;
    case NodeKind::Time:
      return Rational{b.k, 1};
    case NodeKind::Var: {
      auto it = b.values.find(n.var);
      if (it == b.values.end())
        throw MissingVariableError("unbound variable " + n.var.name());
      return it->second;
    }
    case NodeKind::Neg: {
      auto a = evaluate_exact(e.child(), b);
      if (!a) return std::nullopt;
      return Rational::make(-__int128(a->num), a->den);
    }
    case NodeKind::Add: {
      auto a = evaluate_exact(e.child(0), b);
      auto c = evaluate_exact(e.child(1), b);
      if (!a || !c) return std::nullopt;
      return rat_add(*a, *c);
    }
    case NodeKind::Sub: {
      auto a = evaluate_exact(e.child(0), b);
      auto c = evaluate_exact(e.child(1), b);
      if (!a || !c) return std::nullopt;
      return rat_sub(*a, *c);
    }
    case NodeKind::Mul: {
      auto a = evaluate_exact(e.child(0), b);
      auto c = evaluate_exact(e.child(1), b);
      if (!a || !c) return std::nullopt;
      return rat_mul(*a, *c);
    }
    case NodeKind::Div: {
      auto a = evaluate_exact(e.child(0), b);
      auto c = evaluate_exact(e.child(1), b);
      if (!a || !c) return std::nullopt;
      if (c->is_zero())
        throw DivisionNearZeroError("exact zero denominator in " +
                                    to_string(e.child(1)));
      return rat_div(*a, *c);
    }
    case NodeKind::Pow: {
      auto a = evaluate_exact(e.child(), b);
      if (!a) return std::nullopt;
      if (a->is_zero() && n.exponent < 0)
        throw DivisionNearZeroError("negative power of exact zero in " +
                                    to_string(e));
      return rat_pow(*a, n.exponent);
    }
    case NodeKind::Sin:
    case NodeKind::Cos:
      return std::nullopt;
  }
  throw Error("unhandled node kind in evaluate_exact");
}

namespace {

// Exact Horner evaluation of monomial coefficients, lowest power first.
std::optional<Rational> horner_exact(const std::vector<Rational>& coeffs, std::int64_t k) {
  Rational acc{0, 1};
  const Rational kk{k, 1};
  for (std::size_t i = coeffs.size(); i-- > 0;) {
    auto m = rat_mul(acc, kk);
    if (!m) return std::nullopt;
    auto s = rat_add(*m, coeffs[i]);
    if (!s) return std::nullopt;
    acc = *s;
  }
  return acc;
}

}  // namespace

std::optional<Expr> polynomial_in_k(const Expr& e, int max_degree) {
  if (max_degree < 0 || !e.variables().empty()) return std::nullopt;

  auto probe = [&](std::int64_t k) -> std::optional<Rational> {
    try {
      return evaluate_exact(e, ExactBinding{k, {}});
    } catch (const DivisionNearZeroError&) {
      return std::nullopt;
    }
  };

  // Newton forward differences on the stencil 0..max_degree; the column is
  // consumed in place, leaving c[j] = (forward difference of order j at 0).
  std::vector<Rational> column;
  column.reserve(static_cast<std::size_t>(max_degree) + 1);
  for (std::int64_t k = 0; k <= max_degree; ++k) {
    auto v = probe(k);
    if (!v) return std::nullopt;
    column.push_back(*v);
  }
  std::vector<Rational> newton;
  newton.reserve(column.size());
  for (std::size_t width = column.size(); width > 0; --width) {
    newton.push_back(column[0]);
    for (std::size_t i = 0; i + 1 < width; ++i) {
      auto d = rat_sub(column[i + 1], column[i]);
      if (!d) return std::nullopt;
      column[i] = *d;
    }
  }

  // Expand sum_j newton[j]/j! * k(k-1)...(k-j+1) into monomial coefficients.
  std::vector<Rational> poly{Rational{0, 1}};
  std::vector<Rational> falling{Rational{1, 1}};
  Rational factorial{1, 1};
  for (std::size_t j = 0; j < newton.size(); ++j) {
    if (j > 0) {
      const Rational root{-(static_cast<std::int64_t>(j) - 1), 1};
      std::vector<Rational> next(falling.size() + 1, Rational{0, 1});
      for (std::size_t i = 0; i < falling.size(); ++i) {
        auto shifted = rat_mul(falling[i], root);
        if (!shifted) return std::nullopt;
        auto low = rat_add(next[i], *shifted);
        if (!low) return std::nullopt;
        next[i] = *low;
        auto high = rat_add(next[i + 1], falling[i]);
        if (!high) return std::nullopt;
        next[i + 1] = *high;
      }
      falling = std::move(next);
      auto f = rat_mul(factorial, Rational{static_cast<std::int64_t>(j), 1});
      if (!f) return std::nullopt;
      factorial = *f;
    }
    if (newton[j].is_zero()) continue;
    auto scale = rat_div(newton[j], factorial);
    if (!scale) return std::nullopt;
    if (poly.size() < falling.size()) poly.resize(falling.size(), Rational{0, 1});
    for (std::size_t i = 0; i < falling.size(); ++i) {
      auto term = rat_mul(*scale, falling[i]);
      if (!term) return std::nullopt;
      auto s = rat_add(poly[i], *term);
      if (!s) return std::nullopt;
      poly[i] = *s;
    }
  }
  while (poly.size() > 1 && poly.back().is_zero()) poly.pop_back();

  // The stencil fixes the unique interpolant of degree <= max_degree; guard
  // points on both sides reject expressions that merely pass through it.
  for (std::int64_t k = -(max_degree + 6); k <= 2 * max_degree + 12; ++k) {
    if (k >= 0 && k <= max_degree) continue;
    auto expect = probe(k);
    auto got = horner_exact(poly, k);
    if (!expect || !got || !(*expect == *got)) return std::nullopt;
  }

  // Emit highest power first, folding signs into the +/- chain.
  Expr result = Expr::integer(0);
  bool first = true;
  for (std::size_t i = poly.size(); i-- > 0;) {
    if (poly[i].is_zero()) continue;
    Rational c = poly[i];
    const bool negative = c.num < 0;
    if (negative) c.num = -c.num;
    Expr term;
    if (i == 0) {
      term = Expr::rational(c);
    } else {
      const Expr power = Expr::pow(Expr::time_symbol(), static_cast<int>(i));
      term = (c == Rational{1, 1}) ? power : Expr::rational(c) * power;
    }
    if (first) {
      result = negative ? -term : term;
      first = false;
    } else {
      result = negative ? result - term : result + term;
    }
  }
  return result;
}

std::optional<int> delta_degree(const Expr& e) {
  const ExprNode& n = *e.raw();
  switch (n.kind) {
    case NodeKind::Integer:
    case NodeKind::Rational:
    case NodeKind::Real:
    case NodeKind::Time:
      return 0;
    case NodeKind::Var:
      return is_delta_group(n.var.group) ? 1 : 0;
    case NodeKind::Neg:
      return delta_degree(e.child());
    case NodeKind::Add:
    case NodeKind::Sub: {
      auto a = delta_degree(e.child(0));
      auto b = delta_degree(e.child(1));
      if (!a || !b) return std::nullopt;
      return std::max(*a, *b);
    }
    case NodeKind::Mul: {
      auto a = delta_degree(e.child(0));
      auto b = delta_degree(e.child(1));
      if (!a || !b) return std::nullopt;
      return *a + *b;
    }
    case NodeKind::Div: {
      auto a = delta_degree(e.child(0));
      auto b = delta_degree(e.child(1));
      if (!a || !b || *b != 0) return std::nullopt;
      return a;
    }
    case NodeKind::Pow: {
      auto a = delta_degree(e.child());
      if (!a) return std::nullopt;
      if (*a == 0) return 0;
      if (n.exponent < 0) return std::nullopt;
      return *a * n.exponent;
    }
    case NodeKind::Sin:
    case NodeKind::Cos: {
      auto a = delta_degree(e.child());
      if (!a || *a != 0) return std::nullopt;
      return 0;
    }
  }
  return std::nullopt;
}

bool is_linear_in_delta(const Expr& e) {
  auto d = delta_degree(e);
  return d.has_value() && *d <= 1;
}

}  // namespace dtflat
