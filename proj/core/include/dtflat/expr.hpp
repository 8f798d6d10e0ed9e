#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "dtflat/rational.hpp"

namespace dtflat {

// Variable groups of the extended coordinate chart and their first-variation
// counterparts. Grammar prefixes: x, u, z, y and dx, du, dz, dy.
enum class VarGroup : std::uint8_t {
  State,
  Input,
  Zeta,
  FlatOut,
  DeltaState,
  DeltaInput,
  DeltaZeta,
  DeltaFlatOut,
};

[[nodiscard]] bool is_delta_group(VarGroup g);
[[nodiscard]] VarGroup delta_of(VarGroup g);
[[nodiscard]] VarGroup base_of(VarGroup g);
[[nodiscard]] std::string_view group_prefix(VarGroup g);

// One symbol of the chart: group, 1-based component, forward-shift subscript.
// Shift admissibility depends on the group. States carry no shift (the
// transition map replaces them wholesale), zeta history lives strictly in the
// past (shift <= -1), inputs shift forward (>= 0), flat outputs may carry any
// shift since backward shifts of output jets arise in intermediate results.
// The parser enforces the group rules; code constructing VarRefs directly is
// expected to respect them.
struct VarRef {
  VarGroup group = VarGroup::State;
  int component = 1;
  int shift = 0;

  friend auto operator<=>(const VarRef&, const VarRef&) = default;

  // Grammar spelling, e.g. "x2", "z1_[-1]", "dy2_[3]".
  [[nodiscard]] std::string name() const;

  [[nodiscard]] VarRef with_shift(int s) const { return {group, component, s}; }
  [[nodiscard]] VarRef shifted_by(int d) const { return {group, component, shift + d}; }
  [[nodiscard]] VarRef delta() const { return {delta_of(group), component, shift}; }

  static VarRef state(int i) { return {VarGroup::State, i, 0}; }
  static VarRef input(int j, int shift = 0) { return {VarGroup::Input, j, shift}; }
  static VarRef zeta(int j, int shift) { return {VarGroup::Zeta, j, shift}; }
  static VarRef flat_out(int j, int shift = 0) { return {VarGroup::FlatOut, j, shift}; }
};

enum class NodeKind : std::uint8_t {
  Integer,
  Rational,
  Real,
  Time,
  Var,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Sin,
  Cos,
};

struct ExprNode;

// Immutable expression handle with structural sharing. Factory functions
// fold constant subexpressions exactly (integer and rational arithmetic with
// overflow fallback to an unfolded node) and apply identity rewrites
// (x+0, x*1, x*0, x*(-1), double negation, pow 0/1). No other simplification
// happens anywhere; equivalence beyond that is checked numerically.
class Expr {
 public:
  // Default-constructed expression is the integer 0, so value-initialized
  // accumulators are usable directly.
  Expr();

  static Expr integer(std::int64_t v);
  static Expr rational(std::int64_t num, std::int64_t den);
  static Expr rational(const Rational& r);
  static Expr real(double v);
  static Expr time_symbol();
  static Expr var(VarRef v);
  static Expr pow(const Expr& base, int exponent);
  static Expr sin(const Expr& a);
  static Expr cos(const Expr& a);

  friend Expr operator-(const Expr& a);
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  // Throws DivisionNearZeroError when the denominator is the literal zero
  // constant, the statically visible case of a vanishing denominator.
  friend Expr operator/(const Expr& a, const Expr& b);

  [[nodiscard]] NodeKind kind() const;

  // Typed payload accessors; each requires the matching kind.
  [[nodiscard]] std::int64_t integer_value() const;
  [[nodiscard]] Rational rational_value() const;  // Integer or Rational node
  [[nodiscard]] double real_value() const;
  [[nodiscard]] VarRef var_ref() const;
  [[nodiscard]] int exponent() const;
  [[nodiscard]] Expr child(int i = 0) const;

  [[nodiscard]] bool is_constant() const;
  [[nodiscard]] bool is_integer_constant(std::int64_t v) const;

  [[nodiscard]] std::set<VarRef> variables() const;
  [[nodiscard]] bool references_time() const;
  [[nodiscard]] bool references(VarRef v) const;

  [[nodiscard]] std::string str() const;

  [[nodiscard]] const ExprNode* raw() const { return node_.get(); }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

  std::shared_ptr<const ExprNode> node_;

  friend bool structurally_equal(const Expr& a, const Expr& b);
};

[[nodiscard]] bool structurally_equal(const Expr& a, const Expr& b);

// Recursive-descent parser over the expression grammar:
//   expression := term (('+'|'-') term)*
//   term       := factor (('*'|'/') factor)*
//   factor     := '-' factor | power
//   power      := atom ('^' ['-'] integer)?
//   atom       := number | 'k' | variable | ('sin'|'cos') '(' expression ')'
//              | '(' expression ')'
// Integer literals stay exact; literals with a point or exponent are doubles.
// Throws ParseError with a character offset.
[[nodiscard]] Expr parse(std::string_view text);

// Emits text that parses back to a structurally identical expression.
[[nodiscard]] std::string to_string(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

// Partial derivative with respect to one chart variable. The time symbol is
// a discrete parameter and never a differentiation direction; its derivative
// with respect to any variable is 0.
[[nodiscard]] Expr differentiate(const Expr& e, VarRef v);

// Simultaneous substitution: replacements never cascade into each other.
struct Substitution {
  std::map<VarRef, Expr> vars;
  std::optional<Expr> time;

  Substitution& set(VarRef v, Expr replacement) {
    vars.insert_or_assign(v, std::move(replacement));
    return *this;
  }
  Substitution& set_time(Expr replacement) {
    time = std::move(replacement);
    return *this;
  }
};

[[nodiscard]] Expr substitute(const Expr& e, const Substitution& s);

struct Binding {
  std::int64_t k = 0;
  std::map<VarRef, double> values;
};

// IEEE double evaluation. Throws MissingVariableError for an unbound
// variable and DivisionNearZeroError when a denominator magnitude drops
// below 1e-300.
[[nodiscard]] double evaluate(const Expr& e, const Binding& b);

struct ExactBinding {
  std::int64_t k = 0;
  std::map<VarRef, Rational> values;
};

// Exact rational evaluation where the expression permits it: nullopt as soon
// as a Real constant, sin, cos, or an overflowing intermediate is hit.
// Division by an exact zero throws DivisionNearZeroError; an unbound
// variable throws MissingVariableError.
[[nodiscard]] std::optional<Rational> evaluate_exact(const Expr& e, const ExactBinding& b);

// Collapses a k-only expression to an explicit polynomial in k. Succeeds when
// a polynomial of degree <= max_degree matches the expression in exact
// rational arithmetic on the stencil 0..max_degree and on guard points to
// both sides of it; nullopt for expressions with free variables or non-exact
// nodes, when a probe lands on a pole or overflows, and when no polynomial
// under the degree cap fits.
[[nodiscard]] std::optional<Expr> polynomial_in_k(const Expr& e, int max_degree = 10);

// Total degree in the Delta-groups, when the expression is polynomial in
// them (Delta symbols inside sin/cos, denominators, or negative powers yield
// nullopt). Linearized objects must satisfy delta_degree <= 1.
[[nodiscard]] std::optional<int> delta_degree(const Expr& e);
[[nodiscard]] bool is_linear_in_delta(const Expr& e);

// Shared integer-exponent double power, kept identical between constant
// folding and evaluation so folded trees evaluate bit-identically.
[[nodiscard]] double pow_double(double base, int exponent);

}  // namespace dtflat
