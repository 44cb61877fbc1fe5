#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pencil {

// Immutable analytic expression over chart coordinates R1..Rn.
//
// Differentiation is exact tree rewriting. The only simplifications are
// constant folding and elimination of additive zeros and multiplicative
// ones/zeros; two trees that are mathematically equal need not be
// structurally equal. Coordinates are addressed by 0-based axis index
// internally (R1 is axis 0).
class Expr {
 public:
  enum class Op : std::uint8_t {
    Const,
    Coord,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
    Arccos,
    Arcsin,
  };

  struct Node;

  Expr();  // the constant 0
  Expr(double value);  // NOLINT(google-explicit-constructor): numeric literals read naturally

  static Expr constant(double value);
  static Expr coord(int axis);

  Op op() const;
  double value() const;    // Const only
  int axis() const;        // Coord only
  int exponent() const;    // Pow only
  Expr lhs() const;        // binary ops and Pow base
  Expr rhs() const;        // binary ops
  Expr arg() const;        // unary ops and functions

  bool is_constant() const { return op() == Op::Const; }
  bool is_zero() const { return is_constant() && value() == 0.0; }
  bool is_one() const { return is_constant() && value() == 1.0; }

  // Highest axis referenced plus one (0 for constants).
  int dimension_used() const;
  bool depends_on(int axis) const;

  // Throws DomainError outside the real domain of any subexpression.
  double eval(std::span<const double> point) const;

  Expr diff(int axis) const;

  // Fully parenthesized text that re-parses to a structurally equal tree.
  std::string str() const;

  bool structurally_equal(const Expr& other) const;

  const Node* node() const { return node_.get(); }

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expr make(Op op, const Expr& a, const Expr& b, int i = 0);
  static Expr make(Op op, const Expr& a) { return make(op, a, a); }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, int exponent);
  friend Expr apply(Op fn, const Expr& a);
  friend class ExprParser;

  std::shared_ptr<const Node> node_;
};

struct Expr::Node {
  Op op;
  int ival = 0;  // axis for Coord, exponent for Pow
  double cval = 0.0;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr apply(Expr::Op fn, const Expr& a);

inline Expr sin(const Expr& a) { return apply(Expr::Op::Sin, a); }
inline Expr cos(const Expr& a) { return apply(Expr::Op::Cos, a); }
inline Expr sinh(const Expr& a) { return apply(Expr::Op::Sinh, a); }
inline Expr cosh(const Expr& a) { return apply(Expr::Op::Cosh, a); }
inline Expr exp(const Expr& a) { return apply(Expr::Op::Exp, a); }
inline Expr log(const Expr& a) { return apply(Expr::Op::Log, a); }
inline Expr sqrt(const Expr& a) { return apply(Expr::Op::Sqrt, a); }
inline Expr arccos(const Expr& a) { return apply(Expr::Op::Arccos, a); }
inline Expr arcsin(const Expr& a) { return apply(Expr::Op::Arcsin, a); }

// Sum of a (possibly empty) list, folding zeros.
Expr sum(std::span<const Expr> terms);

// Parses the expression grammar; coordinates limited to R1..R<dimension>.
// Throws ParseError (1-based offset) on malformed text, unknown symbols, or
// out-of-range coordinates. The parser builds the tree as written, without
// folding.
Expr parse_expr(std::string_view text, int dimension);

// A batch of expressions compiled into a flat instruction tape with common
// subexpressions merged. Evaluating the tape at a point costs one pass over
// the merged DAG. Instances are immutable and can be shared across threads;
// each caller supplies its own scratch buffer.
class ExprProgram {
 public:
  ExprProgram() = default;
  explicit ExprProgram(std::span<const Expr> outputs);

  std::size_t outputs() const { return outputs_.size(); }
  std::size_t instructions() const { return code_.size(); }

  // Writes outputs() values. `scratch` is resized as needed.
  void eval(std::span<const double> point, std::span<double> out,
            std::vector<double>& scratch) const;

 private:
  struct Instr {
    Expr::Op op;
    int ival;
    double cval;
    std::uint32_t a;
    std::uint32_t b;
  };
  std::vector<Instr> code_;
  std::vector<std::uint32_t> outputs_;
};

const char* op_name(Expr::Op op);

}  // namespace pencil
