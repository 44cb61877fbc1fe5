#include "pencil/expr.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cctype>
#include <functional>
#include <unordered_map>

#include "pencil/errors.hpp"

namespace pencil {

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

bool is_binary(Expr::Op op) {
  return op == Expr::Op::Add || op == Expr::Op::Sub || op == Expr::Op::Mul ||
         op == Expr::Op::Div;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void domain_fail(Expr::Op op, double a) {
  throw DomainError(std::string("domain violation in ") + op_name(op) + " (argument " +
                    format_number(a) + ")");
}

double apply_pow(double base, int n) {
  if (n < 0 && base == 0.0) throw DomainError("domain violation in pow (zero to negative power)");
  double result = 1.0;
  double b = n < 0 ? 1.0 / base : base;
  unsigned e = static_cast<unsigned>(n < 0 ? -static_cast<long>(n) : n);
  while (e) {
    if (e & 1U) result *= b;
    b *= b;
    e >>= 1U;
  }
  return result;
}

// Shared numeric kernel for tree and tape evaluation.
double apply_op(Expr::Op op, int ival, double cval, double a, double b) {
  using Op = Expr::Op;
  double r = 0.0;
  switch (op) {
    case Op::Const: return cval;
    case Op::Coord: return a;
    case Op::Add: r = a + b; break;
    case Op::Sub: r = a - b; break;
    case Op::Mul: r = a * b; break;
    case Op::Div:
      if (b == 0.0) throw DomainError("domain violation in division (division by zero)");
      r = a / b;
      break;
    case Op::Neg: r = -a; break;
    case Op::Pow: r = apply_pow(a, ival); break;
    case Op::Sin: r = std::sin(a); break;
    case Op::Cos: r = std::cos(a); break;
    case Op::Sinh: r = std::sinh(a); break;
    case Op::Cosh: r = std::cosh(a); break;
    case Op::Exp: r = std::exp(a); break;
    case Op::Log:
      if (!(a > 0.0)) domain_fail(op, a);
      r = std::log(a);
      break;
    case Op::Sqrt:
      if (a < 0.0) domain_fail(op, a);
      r = std::sqrt(a);
      break;
    case Op::Arccos:
      if (a < -1.0 || a > 1.0) domain_fail(op, a);
      r = std::acos(a);
      break;
    case Op::Arcsin:
      if (a < -1.0 || a > 1.0) domain_fail(op, a);
      r = std::asin(a);
      break;
  }
  if (!std::isfinite(r)) {
    throw DomainError(std::string("non-finite result in ") + op_name(op));
  }
  return r;
}

bool fold_function(Expr::Op op, double a, double& out) {
  try {
    out = apply_op(op, 0, 0.0, a, 0.0);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

}  // namespace

const char* op_name(Expr::Op op) {
  switch (op) {
    case Expr::Op::Const: return "const";
    case Expr::Op::Coord: return "coord";
    case Expr::Op::Add: return "+";
    case Expr::Op::Sub: return "-";
    case Expr::Op::Mul: return "*";
    case Expr::Op::Div: return "/";
    case Expr::Op::Neg: return "neg";
    case Expr::Op::Pow: return "^";
    case Expr::Op::Sin: return "sin";
    case Expr::Op::Cos: return "cos";
    case Expr::Op::Sinh: return "sinh";
    case Expr::Op::Cosh: return "cosh";
    case Expr::Op::Exp: return "exp";
    case Expr::Op::Log: return "log";
    case Expr::Op::Sqrt: return "sqrt";
    case Expr::Op::Arccos: return "arccos";
    case Expr::Op::Arcsin: return "arcsin";
  }
  return "?";
}

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double value) {
  auto node = std::make_shared<Node>();
  node->op = Op::Const;
  node->cval = value;
  node_ = std::move(node);
}

Expr Expr::constant(double value) { return Expr(value); }

Expr Expr::coord(int axis) {
  auto node = std::make_shared<Node>();
  node->op = Op::Coord;
  node->ival = axis;
  return Expr(NodePtr(std::move(node)));
}

Expr Expr::make(Op op, const Expr& a, const Expr& b, int i) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->ival = i;
  node->a = a.node_;
  if (is_binary(op)) node->b = b.node_;
  return Expr(NodePtr(std::move(node)));
}

Expr::Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->cval; }
int Expr::axis() const { return node_->ival; }
int Expr::exponent() const { return node_->ival; }
Expr Expr::lhs() const { return Expr(node_->a); }
Expr Expr::rhs() const { return Expr(node_->b); }
Expr Expr::arg() const { return Expr(node_->a); }

int Expr::dimension_used() const {
  std::unordered_map<const Node*, int> memo;
  std::function<int(const Node*)> walk = [&](const Node* n) -> int {
    if (!n) return 0;
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    int d = 0;
    if (n->op == Op::Coord) {
      d = n->ival + 1;
    } else if (n->op != Op::Const) {
      d = std::max(walk(n->a.get()), walk(n->b.get()));
    }
    memo.emplace(n, d);
    return d;
  };
  return walk(node_.get());
}

bool Expr::depends_on(int axis) const {
  std::unordered_map<const Node*, bool> memo;
  std::function<bool(const Node*)> walk = [&](const Node* n) -> bool {
    if (!n) return false;
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    bool d = false;
    if (n->op == Op::Coord) {
      d = n->ival == axis;
    } else if (n->op != Op::Const) {
      d = walk(n->a.get()) || walk(n->b.get());
    }
    memo.emplace(n, d);
    return d;
  };
  return walk(node_.get());
}

double Expr::eval(std::span<const double> point) const {
  std::unordered_map<const Node*, double> memo;
  std::function<double(const Node*)> walk = [&](const Node* n) -> double {
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    double v = 0.0;
    switch (n->op) {
      case Op::Const: v = n->cval; break;
      case Op::Coord:
        if (n->ival < 0 || static_cast<std::size_t>(n->ival) >= point.size()) {
          throw DomainError("evaluation point has no coordinate R" + std::to_string(n->ival + 1));
        }
        v = point[static_cast<std::size_t>(n->ival)];
        break;
      default: {
        double a = walk(n->a.get());
        double b = n->b ? walk(n->b.get()) : 0.0;
        v = apply_op(n->op, n->ival, n->cval, a, b);
      }
    }
    memo.emplace(n, v);
    return v;
  };
  return walk(node_.get());
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() + b.value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expr::make(Expr::Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() - b.value());
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  return Expr::make(Expr::Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() * b.value());
  if (a.is_zero() || b.is_zero()) return Expr(0.0);
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  return Expr::make(Expr::Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_one()) return a;
  if (a.is_zero()) return Expr(0.0);
  if (a.is_constant() && b.is_constant() && b.value() != 0.0) return Expr(a.value() / b.value());
  return Expr::make(Expr::Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.value());
  if (a.op() == Expr::Op::Neg) return a.arg();
  return Expr::make(Expr::Op::Neg, a);
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr(1.0);
  if (exponent == 1) return base;
  if (base.is_constant() && (exponent > 0 || base.value() != 0.0)) {
    return Expr(apply_pow(base.value(), exponent));
  }
  return Expr::make(Expr::Op::Pow, base, base, exponent);
}

Expr apply(Expr::Op fn, const Expr& a) {
  double folded = 0.0;
  if (a.is_constant() && fold_function(fn, a.value(), folded)) return Expr(folded);
  return Expr::make(fn, a);
}

Expr sum(std::span<const Expr> terms) {
  Expr total;
  for (const auto& t : terms) total = total + t;
  return total;
}

Expr Expr::diff(int axis) const {
  std::unordered_map<const Node*, Expr> memo;
  std::function<Expr(const NodePtr&)> d = [&](const NodePtr& np) -> Expr {
    if (auto it = memo.find(np.get()); it != memo.end()) return it->second;
    const Expr e(np);
    Expr r;
    switch (np->op) {
      case Op::Const: r = Expr(0.0); break;
      case Op::Coord: r = Expr(np->ival == axis ? 1.0 : 0.0); break;
      case Op::Add: r = d(np->a) + d(np->b); break;
      case Op::Sub: r = d(np->a) - d(np->b); break;
      case Op::Mul: {
        Expr a(np->a), b(np->b);
        r = d(np->a) * b + a * d(np->b);
        break;
      }
      case Op::Div: {
        Expr a(np->a), b(np->b);
        Expr da = d(np->a), db = d(np->b);
        if (db.is_zero()) {
          r = da / b;
        } else {
          r = (da * b - a * db) / pow(b, 2);
        }
        break;
      }
      case Op::Neg: r = -d(np->a); break;
      case Op::Pow: {
        Expr a(np->a);
        r = Expr(static_cast<double>(np->ival)) * pow(a, np->ival - 1) * d(np->a);
        break;
      }
      case Op::Sin: r = cos(Expr(np->a)) * d(np->a); break;
      case Op::Cos: r = -(sin(Expr(np->a)) * d(np->a)); break;
      case Op::Sinh: r = cosh(Expr(np->a)) * d(np->a); break;
      case Op::Cosh: r = sinh(Expr(np->a)) * d(np->a); break;
      case Op::Exp: r = e * d(np->a); break;
      case Op::Log: r = d(np->a) / Expr(np->a); break;
      case Op::Sqrt: r = d(np->a) / (Expr(2.0) * e); break;
      case Op::Arccos:
        r = -(d(np->a) / sqrt(Expr(1.0) - pow(Expr(np->a), 2)));
        break;
      case Op::Arcsin: r = d(np->a) / sqrt(Expr(1.0) - pow(Expr(np->a), 2)); break;
    }
    memo.emplace(np.get(), r);
    return r;
  };
  return d(node_);
}

std::string Expr::str() const {
  std::function<std::string(const NodePtr&)> p = [&](const NodePtr& n) -> std::string {
    switch (n->op) {
      case Op::Const: {
        std::string s = format_number(n->cval);
        if (n->cval < 0.0 || std::signbit(n->cval)) return "(" + s + ")";
        return s;
      }
      case Op::Coord: return "R" + std::to_string(n->ival + 1);
      case Op::Add: return "(" + p(n->a) + " + " + p(n->b) + ")";
      case Op::Sub: return "(" + p(n->a) + " - " + p(n->b) + ")";
      case Op::Mul: return "(" + p(n->a) + " * " + p(n->b) + ")";
      case Op::Div: return "(" + p(n->a) + " / " + p(n->b) + ")";
      case Op::Neg: return "(-" + p(n->a) + ")";
      case Op::Pow: return "(" + p(n->a) + "^" + std::to_string(n->ival) + ")";
      default: return std::string(op_name(n->op)) + "(" + p(n->a) + ")";
    }
  };
  return p(node_);
}

bool Expr::structurally_equal(const Expr& other) const {
  std::function<bool(const Node*, const Node*)> eq = [&](const Node* x, const Node* y) -> bool {
    if (x == y) return true;
    if (!x || !y) return false;
    if (x->op != y->op || x->ival != y->ival) return false;
    if (x->op == Op::Const) return std::bit_cast<std::uint64_t>(x->cval) == std::bit_cast<std::uint64_t>(y->cval);
    return eq(x->a.get(), y->a.get()) && eq(x->b.get(), y->b.get());
  };
  return eq(node_.get(), other.node_.get());
}

// ---------------------------------------------------------------------------
// Parser

class ExprParser {
 public:
  ExprParser(std::string_view text, int dimension) : text_(text), dim_(dimension) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ < text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_ + 1); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::make(Expr::Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = Expr::make(Expr::Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::make(Expr::Op::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = Expr::make(Expr::Op::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    Expr b = base();
    if (accept('^')) {
      skip_ws();
      bool negative = false;
      if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
        negative = text_[pos_] == '-';
        ++pos_;
      }
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        fail("expected integer exponent");
      }
      int value = 0;
      auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
      if (res.ec != std::errc()) fail("exponent out of range");
      pos_ = static_cast<std::size_t>(res.ptr - text_.data());
      return Expr::make(Expr::Op::Pow, b, b, negative ? -value : value);
    }
    return b;
  }

  Expr base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (c == '-') {
      ++pos_;
      Expr inner = base();
      if (inner.is_constant()) return Expr(-inner.value());
      return Expr::make(Expr::Op::Neg, inner);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return symbol();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t int_digits = digits();
    std::size_t frac_digits = 0;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      frac_digits = digits();
    }
    if (int_digits + frac_digits == 0) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = mark;
        fail("malformed exponent in number");
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_ || !std::isfinite(v)) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr(v);
  }

  Expr symbol() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);
    if (name.size() >= 2 && name[0] == 'R' &&
        name.find_first_not_of("0123456789", 1) == std::string_view::npos) {
      int index = 0;
      auto res = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (res.ec != std::errc() || index < 1 || index > dim_) {
        pos_ = start;
        fail("coordinate " + std::string(name) + " outside R1..R" + std::to_string(dim_));
      }
      return Expr::coord(index - 1);
    }
    static constexpr std::pair<std::string_view, Expr::Op> kFunctions[] = {
        {"sin", Expr::Op::Sin},   {"cos", Expr::Op::Cos},       {"sinh", Expr::Op::Sinh},
        {"cosh", Expr::Op::Cosh}, {"exp", Expr::Op::Exp},       {"log", Expr::Op::Log},
        {"sqrt", Expr::Op::Sqrt}, {"arccos", Expr::Op::Arccos}, {"arcsin", Expr::Op::Arcsin},
    };
    for (const auto& [fname, fop] : kFunctions) {
      if (name == fname) {
        expect('(');
        Expr inner = expr();
        expect(')');
        return Expr::make(fop, inner);
      }
    }
    pos_ = start;
    fail("unknown symbol '" + std::string(name) + "'");
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

Expr parse_expr(std::string_view text, int dimension) {
  return ExprParser(text, dimension).parse();
}

// ---------------------------------------------------------------------------
// Compiled tape

namespace {

struct InstrKey {
  Expr::Op op;
  int ival;
  std::uint64_t cbits;
  std::uint32_t a;
  std::uint32_t b;
  bool operator==(const InstrKey&) const = default;
};

struct InstrKeyHash {
  std::size_t operator()(const InstrKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ULL;
    };
    mix(static_cast<std::uint64_t>(k.op));
    mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.ival)));
    mix(k.cbits);
    mix(k.a);
    mix(k.b);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

ExprProgram::ExprProgram(std::span<const Expr> outputs) {
  std::unordered_map<const Expr::Node*, std::uint32_t> by_node;
  std::unordered_map<InstrKey, std::uint32_t, InstrKeyHash> by_key;
  constexpr std::uint32_t kNone = 0xffffffffU;

  std::function<std::uint32_t(const Expr::Node*)> emit = [&](const Expr::Node* n) -> std::uint32_t {
    if (auto it = by_node.find(n); it != by_node.end()) return it->second;
    std::uint32_t a = kNone, b = kNone;
    if (n->op != Expr::Op::Const && n->op != Expr::Op::Coord) {
      a = emit(n->a.get());
      if (n->b) b = emit(n->b.get());
    }
    InstrKey key{n->op, n->ival, n->op == Expr::Op::Const ? std::bit_cast<std::uint64_t>(n->cval) : 0,
                 a, b};
    std::uint32_t slot;
    if (auto it = by_key.find(key); it != by_key.end()) {
      slot = it->second;
    } else {
      slot = static_cast<std::uint32_t>(code_.size());
      code_.push_back(Instr{n->op, n->ival, n->cval, a, b});
      by_key.emplace(key, slot);
    }
    by_node.emplace(n, slot);
    return slot;
  };

  outputs_.reserve(outputs.size());
  for (const auto& e : outputs) outputs_.push_back(emit(e.node()));
}

void ExprProgram::eval(std::span<const double> point, std::span<double> out,
                       std::vector<double>& scratch) const {
  scratch.resize(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& ins = code_[i];
    switch (ins.op) {
      case Expr::Op::Const: scratch[i] = ins.cval; break;
      case Expr::Op::Coord:
        if (static_cast<std::size_t>(ins.ival) >= point.size()) {
          throw DomainError("evaluation point has no coordinate R" + std::to_string(ins.ival + 1));
        }
        scratch[i] = point[static_cast<std::size_t>(ins.ival)];
        break;
      default:
        scratch[i] = apply_op(ins.op, ins.ival, ins.cval, scratch[ins.a],
                              ins.b == 0xffffffffU ? 0.0 : scratch[ins.b]);
    }
  }
  for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = scratch[outputs_[k]];
}

}  // namespace pencil
