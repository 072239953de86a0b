#include "geolap/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>

namespace geolap {

namespace {

using Node = std::shared_ptr<const ExprNode>;
using Kind = ExprNode::Kind;
using VarKind = ExprNode::VarKind;
using BinOp = ExprNode::BinOp;
using Fn = ExprNode::Fn;

Node make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::constant;
  n->value = v;
  return n;
}

Node make_var(VarKind k, int idx) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::var;
  n->var_kind = k;
  n->var_index = idx;
  return n;
}

Node make_neg(Node c) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::neg;
  n->lhs = std::move(c);
  return n;
}

Node make_bin(BinOp op, Node l, Node r) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::binary;
  n->op = op;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

Node make_call(Fn fn, Node arg) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::call;
  n->fn = fn;
  n->lhs = std::move(arg);
  return n;
}

// ---------------------------------------------------------------- lexer --

struct Token {
  enum class Type { number, ident, punct, end } type;
  std::string_view text;
  double number = 0.0;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    tok_.offset = pos_;
    if (pos_ >= src_.size()) {
      tok_.type = Token::Type::end;
      tok_.text = {};
      return;
    }
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.data() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin)
        throw ParseError("malformed number", pos_);
      tok_.type = Token::Type::number;
      tok_.number = v;
      tok_.text = src_.substr(pos_, end - begin);
      pos_ += end - begin;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      tok_.type = Token::Type::ident;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (std::string_view("+-*/^(),").find(c) != std::string_view::npos) {
      tok_.type = Token::Type::punct;
      tok_.text = src_.substr(pos_, 1);
      ++pos_;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

// --------------------------------------------------------------- parser --

// Parse-time values are scalars or d-vectors (vector sugar for dot/norm2);
// a vector surviving to a scalar position is an error.
struct Value {
  bool is_vector = false;
  std::vector<Node> comps;  // size 1 (scalar) or d (vector)
  std::size_t offset = 0;   // where this value started, for diagnostics

  const Node& scalar(std::string_view what) const {
    if (is_vector)
      throw ParseError("vector-valued " + std::string(what) +
                           " where a scalar is required",
                       offset);
    return comps[0];
  }
};

class Parser {
 public:
  Parser(std::string_view src, int d) : lex_(src), d_(d) {}

  Node run() {
    Value v = parse_expr(0);
    if (lex_.peek().type != Token::Type::end)
      throw ParseError("unexpected trailing input", lex_.peek().offset);
    return v.scalar("expression");
  }

 private:
  // Binding powers: + - (10), * / (20), unary minus (25), ^ (30).
  static int lbp(std::string_view op) {
    if (op == "+" || op == "-") return 10;
    if (op == "*" || op == "/") return 20;
    if (op == "^") return 30;
    return -1;
  }

  Value parse_expr(int min_bp) {
    Value left = parse_prefix();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.type != Token::Type::punct) break;
      int bp = lbp(t.text);
      if (bp < 0 || bp < min_bp) break;
      Token op = lex_.next();
      if (op.text == "^") {
        Value rhs = parse_expr(bp);  // right-assoc: same bp re-enters
        left = apply_pow(left, rhs, op.offset);
      } else {
        Value rhs = parse_expr(bp + 1);
        left = apply_bin(op, left, rhs);
      }
    }
    return left;
  }

  Value parse_prefix() {
    const Token& t = lex_.peek();
    if (t.type == Token::Type::punct && t.text == "-") {
      Token op = lex_.next();
      Value v = parse_expr(25);
      Value out;
      out.is_vector = v.is_vector;
      out.offset = op.offset;
      for (const Node& c : v.comps) out.comps.push_back(make_neg(c));
      return out;
    }
    return parse_atom();
  }

  Value parse_atom() {
    Token t = lex_.next();
    Value out;
    out.offset = t.offset;
    switch (t.type) {
      case Token::Type::number:
        out.comps = {make_const(t.number)};
        return out;
      case Token::Type::ident:
        return parse_ident(t);
      case Token::Type::punct:
        if (t.text == "(") {
          Value v = parse_expr(0);
          expect(")");
          v.offset = t.offset;
          return v;
        }
        break;
      case Token::Type::end:
        throw ParseError("unexpected end of input", t.offset);
    }
    throw ParseError("unexpected token '" + std::string(t.text) + "'",
                     t.offset);
  }

  Value parse_ident(const Token& t) {
    Value out;
    out.offset = t.offset;

    // Bare vector variables.
    if (t.text == "x" || t.text == "y") {
      VarKind k = (t.text == "x") ? VarKind::x : VarKind::y;
      out.is_vector = true;
      for (int i = 0; i < d_; ++i) out.comps.push_back(make_var(k, i));
      return out;
    }

    // Indexed variables x<k>, y<k>.
    if ((t.text[0] == 'x' || t.text[0] == 'y') && t.text.size() > 1 &&
        std::isdigit(static_cast<unsigned char>(t.text[1]))) {
      int idx = 0;
      for (std::size_t i = 1; i < t.text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(t.text[i])))
          throw ParseError("unknown identifier '" + std::string(t.text) + "'",
                           t.offset);
        idx = idx * 10 + (t.text[i] - '0');
      }
      if (idx < 1 || idx > d_)
        throw ParseError("variable '" + std::string(t.text) +
                             "' out of range for dimension " +
                             std::to_string(d_),
                         t.offset);
      out.comps = {
          make_var(t.text[0] == 'x' ? VarKind::x : VarKind::y, idx - 1)};
      return out;
    }

    // Function calls.
    static const std::pair<std::string_view, Fn> kFns[] = {
        {"exp", Fn::exp},   {"log", Fn::log},   {"sqrt", Fn::sqrt},
        {"cosh", Fn::cosh}, {"sinh", Fn::sinh}, {"sin", Fn::sin},
        {"cos", Fn::cos}};
    for (auto [name, fn] : kFns) {
      if (t.text == name) {
        expect("(");
        Value arg = parse_expr(0);
        expect(")");
        out.comps = {make_call(fn, arg.scalar("argument"))};
        return out;
      }
    }
    if (t.text == "dot") {
      expect("(");
      Value a = parse_expr(0);
      expect(",");
      Value b = parse_expr(0);
      expect(")");
      if (!a.is_vector || !b.is_vector)
        throw ParseError("dot() expects two vector arguments", t.offset);
      Node sum;
      for (int i = 0; i < d_; ++i) {
        Node term = make_bin(BinOp::mul, a.comps[i], b.comps[i]);
        sum = sum ? make_bin(BinOp::add, sum, term) : term;
      }
      out.comps = {sum};
      return out;
    }
    if (t.text == "norm2") {
      expect("(");
      Value a = parse_expr(0);
      expect(")");
      if (!a.is_vector)
        throw ParseError("norm2() expects a vector argument", t.offset);
      Node sum;
      for (int i = 0; i < d_; ++i) {
        Node term = make_bin(BinOp::mul, a.comps[i], a.comps[i]);
        sum = sum ? make_bin(BinOp::add, sum, term) : term;
      }
      out.comps = {sum};
      return out;
    }
    throw ParseError("unknown identifier '" + std::string(t.text) + "'",
                     t.offset);
  }

  Value apply_bin(const Token& op, const Value& a, const Value& b) {
    BinOp o = op.text == "+"   ? BinOp::add
              : op.text == "-" ? BinOp::sub
              : op.text == "*" ? BinOp::mul
                               : BinOp::div;
    Value out;
    out.offset = a.offset;
    if (!a.is_vector && !b.is_vector) {
      out.comps = {make_bin(o, a.comps[0], b.comps[0])};
      return out;
    }
    // Vector arithmetic sugar: +/- componentwise, scalar scaling either side,
    // division by a scalar.
    if (a.is_vector && b.is_vector && (o == BinOp::add || o == BinOp::sub)) {
      out.is_vector = true;
      for (int i = 0; i < d_; ++i)
        out.comps.push_back(make_bin(o, a.comps[i], b.comps[i]));
      return out;
    }
    if (o == BinOp::mul && (a.is_vector != b.is_vector)) {
      const Value& vec = a.is_vector ? a : b;
      const Value& sca = a.is_vector ? b : a;
      out.is_vector = true;
      for (int i = 0; i < d_; ++i)
        out.comps.push_back(make_bin(BinOp::mul, sca.comps[0], vec.comps[i]));
      return out;
    }
    if (o == BinOp::div && a.is_vector && !b.is_vector) {
      out.is_vector = true;
      for (int i = 0; i < d_; ++i)
        out.comps.push_back(make_bin(BinOp::div, a.comps[i], b.comps[0]));
      return out;
    }
    throw ParseError("operator '" + std::string(op.text) +
                         "' not defined for these vector operands",
                     op.offset);
  }

  Value apply_pow(const Value& base, const Value& expo, std::size_t op_off) {
    if (base.is_vector || expo.is_vector)
      throw ParseError("'^' is not defined for vectors", op_off);
    std::optional<double> folded = const_fold(expo.comps[0]);
    if (!folded)
      throw ParseError("'^' exponent must fold to a constant", op_off);
    Value out;
    out.offset = base.offset;
    out.comps = {make_bin(BinOp::pow, base.comps[0], make_const(*folded))};
    return out;
  }

  static std::optional<double> const_fold(const Node& n) {
    switch (n->kind) {
      case Kind::constant:
        return n->value;
      case Kind::neg: {
        auto c = const_fold(n->lhs);
        if (c) return -*c;
        return std::nullopt;
      }
      case Kind::binary: {
        auto a = const_fold(n->lhs), b = const_fold(n->rhs);
        if (!a || !b) return std::nullopt;
        switch (n->op) {
          case BinOp::add: return *a + *b;
          case BinOp::sub: return *a - *b;
          case BinOp::mul: return *a * *b;
          case BinOp::div: return *a / *b;
          case BinOp::pow: return std::pow(*a, *b);
        }
        return std::nullopt;
      }
      default:
        return std::nullopt;
    }
  }

  void expect(std::string_view punct) {
    const Token& t = lex_.peek();
    if (t.type != Token::Type::punct || t.text != punct)
      throw ParseError("expected '" + std::string(punct) + "'", t.offset);
    lex_.next();
  }

  Lexer lex_;
  int d_;
};

// -------------------------------------------------------------- printer --

int prec_of(const ExprNode& n) {
  switch (n.kind) {
    case Kind::binary:
      switch (n.op) {
        case BinOp::add:
        case BinOp::sub: return 10;
        case BinOp::mul:
        case BinOp::div: return 20;
        case BinOp::pow: return 30;
      }
      return 100;
    case Kind::neg: return 25;
    default: return 100;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

void print_node(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case Kind::constant: {
      if (n.value < 0 || std::signbit(n.value)) {
        // Negative literals re-lex as unary minus; parenthesize to keep the
        // round-trip structural.
        out += "(" + format_number(n.value) + ")";
      } else {
        out += format_number(n.value);
      }
      return;
    }
    case Kind::var:
      out += (n.var_kind == VarKind::x ? 'x' : 'y');
      out += std::to_string(n.var_index + 1);
      return;
    case Kind::neg: {
      out += '-';
      bool parens = prec_of(*n.lhs) <= 25;
      if (parens) out += '(';
      print_node(*n.lhs, out);
      if (parens) out += ')';
      return;
    }
    case Kind::binary: {
      const int p = prec_of(n);
      const char* ops[] = {" + ", " - ", "*", "/", "^"};
      // Left-assoc ops allow equal precedence on the left; '^' is the
      // mirror image.
      bool lparen, rparen;
      if (n.op == BinOp::pow) {
        lparen = prec_of(*n.lhs) <= p;
        rparen = prec_of(*n.rhs) < p;
      } else {
        lparen = prec_of(*n.lhs) < p;
        rparen = prec_of(*n.rhs) <= p;
      }
      if (lparen) out += '(';
      print_node(*n.lhs, out);
      if (lparen) out += ')';
      out += ops[static_cast<int>(n.op)];
      if (rparen) out += '(';
      print_node(*n.rhs, out);
      if (rparen) out += ')';
      return;
    }
    case Kind::call: {
      const char* names[] = {"exp", "log", "sqrt", "cosh", "sinh", "sin",
                             "cos"};
      out += names[static_cast<int>(n.fn)];
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      return;
    }
  }
}

// ------------------------------------------------------------ evaluator --

template <class T>
struct Ops;

template <>
struct Ops<double> {
  static double c_exp(double v) { return std::exp(v); }
  static double c_log(double v) {
    if (v <= 0.0) throw DomainError("log of nonpositive value");
    return std::log(v);
  }
  static double c_sqrt(double v) {
    if (v < 0.0) throw DomainError("sqrt of negative value");
    return std::sqrt(v);
  }
  static double c_cosh(double v) { return std::cosh(v); }
  static double c_sinh(double v) { return std::sinh(v); }
  static double c_sin(double v) { return std::sin(v); }
  static double c_cos(double v) { return std::cos(v); }
  static double c_pow(double b, double e) {
    double r = std::round(e);
    if (e == r) return std::pow(b, e);
    if (b <= 0.0)
      throw DomainError("pow with non-integer exponent needs positive base");
    return std::pow(b, e);
  }
  static double c_div(double a, double b) { return a / b; }
};

template <>
struct Ops<Jet> {
  static Jet c_exp(const Jet& v) { return exp(v); }
  static Jet c_log(const Jet& v) { return log(v); }
  static Jet c_sqrt(const Jet& v) { return sqrt(v); }
  static Jet c_cosh(const Jet& v) { return cosh(v); }
  static Jet c_sinh(const Jet& v) { return sinh(v); }
  static Jet c_sin(const Jet& v) { return sin(v); }
  static Jet c_cos(const Jet& v) { return cos(v); }
  static Jet c_pow(const Jet& b, double e) { return pow(b, e); }
  static Jet c_div(const Jet& a, const Jet& b) { return a / b; }
};

template <class T>
T eval_node(const ExprNode& n, std::span<const T> x, std::span<const T> y,
            const T& zero) {
  switch (n.kind) {
    case Kind::constant:
      if constexpr (std::is_same_v<T, double>) {
        return n.value;
      } else {
        return zero + n.value;
      }
    case Kind::var:
      return (n.var_kind == VarKind::x) ? x[n.var_index] : y[n.var_index];
    case Kind::neg:
      return -eval_node(*n.lhs, x, y, zero);
    case Kind::binary: {
      if (n.op == BinOp::pow) {
        T b = eval_node(*n.lhs, x, y, zero);
        return Ops<T>::c_pow(b, n.rhs->value);
      }
      T a = eval_node(*n.lhs, x, y, zero);
      T b = eval_node(*n.rhs, x, y, zero);
      switch (n.op) {
        case BinOp::add: return a + b;
        case BinOp::sub: return a - b;
        case BinOp::mul: return a * b;
        case BinOp::div: return Ops<T>::c_div(a, b);
        case BinOp::pow: break;  // handled above
      }
      return a;
    }
    case Kind::call: {
      T a = eval_node(*n.lhs, x, y, zero);
      switch (n.fn) {
        case Fn::exp: return Ops<T>::c_exp(a);
        case Fn::log: return Ops<T>::c_log(a);
        case Fn::sqrt: return Ops<T>::c_sqrt(a);
        case Fn::cosh: return Ops<T>::c_cosh(a);
        case Fn::sinh: return Ops<T>::c_sinh(a);
        case Fn::sin: return Ops<T>::c_sin(a);
        case Fn::cos: return Ops<T>::c_cos(a);
      }
      return a;
    }
  }
  return zero;
}

bool node_equal(const Node& a, const Node& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Kind::constant: return a->value == b->value;
    case Kind::var:
      return a->var_kind == b->var_kind && a->var_index == b->var_index;
    case Kind::neg: return node_equal(a->lhs, b->lhs);
    case Kind::binary:
      return a->op == b->op && node_equal(a->lhs, b->lhs) &&
             node_equal(a->rhs, b->rhs);
    case Kind::call: return a->fn == b->fn && node_equal(a->lhs, b->lhs);
  }
  return false;
}

}  // namespace

Expr Expr::parse(std::string_view source, int d) {
  if (d < 1 || d > kMaxJetVars / 2)
    throw ParseError("dimension out of range", 0);
  Parser p(source, d);
  return Expr(p.run(), d);
}

std::string Expr::print() const {
  if (!root_) return {};
  std::string out;
  print_node(*root_, out);
  return out;
}

Jet Expr::eval_jet(std::span<const Jet> x_jets,
                   std::span<const Jet> y_jets) const {
  if (static_cast<int>(x_jets.size()) < d_ ||
      static_cast<int>(y_jets.size()) < d_)
    throw CapabilityError("eval_jet: not enough variable jets supplied");
  Jet zero = Jet::constant(0.0, x_jets[0].num_vars(), x_jets[0].order(),
                           x_jets[0].base());
  return eval_node<Jet>(*root_, x_jets, y_jets, zero);
}

double Expr::eval(std::span<const double> x, std::span<const double> y) const {
  return eval_node<double>(*root_, x, y, 0.0);
}

bool operator==(const Expr& a, const Expr& b) {
  return a.d_ == b.d_ && node_equal(a.root_, b.root_);
}

}  // namespace geolap
