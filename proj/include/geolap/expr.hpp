#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geolap/errors.hpp"
#include "geolap/jet.hpp"

namespace geolap {

// Scalar expression AST over the variables x1..xd, y1..yd.  Vector sugar
// (bare `x`, `y`, `dot`, `norm2`) is expanded during parsing, so stored
// trees contain only scalar nodes.
struct ExprNode {
  enum class Kind { constant, var, neg, binary, call };
  enum class VarKind { x, y };
  enum class BinOp { add, sub, mul, div, pow };
  enum class Fn { exp, log, sqrt, cosh, sinh, sin, cos };

  Kind kind;
  double value = 0.0;             // constant
  VarKind var_kind = VarKind::x;  // var
  int var_index = 0;              // var, 0-based
  BinOp op = BinOp::add;          // binary
  Fn fn = Fn::exp;                // call
  std::shared_ptr<const ExprNode> lhs, rhs;  // neg/call use lhs only
};

class Expr {
 public:
  Expr() = default;

  // Parse `source` against dimension d.  Honors the precedence chain
  // ^  >  unary minus  >  * /  >  + -  with ^ right-associative; `^`
  // exponents must fold to a constant at parse time.  Reports ParseError
  // with a byte offset on any lexical, syntactic, or arity problem.
  static Expr parse(std::string_view source, int d);

  bool empty() const { return root_ == nullptr; }
  int dim() const { return d_; }
  const ExprNode& root() const { return *root_; }

  // Canonical text form; parse(print(e), d) is structurally equal to e.
  std::string print() const;

  // Evaluate on jets of the 2d ambient variables (x first) sharing one
  // truncation space, or on plain points.
  Jet eval_jet(std::span<const Jet> x_jets, std::span<const Jet> y_jets) const;
  double eval(std::span<const double> x, std::span<const double> y) const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  Expr(std::shared_ptr<const ExprNode> root, int d)
      : root_(std::move(root)), d_(d) {}

  std::shared_ptr<const ExprNode> root_;
  int d_ = 0;
};

}  // namespace geolap
