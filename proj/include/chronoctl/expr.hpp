#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace chronoctl {

/// Immutable scalar expression in one time variable (`s` or `t`).
///
/// Grammar, loosest binding first:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' ['-'] integer)?
///   primary := number | 's' | 't' | fn '(' expr ')' | '(' expr ')'
///   fn      := exp | sin | cos | abs
class Expr {
 public:
  enum class Kind { number, variable, negate, add, sub, mul, div, pow, call };
  enum class Function { exp, sin, cos, abs };

  /// Negative values become negate(number(|v|)) so printed text reparses to
  /// the same tree.
  static Expr number(double value);
  static Expr variable(char name = 's');
  static Expr negate(Expr operand);
  static Expr binary(Kind kind, Expr lhs, Expr rhs);
  static Expr power(Expr base, int exponent);
  static Expr call(Function fn, Expr arg);

  Kind kind() const;

  /// IEEE double evaluation. Throws EvalError on division by zero.
  double eval(double s) const;

  /// True when the tree contains no variable.
  bool is_constant() const;

  /// Replaces every occurrence of the variable by its negation (s -> -s).
  Expr reflect_time() const;

  /// Canonical text. parse(e.print()) == e for every tree.
  std::string print() const;

  bool operator==(const Expr& other) const;

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Throws ParseError (with byte position) on malformed text or unknown
/// identifiers.
Expr parse(std::string_view text);

inline double eval(const Expr& e, double s) { return e.eval(s); }

/// Rectangular matrix of expressions, row-major.
class MatrixExpr {
 public:
  MatrixExpr() = default;
  MatrixExpr(Eigen::Index rows, Eigen::Index cols, std::vector<Expr> entries);

  static MatrixExpr parse(const std::vector<std::vector<std::string>>& rows);
  static MatrixExpr constant(const Eigen::MatrixXd& m);
  static MatrixExpr zero(Eigen::Index rows, Eigen::Index cols);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  const Expr& operator()(Eigen::Index r, Eigen::Index c) const {
    return entries_[static_cast<std::size_t>(r * cols_ + c)];
  }

  Eigen::MatrixXd eval(double s) const;
  bool is_constant() const;

  /// Entrywise s -> -s, optionally negating every entry.
  MatrixExpr reflect_time(bool negate) const;

  std::vector<std::vector<std::string>> print() const;

  bool operator==(const MatrixExpr& other) const = default;

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<Expr> entries_;
};

inline Eigen::MatrixXd eval_matrix(const MatrixExpr& m, double s) { return m.eval(s); }

}  // namespace chronoctl
