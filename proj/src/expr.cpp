#include "chronoctl/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "chronoctl/errors.hpp"

namespace chronoctl {

struct Expr::Node {
  Kind kind;
  double value = 0.0;
  char name = 's';
  Function fn = Function::exp;
  int exponent = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

const char* function_name(Expr::Function fn) {
  switch (fn) {
    case Expr::Function::exp: return "exp";
    case Expr::Function::sin: return "sin";
    case Expr::Function::cos: return "cos";
    case Expr::Function::abs: return "abs";
  }
  return "?";
}

double int_power(double base, int exponent) {
  if (exponent < 0) {
    if (base == 0.0) throw EvalError("division by zero");
    return 1.0 / int_power(base, -exponent);
  }
  double result = 1.0;
  double b = base;
  for (unsigned e = static_cast<unsigned>(exponent); e != 0; e >>= 1) {
    if (e & 1u) result *= b;
    b *= b;
  }
  return result;
}

double eval_node(const Expr::Node& n, double s) {
  using K = Expr::Kind;
  switch (n.kind) {
    case K::number: return n.value;
    case K::variable: return s;
    case K::negate: return -eval_node(*n.lhs, s);
    case K::add: return eval_node(*n.lhs, s) + eval_node(*n.rhs, s);
    case K::sub: return eval_node(*n.lhs, s) - eval_node(*n.rhs, s);
    case K::mul: return eval_node(*n.lhs, s) * eval_node(*n.rhs, s);
    case K::div: {
      double num = eval_node(*n.lhs, s);
      double den = eval_node(*n.rhs, s);
      if (den == 0.0) throw EvalError("division by zero");
      return num / den;
    }
    case K::pow: return int_power(eval_node(*n.lhs, s), n.exponent);
    case K::call: {
      double x = eval_node(*n.lhs, s);
      switch (n.fn) {
        case Expr::Function::exp: return std::exp(x);
        case Expr::Function::sin: return std::sin(x);
        case Expr::Function::cos: return std::cos(x);
        case Expr::Function::abs: return std::abs(x);
      }
    }
  }
  throw EvalError("corrupt expression node");
}

bool has_variable(const Expr::Node& n) {
  if (n.kind == Expr::Kind::variable) return true;
  if (n.lhs && has_variable(*n.lhs)) return true;
  return n.rhs && has_variable(*n.rhs);
}

bool equal_nodes(const Expr::Node& a, const Expr::Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::number: return a.value == b.value;
    case Expr::Kind::variable: return a.name == b.name;
    case Expr::Kind::pow:
      return a.exponent == b.exponent && equal_nodes(*a.lhs, *b.lhs);
    case Expr::Kind::call: return a.fn == b.fn && equal_nodes(*a.lhs, *b.lhs);
    case Expr::Kind::negate: return equal_nodes(*a.lhs, *b.lhs);
    default: return equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
  }
}

int precedence(const Expr::Node& n) {
  switch (n.kind) {
    case Expr::Kind::add:
    case Expr::Kind::sub: return 1;
    case Expr::Kind::mul:
    case Expr::Kind::div: return 2;
    case Expr::Kind::negate: return 3;
    case Expr::Kind::pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string print_node(const Expr::Node& n, int min_prec);

std::string wrap(const Expr::Node& n, int min_prec) {
  std::string body = print_node(n, 0);
  return precedence(n) < min_prec ? "(" + body + ")" : body;
}

std::string print_node(const Expr::Node& n, int /*min_prec*/) {
  using K = Expr::Kind;
  switch (n.kind) {
    case K::number: return format_number(n.value);
    case K::variable: return std::string(1, n.name);
    case K::negate:
      if (n.lhs->kind == K::variable) return "-" + print_node(*n.lhs, 0);
      return "-(" + print_node(*n.lhs, 0) + ")";
    case K::add: return wrap(*n.lhs, 1) + " + " + wrap(*n.rhs, 2);
    case K::sub: return wrap(*n.lhs, 1) + " - " + wrap(*n.rhs, 2);
    case K::mul: return wrap(*n.lhs, 2) + " * " + wrap(*n.rhs, 3);
    case K::div: return wrap(*n.lhs, 2) + " / " + wrap(*n.rhs, 3);
    case K::pow: return wrap(*n.lhs, 5) + "^" + std::to_string(n.exponent);
    case K::call: return std::string(function_name(n.fn)) + "(" + print_node(*n.lhs, 0) + ")";
  }
  return "?";
}

NodePtr reflect(const NodePtr& n) {
  if (n->kind == Expr::Kind::variable) {
    auto neg = std::make_shared<Expr::Node>();
    neg->kind = Expr::Kind::negate;
    neg->lhs = n;
    return neg;
  }
  if (!n->lhs) return n;
  auto copy = std::make_shared<Expr::Node>(*n);
  copy->lhs = reflect(n->lhs);
  if (n->rhs) copy->rhs = reflect(n->rhs);
  return copy;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse_all() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ < text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(Expr::Kind::add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = Expr::binary(Expr::Kind::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(Expr::Kind::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expr::binary(Expr::Kind::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return Expr::negate(parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t start = pos_;
    bool negative = accept('-');
    skip_ws();
    const std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == digits) {
      pos_ = start;
      fail("exponent must be an integer literal");
    }
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
      fail("exponent must be an integer literal");
    }
    int exponent = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, exponent);
    if (ec != std::errc() || exponent > 1024) {
      pos_ = digits;
      fail("exponent out of range");
    }
    (void)ptr;
    if (accept('^')) {
      --pos_;
      fail("chained '^' needs parentheses");
    }
    return Expr::power(base, negative ? -exponent : exponent);
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::string_view id = text_.substr(start, pos_ - start);
      if (id == "s" || id == "t") return Expr::variable(id.front());
      Expr::Function fn;
      if (id == "exp") {
        fn = Expr::Function::exp;
      } else if (id == "sin") {
        fn = Expr::Function::sin;
      } else if (id == "cos") {
        fn = Expr::Function::cos;
      } else if (id == "abs") {
        fn = Expr::Function::abs;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(id) + "'");
      }
      if (!accept('(')) fail("expected '(' after " + std::string(id));
      Expr arg = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return Expr::call(fn, arg);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      std::size_t exp_digits = pos_;
      digits();
      if (pos_ == exp_digits) pos_ = save;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr::number(value);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::number(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::number;
  n->value = std::abs(value);
  Expr e{n};
  return std::signbit(value) && value != 0.0 ? negate(e) : e;
}

Expr Expr::variable(char name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::variable;
  n->name = name;
  return Expr{n};
}

Expr Expr::negate(Expr operand) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::negate;
  n->lhs = std::move(operand.node_);
  return Expr{n};
}

Expr Expr::binary(Kind kind, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs.node_);
  n->rhs = std::move(rhs.node_);
  return Expr{n};
}

Expr Expr::power(Expr base, int exponent) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::pow;
  n->lhs = std::move(base.node_);
  n->exponent = exponent;
  return Expr{n};
}

Expr Expr::call(Function fn, Expr arg) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::call;
  n->fn = fn;
  n->lhs = std::move(arg.node_);
  return Expr{n};
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::eval(double s) const { return eval_node(*node_, s); }
bool Expr::is_constant() const { return !has_variable(*node_); }
Expr Expr::reflect_time() const { return Expr{reflect(node_)}; }
std::string Expr::print() const { return print_node(*node_, 0); }
bool Expr::operator==(const Expr& other) const { return equal_nodes(*node_, *other.node_); }

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

MatrixExpr::MatrixExpr(Eigen::Index rows, Eigen::Index cols, std::vector<Expr> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != entries_.size()) {
    throw DomainError("matrix expression is not rectangular");
  }
}

MatrixExpr MatrixExpr::parse(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) throw DomainError("matrix expression has no rows");
  const std::size_t cols = rows.front().size();
  std::vector<Expr> entries;
  for (const auto& row : rows) {
    if (row.size() != cols) throw DomainError("matrix expression is not rectangular");
    for (const auto& cell : row) entries.push_back(chronoctl::parse(cell));
  }
  return MatrixExpr(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols),
                    std::move(entries));
}

MatrixExpr MatrixExpr::constant(const Eigen::MatrixXd& m) {
  std::vector<Expr> entries;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) entries.push_back(Expr::number(m(r, c)));
  }
  return MatrixExpr(m.rows(), m.cols(), std::move(entries));
}

MatrixExpr MatrixExpr::zero(Eigen::Index rows, Eigen::Index cols) {
  return constant(Eigen::MatrixXd::Zero(rows, cols));
}

Eigen::MatrixXd MatrixExpr::eval(double s) const {
  Eigen::MatrixXd m(rows_, cols_);
  for (Eigen::Index r = 0; r < rows_; ++r) {
    for (Eigen::Index c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c).eval(s);
  }
  return m;
}

bool MatrixExpr::is_constant() const {
  for (const auto& e : entries_) {
    if (!e.is_constant()) return false;
  }
  return true;
}

MatrixExpr MatrixExpr::reflect_time(bool negate) const {
  std::vector<Expr> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) {
    Expr r = e.reflect_time();
    out.push_back(negate ? Expr::negate(r) : r);
  }
  return MatrixExpr(rows_, cols_, std::move(out));
}

std::vector<std::vector<std::string>> MatrixExpr::print() const {
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(rows_));
  for (Eigen::Index r = 0; r < rows_; ++r) {
    for (Eigen::Index c = 0; c < cols_; ++c) out[static_cast<std::size_t>(r)].push_back((*this)(r, c).print());
  }
  return out;
}

}  // namespace chronoctl
