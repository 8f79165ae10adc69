#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

namespace topoderiv {

/// Compiled scalar expression over the coordinates x, y, z.
///
/// Grammar (whitelist, nothing else evaluates):
///   expr    := term (('+'|'-') term)*
///   term    := factor (('*'|'/') factor)*
///   factor  := unary ('^' factor)?            (right associative)
///   unary   := ('-'|'+') unary | primary
///   primary := number | 'x' | 'y' | 'z' | 'pi' | 'e'
///            | func '(' expr ')' | '(' expr ')'
///   func    := sin | cos | tan | exp | log | sqrt
class Expression {
public:
    /// Parses; throws std::invalid_argument with a column-numbered message.
    static Expression parse(const std::string& text);

    double eval(const Eigen::Vector3d& p) const;
    double eval(double x, double y, double z = 0.0) const;

    const std::string& text() const { return text_; }
    bool empty() const { return ops_.empty(); }

private:
    enum class Op : unsigned char {
        Const, X, Y, Z,
        Add, Sub, Mul, Div, Pow, Neg,
        Sin, Cos, Tan, Exp, Log, Sqrt
    };
    struct Node {
        Op op;
        double value;  // for Const
    };

    std::string text_;
    std::vector<Node> ops_;  // postfix program
    friend class ExpressionParser;
};

/// Vector-valued expression: comma-separated component expressions,
/// e.g. "0, -1"  or  "sin(pi*x)*y, x^2 - y".
class VectorExpression {
public:
    VectorExpression() = default;

    /// Parses `text` into `dim` components; a single "0" expands to a zero
    /// vector of the right size.
    static VectorExpression parse(const std::string& text, int dim);

    static VectorExpression zero(int dim);
    static VectorExpression constant(const Eigen::Vector3d& c, int dim);

    Eigen::Vector3d eval(const Eigen::Vector3d& p) const;

    /// Gradient d(component i)/d(coordinate j) by 4th-order central
    /// differences; adequate for the smooth whitelisted closures.
    Eigen::Matrix3d gradient(const Eigen::Vector3d& p, double step = 1e-4) const;

    int dim() const { return dim_; }
    bool is_zero() const;
    const std::string& text() const { return text_; }

private:
    int dim_ = 0;
    std::string text_;
    std::vector<Expression> comps_;
};

}  // namespace topoderiv
