#include "topoderiv/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace topoderiv {

class ExpressionParser {
public:
    explicit ExpressionParser(const std::string& s) : s_(s) {}

    std::vector<Expression::Node> run() {
        std::vector<Expression::Node> out;
        parse_expr(out);
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return out;
    }

private:
    using Node = Expression::Node;
    using Op = Expression::Op;

    void parse_expr(std::vector<Node>& out) {
        parse_term(out);
        for (;;) {
            skip_ws();
            if (accept('+')) {
                parse_term(out);
                out.push_back({Op::Add, 0});
            } else if (accept('-')) {
                parse_term(out);
                out.push_back({Op::Sub, 0});
            } else {
                return;
            }
        }
    }

    void parse_term(std::vector<Node>& out) {
        parse_factor(out);
        for (;;) {
            skip_ws();
            if (accept('*')) {
                parse_factor(out);
                out.push_back({Op::Mul, 0});
            } else if (accept('/')) {
                parse_factor(out);
                out.push_back({Op::Div, 0});
            } else {
                return;
            }
        }
    }

    void parse_factor(std::vector<Node>& out) {
        parse_unary(out);
        skip_ws();
        if (accept('^')) {
            parse_factor(out);  // right associative
            out.push_back({Op::Pow, 0});
        }
    }

    void parse_unary(std::vector<Node>& out) {
        skip_ws();
        if (accept('-')) {
            parse_unary(out);
            out.push_back({Op::Neg, 0});
        } else if (accept('+')) {
            parse_unary(out);
        } else {
            parse_primary(out);
        }
    }

    void parse_primary(std::vector<Node>& out) {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            out.push_back({Op::Const, v});
            return;
        }
        if (c == '(') {
            ++pos_;
            parse_expr(out);
            expect(')');
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::string id;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) id += s_[pos_++];
            if (id == "x") { out.push_back({Op::X, 0}); return; }
            if (id == "y") { out.push_back({Op::Y, 0}); return; }
            if (id == "z") { out.push_back({Op::Z, 0}); return; }
            if (id == "pi") { out.push_back({Op::Const, M_PI}); return; }
            if (id == "e") { out.push_back({Op::Const, M_E}); return; }
            Op fop;
            if (id == "sin") fop = Op::Sin;
            else if (id == "cos") fop = Op::Cos;
            else if (id == "tan") fop = Op::Tan;
            else if (id == "exp") fop = Op::Exp;
            else if (id == "log") fop = Op::Log;
            else if (id == "sqrt") fop = Op::Sqrt;
            else fail("unknown identifier '" + id + "' (whitelist: x y z pi e sin cos tan exp log sqrt)");
            skip_ws();
            expect('(');
            parse_expr(out);
            expect(')');
            out.push_back({fop, 0});
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    void expect(char c) {
        skip_ws();
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    [[noreturn]] void fail(const std::string& msg) {
        std::ostringstream os;
        os << "expression error at column " << (pos_ + 1) << ": " << msg << " in \"" << s_ << "\"";
        throw std::invalid_argument(os.str());
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    e.ops_ = ExpressionParser(text).run();
    return e;
}

double Expression::eval(const Eigen::Vector3d& p) const { return eval(p.x(), p.y(), p.z()); }

double Expression::eval(double x, double y, double z) const {
    double stack[64];
    int top = 0;
    for (const Node& n : ops_) {
        switch (n.op) {
            case Op::Const: stack[top++] = n.value; break;
            case Op::X: stack[top++] = x; break;
            case Op::Y: stack[top++] = y; break;
            case Op::Z: stack[top++] = z; break;
            case Op::Add: --top; stack[top - 1] += stack[top]; break;
            case Op::Sub: --top; stack[top - 1] -= stack[top]; break;
            case Op::Mul: --top; stack[top - 1] *= stack[top]; break;
            case Op::Div: --top; stack[top - 1] /= stack[top]; break;
            case Op::Pow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
            case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
            case Op::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
            case Op::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
            case Op::Tan: stack[top - 1] = std::tan(stack[top - 1]); break;
            case Op::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
            case Op::Log: stack[top - 1] = std::log(stack[top - 1]); break;
            case Op::Sqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
        }
        if (top >= 63) throw std::runtime_error("expression too deep");
    }
    return top == 1 ? stack[0] : 0.0;
}

VectorExpression VectorExpression::parse(const std::string& text, int dim) {
    VectorExpression v;
    v.dim_ = dim;
    v.text_ = text;
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    for (char c : text) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    if (parts.size() == 1 && dim > 1) {
        // allow scalar "0" shorthand for the zero vector
        Expression e = Expression::parse(parts[0]);
        if (e.eval(0.3, 0.7, 0.1) == 0.0 && e.eval(-1.1, 2.2, 0.5) == 0.0) {
            return zero(dim);
        }
        throw std::invalid_argument("vector expression needs " + std::to_string(dim) +
                                    " comma-separated components: \"" + text + "\"");
    }
    if (static_cast<int>(parts.size()) != dim)
        throw std::invalid_argument("vector expression has " + std::to_string(parts.size()) +
                                    " components, expected " + std::to_string(dim) + ": \"" + text + "\"");
    for (const auto& p : parts) v.comps_.push_back(Expression::parse(p));
    return v;
}

VectorExpression VectorExpression::zero(int dim) {
    VectorExpression v;
    v.dim_ = dim;
    v.text_ = "0";
    for (int i = 0; i < dim; ++i) v.comps_.push_back(Expression::parse("0"));
    return v;
}

VectorExpression VectorExpression::constant(const Eigen::Vector3d& c, int dim) {
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < dim; ++i) {
        if (i) os << ", ";
        os << c[i];
    }
    return parse(os.str(), dim);
}

Eigen::Vector3d VectorExpression::eval(const Eigen::Vector3d& p) const {
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    for (int i = 0; i < dim_; ++i) r[i] = comps_[i].eval(p);
    return r;
}

Eigen::Matrix3d VectorExpression::gradient(const Eigen::Vector3d& p, double step) const {
    Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
    for (int j = 0; j < dim_; ++j) {
        Eigen::Vector3d dp = Eigen::Vector3d::Zero();
        dp[j] = step;
        const Eigen::Vector3d f1 = eval(p + dp), f_1 = eval(p - dp);
        const Eigen::Vector3d f2 = eval(p + 2 * dp), f_2 = eval(p - 2 * dp);
        const Eigen::Vector3d d = (8.0 * (f1 - f_1) - (f2 - f_2)) / (12.0 * step);
        for (int i = 0; i < dim_; ++i) G(i, j) = d[i];
    }
    return G;
}

bool VectorExpression::is_zero() const {
    if (comps_.empty()) return true;
    // probe at irrational points; a polynomial vanishing at all of them is zero
    // for every expression a user can realistically write in the config grammar
    const Eigen::Vector3d probes[3] = {
        {0.31830988618379067, 0.63661977236758138, 0.27182818284590452},
        {-0.57721566490153286, 0.41421356237309515, -0.73205080756887729},
        {0.70710678118654752, -0.86602540378443865, 0.57735026918962576},
    };
    for (const auto& p : probes)
        if (eval(p).head(dim_).norm() != 0.0) return false;
    return true;
}

}  // namespace topoderiv
