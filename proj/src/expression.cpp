#include "rsmc/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "rsmc/errors.hpp"

namespace rsmc {

struct Expression::Node {
    enum class Kind { Constant, VarT, VarX, Add, Sub, Mul, Div, Pow, Neg, Cos, Sin, Exp };
    Kind kind;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double value = 0.0) {
    auto node = std::make_shared<Expression::Node>();
    node->kind = kind;
    node->value = value;
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
}

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    NodePtr run() {
        NodePtr e = expression();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression \"" + text_ + "\": " + what);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    NodePtr expression() {
        NodePtr lhs = term();
        for (;;) {
            if (consume('+')) {
                lhs = make(Kind::Add, lhs, term());
            } else if (consume('-')) {
                lhs = make(Kind::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            if (consume('*')) {
                lhs = make(Kind::Mul, lhs, factor());
            } else if (consume('/')) {
                lhs = make(Kind::Div, lhs, factor());
            } else {
                return lhs;
            }
        }
    }

    // unary minus binds looser than '^': -x^2 parses as -(x^2)
    NodePtr factor() {
        if (consume('-')) return make(Kind::Neg, factor());
        NodePtr base = primary();
        if (consume('^')) {
            return make(Kind::Pow, base, factor());  // right associative
        }
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        if (consume('(')) {
            NodePtr e = expression();
            if (!consume(')')) fail("missing ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("bad numeric literal");
        pos_ += static_cast<std::size_t>(end - begin);
        return make(Kind::Constant, nullptr, nullptr, v);
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        const std::string name = text_.substr(start, pos_ - start);
        if (name == "t") return make(Kind::VarT);
        if (name == "x") return make(Kind::VarX);
        if (name == "cos" || name == "sin" || name == "exp") {
            if (!consume('(')) fail(name + " needs parentheses");
            NodePtr arg = expression();
            if (!consume(')')) fail("missing ')'");
            if (name == "cos") return make(Kind::Cos, arg);
            if (name == "sin") return make(Kind::Sin, arg);
            return make(Kind::Exp, arg);
        }
        fail("unknown identifier \"" + name + "\"");
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

double eval_node(const Expression::Node& node, double t, double x) {
    switch (node.kind) {
        case Kind::Constant: return node.value;
        case Kind::VarT: return t;
        case Kind::VarX: return x;
        case Kind::Add: return eval_node(*node.lhs, t, x) + eval_node(*node.rhs, t, x);
        case Kind::Sub: return eval_node(*node.lhs, t, x) - eval_node(*node.rhs, t, x);
        case Kind::Mul: return eval_node(*node.lhs, t, x) * eval_node(*node.rhs, t, x);
        case Kind::Div: return eval_node(*node.lhs, t, x) / eval_node(*node.rhs, t, x);
        case Kind::Pow: return std::pow(eval_node(*node.lhs, t, x), eval_node(*node.rhs, t, x));
        case Kind::Neg: return -eval_node(*node.lhs, t, x);
        case Kind::Cos: return std::cos(eval_node(*node.lhs, t, x));
        case Kind::Sin: return std::sin(eval_node(*node.lhs, t, x));
        case Kind::Exp: return std::exp(eval_node(*node.lhs, t, x));
    }
    return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Expression expr;
    expr.root_ = Parser(text).run();
    expr.text_ = text;
    return expr;
}

double Expression::eval(double t, double x) const {
    return eval_node(*root_, t, x);
}

}  // namespace rsmc
