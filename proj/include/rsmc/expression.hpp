#pragma once

#include <memory>
#include <string>

namespace rsmc {

// Minimal arithmetic grammar for config-defined coefficient functions:
// +, -, *, /, ^, unary minus, parentheses, numeric literals, the variables
// t and x, and the functions cos, sin, exp.
class Expression {
public:
    static Expression parse(const std::string& text);  // throws ConfigError

    double eval(double t, double x) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

}  // namespace rsmc
