#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pucci {

// Parse failure with the byte offset of the offending token.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, size_t at)
        : std::runtime_error(msg + " (at byte " + std::to_string(at) + ")"), offset(at) {}
    size_t offset;
};

// A scalar field over R^dim defined by a small expression language:
//   additive < multiplicative < unary minus < power < atoms
// Atoms are decimal literals, x1..xN, r (= |x|), sin/cos/exp/abs/min/max,
// and parenthesized expressions.  '^' is right-associative and takes integer
// literal exponents only; '/' divides by nonzero numeric literals only, so
// every parsed field is total on R^dim.
class ScalarField {
public:
    static ScalarField parse(std::string_view text, int dim);
    static ScalarField constant(double v, int dim);

    double eval(const double* x, int n) const;
    double eval(const std::vector<double>& x) const { return eval(x.data(), int(x.size())); }

    // Fully parenthesized form; parsing it back yields the same function and
    // the same canonical form.
    std::string canonical() const;

    // True when no variable (x_i or r) appears; *value receives the constant.
    bool is_constant(double* value = nullptr) const;

    int dim() const { return dim_; }
    const std::string& source() const { return source_; }

    // field + shift, used by comparison diagnostics
    ScalarField shifted(double delta) const;

    struct Node;  // opaque; defined with the parser

private:
    ScalarField() = default;
    int dim_ = 0;
    std::string source_;
    std::shared_ptr<const std::vector<Node>> nodes_;  // root is the last entry
    friend struct ExprParser;
};

}  // namespace pucci
