#include "pucci/exprlang.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace pucci {

enum class Op : uint8_t { num, var, rad, neg, add, sub, mul, div, pow, sin, cos, exp, abs, min, max };

struct ScalarField::Node {
    Op op;
    int32_t a = -1, b = -1;  // child indices / var index / integer exponent
    double num = 0.0;        // literal or divisor
};

namespace {

struct Token {
    enum Type { number, ident, op, end } type;
    size_t offset;
    std::string text;
    double value = 0.0;
    char symbol = 0;
};

struct Lexer {
    std::string_view src;
    size_t pos = 0;

    Token next() {
        while (pos < src.size() && std::isspace(uint8_t(src[pos]))) ++pos;
        Token t;
        t.offset = pos;
        if (pos >= src.size()) {
            t.type = Token::end;
            return t;
        }
        char c = src[pos];
        if (std::isdigit(uint8_t(c)) || c == '.') {
            const char* begin = src.data() + pos;
            char* after = nullptr;
            t.value = std::strtod(begin, &after);
            size_t len = size_t(after - begin);
            if (len == 0) throw ParseError("malformed number", pos);
            t.type = Token::number;
            t.text = std::string(src.substr(pos, len));
            pos += len;
            return t;
        }
        if (std::isalpha(uint8_t(c)) || c == '_') {
            size_t s = pos;
            while (pos < src.size() && (std::isalnum(uint8_t(src[pos])) || src[pos] == '_')) ++pos;
            t.type = Token::ident;
            t.text = std::string(src.substr(s, pos - s));
            return t;
        }
        if (std::string_view("+-*/^(),").find(c) != std::string_view::npos) {
            t.type = Token::op;
            t.symbol = c;
            ++pos;
            return t;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos);
    }
};

bool is_integer_literal(const Token& t) {
    if (t.type != Token::number) return false;
    return t.text.find_first_of(".eE") == std::string::npos;
}

double ipow(double base, long long e) {
    double r = 1.0, b = base;
    while (e > 0) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

}  // namespace

struct ExprParser {
    using Node = ScalarField::Node;

    Lexer lex;
    Token cur;
    int dim;
    std::vector<Node> nodes;

    ExprParser(std::string_view text, int d) : lex{text}, dim(d) { cur = lex.next(); }

    void advance() { cur = lex.next(); }

    bool accept_op(char c) {
        if (cur.type == Token::op && cur.symbol == c) {
            advance();
            return true;
        }
        return false;
    }

    void expect_op(char c, const char* what) {
        if (!accept_op(c)) throw ParseError(std::string("expected '") + c + "' " + what, cur.offset);
    }

    int emit(Node n) {
        nodes.push_back(n);
        return int(nodes.size()) - 1;
    }

    int parse_expr() {
        int left = parse_term();
        while (cur.type == Token::op && (cur.symbol == '+' || cur.symbol == '-')) {
            char sym = cur.symbol;
            advance();
            int right = parse_term();
            left = emit({sym == '+' ? Op::add : Op::sub, left, right, 0.0});
        }
        return left;
    }

    int parse_term() {
        int left = parse_factor();
        while (cur.type == Token::op && (cur.symbol == '*' || cur.symbol == '/')) {
            char sym = cur.symbol;
            advance();
            size_t rhs_at = cur.offset;
            int right = parse_factor();
            if (sym == '*') {
                left = emit({Op::mul, left, right, 0.0});
            } else {
                // totality: only literal nonzero divisors are allowed
                if (nodes[right].op != Op::num)
                    throw ParseError("division requires a numeric literal divisor", rhs_at);
                double d = nodes[right].num;
                if (d == 0.0) throw ParseError("division by zero literal", rhs_at);
                nodes.pop_back();
                left = emit({Op::div, left, -1, d});
            }
        }
        return left;
    }

    int parse_factor() {
        if (cur.type == Token::op && cur.symbol == '-') {
            advance();
            int inner = parse_factor();
            return emit({Op::neg, inner, -1, 0.0});
        }
        return parse_power();
    }

    long long parse_exponent() {
        if (!is_integer_literal(cur))
            throw ParseError("exponent must be an integer literal", cur.offset);
        long long v = llround(cur.value);
        size_t at = cur.offset;
        advance();
        if (accept_op('^')) {
            long long e = parse_exponent();
            double folded = ipow(double(v), e);
            if (!(folded <= 1e18))
                throw ParseError("exponent chain overflows", at);
            v = (long long)folded;
        }
        return v;
    }

    int parse_power() {
        int base = parse_atom();
        if (accept_op('^')) {
            long long e = parse_exponent();
            return emit({Op::pow, base, int32_t(e), 0.0});
        }
        return base;
    }

    int parse_atom() {
        if (cur.type == Token::number) {
            double v = cur.value;
            advance();
            return emit({Op::num, -1, -1, v});
        }
        if (cur.type == Token::ident) {
            std::string name = cur.text;
            size_t at = cur.offset;
            advance();
            if (name == "r") return emit({Op::rad, -1, -1, 0.0});
            if (name.size() >= 2 && name[0] == 'x' &&
                name.find_first_not_of("0123456789", 1) == std::string::npos) {
                int idx = std::atoi(name.c_str() + 1);
                if (idx < 1 || idx > dim)
                    throw ParseError("unknown variable '" + name + "' for dimension " +
                                         std::to_string(dim),
                                     at);
                return emit({Op::var, idx - 1, -1, 0.0});
            }
            Op fn;
            int max_args = 1;
            if (name == "sin") fn = Op::sin;
            else if (name == "cos") fn = Op::cos;
            else if (name == "exp") fn = Op::exp;
            else if (name == "abs") fn = Op::abs;
            else if (name == "min") { fn = Op::min; max_args = 64; }
            else if (name == "max") { fn = Op::max; max_args = 64; }
            else throw ParseError("unknown identifier '" + name + "'", at);

            expect_op('(', ("after '" + name + "'").c_str());
            std::vector<int> args;
            args.push_back(parse_expr());
            while (accept_op(',')) args.push_back(parse_expr());
            expect_op(')', ("closing '" + name + "' call").c_str());

            bool binary = (fn == Op::min || fn == Op::max);
            if (binary && args.size() < 2)
                throw ParseError("'" + name + "' takes at least 2 arguments", at);
            if (!binary && args.size() != 1)
                throw ParseError("'" + name + "' takes exactly 1 argument", at);
            if (int(args.size()) > max_args)
                throw ParseError("'" + name + "' has too many arguments", at);

            if (!binary) return emit({fn, args[0], -1, 0.0});
            int acc = args[0];
            for (size_t i = 1; i < args.size(); ++i) acc = emit({fn, acc, args[i], 0.0});
            return acc;
        }
        if (cur.type == Token::op && cur.symbol == '(') {
            advance();
            int inner = parse_expr();
            expect_op(')', "to close parenthesis");
            return inner;
        }
        throw ParseError("expected a value", cur.offset);
    }
};

ScalarField ScalarField::parse(std::string_view text, int dim) {
    if (dim < 1 || dim > 16) throw std::invalid_argument("ScalarField: dim must be in 1..16");
    ExprParser p(text, dim);
    p.parse_expr();
    if (p.cur.type != Token::end) throw ParseError("unexpected trailing input", p.cur.offset);
    ScalarField f;
    f.dim_ = dim;
    f.source_ = std::string(text);
    f.nodes_ = std::make_shared<const std::vector<Node>>(std::move(p.nodes));
    return f;
}

ScalarField ScalarField::constant(double v, int dim) {
    ScalarField f;
    f.dim_ = dim;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    f.source_ = buf;
    std::vector<Node> ns;
    ns.push_back({Op::num, -1, -1, v});
    f.nodes_ = std::make_shared<const std::vector<Node>>(std::move(ns));
    return f;
}

double ScalarField::eval(const double* x, int n) const {
    if (n < dim_)
        throw std::invalid_argument("ScalarField::eval: point has dimension " + std::to_string(n) +
                                    ", field needs " + std::to_string(dim_));
    const std::vector<Node>& ns = *nodes_;
    double stack_buf[64];
    std::vector<double> heap_buf;
    double* vals = stack_buf;
    if (ns.size() > 64) {
        heap_buf.resize(ns.size());
        vals = heap_buf.data();
    }
    // nodes are in child-before-parent order, so one forward pass suffices
    for (size_t i = 0; i < ns.size(); ++i) {
        const Node& nd = ns[i];
        switch (nd.op) {
            case Op::num: vals[i] = nd.num; break;
            case Op::var: vals[i] = x[nd.a]; break;
            case Op::rad: {
                double s = 0.0;
                for (int k = 0; k < dim_; ++k) s += x[k] * x[k];
                vals[i] = std::sqrt(s);
                break;
            }
            case Op::neg: vals[i] = -vals[nd.a]; break;
            case Op::add: vals[i] = vals[nd.a] + vals[nd.b]; break;
            case Op::sub: vals[i] = vals[nd.a] - vals[nd.b]; break;
            case Op::mul: vals[i] = vals[nd.a] * vals[nd.b]; break;
            case Op::div: vals[i] = vals[nd.a] / nd.num; break;
            case Op::pow: vals[i] = ipow(vals[nd.a], nd.b); break;
            case Op::sin: vals[i] = std::sin(vals[nd.a]); break;
            case Op::cos: vals[i] = std::cos(vals[nd.a]); break;
            case Op::exp: vals[i] = std::exp(vals[nd.a]); break;
            case Op::abs: vals[i] = std::fabs(vals[nd.a]); break;
            case Op::min: vals[i] = std::min(vals[nd.a], vals[nd.b]); break;
            case Op::max: vals[i] = std::max(vals[nd.a], vals[nd.b]); break;
        }
    }
    return vals[ns.size() - 1];
}

namespace {

void print_node(const std::vector<ScalarField::Node>& ns, int i, std::string& out);

void print_binary(const std::vector<ScalarField::Node>& ns, int i, const char* sym,
                  std::string& out) {
    out += '(';
    print_node(ns, ns[i].a, out);
    out += sym;
    print_node(ns, ns[i].b, out);
    out += ')';
}

void print_call(const std::vector<ScalarField::Node>& ns, int i, const char* name,
                std::string& out) {
    out += name;
    out += '(';
    print_node(ns, ns[i].a, out);
    out += ", ";
    print_node(ns, ns[i].b, out);
    out += ')';
}

void print_node(const std::vector<ScalarField::Node>& ns, int i, std::string& out) {
    const ScalarField::Node& nd = ns[i];
    char buf[40];
    switch (nd.op) {
        case Op::num:
            std::snprintf(buf, sizeof buf, "%.17g", nd.num);
            out += buf;
            break;
        case Op::var:
            out += 'x';
            out += std::to_string(nd.a + 1);
            break;
        case Op::rad: out += 'r'; break;
        case Op::neg:
            out += "(-";
            print_node(ns, nd.a, out);
            out += ')';
            break;
        case Op::add: print_binary(ns, i, " + ", out); break;
        case Op::sub: print_binary(ns, i, " - ", out); break;
        case Op::mul: print_binary(ns, i, " * ", out); break;
        case Op::div:
            out += '(';
            print_node(ns, nd.a, out);
            out += " / ";
            std::snprintf(buf, sizeof buf, "%.17g", nd.num);
            out += buf;
            out += ')';
            break;
        case Op::pow:
            out += '(';
            print_node(ns, nd.a, out);
            out += '^';
            out += std::to_string(nd.b);
            out += ')';
            break;
        case Op::sin:
            out += "sin(";
            print_node(ns, nd.a, out);
            out += ')';
            break;
        case Op::cos:
            out += "cos(";
            print_node(ns, nd.a, out);
            out += ')';
            break;
        case Op::exp:
            out += "exp(";
            print_node(ns, nd.a, out);
            out += ')';
            break;
        case Op::abs:
            out += "abs(";
            print_node(ns, nd.a, out);
            out += ')';
            break;
        case Op::min: print_call(ns, i, "min", out); break;
        case Op::max: print_call(ns, i, "max", out); break;
    }
}

}  // namespace

std::string ScalarField::canonical() const {
    std::string out;
    print_node(*nodes_, int(nodes_->size()) - 1, out);
    return out;
}

bool ScalarField::is_constant(double* value) const {
    for (const Node& nd : *nodes_)
        if (nd.op == Op::var || nd.op == Op::rad) return false;
    if (value) {
        std::vector<double> zeros(dim_, 0.0);
        *value = eval(zeros);
    }
    return true;
}

ScalarField ScalarField::shifted(double delta) const {
    std::vector<Node> ns = *nodes_;
    int root = int(ns.size()) - 1;
    ns.push_back({Op::num, -1, -1, delta});
    ns.push_back({Op::add, root, root + 1, 0.0});
    ScalarField f;
    f.dim_ = dim_;
    f.nodes_ = std::make_shared<const std::vector<Node>>(std::move(ns));
    f.source_ = f.canonical();
    return f;
}

}  // namespace pucci
