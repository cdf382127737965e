#include "fracdyn/field_expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

namespace fracdyn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

ExprPtr make(auto node) { return std::make_shared<const ExprNode>(ExprNode{std::move(node)}); }

constexpr std::array<std::pair<std::string_view, Function>, 5> kFunctions{{
    {"exp", Function::Exp},
    {"sin", Function::Sin},
    {"cos", Function::Cos},
    {"tanh", Function::Tanh},
    {"abs", Function::Abs},
}};

std::optional<Function> lookup_function(std::string_view name) {
    for (const auto& [n, f] : kFunctions)
        if (n == name) return f;
    return std::nullopt;
}

std::string_view function_name(Function f) {
    for (const auto& [n, g] : kFunctions)
        if (g == f) return n;
    return "?";
}

char op_char(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return '+';
        case BinaryOp::Sub: return '-';
        case BinaryOp::Mul: return '*';
        case BinaryOp::Div: return '/';
        case BinaryOp::Pow: return '^';
    }
    return '?';
}

// Small integral exponents are expanded into left-to-right products so that
// "x^3" evaluates exactly like x*x*x.
double power(double base, double exponent) {
    if (exponent == std::trunc(exponent) && std::abs(exponent) <= 64.0) {
        const int n = static_cast<int>(std::abs(exponent));
        if (n == 0) return 1.0;
        double r = base;
        for (int i = 1; i < n; ++i) r *= base;
        return exponent < 0 ? 1.0 / r : r;
    }
    return std::pow(base, exponent);
}

double eval_node(const ExprNode& n, std::span<const double> x, std::span<const double> p) {
    return std::visit(
        Overloaded{
            [](const NumberNode& v) { return v.value; },
            [&](const VariableNode& v) { return x[v.index]; },
            [&](const ParameterNode& v) { return p[v.index]; },
            [&](const NegateNode& v) { return -eval_node(*v.operand, x, p); },
            [&](const BinaryNode& v) {
                const double a = eval_node(*v.lhs, x, p);
                const double b = eval_node(*v.rhs, x, p);
                switch (v.op) {
                    case BinaryOp::Add: return a + b;
                    case BinaryOp::Sub: return a - b;
                    case BinaryOp::Mul: return a * b;
                    case BinaryOp::Div: return a / b;
                    case BinaryOp::Pow: return power(a, b);
                }
                return 0.0;
            },
            [&](const CallNode& v) {
                const double a = eval_node(*v.arg, x, p);
                switch (v.fn) {
                    case Function::Exp: return std::exp(a);
                    case Function::Sin: return std::sin(a);
                    case Function::Cos: return std::cos(a);
                    case Function::Tanh: return std::tanh(a);
                    case Function::Abs: return std::abs(a);
                }
                return 0.0;
            },
        },
        n.node);
}

void print_node(const ExprNode& n, std::string& out) {
    std::visit(Overloaded{
                   [&](const NumberNode& v) {
                       std::array<char, 64> buf{};
                       auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v.value);
                       (void)ec;
                       if (v.value < 0) out += '(';
                       out.append(buf.data(), end);
                       if (v.value < 0) out += ')';
                   },
                   [&](const VariableNode& v) { out += "x" + std::to_string(v.index + 1); },
                   [&](const ParameterNode& v) { out += v.name; },
                   [&](const NegateNode& v) {
                       out += "(-";
                       print_node(*v.operand, out);
                       out += ')';
                   },
                   [&](const BinaryNode& v) {
                       out += '(';
                       print_node(*v.lhs, out);
                       out += ' ';
                       out += op_char(v.op);
                       out += ' ';
                       print_node(*v.rhs, out);
                       out += ')';
                   },
                   [&](const CallNode& v) {
                       out += function_name(v.fn);
                       out += '(';
                       print_node(*v.arg, out);
                       out += ')';
                   },
               },
               n.node);
}

bool equal_nodes(const ExprNode& a, const ExprNode& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        Overloaded{
            [&](const NumberNode& v) { return v.value == std::get<NumberNode>(b.node).value; },
            [&](const VariableNode& v) { return v.index == std::get<VariableNode>(b.node).index; },
            [&](const ParameterNode& v) {
                const auto& w = std::get<ParameterNode>(b.node);
                return v.index == w.index && v.name == w.name;
            },
            [&](const NegateNode& v) { return equal_nodes(*v.operand, *std::get<NegateNode>(b.node).operand); },
            [&](const BinaryNode& v) {
                const auto& w = std::get<BinaryNode>(b.node);
                return v.op == w.op && equal_nodes(*v.lhs, *w.lhs) && equal_nodes(*v.rhs, *w.rhs);
            },
            [&](const CallNode& v) {
                const auto& w = std::get<CallNode>(b.node);
                return v.fn == w.fn && equal_nodes(*v.arg, *w.arg);
            },
        },
        a.node);
}

void collect_variables(const ExprNode& n, std::set<std::size_t>& out) {
    std::visit(Overloaded{
                   [](const NumberNode&) {},
                   [&](const VariableNode& v) { out.insert(v.index); },
                   [](const ParameterNode&) {},
                   [&](const NegateNode& v) { collect_variables(*v.operand, out); },
                   [&](const BinaryNode& v) {
                       collect_variables(*v.lhs, out);
                       collect_variables(*v.rhs, out);
                   },
                   [&](const CallNode& v) { collect_variables(*v.arg, out); },
               },
               n.node);
}

ExprPtr remap_node(const ExprPtr& n, const std::vector<std::size_t>& mapping) {
    return std::visit(Overloaded{
                          [&](const NumberNode&) { return n; },
                          [&](const VariableNode& v) -> ExprPtr {
                              if (v.index >= mapping.size())
                                  throw PreconditionError("variable x" + std::to_string(v.index + 1) +
                                                          " has no target in the remapping");
                              return make(VariableNode{mapping[v.index]});
                          },
                          [&](const ParameterNode&) { return n; },
                          [&](const NegateNode& v) { return make(NegateNode{remap_node(v.operand, mapping)}); },
                          [&](const BinaryNode& v) {
                              return make(BinaryNode{v.op, remap_node(v.lhs, mapping), remap_node(v.rhs, mapping)});
                          },
                          [&](const CallNode& v) { return make(CallNode{v.fn, remap_node(v.arg, mapping)}); },
                      },
                      n->node);
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Parser {
public:
    Parser(std::string_view src, std::size_t dimension, const std::vector<std::string>& params)
        : src_(src), dimension_(dimension), params_(params) {}

    ExprPtr parse() {
        skip_space();
        if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
        ExprPtr e = expression();
        skip_space();
        if (pos_ != src_.size()) unexpected();
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t dimension_;
    const std::vector<std::string>& params_;
    int depth_ = 0;

    static constexpr int kMaxDepth = 256;

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > kMaxDepth) throw ParseError("expression nested too deeply", p.pos_);
        }
        ~DepthGuard() { --p.depth_; }
    };

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    char peek() {
        skip_space();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    [[noreturn]] void unexpected() {
        skip_space();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
        throw ParseError(std::string("unexpected '") + src_[pos_] + "' at offset " + std::to_string(pos_), pos_);
    }

    ExprPtr expression() {
        ExprPtr lhs = term();
        for (;;) {
            const char c = peek();
            if (c != '+' && c != '-') return lhs;
            ++pos_;
            ExprPtr rhs = term();
            lhs = make(BinaryNode{c == '+' ? BinaryOp::Add : BinaryOp::Sub, lhs, rhs});
        }
    }

    ExprPtr term() {
        ExprPtr lhs = unary();
        for (;;) {
            const char c = peek();
            if (c != '*' && c != '/') return lhs;
            ++pos_;
            ExprPtr rhs = unary();
            lhs = make(BinaryNode{c == '*' ? BinaryOp::Mul : BinaryOp::Div, lhs, rhs});
        }
    }

    ExprPtr unary() {
        DepthGuard guard(*this);
        if (peek() == '-') {
            ++pos_;
            return make(NegateNode{unary()});
        }
        return power_expr();
    }

    ExprPtr power_expr() {
        ExprPtr base = primary();
        if (peek() == '^') {
            ++pos_;
            return make(BinaryNode{BinaryOp::Pow, base, unary()});
        }
        return base;
    }

    ExprPtr primary() {
        const char c = peek();
        if (c == '(') {
            ++pos_;
            DepthGuard guard(*this);
            ExprPtr e = expression();
            if (peek() != ')') unexpected();
            ++pos_;
            return e;
        }
        if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) return number();
        if (is_ident_start(c)) return identifier();
        unexpected();
    }

    ExprPtr number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t q = pos_ + 1;
            if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
            if (q < src_.size() && is_digit(src_[q])) {
                pos_ = q;
                while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
            }
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (ec != std::errc() || ptr != src_.data() + pos_ || !std::isfinite(value))
            throw ParseError("invalid number at offset " + std::to_string(start), start);
        return make(NumberNode{value});
    }

    ExprPtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
        const std::string name(src_.substr(start, pos_ - start));

        if (peek() == '(') {
            const auto fn = lookup_function(name);
            if (!fn) throw UnknownIdentifierError(name, start);
            ++pos_;
            DepthGuard guard(*this);
            if (peek() == ')') throw ArityError("function '" + name + "' takes exactly one argument", start);
            ExprPtr arg = expression();
            if (peek() == ',') throw ArityError("function '" + name + "' takes exactly one argument", start);
            if (peek() != ')') unexpected();
            ++pos_;
            return make(CallNode{*fn, arg});
        }
        if (lookup_function(name))
            throw ArityError("function '" + name + "' called without an argument list", start);

        for (std::size_t i = 0; i < params_.size(); ++i)
            if (params_[i] == name) return make(ParameterNode{i, name});
        if (auto idx = variable_index(name)) return make(VariableNode{*idx});
        throw UnknownIdentifierError(name, start);
    }

    std::optional<std::size_t> variable_index(const std::string& name) const {
        if (dimension_ <= 3 && name.size() == 1) {
            const auto k = std::string_view("xyz").find(name[0]);
            if (k != std::string_view::npos && k < dimension_) return k;
        }
        if (name.size() >= 2 && name[0] == 'x' && name[1] != '0') {
            std::size_t k = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
            if (ec == std::errc() && ptr == name.data() + name.size() && k >= 1 && k <= dimension_) return k - 1;
        }
        return std::nullopt;
    }
};

void validate_parameter_names(const std::vector<std::string>& params) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (p.empty() || !is_ident_start(p[0]) || !std::all_of(p.begin(), p.end(), is_ident_char))
            throw PreconditionError("invalid parameter name '" + p + "'");
        if (lookup_function(p)) throw PreconditionError("parameter name '" + p + "' shadows a function");
        const bool numbered = p.size() >= 2 && p[0] == 'x' && std::all_of(p.begin() + 1, p.end(), is_digit);
        if (p == "x" || p == "y" || p == "z" || numbered)
            throw PreconditionError("parameter name '" + p + "' shadows a state variable");
        for (std::size_t j = 0; j < i; ++j)
            if (params[j] == p) throw PreconditionError("duplicate parameter '" + p + "'");
    }
}

}  // namespace

ExprAst::ExprAst(ExprPtr root, std::size_t dimension, std::vector<std::string> parameters)
    : root_(std::move(root)), dimension_(dimension), parameters_(std::move(parameters)) {
    if (!root_) throw PreconditionError("expression tree is empty");
    for (std::size_t v : variables())
        if (v >= dimension_) throw PreconditionError("variable index exceeds dimension");
}

ExprAst ExprAst::constant(double value, std::size_t dimension, std::vector<std::string> parameters) {
    return ExprAst(make(NumberNode{value}), dimension, std::move(parameters));
}

double ExprAst::eval(std::span<const double> state, std::span<const double> params) const {
    if (state.size() != dimension_) throw PreconditionError("state length does not match dimension");
    if (params.size() != parameters_.size()) throw PreconditionError("parameter count mismatch");
    return eval_node(*root_, state, params);
}

std::string ExprAst::to_string() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

std::set<std::size_t> ExprAst::variables() const {
    std::set<std::size_t> out;
    collect_variables(*root_, out);
    return out;
}

ExprAst ExprAst::remap_variables(const std::vector<std::size_t>& mapping, std::size_t dimension) const {
    return ExprAst(remap_node(root_, mapping), dimension, parameters_);
}

bool operator==(const ExprAst& a, const ExprAst& b) {
    return a.dimension_ == b.dimension_ && a.parameters_ == b.parameters_ && equal_nodes(*a.root_, *b.root_);
}

ExprAst multiply(const ExprAst& a, const ExprAst& b) {
    if (a.dimension() != b.dimension() || a.parameters() != b.parameters())
        throw PreconditionError("operands live in different spaces");
    return ExprAst(make(BinaryNode{BinaryOp::Mul, a.root(), b.root()}), a.dimension(), a.parameters());
}

ExprAst parse_expr(std::string_view src, std::size_t dimension, const std::vector<std::string>& params) {
    if (dimension == 0) throw PreconditionError("dimension must be positive");
    validate_parameter_names(params);
    Parser parser(src, dimension, params);
    return ExprAst(parser.parse(), dimension, params);
}

FieldDef::FieldDef(std::vector<ExprAst> components, std::vector<std::string> parameters)
    : components_(std::move(components)), parameters_(std::move(parameters)) {
    if (components_.empty()) throw PreconditionError("a field needs at least one component");
    for (const auto& c : components_) {
        if (c.dimension() != components_.size())
            throw PreconditionError("component dimension does not match the number of components");
        if (c.parameters() != parameters_) throw PreconditionError("component parameter list differs from the field's");
    }
}

FieldDef FieldDef::parse(const std::vector<std::string>& components, const std::vector<std::string>& parameters) {
    std::vector<ExprAst> asts;
    asts.reserve(components.size());
    for (const auto& c : components) asts.push_back(parse_expr(c, components.size(), parameters));
    return FieldDef(std::move(asts), parameters);
}

std::size_t FieldDef::parameter_index(std::string_view name) const {
    for (std::size_t i = 0; i < parameters_.size(); ++i)
        if (parameters_[i] == name) return i;
    throw PreconditionError("field has no parameter named '" + std::string(name) + "'");
}

void FieldDef::eval_into(std::span<const double> state, std::span<const double> params, std::span<double> out) const {
    const std::size_t d = dimension();
    if (state.size() != d || out.size() != d) throw PreconditionError("state length does not match dimension");
    if (params.size() != parameters_.size()) throw PreconditionError("parameter count mismatch");
    for (std::size_t i = 0; i < d; ++i) {
        const double v = eval_node(*components_[i].root(), state, params);
        if (!std::isfinite(v))
            throw NonFiniteError(i, "component " + std::to_string(i + 1) + " evaluated to a non-finite value");
        out[i] = v;
    }
}

double FieldDef::eval_scalar(double x, std::span<const double> params) const {
    double out = 0.0;
    eval_into(std::span<const double>(&x, 1), params, std::span<double>(&out, 1));
    return out;
}

std::vector<double> eval_field(const FieldDef& f, std::span<const double> state, std::span<const double> params) {
    std::vector<double> out(f.dimension());
    f.eval_into(state, params, out);
    return out;
}

double numeric_derivative(const FieldDef& f, std::size_t component, std::span<const double> state,
                          std::size_t coordinate, std::span<const double> params) {
    if (component >= f.dimension() || coordinate >= f.dimension() || state.size() != f.dimension())
        throw PreconditionError("derivative index out of range");
    std::vector<double> x(state.begin(), state.end());
    const double h = std::max(1e-6, 1e-6 * std::abs(x[coordinate]));
    const double x0 = x[coordinate];
    x[coordinate] = x0 + h;
    const double up = eval_field(f, x, params)[component];
    x[coordinate] = x0 - h;
    const double down = eval_field(f, x, params)[component];
    return (up - down) / (2.0 * h);
}

}  // namespace fracdyn
