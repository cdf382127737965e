#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fracdyn/errors.hpp"

namespace fracdyn {

/// Malformed expression text. `offset()` is the byte offset of the token
/// where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset) : Error(what), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnknownIdentifierError : public ParseError {
public:
    UnknownIdentifierError(std::string name, std::size_t offset)
        : ParseError("unknown identifier '" + name + "' at offset " + std::to_string(offset), offset),
          name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class ArityError : public ParseError {
public:
    using ParseError::ParseError;
};

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Function { Exp, Sin, Cos, Tanh, Abs };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct NumberNode {
    double value;
};
struct VariableNode {
    std::size_t index;  // zero based
};
struct ParameterNode {
    std::size_t index;
    std::string name;
};
struct NegateNode {
    ExprPtr operand;
};
struct BinaryNode {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};
struct CallNode {
    Function fn;
    ExprPtr arg;
};

struct ExprNode {
    std::variant<NumberNode, VariableNode, ParameterNode, NegateNode, BinaryNode, CallNode> node;
};

/// Immutable expression tree over the state variables x1..xd and a list of
/// named parameters. Copies share structure.
class ExprAst {
public:
    ExprAst(ExprPtr root, std::size_t dimension, std::vector<std::string> parameters);

    static ExprAst constant(double value, std::size_t dimension, std::vector<std::string> parameters = {});

    double eval(std::span<const double> state, std::span<const double> params) const;

    /// Fully parenthesised text that parses back to an equal tree.
    std::string to_string() const;

    /// Zero-based indices of every state variable the expression reads.
    std::set<std::size_t> variables() const;

    /// Rewrites variable i as variable mapping[i] in a space of `dimension`
    /// coordinates. Throws PreconditionError for unmapped variables.
    ExprAst remap_variables(const std::vector<std::size_t>& mapping, std::size_t dimension) const;

    std::size_t dimension() const noexcept { return dimension_; }
    const std::vector<std::string>& parameters() const noexcept { return parameters_; }
    const ExprPtr& root() const noexcept { return root_; }

    friend bool operator==(const ExprAst& a, const ExprAst& b);

private:
    ExprPtr root_;
    std::size_t dimension_;
    std::vector<std::string> parameters_;
};

/// Product a*b; both operands must share dimension and parameter list.
ExprAst multiply(const ExprAst& a, const ExprAst& b);

/// Recursive-descent parser. Precedence, tightest first: ^ (right
/// associative), unary minus, * /, + -. Variables are x1..xd, plus the
/// aliases x, y, z when d <= 3. Functions: exp sin cos tanh abs.
ExprAst parse_expr(std::string_view src, std::size_t dimension, const std::vector<std::string>& params = {});

/// A vector field g: R^d -> R^d with named parameters.
class FieldDef {
public:
    FieldDef(std::vector<ExprAst> components, std::vector<std::string> parameters);

    /// Parses one expression per component; the dimension is the number of
    /// components.
    static FieldDef parse(const std::vector<std::string>& components, const std::vector<std::string>& parameters = {});

    std::size_t dimension() const noexcept { return components_.size(); }
    const std::vector<ExprAst>& components() const noexcept { return components_; }
    const std::vector<std::string>& parameters() const noexcept { return parameters_; }

    /// Index of a named parameter; PreconditionError if absent.
    std::size_t parameter_index(std::string_view name) const;

    /// Writes g(state) into `out`. Throws NonFiniteError naming the component.
    void eval_into(std::span<const double> state, std::span<const double> params, std::span<double> out) const;

    /// Scalar convenience for one-dimensional fields.
    double eval_scalar(double x, std::span<const double> params) const;

private:
    std::vector<ExprAst> components_;
    std::vector<std::string> parameters_;
};

std::vector<double> eval_field(const FieldDef& f, std::span<const double> state, std::span<const double> params);

/// Central difference d g_component / d x_coordinate with step
/// max(1e-6, 1e-6 |x_coordinate|).
double numeric_derivative(const FieldDef& f, std::size_t component, std::span<const double> state,
                          std::size_t coordinate, std::span<const double> params);

}  // namespace fracdyn
