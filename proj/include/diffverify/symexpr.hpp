#pragma once

#include "diffverify/network.hpp"

#include <map>
#include <span>
#include <vector>

namespace dv {

class SymVarTable;

/// Identifier of an intermediate symbolic variable. Ids start at the input
/// count so they never collide with input indices.
using SymId = Eigen::Index;

/// Values of intermediate variables, used when evaluating an expression at a
/// concrete point.
using SymValues = std::map<SymId, double>;

enum class Bound { lower, upper };

/// Absolute tolerance for comparisons between concretized bounds.
inline constexpr double kBoundTolerance = 1e-9;

struct SymTerm {
    SymId id;
    double coeff;

    bool operator==(const SymTerm&) const = default;
};

/// Affine expression  c + sum_i a_i x_i + sum_v b_v s_v  over the input
/// variables x (dense) and intermediate variables s (sparse, sorted by id).
class LinExpr {
public:
    LinExpr() = default;
    explicit LinExpr(Eigen::Index input_count);

    static LinExpr constant(Eigen::Index input_count, double value);
    static LinExpr input(Eigen::Index input_count, Eigen::Index i);
    static LinExpr variable(Eigen::Index input_count, SymId id);

    Eigen::Index input_count() const { return inputs_.size(); }
    const Vector& inputs() const { return inputs_; }
    Vector& inputs() { return inputs_; }
    const std::vector<SymTerm>& syms() const { return syms_; }
    bool has_syms() const { return !syms_.empty(); }
    double sym_coeff(SymId id) const;
    /// Adds `coeff` to the coefficient of `id`; zero coefficients are dropped.
    void add_sym(SymId id, double coeff);

    double constant_term() const { return constant_; }
    void set_constant(double c) { constant_ = c; }

    LinExpr& operator+=(const LinExpr& other);
    LinExpr& operator-=(const LinExpr& other);
    LinExpr& operator*=(double c);
    /// this += c * other
    LinExpr& add_scaled(const LinExpr& other, double c);
    LinExpr& shift(double c)
    {
        constant_ += c;
        return *this;
    }

    /// Throws std::out_of_range when a referenced intermediate has no value.
    double eval(const Vector& x, const SymValues& sym_values = {}) const;

    bool is_finite() const;
    bool operator==(const LinExpr& other) const;

private:
    Vector inputs_;
    std::vector<SymTerm> syms_;
    double constant_ = 0.0;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(LinExpr a, double c);
LinExpr operator*(double c, LinExpr a);

struct ConcreteInterval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
    ConcreteInterval hull(const ConcreteInterval& other) const;
    bool operator==(const ConcreteInterval&) const = default;
};

/// Symbolic lower/upper bound equations for one quantity.
struct SymInterval {
    LinExpr lb;
    LinExpr ub;

    static SymInterval point(const LinExpr& e) { return {e, e}; }
    static SymInterval zero(Eigen::Index input_count)
    {
        return point(LinExpr(input_count));
    }
    bool operator==(const SymInterval&) const = default;
};

/// Concretized extremes of both bound equations.
struct Corners {
    double lb_lo = 0.0; ///< LB_L: minimum of the lower equation
    double lb_hi = 0.0; ///< LB_U: maximum of the lower equation
    double ub_lo = 0.0; ///< UB_L: minimum of the upper equation
    double ub_hi = 0.0; ///< UB_U: maximum of the upper equation

    ConcreteInterval outer() const { return {lb_lo, ub_hi}; }
};

SymInterval add(const SymInterval& a, const SymInterval& b);
SymInterval scale(const SymInterval& a, double c);

/// Sound extremum of `e` over the box. Intermediates are replaced by their
/// table definitions (lower definition where it minimises in the requested
/// direction, upper otherwise) before the corner formula is applied, so
/// input terms shared between `e` and the definitions combine first.
/// Throws std::out_of_range for an id that is not in the table.
double concretize(const LinExpr& e, const InputBox& box, const SymVarTable& table, Bound direction);
/// Expression without intermediates.
double concretize(const LinExpr& e, const InputBox& box, Bound direction);

Corners corners(const SymInterval& s, const InputBox& box, const SymVarTable& table);
Corners corners(const SymInterval& s, const InputBox& box);

/// Applies one affine layer to a block of intervals:
///   out_j = bias_j + sum_i weights(i, j) * in_i
/// with interval scaling (positive weights keep bound order, negative swap).
/// Runs as two dense products over the packed coefficient blocks.
std::vector<SymInterval> affine_transform(const Matrix& weights, const Vector& bias,
                                          std::span<const SymInterval> in);

} // namespace dv
