#include "diffverify/symexpr.hpp"

#include "diffverify/symvars.hpp"

#include <algorithm>
#include <cmath>

namespace dv {

LinExpr::LinExpr(Eigen::Index input_count)
    : inputs_(Vector::Zero(input_count))
{
}

LinExpr LinExpr::constant(Eigen::Index input_count, double value)
{
    LinExpr e(input_count);
    e.constant_ = value;
    return e;
}

LinExpr LinExpr::input(Eigen::Index input_count, Eigen::Index i)
{
    LinExpr e(input_count);
    e.inputs_[i] = 1.0;
    return e;
}

LinExpr LinExpr::variable(Eigen::Index input_count, SymId id)
{
    LinExpr e(input_count);
    e.syms_.push_back({id, 1.0});
    return e;
}

double LinExpr::sym_coeff(SymId id) const
{
    const auto it = std::lower_bound(syms_.begin(), syms_.end(), id,
                                     [](const SymTerm& t, SymId v) { return t.id < v; });
    return it != syms_.end() && it->id == id ? it->coeff : 0.0;
}

void LinExpr::add_sym(SymId id, double coeff)
{
    auto it = std::lower_bound(syms_.begin(), syms_.end(), id,
                               [](const SymTerm& t, SymId v) { return t.id < v; });
    if (it != syms_.end() && it->id == id) {
        it->coeff += coeff;
        if (it->coeff == 0.0) {
            syms_.erase(it);
        }
    } else if (coeff != 0.0) {
        syms_.insert(it, {id, coeff});
    }
}

LinExpr& LinExpr::add_scaled(const LinExpr& other, double c)
{
    if (inputs_.size() == 0) {
        inputs_ = Vector::Zero(other.inputs_.size());
    }
    inputs_ += c * other.inputs_;
    for (const SymTerm& t : other.syms_) {
        add_sym(t.id, c * t.coeff);
    }
    constant_ += c * other.constant_;
    return *this;
}

LinExpr& LinExpr::operator+=(const LinExpr& other)
{
    return add_scaled(other, 1.0);
}

LinExpr& LinExpr::operator-=(const LinExpr& other)
{
    return add_scaled(other, -1.0);
}

LinExpr& LinExpr::operator*=(double c)
{
    inputs_ *= c;
    if (c == 0.0) {
        syms_.clear();
    } else {
        for (SymTerm& t : syms_) {
            t.coeff *= c;
        }
    }
    constant_ *= c;
    return *this;
}

double LinExpr::eval(const Vector& x, const SymValues& sym_values) const
{
    double value = constant_ + inputs_.dot(x);
    for (const SymTerm& t : syms_) {
        const auto it = sym_values.find(t.id);
        if (it == sym_values.end()) {
            throw std::out_of_range("no value supplied for intermediate variable "
                                    + std::to_string(t.id));
        }
        value += t.coeff * it->second;
    }
    return value;
}

bool LinExpr::is_finite() const
{
    return std::isfinite(constant_) && inputs_.allFinite()
           && std::all_of(syms_.begin(), syms_.end(),
                          [](const SymTerm& t) { return std::isfinite(t.coeff); });
}

bool LinExpr::operator==(const LinExpr& other) const
{
    return inputs_.size() == other.inputs_.size() && inputs_ == other.inputs_
           && syms_ == other.syms_ && constant_ == other.constant_;
}

LinExpr operator+(LinExpr a, const LinExpr& b)
{
    return a += b;
}

LinExpr operator-(LinExpr a, const LinExpr& b)
{
    return a -= b;
}

LinExpr operator*(LinExpr a, double c)
{
    return a *= c;
}

LinExpr operator*(double c, LinExpr a)
{
    return a *= c;
}

ConcreteInterval ConcreteInterval::hull(const ConcreteInterval& other) const
{
    return {std::min(lo, other.lo), std::max(hi, other.hi)};
}

SymInterval add(const SymInterval& a, const SymInterval& b)
{
    return {a.lb + b.lb, a.ub + b.ub};
}

SymInterval scale(const SymInterval& a, double c)
{
    if (c >= 0.0) {
        return {a.lb * c, a.ub * c};
    }
    return {a.ub * c, a.lb * c};
}

double concretize(const LinExpr& e, const InputBox& box, Bound direction)
{
    if (e.has_syms()) {
        throw std::out_of_range("expression references intermediate variable "
                                + std::to_string(e.syms().front().id)
                                + " but no table was supplied");
    }
    const Vector& a = e.inputs();
    double value = e.constant_term();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double at_lo = a[i] * box.lo[i];
        const double at_hi = a[i] * box.hi[i];
        value += direction == Bound::upper ? std::max(at_lo, at_hi) : std::min(at_lo, at_hi);
    }
    return value;
}

double concretize(const LinExpr& e, const InputBox& box, const SymVarTable& table, Bound direction)
{
    if (!e.has_syms()) {
        return concretize(e, box, direction);
    }
    return concretize(eliminate_back_refs(e, direction, table), box, direction);
}

Corners corners(const SymInterval& s, const InputBox& box, const SymVarTable& table)
{
    return {concretize(s.lb, box, table, Bound::lower), concretize(s.lb, box, table, Bound::upper),
            concretize(s.ub, box, table, Bound::lower), concretize(s.ub, box, table, Bound::upper)};
}

Corners corners(const SymInterval& s, const InputBox& box)
{
    return {concretize(s.lb, box, Bound::lower), concretize(s.lb, box, Bound::upper),
            concretize(s.ub, box, Bound::lower), concretize(s.ub, box, Bound::upper)};
}

std::vector<SymInterval> affine_transform(const Matrix& weights, const Vector& bias,
                                          std::span<const SymInterval> in)
{
    const Eigen::Index rows_in = weights.rows();
    const Eigen::Index cols_out = weights.cols();
    if (static_cast<Eigen::Index>(in.size()) != rows_in || bias.size() != cols_out) {
        throw std::invalid_argument("affine_transform: shape mismatch");
    }
    const Eigen::Index n = in.empty() ? 0 : in.front().lb.input_count();

    // Column layout: [inputs | intermediates | constant].
    std::vector<SymId> ids;
    for (const SymInterval& s : in) {
        for (const SymTerm& t : s.lb.syms()) {
            ids.push_back(t.id);
        }
        for (const SymTerm& t : s.ub.syms()) {
            ids.push_back(t.id);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const auto sym_count = static_cast<Eigen::Index>(ids.size());
    const Eigen::Index cols = n + sym_count + 1;
    auto column_of = [&](SymId id) {
        return n + static_cast<Eigen::Index>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };

    Matrix lower(rows_in, cols);
    Matrix upper(rows_in, cols);
    lower.setZero();
    upper.setZero();
    for (Eigen::Index i = 0; i < rows_in; ++i) {
        const SymInterval& s = in[static_cast<std::size_t>(i)];
        lower.row(i).head(n) = s.lb.inputs().transpose();
        upper.row(i).head(n) = s.ub.inputs().transpose();
        for (const SymTerm& t : s.lb.syms()) {
            lower(i, column_of(t.id)) = t.coeff;
        }
        for (const SymTerm& t : s.ub.syms()) {
            upper(i, column_of(t.id)) = t.coeff;
        }
        lower(i, cols - 1) = s.lb.constant_term();
        upper(i, cols - 1) = s.ub.constant_term();
    }

    const Matrix pos = weights.cwiseMax(0.0).transpose();
    const Matrix neg = weights.cwiseMin(0.0).transpose();
    Matrix out_lower = pos * lower + neg * upper;
    Matrix out_upper = pos * upper + neg * lower;
    out_lower.col(cols - 1) += bias;
    out_upper.col(cols - 1) += bias;

    auto unpack = [&](const Matrix& block, Eigen::Index j) {
        LinExpr e(n);
        e.inputs() = block.row(j).head(n).transpose();
        for (Eigen::Index c = 0; c < sym_count; ++c) {
            e.add_sym(ids[static_cast<std::size_t>(c)], block(j, n + c));
        }
        e.set_constant(block(j, cols - 1));
        return e;
    };

    std::vector<SymInterval> out;
    out.reserve(static_cast<std::size_t>(cols_out));
    for (Eigen::Index j = 0; j < cols_out; ++j) {
        out.push_back({unpack(out_lower, j), unpack(out_upper, j)});
    }
    return out;
}

} // namespace dv
