#include "diffverify/symvars.hpp"

#include <cmath>
#include <stdexcept>

namespace dv {

SymVarTable::SymVarTable(Eigen::Index input_count)
    : input_count_(input_count)
{
}

bool SymVarTable::contains(SymId id) const
{
    return id >= input_count_ && id < next_id();
}

const SymVarDef& SymVarTable::at(SymId id) const
{
    if (!contains(id)) {
        throw std::out_of_range("unknown intermediate variable " + std::to_string(id));
    }
    return defs_[static_cast<std::size_t>(id - input_count_)];
}

SymId SymVarTable::add(LinExpr lb, LinExpr ub, SymVarOrigin origin)
{
    if (lb.has_syms() || ub.has_syms()) {
        throw std::invalid_argument("intermediate definitions must reference inputs only");
    }
    const SymId id = next_id();
    defs_.push_back({id, std::move(lb), std::move(ub), origin});
    return id;
}

std::size_t compute_budget(std::span<const std::size_t> per_layer_unstable)
{
    double total = 0.0;
    for (std::size_t k = 0; k < per_layer_unstable.size(); ++k) {
        total += static_cast<double>(per_layer_unstable[k]) / static_cast<double>(k + 1);
    }
    // Guard against sums like 2.9999999999999996 + 1e-16 landing above an integer.
    return static_cast<std::size_t>(std::ceil(total - 1e-9));
}

LinExpr eliminate_back_refs(const LinExpr& e, Bound direction, const SymVarTable& table)
{
    if (!e.has_syms()) {
        return e;
    }
    LinExpr out(e.input_count());
    out.inputs() = e.inputs();
    out.set_constant(e.constant_term());
    for (const SymTerm& t : e.syms()) {
        const SymVarDef& def = table.at(t.id);
        const bool use_lower = (direction == Bound::lower) == (t.coeff > 0.0);
        out.add_scaled(use_lower ? def.lb : def.ub, t.coeff);
    }
    return out;
}

SymInterval introduce(const SymInterval& delta_post, SymVarTable& table, Budget& budget,
                      SymVarOrigin origin)
{
    if (!budget.available()) {
        return delta_post;
    }
    const SymId id = table.add(eliminate_back_refs(delta_post.lb, Bound::lower, table),
                               eliminate_back_refs(delta_post.ub, Bound::upper, table), origin);
    ++budget.used;
    return SymInterval::point(LinExpr::variable(table.input_count(), id));
}

} // namespace dv
