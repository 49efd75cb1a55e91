#pragma once

#include "diffverify/symexpr.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dv {

/// Neuron pair whose delta output an intermediate variable stands for.
struct SymVarOrigin {
    std::size_t layer = 0; ///< 1-based layer index
    Eigen::Index neuron = 0;
};

struct SymVarDef {
    SymId id = 0;
    LinExpr lb; ///< input variables only
    LinExpr ub; ///< input variables only
    SymVarOrigin origin;
};

/// Definitions of intermediate variables. No definition may reference
/// another intermediate, so concretization never recurses. Owned by a single
/// analysis of a single box.
class SymVarTable {
public:
    explicit SymVarTable(Eigen::Index input_count);

    Eigen::Index input_count() const { return input_count_; }
    SymId next_id() const { return input_count_ + static_cast<SymId>(defs_.size()); }
    std::size_t size() const { return defs_.size(); }
    bool contains(SymId id) const;
    /// Throws std::out_of_range for an unknown id.
    const SymVarDef& at(SymId id) const;
    const std::vector<SymVarDef>& defs() const { return defs_; }

    /// Registers a new variable. Throws std::invalid_argument if either
    /// definition references an intermediate.
    SymId add(LinExpr lb, LinExpr ub, SymVarOrigin origin);

private:
    Eigen::Index input_count_;
    std::vector<SymVarDef> defs_;
};

/// Cap on the number of variables one analysis may introduce.
struct Budget {
    std::size_t limit = 0;
    std::size_t used = 0;
    std::vector<std::size_t> per_layer_unstable;

    bool available() const { return used < limit; }
};

/// N = ceil(sum_k N_k / k) with k the 1-based hidden-layer index.
std::size_t compute_budget(std::span<const std::size_t> per_layer_unstable);

/// Rewrites `e` over inputs only: each intermediate with coefficient c is
/// replaced by c times its lower definition when that keeps the bound sound in
/// `direction` (lower with c > 0, upper with c < 0), else its upper
/// definition.
LinExpr eliminate_back_refs(const LinExpr& e, Bound direction, const SymVarTable& table);

/// Replaces a delta post-interval by a fresh variable [v, v] whose definition
/// is the interval with back-references eliminated. When the budget is spent
/// the interval is returned unchanged.
SymInterval introduce(const SymInterval& delta_post, SymVarTable& table, Budget& budget,
                      SymVarOrigin origin);

} // namespace dv
