#pragma once

#include "diffverify/absbounds.hpp"
#include "diffverify/symvars.hpp"

#include <array>
#include <optional>
#include <string_view>

namespace dv {

/// Analysis configuration.
///  - naive:        bound each network separately, subtract at the output
///  - concretize:   layer-wise delta intervals, horizontal planes for
///                  straddling deltas
///  - convex_only:  layer-wise delta intervals with tilted planes
///  - symvars_only: concretize plus intermediate variables
///  - full:         convex_only plus intermediate variables
enum class Mode { naive, concretize, convex_only, symvars_only, full };

const char* to_string(Mode mode);
/// Accepts both "convex-only" and "convex_only" spellings.
std::optional<Mode> parse_mode(std::string_view text);
bool uses_tilted_planes(Mode mode);
bool uses_symvars(Mode mode);

/// Which rule produced a delta post bound. The first two fire on the state of
/// the paired neuron; `tight` is the shifted-chord special case; the rest are
/// the general cases.
enum class DeltaRule : std::uint8_t {
    paired_inactive, ///< upper: n' inactive -> 0;  lower: n inactive -> 0
    paired_active,   ///< upper: n' active -> keep; lower: n active -> keep
    tight,           ///< upper: n active, shifted chord; lower: n' active, shifted chord
    keep,            ///< delta range does not straddle 0 on the kept side
    zero,            ///< delta range does not straddle 0 on the zeroed side
    chord,           ///< tilted plane through the range endpoints
    horizontal,      ///< constant plane at the range endpoint
    count
};

inline constexpr std::size_t kRuleCount = static_cast<std::size_t>(DeltaRule::count);

const char* to_string(DeltaRule rule);
/// True for rules that over-approximate within the delta range.
bool is_approximating(DeltaRule rule);

struct CaseHistogram {
    std::array<std::size_t, kRuleCount> upper{};
    std::array<std::size_t, kRuleCount> lower{};

    CaseHistogram& operator+=(const CaseHistogram& other);
    bool operator==(const CaseHistogram&) const = default;
};

/// Delta interval of one neuron pair.
struct DeltaBounds {
    SymInterval pre;
    SymInterval post;
    Corners pre_corners;
    DeltaRule upper_rule = DeltaRule::keep;
    DeltaRule lower_rule = DeltaRule::keep;
    bool introduced_symvar = false;
};

struct SymVarOptions {
    /// Replaces the computed budget when set.
    std::optional<std::size_t> budget_override;
    /// A variable in the last hidden layer feeds each output once, so it can
    /// cancel nothing and only removes older variables from its definition.
    bool skip_last_hidden_layer = true;
};

struct DeltaRelu {
    SymInterval post;
    DeltaRule upper_rule;
    DeltaRule lower_rule;
};

/// Pre-activation delta intervals of layer k (0-based weight-layer index):
///   sum_i  delta_post_i * W'_k[i, j]  +  abs_post_i * dW_k[i, j]  +  db_k[j]
/// where abs_post are the first network's post-intervals of the previous
/// layer.
std::vector<SymInterval> delta_affine(const NetworkPair& pair, std::size_t k,
                                      std::span<const SymInterval> prev_delta_posts,
                                      std::span<const SymInterval> prev_abs_posts);

/// Bounds ReLU(n') - ReLU(n) given the delta pre-interval and both neurons'
/// single-network bounds. Not used in naive mode.
DeltaRelu relu_delta(const SymInterval& pre, const Corners& pre_corners, const NeuronAbs& n,
                     const NeuronAbs& n_prime, Mode mode);

struct DiffStats {
    CaseHistogram cases;
    /// Per hidden layer: pairs in which either neuron is unstable.
    std::vector<std::size_t> unstable_pairs;
    std::size_t budget = 0;
    std::size_t symvars_introduced = 0;
};

/// Everything one forward differential pass computed over one box.
struct DiffAnalysis {
    Mode mode = Mode::full;
    AbsPass first;
    AbsPass second;
    /// Per layer (last = output); empty in naive mode.
    std::vector<std::vector<DeltaBounds>> deltas;
    SymVarTable table{0};
    std::vector<SymInterval> output;
    std::vector<ConcreteInterval> output_bounds;
    DiffStats stats;
};

DiffAnalysis forward_diff(const NetworkPair& pair, const InputBox& box, Mode mode,
                          const SymVarOptions& options = {});

} // namespace dv
