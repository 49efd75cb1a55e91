#include "diffverify/deltabounds.hpp"

namespace dv {

const char* to_string(Mode mode)
{
    switch (mode) {
    case Mode::naive:
        return "naive";
    case Mode::concretize:
        return "concretize";
    case Mode::convex_only:
        return "convex-only";
    case Mode::symvars_only:
        return "symvars-only";
    case Mode::full:
        return "full";
    }
    return "?";
}

std::optional<Mode> parse_mode(std::string_view text)
{
    std::string normalized(text);
    for (char& c : normalized) {
        if (c == '_') {
            c = '-';
        }
    }
    for (Mode m : {Mode::naive, Mode::concretize, Mode::convex_only, Mode::symvars_only, Mode::full}) {
        if (normalized == to_string(m)) {
            return m;
        }
    }
    return std::nullopt;
}

bool uses_tilted_planes(Mode mode)
{
    return mode == Mode::convex_only || mode == Mode::full;
}

bool uses_symvars(Mode mode)
{
    return mode == Mode::symvars_only || mode == Mode::full;
}

const char* to_string(DeltaRule rule)
{
    switch (rule) {
    case DeltaRule::paired_inactive:
        return "paired_inactive";
    case DeltaRule::paired_active:
        return "paired_active";
    case DeltaRule::tight:
        return "tight";
    case DeltaRule::keep:
        return "keep";
    case DeltaRule::zero:
        return "zero";
    case DeltaRule::chord:
        return "chord";
    case DeltaRule::horizontal:
        return "horizontal";
    case DeltaRule::count:
        break;
    }
    return "?";
}

bool is_approximating(DeltaRule rule)
{
    return rule == DeltaRule::tight || rule == DeltaRule::chord || rule == DeltaRule::horizontal;
}

CaseHistogram& CaseHistogram::operator+=(const CaseHistogram& other)
{
    for (std::size_t i = 0; i < kRuleCount; ++i) {
        upper[i] += other.upper[i];
        lower[i] += other.lower[i];
    }
    return *this;
}

std::vector<SymInterval> delta_affine(const NetworkPair& pair, std::size_t k,
                                      std::span<const SymInterval> prev_delta_posts,
                                      std::span<const SymInterval> prev_abs_posts)
{
    const Layer& second = pair.second().layer(k);
    auto through_weights = affine_transform(second.weights, pair.bias_delta(k), prev_delta_posts);
    const auto through_delta = affine_transform(
        pair.weight_delta(k), Vector::Zero(second.outputs()), prev_abs_posts);
    for (std::size_t j = 0; j < through_weights.size(); ++j) {
        through_weights[j] = add(through_weights[j], through_delta[j]);
    }
    return through_weights;
}

namespace {

// (e - anchor) * slope + offset
LinExpr plane(const LinExpr& e, double anchor, double slope, double offset)
{
    LinExpr out = e;
    out.shift(-anchor);
    out *= slope;
    out.shift(offset);
    return out;
}

struct RuleResult {
    LinExpr bound;
    DeltaRule rule;
};

// Upper bound of z = ReLU(n + d) - ReLU(n) given an upper equation for d
// with concrete range [l, u].
RuleResult upper_rule(const LinExpr& ub, double l, double u, const NeuronAbs& n,
                      const NeuronAbs& n_prime, Mode mode)
{
    const Eigen::Index inputs = ub.input_count();
    if (n_prime.state == ActivationState::inactive) {
        return {LinExpr(inputs), DeltaRule::paired_inactive};
    }
    if (n_prime.state == ActivationState::active) {
        return {ub, DeltaRule::paired_active};
    }
    if (uses_tilted_planes(mode) && n.state == ActivationState::active) {
        // z = max(-n, d) <= max(l', d) with l' = -LB_L(n).
        const double l_prime = -n.pre_corners.lb_lo;
        if (l <= l_prime && l_prime <= 0.0 && 0.0 <= u && u - l >= kBoundTolerance) {
            return {plane(ub, l, (u - l_prime) / (u - l), l_prime), DeltaRule::tight};
        }
    }
    if (l >= 0.0) {
        return {ub, DeltaRule::keep};
    }
    if (u <= 0.0) {
        return {LinExpr(inputs), DeltaRule::zero};
    }
    if (!uses_tilted_planes(mode) || u - l < kBoundTolerance) {
        return {LinExpr::constant(inputs, u), DeltaRule::horizontal};
    }
    return {plane(ub, l, u / (u - l), 0.0), DeltaRule::chord};
}

// Lower bound of z = ReLU(n') - ReLU(n' - d) given a lower equation for d
// with concrete range [l, u].
RuleResult lower_rule(const LinExpr& lb, double l, double u, const NeuronAbs& n,
                      const NeuronAbs& n_prime, Mode mode)
{
    const Eigen::Index inputs = lb.input_count();
    if (n.state == ActivationState::inactive) {
        return {LinExpr(inputs), DeltaRule::paired_inactive};
    }
    if (n.state == ActivationState::active) {
        return {lb, DeltaRule::paired_active};
    }
    if (uses_tilted_planes(mode) && n_prime.state == ActivationState::active) {
        // z = min(n', d) >= min(u', d) with u' = LB_L(n').
        const double u_prime = n_prime.pre_corners.lb_lo;
        if (l <= 0.0 && 0.0 <= u_prime && u_prime <= u && u - l >= kBoundTolerance) {
            return {plane(lb, u, (u_prime - l) / (u - l), u_prime), DeltaRule::tight};
        }
    }
    if (u <= 0.0) {
        return {lb, DeltaRule::keep};
    }
    if (l >= 0.0) {
        return {LinExpr(inputs), DeltaRule::zero};
    }
    if (!uses_tilted_planes(mode) || u - l < kBoundTolerance) {
        return {LinExpr::constant(inputs, l), DeltaRule::horizontal};
    }
    return {plane(lb, u, -l / (u - l), 0.0), DeltaRule::chord};
}

} // namespace

DeltaRelu relu_delta(const SymInterval& pre, const Corners& c, const NeuronAbs& n,
                     const NeuronAbs& n_prime, Mode mode)
{
    if (mode == Mode::naive) {
        throw std::invalid_argument("relu_delta is not used in naive mode");
    }
    auto upper = upper_rule(pre.ub, c.ub_lo, c.ub_hi, n, n_prime, mode);
    auto lower = lower_rule(pre.lb, c.lb_lo, c.lb_hi, n, n_prime, mode);
    return {{std::move(lower.bound), std::move(upper.bound)}, upper.rule, lower.rule};
}

namespace {

void run_naive(DiffAnalysis& analysis, const InputBox& box)
{
    const auto& f = analysis.first.output();
    const auto& g = analysis.second.output();
    for (std::size_t j = 0; j < f.size(); ++j) {
        SymInterval out{g[j].post.lb - f[j].post.ub, g[j].post.ub - f[j].post.lb};
        analysis.output_bounds.push_back(corners(out, box).outer());
        analysis.output.push_back(std::move(out));
    }
}

} // namespace

DiffAnalysis forward_diff(const NetworkPair& pair, const InputBox& box, Mode mode,
                          const SymVarOptions& options)
{
    const Network& f = pair.first();
    const Eigen::Index n = f.input_count();

    DiffAnalysis analysis;
    analysis.mode = mode;
    analysis.first = forward_abs(f, box);
    analysis.second = forward_abs(pair.second(), box);
    analysis.table = SymVarTable(n);

    const std::size_t hidden = f.hidden_layer_count();
    for (std::size_t k = 0; k < hidden; ++k) {
        std::size_t unstable = 0;
        const auto& a = analysis.first.layers[k];
        const auto& b = analysis.second.layers[k];
        for (std::size_t j = 0; j < a.size(); ++j) {
            unstable += a[j].state == ActivationState::unstable
                        || b[j].state == ActivationState::unstable;
        }
        analysis.stats.unstable_pairs.push_back(unstable);
    }

    if (mode == Mode::naive) {
        run_naive(analysis, box);
        return analysis;
    }

    Budget budget;
    if (uses_symvars(mode)) {
        budget.per_layer_unstable = analysis.stats.unstable_pairs;
        budget.limit = options.budget_override.value_or(compute_budget(budget.per_layer_unstable));
    }
    analysis.stats.budget = budget.limit;

    std::vector<SymInterval> delta_posts(static_cast<std::size_t>(n), SymInterval::zero(n));
    for (std::size_t k = 0; k < f.layer_count(); ++k) {
        auto pre = delta_affine(pair, k, delta_posts, analysis.first.posts(k));
        const bool is_output = k + 1 == f.layer_count();
        const bool may_introduce = uses_symvars(mode)
                                   && !(options.skip_last_hidden_layer && k + 1 == hidden);

        std::vector<DeltaBounds> layer;
        layer.reserve(pre.size());
        delta_posts.clear();
        for (std::size_t j = 0; j < pre.size(); ++j) {
            DeltaBounds d;
            d.pre_corners = corners(pre[j], box, analysis.table);
            d.pre = std::move(pre[j]);
            if (is_output) {
                d.post = d.pre;
            } else {
                const NeuronAbs& na = analysis.first.layers[k][j];
                const NeuronAbs& nb = analysis.second.layers[k][j];
                auto relu = relu_delta(d.pre, d.pre_corners, na, nb, mode);
                d.post = std::move(relu.post);
                d.upper_rule = relu.upper_rule;
                d.lower_rule = relu.lower_rule;
                ++analysis.stats.cases.upper[static_cast<std::size_t>(d.upper_rule)];
                ++analysis.stats.cases.lower[static_cast<std::size_t>(d.lower_rule)];

                const bool unstable_pair = na.state == ActivationState::unstable
                                           || nb.state == ActivationState::unstable;
                const bool approximated = is_approximating(d.upper_rule)
                                          || is_approximating(d.lower_rule);
                if (may_introduce && unstable_pair && approximated && budget.available()) {
                    d.post = introduce(d.post, analysis.table, budget,
                                       {k + 1, static_cast<Eigen::Index>(j)});
                    d.introduced_symvar = true;
                }
            }
            delta_posts.push_back(d.post);
            layer.push_back(std::move(d));
        }
        analysis.deltas.push_back(std::move(layer));
    }

    for (const DeltaBounds& d : analysis.deltas.back()) {
        analysis.output.push_back(d.post);
        analysis.output_bounds.push_back(d.pre_corners.outer());
    }
    analysis.stats.symvars_introduced = budget.used;
    return analysis;
}

} // namespace dv
