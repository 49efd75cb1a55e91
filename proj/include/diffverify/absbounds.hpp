#pragma once

#include "diffverify/symexpr.hpp"

#include <vector>

namespace dv {

enum class ActivationState { active, inactive, unstable };

const char* to_string(ActivationState state);

/// Symbolic bounds of one neuron of a single network.
struct NeuronAbs {
    SymInterval pre;
    SymInterval post;
    Corners pre_corners;
    ActivationState state = ActivationState::unstable;
};

/// Per-layer bounds of one network over one box. `layers[k]` holds layer k+1;
/// the last entry is the output layer, whose post equals its pre.
struct AbsPass {
    std::vector<std::vector<NeuronAbs>> layers;

    std::size_t hidden_layer_count() const { return layers.size() - 1; }
    const std::vector<NeuronAbs>& output() const { return layers.back(); }
    /// Post-intervals of layer k (0 = the inputs themselves).
    std::vector<SymInterval> posts(std::size_t k) const;
};

/// Active iff LB_L(pre) >= 0, inactive iff UB_U(pre) <= 0, else unstable.
ActivationState classify(const Corners& pre_corners);

/// ReLU relaxation of one neuron. Each bound equation is relaxed with its own
/// concrete range (l, u): kept if l >= 0, zeroed if u <= 0, otherwise the
/// upper equation becomes (UB - l) * u / (u - l) and the lower equation
/// LB * u / (u - l).
SymInterval relu_single(const SymInterval& pre, const Corners& pre_corners);

/// Forward pass: inputs start as [x_i, x_i]; each hidden layer applies its
/// affine map, records corners, and relaxes; the output layer is affine only.
AbsPass forward_abs(const Network& net, const InputBox& box);

} // namespace dv
