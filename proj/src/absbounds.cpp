#include "diffverify/absbounds.hpp"

namespace dv {

const char* to_string(ActivationState state)
{
    switch (state) {
    case ActivationState::active:
        return "active";
    case ActivationState::inactive:
        return "inactive";
    case ActivationState::unstable:
        return "unstable";
    }
    return "?";
}

std::vector<SymInterval> AbsPass::posts(std::size_t k) const
{
    std::vector<SymInterval> out;
    if (k == 0) {
        const Eigen::Index n = layers.front().front().pre.lb.input_count();
        for (Eigen::Index i = 0; i < n; ++i) {
            out.push_back(SymInterval::point(LinExpr::input(n, i)));
        }
        return out;
    }
    for (const NeuronAbs& neuron : layers.at(k - 1)) {
        out.push_back(neuron.post);
    }
    return out;
}

ActivationState classify(const Corners& c)
{
    if (c.lb_lo >= 0.0) {
        return ActivationState::active;
    }
    if (c.ub_hi <= 0.0) {
        return ActivationState::inactive;
    }
    return ActivationState::unstable;
}

SymInterval relu_single(const SymInterval& pre, const Corners& c)
{
    const Eigen::Index n = pre.lb.input_count();
    SymInterval post;

    if (c.ub_lo >= 0.0) {
        post.ub = pre.ub;
    } else if (c.ub_hi <= 0.0) {
        post.ub = LinExpr(n);
    } else {
        const double l = c.ub_lo;
        const double u = c.ub_hi;
        post.ub = pre.ub;
        post.ub.shift(-l);
        post.ub *= u / (u - l);
    }

    if (c.lb_lo >= 0.0) {
        post.lb = pre.lb;
    } else if (c.lb_hi <= 0.0) {
        post.lb = LinExpr(n);
    } else {
        const double l = c.lb_lo;
        const double u = c.lb_hi;
        post.lb = pre.lb * (u / (u - l));
    }
    return post;
}

AbsPass forward_abs(const Network& net, const InputBox& box)
{
    if (box.dims() != net.input_count()) {
        throw std::invalid_argument("box dimension differs from network input count");
    }
    const Eigen::Index n = net.input_count();
    std::vector<SymInterval> posts;
    for (Eigen::Index i = 0; i < n; ++i) {
        posts.push_back(SymInterval::point(LinExpr::input(n, i)));
    }

    AbsPass pass;
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const Layer& layer = net.layer(k);
        const bool is_output = k + 1 == net.layer_count();
        auto pre = affine_transform(layer.weights, layer.bias, posts);

        std::vector<NeuronAbs> neurons;
        neurons.reserve(pre.size());
        posts.clear();
        for (SymInterval& p : pre) {
            NeuronAbs neuron;
            neuron.pre_corners = corners(p, box);
            if (is_output) {
                neuron.state = ActivationState::active;
                neuron.post = p;
            } else {
                neuron.state = classify(neuron.pre_corners);
                neuron.post = relu_single(p, neuron.pre_corners);
            }
            neuron.pre = std::move(p);
            posts.push_back(neuron.post);
            neurons.push_back(std::move(neuron));
        }
        pass.layers.push_back(std::move(neurons));
    }
    return pass;
}

} // namespace dv
