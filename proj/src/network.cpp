#include "diffverify/network.hpp"

#include "diffverify/half.hpp"

#include <algorithm>
#include <sstream>

namespace dv {

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what)
    , line_(line)
{
}

Network::Network(Eigen::Index input_count, std::vector<Layer> layers,
                 std::optional<Normalization> normalization)
    : input_count_(input_count)
    , layers_(std::move(layers))
    , normalization_(std::move(normalization))
{
    if (input_count_ <= 0) {
        throw std::invalid_argument("shape-chain violation: network needs at least one input");
    }
    if (layers_.empty()) {
        throw std::invalid_argument("shape-chain violation: network has no layers");
    }
    Eigen::Index expected = input_count_;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const Layer& layer = layers_[k];
        if (layer.outputs() == 0) {
            throw std::invalid_argument("shape-chain violation: layer " + std::to_string(k + 1)
                                        + " has zero neurons");
        }
        if (layer.inputs() != expected) {
            std::ostringstream msg;
            msg << "shape-chain violation: layer " << k + 1 << " expects " << layer.inputs()
                << " inputs but the previous layer has " << expected << " neurons";
            throw std::invalid_argument(msg.str());
        }
        if (layer.bias.size() != layer.outputs()) {
            throw std::invalid_argument("shape-chain violation: layer " + std::to_string(k + 1)
                                        + " bias length differs from its neuron count");
        }
        if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
            throw std::invalid_argument("layer " + std::to_string(k + 1)
                                        + " has a non-finite parameter");
        }
        expected = layer.outputs();
    }
    if (normalization_) {
        const auto& norm = *normalization_;
        const auto n = input_count_;
        if (norm.input_min.size() != n || norm.input_max.size() != n
            || norm.input_mean.size() != n || norm.input_range.size() != n) {
            throw std::invalid_argument("normalization vectors must have one entry per input");
        }
    }
}

std::vector<Eigen::Index> Network::topology() const
{
    std::vector<Eigen::Index> sizes{input_count_};
    for (const Layer& layer : layers_) {
        sizes.push_back(layer.outputs());
    }
    return sizes;
}

bool Network::operator==(const Network& other) const
{
    if (input_count_ != other.input_count_ || layers_.size() != other.layers_.size()
        || normalization_ != other.normalization_) {
        return false;
    }
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const Layer& a = layers_[k];
        const Layer& b = other.layers_[k];
        if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols()
            || a.weights != b.weights || a.bias != b.bias) {
            return false;
        }
    }
    return true;
}

InputBox::InputBox(Vector lo_, Vector hi_)
    : lo(std::move(lo_))
    , hi(std::move(hi_))
{
    if (lo.size() != hi.size()) {
        throw std::invalid_argument("box bounds have different lengths");
    }
    if (lo.size() == 0) {
        throw std::invalid_argument("box must have at least one dimension");
    }
    if (!lo.allFinite() || !hi.allFinite()) {
        throw std::invalid_argument("box bounds must be finite");
    }
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (lo[i] > hi[i]) {
            throw std::invalid_argument("box lower bound exceeds upper bound in dimension "
                                        + std::to_string(i + 1));
        }
    }
}

bool InputBox::contains(const Vector& x, double tol) const
{
    if (x.size() != lo.size()) {
        return false;
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) {
            return false;
        }
    }
    return true;
}

NetworkPair::NetworkPair(Network first, Network second)
    : first_(std::move(first))
    , second_(std::move(second))
{
    if (first_.topology() != second_.topology()) {
        auto render = [](const Network& net) {
            std::ostringstream out;
            const auto sizes = net.topology();
            for (std::size_t i = 0; i < sizes.size(); ++i) {
                out << (i ? "-" : "") << sizes[i];
            }
            return out.str();
        };
        throw std::invalid_argument("topology mismatch: " + render(first_) + " vs "
                                    + render(second_));
    }
    for (std::size_t k = 0; k < first_.layer_count(); ++k) {
        weight_delta_.push_back(second_.layer(k).weights - first_.layer(k).weights);
        bias_delta_.push_back(second_.layer(k).bias - first_.layer(k).bias);
    }
}

Network truncate_weights(const Network& net, int bits)
{
    if (bits != 16) {
        throw std::invalid_argument("only 16-bit truncation is supported");
    }
    auto round = [](double value, std::size_t layer, const std::string& where) {
        const auto rounded = round_to_half(value);
        if (!rounded) {
            std::ostringstream msg;
            msg << "value " << value << " at layer " << layer << ' ' << where
                << " overflows binary16";
            throw std::domain_error(msg.str());
        }
        return *rounded;
    };

    std::vector<Layer> layers = net.layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
        Layer& layer = layers[k];
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
                layer.weights(i, j) = round(layer.weights(i, j), k + 1,
                                            "weight [" + std::to_string(i + 1) + ","
                                                + std::to_string(j + 1) + "]");
            }
        }
        for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
            layer.bias[j] = round(layer.bias[j], k + 1, "bias [" + std::to_string(j + 1) + "]");
        }
    }
    return Network(net.input_count(), std::move(layers), net.normalization());
}

NetworkPair pair(Network first, Network second)
{
    return NetworkPair(std::move(first), std::move(second));
}

Vector evaluate(const Network& net, const Vector& x)
{
    if (x.size() != net.input_count()) {
        throw std::invalid_argument("input has " + std::to_string(x.size())
                                    + " entries, network expects "
                                    + std::to_string(net.input_count()));
    }
    Vector value = x;
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const Layer& layer = net.layer(k);
        Vector next = layer.weights.transpose() * value + layer.bias;
        if (k + 1 < net.layer_count()) {
            next = next.cwiseMax(0.0);
        }
        value = std::move(next);
    }
    return value;
}

InputBox normalize_box(const Network& net, const InputBox& raw)
{
    if (!net.normalization()) {
        return raw;
    }
    const auto& norm = *net.normalization();
    if (raw.dims() != net.input_count()) {
        throw std::invalid_argument("box dimension differs from network input count");
    }
    Vector lo(raw.dims());
    Vector hi(raw.dims());
    for (Eigen::Index i = 0; i < raw.dims(); ++i) {
        const double range = norm.input_range[i] == 0.0 ? 1.0 : norm.input_range[i];
        const double a = std::clamp(raw.lo[i], norm.input_min[i], norm.input_max[i]);
        const double b = std::clamp(raw.hi[i], norm.input_min[i], norm.input_max[i]);
        lo[i] = (a - norm.input_mean[i]) / range;
        hi[i] = (b - norm.input_mean[i]) / range;
        if (lo[i] > hi[i]) {
            std::swap(lo[i], hi[i]);
        }
    }
    return InputBox(std::move(lo), std::move(hi));
}

} // namespace dv
