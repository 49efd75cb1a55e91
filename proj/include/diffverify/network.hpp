#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown for malformed network or property text. `line()` is 1-based and 0
/// when the error is not tied to a particular line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line);

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// One affine layer. `weights(i, j)` is the edge from source neuron i of the
/// previous layer to target neuron j of this layer.
struct Layer {
    Matrix weights;
    Vector bias;

    Eigen::Index inputs() const { return weights.rows(); }
    Eigen::Index outputs() const { return weights.cols(); }
};

/// Input/output scaling carried by NNet headers. Inputs are normalized as
/// (clamp(x, min, max) - mean) / range.
struct Normalization {
    Vector input_min;
    Vector input_max;
    Vector input_mean;
    Vector input_range;
    double output_mean = 0.0;
    double output_range = 1.0;

    bool operator==(const Normalization&) const = default;
};

/// Feed-forward ReLU network: ReLU after every hidden layer, none on the
/// output layer. Immutable after construction.
class Network {
public:
    /// Throws std::invalid_argument on a broken shape chain, an empty layer
    /// or a non-finite parameter.
    Network(Eigen::Index input_count, std::vector<Layer> layers,
            std::optional<Normalization> normalization = std::nullopt);

    Eigen::Index input_count() const { return input_count_; }
    Eigen::Index output_count() const { return layers_.back().outputs(); }
    std::size_t layer_count() const { return layers_.size(); }
    std::size_t hidden_layer_count() const { return layers_.size() - 1; }

    const Layer& layer(std::size_t k) const { return layers_.at(k); }
    const std::vector<Layer>& layers() const { return layers_; }
    const std::optional<Normalization>& normalization() const { return normalization_; }

    /// Layer widths including the input layer: {n, l_1, ..., l_L}.
    std::vector<Eigen::Index> topology() const;

    bool operator==(const Network&) const;

private:
    Eigen::Index input_count_;
    std::vector<Layer> layers_;
    std::optional<Normalization> normalization_;
};

/// Axis-aligned input region.
struct InputBox {
    Vector lo;
    Vector hi;

    InputBox() = default;
    /// Throws std::invalid_argument if sizes differ, lo > hi or an entry is
    /// not finite.
    InputBox(Vector lo_, Vector hi_);

    Eigen::Index dims() const { return lo.size(); }
    double width(Eigen::Index i) const { return hi[i] - lo[i]; }
    bool contains(const Vector& x, double tol = 0.0) const;
};

/// Two networks of identical topology plus their exact parameter differences
/// (second minus first).
class NetworkPair {
public:
    NetworkPair(Network first, Network second);

    const Network& first() const { return first_; }
    const Network& second() const { return second_; }
    const Matrix& weight_delta(std::size_t k) const { return weight_delta_.at(k); }
    const Vector& bias_delta(std::size_t k) const { return bias_delta_.at(k); }

private:
    Network first_;
    Network second_;
    std::vector<Matrix> weight_delta_;
    std::vector<Vector> bias_delta_;
};

enum class NetworkFormat { nnet, json };

Network parse_network(std::string_view source, NetworkFormat format);
Network parse_nnet(std::string_view source);
Network parse_json_network(std::string_view source);

/// Canonical JSON text: {"inputs": n, "layers": [{"weights": ..., "bias": ...}]}.
std::string to_json(const Network& net);
/// NNet text; normalization defaults to the identity when absent.
std::string to_nnet(const Network& net);

/// Reads a file, choosing the format from its extension (.nnet, otherwise JSON).
Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);

/// Rounds every weight and bias to binary16 (nearest, ties to even). Only
/// `bits == 16` is supported. Throws std::domain_error naming the layer and
/// index of a value that overflows binary16.
Network truncate_weights(const Network& net, int bits = 16);

/// Pairs two networks; throws std::invalid_argument on a topology mismatch.
NetworkPair pair(Network first, Network second);

/// Concrete forward execution. Throws std::invalid_argument on a dimension
/// mismatch.
Vector evaluate(const Network& net, const Vector& x);

/// Maps a raw-unit box into the network's normalized input space. Returns the
/// box unchanged when the network carries no normalization.
InputBox normalize_box(const Network& net, const InputBox& raw);

} // namespace dv
