#pragma once

#include "diffverify/deltabounds.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>

namespace dv::oracle {

/// Shape of generated fuzz networks.
struct RandomNetSpec {
    int min_inputs = 2;
    int max_inputs = 4;
    int min_hidden_layers = 2;
    int max_hidden_layers = 4;
    int min_width = 2;
    int max_width = 8;
    int outputs = 1;
};

/// Random ReLU network: weights uniform in +-1/sqrt(fan_in) * 2, biases in
/// [-0.5, 0.5].
Network random_network(std::mt19937_64& rng, const RandomNetSpec& spec = {});

/// Random box inside [-1, 1]^n with widths in [0.05, 2].
InputBox random_box(std::mt19937_64& rng, Eigen::Index dims);

/// Plain nested-loop forward pass, kept separate from dv::evaluate so each can
/// check the other. pre[k][j] / post[k][j] are the values of layer k+1.
struct Trace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;

    const std::vector<double>& output() const { return post.back(); }
};

Trace forward(const Network& net, const std::vector<double>& x);

struct Violation {
    std::vector<double> x;
    std::string where; ///< e.g. "delta L2 N1 post upper"
    double amount = 0.0;
};

struct SoundnessReport {
    std::size_t samples_tested = 0;
    std::size_t checks = 0;
    std::vector<Violation> violations;
    std::vector<double> max_observed_diff;

    bool sound() const { return violations.empty(); }
};

/// Evaluates both networks at `samples` seeded pseudo-random points of the
/// box plus its corners (all of them up to 2^12, otherwise 2^12 random ones)
/// and checks every symbolic and concrete bound in the analysis. A bound is
/// violated when it misses the true value by more than tol * max(1, |value|).
SoundnessReport sample_check(const NetworkPair& pair, const InputBox& box,
                             const DiffAnalysis& analysis, std::size_t samples,
                             std::uint64_t seed, double tol = 1e-9);

/// Affine function of the neuron value n and the delta d.
struct Plane {
    double coef_delta = 0.0;
    double coef_n = 0.0;
    double constant = 0.0;

    double at(double n, double delta) const { return coef_delta * delta + coef_n * n + constant; }
};

/// Region of (n, delta): a box, optionally cut by a range on n' = n + delta.
struct DeltaDomain {
    double delta_lo = 0.0;
    double delta_hi = 0.0;
    double n_lo = 0.0;
    double n_hi = 0.0;
    std::optional<std::pair<double, double>> n_prime;
};

/// Vertices of the domain's subdivision by n = 0 and n + delta = 0. Empty if
/// the domain is empty.
std::vector<std::pair<double, double>> subdivision_vertices(const DeltaDomain& domain);

/// z = ReLU(n + d) - ReLU(n).
double relu_difference(double n, double delta);

/// True iff lower <= z <= upper (within tol) at every subdivision vertex,
/// which for piecewise-linear z and affine planes covers the whole domain.
/// Throws std::invalid_argument for an empty domain.
bool plane_vertex_check(const DeltaDomain& domain, const Plane& lower, const Plane& upper,
                        double tol = 1e-9);

/// Central difference of f'_o - f_o along input i.
double central_difference(const NetworkPair& pair, const std::vector<double>& x,
                          Eigen::Index output, Eigen::Index input, double h);

/// True iff no ReLU of either network changes sign on [x - h e_i, x + h e_i].
bool kink_free(const NetworkPair& pair, const std::vector<double>& x, Eigen::Index input,
               double h);

} // namespace dv::oracle
