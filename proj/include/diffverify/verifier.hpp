#pragma once

#include "diffverify/deltabounds.hpp"

#include <chrono>
#include <memory>
#include <utility>

namespace dv {

enum class SplitStrategy { smear, widest };
enum class Status { verified, undetermined };

const char* to_string(SplitStrategy strategy);
const char* to_string(Status status);
std::optional<SplitStrategy> parse_split_strategy(std::string_view text);

struct VerificationTask {
    std::shared_ptr<const NetworkPair> pair;
    InputBox box;
    double epsilon = 0.0;
    Mode mode = Mode::full;
    int max_depth = 25;
    std::chrono::duration<double> timeout = std::chrono::seconds(1800);
    unsigned thread_count = 12;
    SplitStrategy split_strategy = SplitStrategy::smear;
    SymVarOptions symvars;
    /// Keep every leaf box in the outcome (tests and debugging).
    bool record_leaves = false;
};

struct LeafRecord {
    InputBox box;
    int depth = 0;
    bool verified = false;
    std::vector<ConcreteInterval> output_bounds;
};

struct VerificationOutcome {
    Status status = Status::undetermined;
    /// Hull of the leaves' output delta bounds.
    std::vector<ConcreteInterval> output_bounds;
    std::size_t subregions_explored = 0;
    std::size_t leaves = 0;
    int max_depth_reached = 0;
    std::chrono::duration<double> wall_time{0};
    std::size_t symvars_introduced = 0;
    CaseHistogram case_histogram;
    bool timed_out = false;
    std::vector<LeafRecord> leaf_records;
};

/// True iff -epsilon < lo and hi < epsilon for every output.
bool check_epsilon(std::span<const ConcreteInterval> output_deltas, double epsilon);

/// Interval matrix, entry-wise [lo, hi].
struct IntervalMatrix {
    Matrix lo;
    Matrix hi;

    bool contains(Eigen::Index r, Eigen::Index c, double v, double tol = 0.0) const
    {
        return v >= lo(r, c) - tol && v <= hi(r, c) + tol;
    }
};

/// Interval Jacobian (outputs x inputs) of one network over the box its
/// single-network pass was computed for. ReLU derivatives come from the
/// activation states: active [1,1], inactive [0,0], unstable [0,1].
IntervalMatrix interval_jacobian(const Network& net, const AbsPass& pass);

/// Interval Jacobian of f'(x) - f(x): the interval difference of the two
/// networks' Jacobians.
IntervalMatrix interval_gradient(const NetworkPair& pair, const AbsPass& first,
                                 const AbsPass& second);

/// Per-input gradient used for splitting: the signed interval for a single
/// output, otherwise the sum over outputs of the interval magnitudes.
std::vector<ConcreteInterval> reduce_over_outputs(const IntervalMatrix& jacobian);

/// Bisects the box at the midpoint of one dimension. Smear picks the
/// dimension maximising width * max(|g.lo|, |g.hi|) (widest when every score
/// is zero); ties go to the lowest index. Throws std::invalid_argument
/// ("degenerate box") when every width is zero.
std::pair<InputBox, InputBox> split(const InputBox& box, SplitStrategy strategy,
                                    std::span<const ConcreteInterval> gradients);

/// Bisection search over the box. Each subregion gets its own analysis; the
/// task is verified iff every leaf passes the epsilon check.
VerificationOutcome verify(const VerificationTask& task);

} // namespace dv
