#pragma once

#include "diffverify/verifier.hpp"

#include <string>
#include <string_view>

namespace dv {

inline constexpr const char* kToolName = "dvcli";
inline constexpr const char* kToolVersion = "0.1.0";

/// Property file: {"input_lower": [...], "input_upper": [...], "epsilon": e,
/// "normalized": false}.
struct PropertySpec {
    Vector input_lower;
    Vector input_upper;
    double epsilon = 0.0;
    bool normalized = false;

    /// Box in the network's input space (normalized when requested).
    InputBox box_for(const Network& net) const;
};

/// Throws ParseError on malformed text or invalid values.
PropertySpec parse_property(std::string_view text);
PropertySpec load_property(const std::string& path);

/// Machine-readable result of a `verify` or `bounds` run.
struct Report {
    std::string command;
    Mode mode = Mode::full;
    std::optional<Status> status;
    std::optional<double> epsilon;
    std::vector<ConcreteInterval> output_bounds;
    std::vector<SymInterval> symbolic_bounds;
    std::optional<double> minimal_epsilon;
    double wall_seconds = 0.0;
    std::size_t subregions = 0;
    std::size_t leaves = 0;
    int max_depth_reached = 0;
    bool timed_out = false;
    std::size_t symvars = 0;
    CaseHistogram cases;
    unsigned threads = 1;
};

/// Smallest epsilon a single pass with these bounds verifies: the next double
/// above max_j max(|lo_j|, |hi_j|).
double minimal_epsilon(std::span<const ConcreteInterval> output_bounds);

/// Stable JSON rendering (schema documented in README.md).
std::string render_report(const Report& report);

} // namespace dv
