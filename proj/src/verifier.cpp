#include "diffverify/verifier.hpp"

#include "diffverify/channel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace dv {

const char* to_string(SplitStrategy strategy)
{
    return strategy == SplitStrategy::smear ? "smear" : "widest";
}

const char* to_string(Status status)
{
    return status == Status::verified ? "verified" : "undetermined";
}

std::optional<SplitStrategy> parse_split_strategy(std::string_view text)
{
    if (text == "smear") {
        return SplitStrategy::smear;
    }
    if (text == "widest") {
        return SplitStrategy::widest;
    }
    return std::nullopt;
}

bool check_epsilon(std::span<const ConcreteInterval> output_deltas, double epsilon)
{
    return std::all_of(output_deltas.begin(), output_deltas.end(), [epsilon](const ConcreteInterval& d) {
        return -epsilon < d.lo && d.hi < epsilon;
    });
}

IntervalMatrix interval_jacobian(const Network& net, const AbsPass& pass)
{
    const Eigen::Index n = net.input_count();
    IntervalMatrix jac{Matrix::Identity(n, n), Matrix::Identity(n, n)};
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const Matrix wt = net.layer(k).weights.transpose();
        const Matrix pos = wt.cwiseMax(0.0);
        const Matrix neg = wt.cwiseMin(0.0);
        IntervalMatrix next{pos * jac.lo + neg * jac.hi, pos * jac.hi + neg * jac.lo};
        if (k + 1 < net.layer_count()) {
            const auto& neurons = pass.layers.at(k);
            for (Eigen::Index j = 0; j < next.lo.rows(); ++j) {
                switch (neurons[static_cast<std::size_t>(j)].state) {
                case ActivationState::active:
                    break;
                case ActivationState::inactive:
                    next.lo.row(j).setZero();
                    next.hi.row(j).setZero();
                    break;
                case ActivationState::unstable:
                    next.lo.row(j) = next.lo.row(j).cwiseMin(0.0);
                    next.hi.row(j) = next.hi.row(j).cwiseMax(0.0);
                    break;
                }
            }
        }
        jac = std::move(next);
    }
    return jac;
}

IntervalMatrix interval_gradient(const NetworkPair& pair, const AbsPass& first,
                                 const AbsPass& second)
{
    const IntervalMatrix f = interval_jacobian(pair.first(), first);
    const IntervalMatrix g = interval_jacobian(pair.second(), second);
    return {g.lo - f.hi, g.hi - f.lo};
}

std::vector<ConcreteInterval> reduce_over_outputs(const IntervalMatrix& jacobian)
{
    const Eigen::Index outputs = jacobian.lo.rows();
    std::vector<ConcreteInterval> out;
    for (Eigen::Index i = 0; i < jacobian.lo.cols(); ++i) {
        if (outputs == 1) {
            out.push_back({jacobian.lo(0, i), jacobian.hi(0, i)});
            continue;
        }
        ConcreteInterval sum;
        for (Eigen::Index o = 0; o < outputs; ++o) {
            const double lo = jacobian.lo(o, i);
            const double hi = jacobian.hi(o, i);
            if (lo >= 0.0) {
                sum.lo += lo;
                sum.hi += hi;
            } else if (hi <= 0.0) {
                sum.lo += -hi;
                sum.hi += -lo;
            } else {
                sum.hi += std::max(-lo, hi);
            }
        }
        out.push_back(sum);
    }
    return out;
}

std::pair<InputBox, InputBox> split(const InputBox& box, SplitStrategy strategy,
                                    std::span<const ConcreteInterval> gradients)
{
    const Eigen::Index dims = box.dims();
    Eigen::Index widest = 0;
    for (Eigen::Index i = 1; i < dims; ++i) {
        if (box.width(i) > box.width(widest)) {
            widest = i;
        }
    }
    if (box.width(widest) <= 0.0) {
        throw std::invalid_argument("degenerate box");
    }

    Eigen::Index chosen = widest;
    if (strategy == SplitStrategy::smear) {
        if (static_cast<Eigen::Index>(gradients.size()) != dims) {
            throw std::invalid_argument("split: one gradient interval per input required");
        }
        double best = 0.0;
        for (Eigen::Index i = 0; i < dims; ++i) {
            const auto& g = gradients[static_cast<std::size_t>(i)];
            const double score = box.width(i) * std::max(std::fabs(g.lo), std::fabs(g.hi));
            if (score > best) {
                best = score;
                chosen = i;
            }
        }
    }

    const double mid = box.lo[chosen] + 0.5 * box.width(chosen);
    InputBox left = box;
    InputBox right = box;
    left.hi[chosen] = mid;
    right.lo[chosen] = mid;
    return {std::move(left), std::move(right)};
}

namespace {

using Clock = std::chrono::steady_clock;

struct WorkItem {
    InputBox box;
    int depth = 0;
};

struct WorkResult {
    WorkItem item;
    bool skipped = false;
    bool deadline_passed = false;
    bool verified = false;
    std::vector<ConcreteInterval> output_bounds;
    CaseHistogram cases;
    std::size_t symvars = 0;
    std::optional<std::pair<InputBox, InputBox>> children;
};

WorkResult analyse(const VerificationTask& task, WorkItem item)
{
    WorkResult result;
    const DiffAnalysis analysis = forward_diff(*task.pair, item.box, task.mode, task.symvars);
    result.output_bounds = analysis.output_bounds;
    result.cases = analysis.stats.cases;
    result.symvars = analysis.stats.symvars_introduced;
    result.verified = check_epsilon(result.output_bounds, task.epsilon);
    if (!result.verified && item.depth < task.max_depth) {
        const bool has_width = (item.box.hi - item.box.lo).maxCoeff() > 0.0;
        if (has_width) {
            const auto grad = reduce_over_outputs(
                interval_gradient(*task.pair, analysis.first, analysis.second));
            result.children = split(item.box, task.split_strategy, grad);
        }
    }
    result.item = std::move(item);
    return result;
}

} // namespace

VerificationOutcome verify(const VerificationTask& task)
{
    if (!task.pair) {
        throw std::invalid_argument("verification task has no network pair");
    }
    if (!(task.epsilon > 0.0)) {
        throw std::invalid_argument("epsilon must be positive");
    }
    if (task.max_depth < 0) {
        throw std::invalid_argument("max_depth must be non-negative");
    }

    const auto start = Clock::now();
    const auto deadline = start + std::chrono::duration_cast<Clock::duration>(task.timeout);

    Channel<WorkItem> work;
    Channel<WorkResult> results;
    std::atomic<bool> stop{false};

    const unsigned threads = std::max(1u, task.thread_count);
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        workers.emplace_back([&] {
            while (auto item = work.pop()) {
                const bool late = Clock::now() > deadline;
                if (stop.load() || late) {
                    WorkResult skipped;
                    skipped.item = std::move(*item);
                    skipped.skipped = true;
                    skipped.deadline_passed = late;
                    results.push(std::move(skipped));
                    continue;
                }
                results.push(analyse(task, std::move(*item)));
            }
        });
    }

    VerificationOutcome outcome;
    bool all_verified = true;
    std::size_t outstanding = 1;
    work.push({task.box, 0});

    while (outstanding > 0) {
        auto result = results.pop();
        --outstanding;
        if (result->skipped) {
            all_verified = false;
            outcome.timed_out = outcome.timed_out || result->deadline_passed;
            continue;
        }

        ++outcome.subregions_explored;
        outcome.max_depth_reached = std::max(outcome.max_depth_reached, result->item.depth);
        outcome.case_histogram += result->cases;
        outcome.symvars_introduced += result->symvars;

        const bool can_split = !result->verified && result->children
                               && !stop.load() && Clock::now() <= deadline;
        if (can_split) {
            work.push({std::move(result->children->first), result->item.depth + 1});
            work.push({std::move(result->children->second), result->item.depth + 1});
            outstanding += 2;
            continue;
        }

        ++outcome.leaves;
        if (outcome.output_bounds.empty()) {
            outcome.output_bounds = result->output_bounds;
        } else {
            for (std::size_t j = 0; j < outcome.output_bounds.size(); ++j) {
                outcome.output_bounds[j] = outcome.output_bounds[j].hull(result->output_bounds[j]);
            }
        }
        if (task.record_leaves) {
            outcome.leaf_records.push_back(
                {result->item.box, result->item.depth, result->verified, result->output_bounds});
        }
        if (!result->verified) {
            all_verified = false;
            if (result->children && Clock::now() > deadline) {
                outcome.timed_out = true;
            }
            // One unresolved leaf decides the outcome; drain what is in flight.
            stop.store(true);
        }
    }
    work.close();
    workers.clear();

    outcome.status = all_verified ? Status::verified : Status::undetermined;
    outcome.wall_time = Clock::now() - start;
    return outcome;
}

} // namespace dv
