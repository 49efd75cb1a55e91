#include "diffverify/deltabounds.hpp"
#include "diffverify/oracle.hpp"

#include "../support/delta_mock.hpp"
#include "../support/fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace dv;
using fixtures::vec;

TEST_CASE("mode names")
{
    CHECK(parse_mode("convex-only") == Mode::convex_only);
    CHECK(parse_mode("convex_only") == Mode::convex_only);
    CHECK(parse_mode("symvars-only") == Mode::symvars_only);
    CHECK(parse_mode("full") == Mode::full);
    CHECK_FALSE(parse_mode("fast").has_value());
    CHECK(std::string(to_string(Mode::naive)) == "naive");
}

TEST_CASE("delta affine on the running example")
{
    const NetworkPair pair = fixtures::example_pair();
    const DiffAnalysis a = forward_diff(pair, fixtures::example_box(), Mode::convex_only);
    const DeltaBounds& d11 = a.deltas[0][0];
    CHECK(d11.pre.lb == d11.pre.ub);
    CHECK(d11.pre.ub.inputs()[0] == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(d11.pre.ub.inputs()[1] == doctest::Approx(-0.1).epsilon(1e-9));
    CHECK(std::fabs(d11.pre.ub.constant_term()) <= 1e-9);
    CHECK(d11.pre_corners.ub_lo == doctest::Approx(-0.4));
    CHECK(d11.pre_corners.ub_hi == doctest::Approx(0.4));

    CHECK(d11.upper_rule == DeltaRule::chord);
    CHECK(d11.lower_rule == DeltaRule::chord);
    CHECK(std::fabs(d11.post.ub.inputs()[0] - 0.05) <= 1e-9);
    CHECK(std::fabs(d11.post.ub.inputs()[1] + 0.05) <= 1e-9);
    CHECK(std::fabs(d11.post.ub.constant_term() - 0.2) <= 1e-9);
    CHECK(std::fabs(d11.post.lb.inputs()[0] - 0.05) <= 1e-9);
    CHECK(std::fabs(d11.post.lb.inputs()[1] + 0.05) <= 1e-9);
    CHECK(std::fabs(d11.post.lb.constant_term() + 0.2) <= 1e-9);
}

TEST_CASE("identical networks give exactly zero deltas")
{
    const NetworkPair same(fixtures::example_first(), fixtures::example_first());
    for (Mode m : {Mode::concretize, Mode::convex_only, Mode::symvars_only, Mode::full}) {
        const DiffAnalysis a = forward_diff(same, fixtures::example_box(), m);
        for (const auto& layer : a.deltas) {
            for (const auto& d : layer) {
                CHECK(d.pre == SymInterval::zero(2));
                CHECK(d.post == SymInterval::zero(2));
            }
        }
        CHECK(a.output_bounds[0] == ConcreteInterval{0.0, 0.0});
        CHECK(a.table.size() == 0);
    }
}

TEST_CASE("output golden values on the running example")
{
    const NetworkPair pair = fixtures::example_pair();
    const InputBox box = fixtures::example_box();

    const auto convex = forward_diff(pair, box, Mode::convex_only).output_bounds[0];
    CHECK(std::fabs(convex.lo + 1.97) <= 0.02);
    CHECK(std::fabs(convex.hi - 1.42) <= 0.02);

    SymVarOptions one;
    one.budget_override = 1;
    const auto full = forward_diff(pair, box, Mode::full, one).output_bounds[0];
    CHECK(std::fabs(full.lo + 1.65) <= 0.02);
    CHECK(std::fabs(full.hi - 1.18) <= 0.02);

    const auto naive = forward_diff(pair, box, Mode::naive).output_bounds[0];
    CHECK(std::fabs(naive.lo + 21.83) <= 0.2);
    CHECK(std::fabs(naive.hi - 21.12) <= 0.2);
}

TEST_CASE("relu_delta pass-through cases")
{
    const SymInterval pre{LinExpr::input(1, 0) - LinExpr::constant(1, 0.1),
                          LinExpr::input(1, 0) + LinExpr::constant(1, 0.1)};
    const Corners c{-0.6, 0.4, -0.4, 0.6};
    for (Mode m : {Mode::concretize, Mode::convex_only, Mode::symvars_only, Mode::full}) {
        const auto active = relu_delta(pre, c, fixtures::mock_neuron(1, 2), fixtures::mock_neuron(1, 3), m);
        CHECK(active.post == pre);
        CHECK(active.upper_rule == DeltaRule::paired_active);
        CHECK(active.lower_rule == DeltaRule::paired_active);
        const auto inactive = relu_delta(pre, c, fixtures::mock_neuron(-3, -1), fixtures::mock_neuron(-2, -1), m);
        CHECK(inactive.post == SymInterval::zero(1));
        CHECK(inactive.upper_rule == DeltaRule::paired_inactive);
    }
    CHECK_THROWS(relu_delta(pre, c, fixtures::mock_neuron(1, 2), fixtures::mock_neuron(1, 3), Mode::naive));
}

TEST_CASE("relu_delta special cases")
{
    // n active with LB_L(n) = 0.2 gives l' = -0.2 in [l, 0].
    fixtures::DeltaCase up{-0.4, 0.4, 0.2, 3.0, -1.0, 3.0};
    auto r = fixtures::run_delta_case(up, Mode::convex_only);
    CHECK(r.relu.upper_rule == DeltaRule::tight);
    CHECK(r.relu.lower_rule == DeltaRule::paired_active);
    // (d + 0.4) * 0.6 / 0.8 - 0.2
    CHECK(r.upper.coef_delta == doctest::Approx(0.75));
    CHECK(r.upper.constant == doctest::Approx(0.1));
    CHECK(oracle::plane_vertex_check(r.domain, r.lower, r.upper));

    // concretize mode never uses the shifted chord
    r = fixtures::run_delta_case(up, Mode::concretize);
    CHECK(r.relu.upper_rule == DeltaRule::horizontal);
    CHECK(r.upper.constant == doctest::Approx(0.4));

    // n' active with LB_L(n') = 0.1 gives u' = 0.1 in [0, u].
    fixtures::DeltaCase low{-0.4, 0.4, -1.0, 3.0, 0.1, 3.0};
    r = fixtures::run_delta_case(low, Mode::convex_only);
    CHECK(r.relu.lower_rule == DeltaRule::tight);
    // (d - 0.4) * 0.5 / 0.8 + 0.1
    CHECK(r.lower.coef_delta == doctest::Approx(0.625));
    CHECK(r.lower.constant == doctest::Approx(-0.15));
    CHECK(oracle::plane_vertex_check(r.domain, r.lower, r.upper));

    // Narrow range: division guard falls back to the constant plane.
    fixtures::DeltaCase narrow{-1e-12, 1e-12, -1.0, 1.0, -1.0, 1.0};
    r = fixtures::run_delta_case(narrow, Mode::convex_only);
    CHECK(r.relu.upper_rule == DeltaRule::horizontal);
    CHECK(r.relu.lower_rule == DeltaRule::horizontal);
}

TEST_CASE("delta pre-intervals enclose sampled differences")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> t(0, 1);
    for (int n = 0; n < 10; ++n) {
        Network f = oracle::random_network(rng);
        Network g = truncate_weights(f);
        const NetworkPair pair(f, g);
        const InputBox box = oracle::random_box(rng, f.input_count());
        const DiffAnalysis a = forward_diff(pair, box, Mode::convex_only);
        for (int s = 0; s < 200; ++s) {
            std::vector<double> x(static_cast<std::size_t>(box.dims()));
            for (Eigen::Index i = 0; i < box.dims(); ++i) {
                x[static_cast<std::size_t>(i)] = box.lo[i] + t(rng) * box.width(i);
            }
            const Vector xv = Eigen::Map<const Vector>(x.data(), box.dims());
            const auto tf = oracle::forward(f, x);
            const auto tg = oracle::forward(g, x);
            for (std::size_t k = 0; k < a.deltas.size(); ++k) {
                for (std::size_t j = 0; j < a.deltas[k].size(); ++j) {
                    const double d = tg.pre[k][j] - tf.pre[k][j];
                    REQUIRE(a.deltas[k][j].pre.lb.eval(xv) <= d + 1e-9);
                    REQUIRE(a.deltas[k][j].pre.ub.eval(xv) >= d - 1e-9);
                }
            }
        }
    }
}

TEST_CASE("the two difference parametrisations agree")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-5, 5);
    auto relu = [](double v) { return std::max(v, 0.0); };
    for (int i = 0; i < 1000; ++i) {
        const double n = u(rng);
        const double d = u(rng);
        const double n_prime = n + d;
        CHECK(relu(n + d) - relu(n) == doctest::Approx(relu(n_prime) - relu(n_prime - d)).epsilon(1e-12));
    }
}

TEST_CASE("shifted-chord inequalities hold pointwise")
{
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> t(0, 1);
    for (int i = 0; i < 10000; ++i) {
        const double l = -5 * t(rng) - 1e-3;
        const double u = 5 * t(rng) + 1e-3;
        const double x = l + t(rng) * (u - l);
        const double l_prime = l * t(rng);
        const double u_prime = u * t(rng);
        REQUIRE(std::max(l_prime, x) <= (x - l) * (u - l_prime) / (u - l) + l_prime + 1e-9);
        REQUIRE(std::min(u_prime, x) >= (x - u) * (u_prime - l) / (u - l) + u_prime - 1e-9);
    }
}
