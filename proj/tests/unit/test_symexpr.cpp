#include "diffverify/absbounds.hpp"
#include "diffverify/oracle.hpp"
#include "diffverify/symexpr.hpp"
#include "diffverify/symvars.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace dv;
using fixtures::vec;

namespace {

LinExpr expr(std::initializer_list<double> inputs, double c)
{
    LinExpr e(static_cast<Eigen::Index>(inputs.size()));
    e.inputs() = vec(inputs);
    e.set_constant(c);
    return e;
}

double dot_oracle(const LinExpr& e, const std::vector<double>& x)
{
    double sum = e.constant_term();
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += e.inputs()[static_cast<Eigen::Index>(i)] * x[i];
    }
    return sum;
}

} // namespace

TEST_CASE("symbolic interval arithmetic")
{
    const InputBox unit(vec({-1}), vec({1}));
    const SymInterval x = SymInterval::point(LinExpr::input(1, 0));

    const SymInterval two_x = add(x, x);
    CHECK(two_x.lb == expr({2}, 0));
    CHECK(two_x.ub == expr({2}, 0));

    const SymInterval b{expr({1}, -1), expr({3}, 2)};
    CHECK(add(SymInterval::zero(1), b) == b);

    const SymInterval c{LinExpr::constant(1, -1), LinExpr::constant(1, 1)};
    const SymInterval sum = add(c, c);
    CHECK(concretize(sum.lb, unit, Bound::lower) == -2);
    CHECK(concretize(sum.ub, unit, Bound::upper) == 2);

    const SymInterval diff = add(scale(x, 3), scale(x, -1));
    CHECK(diff.lb == expr({2}, 0));
    CHECK(concretize(diff.lb, unit, Bound::lower) == -2);
    CHECK(concretize(diff.ub, unit, Bound::upper) == 2);

    const SymInterval z = scale(b, 0);
    CHECK(z.lb == LinExpr(1));
    CHECK(z.ub == LinExpr(1));

    const SymInterval neg = scale(b, -1);
    CHECK(neg.lb == expr({-3}, -2));
    CHECK(neg.ub == expr({-1}, 1));
}

TEST_CASE("concretize")
{
    const InputBox unit(vec({-1}), vec({1}));
    CHECK(concretize(expr({2}, 0), unit, Bound::upper) == 2);
    CHECK(concretize(expr({2}, 0), unit, Bound::lower) == -2);
    CHECK(concretize(LinExpr::constant(1, 5), unit, Bound::lower) == 5);
    CHECK(concretize(LinExpr::constant(1, 5), unit, Bound::upper) == 5);

    const InputBox box = fixtures::example_box();
    CHECK(concretize(expr({1.9, -1.9}, 0), box, Bound::lower) == doctest::Approx(-7.6).epsilon(1e-12));
    CHECK(concretize(expr({1.9, -1.9}, 0), box, Bound::upper) == doctest::Approx(7.6).epsilon(1e-12));

    CHECK_THROWS(concretize(LinExpr::variable(1, 1), unit, Bound::lower));
    const SymVarTable empty(1);
    CHECK_THROWS_AS(concretize(LinExpr::variable(1, 1), unit, empty, Bound::lower), std::out_of_range);
}

TEST_CASE("evaluation")
{
    CHECK(expr({0.1, -0.1}, 0).eval(vec({2, 1})) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(LinExpr::constant(3, 4.5).eval(vec({1, 2, 3})) == 4.5);

    LinExpr with_sym = expr({1, 1}, 0);
    with_sym.add_sym(2, 3.0);
    CHECK(with_sym.eval(vec({1, 1}), {{2, 2.0}}) == 8.0);
    CHECK_THROWS_AS(with_sym.eval(vec({1, 1})), std::out_of_range);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int t = 0; t < 200; ++t) {
        const LinExpr e = expr({u(rng), u(rng), u(rng), u(rng)}, u(rng));
        const std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
        CHECK(std::fabs(e.eval(Eigen::Map<const Vector>(x.data(), 4)) - dot_oracle(e, x)) <= 1e-12);
    }
}

TEST_CASE("concretized bounds enclose sampled values")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    std::uniform_real_distribution<double> t(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        SymVarTable table(3);
        const LinExpr d1 = expr({u(rng), u(rng), u(rng)}, u(rng));
        const SymId v = table.add(d1, d1 + LinExpr::constant(3, std::fabs(u(rng))), {1, 0});
        LinExpr e = expr({u(rng), u(rng), u(rng)}, u(rng));
        e.add_sym(v, u(rng));
        Vector lo(3), hi(3);
        for (int i = 0; i < 3; ++i) {
            const double a = u(rng), b = u(rng);
            lo[i] = std::min(a, b);
            hi[i] = std::max(a, b);
        }
        const InputBox box(lo, hi);
        const double emin = concretize(e, box, table, Bound::lower);
        const double emax = concretize(e, box, table, Bound::upper);
        for (int s = 0; s < 50; ++s) {
            Vector x(3);
            for (int i = 0; i < 3; ++i) {
                x[i] = lo[i] + t(rng) * (hi[i] - lo[i]);
            }
            const SymVarDef& def = table.at(v);
            const double sv = def.lb.eval(x) + t(rng) * (def.ub.eval(x) - def.lb.eval(x));
            const double value = e.eval(x, {{v, sv}});
            CHECK(value >= emin - 1e-9);
            CHECK(value <= emax + 1e-9);
        }
    }
}

TEST_CASE("affine transform matches term-by-term interval arithmetic")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 2);
    const Matrix w = Matrix::NullaryExpr(3, 2, [&] { return u(rng); });
    const Vector b = vec({u(rng), u(rng)});
    std::vector<SymInterval> in;
    for (int i = 0; i < 3; ++i) {
        LinExpr lb = expr({u(rng), u(rng)}, u(rng));
        LinExpr ub = lb + LinExpr::constant(2, 1.0);
        ub.add_sym(2 + i, 0.5);
        in.push_back({lb, ub});
    }
    const auto out = affine_transform(w, b, in);
    for (Eigen::Index j = 0; j < 2; ++j) {
        SymInterval want = SymInterval::point(LinExpr::constant(2, b[j]));
        for (Eigen::Index i = 0; i < 3; ++i) {
            want = add(want, scale(in[static_cast<std::size_t>(i)], w(i, j)));
        }
        CHECK((out[static_cast<std::size_t>(j)].lb.inputs() - want.lb.inputs()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((out[static_cast<std::size_t>(j)].ub.inputs() - want.ub.inputs()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(out[static_cast<std::size_t>(j)].lb.constant_term() == doctest::Approx(want.lb.constant_term()));
        for (SymId v = 2; v < 5; ++v) {
            CHECK(out[static_cast<std::size_t>(j)].ub.sym_coeff(v) == doctest::Approx(want.ub.sym_coeff(v)));
            CHECK(out[static_cast<std::size_t>(j)].lb.sym_coeff(v) == doctest::Approx(want.lb.sym_coeff(v)));
        }
    }
}

TEST_CASE("single-network ReLU relaxation")
{
    const InputBox box = fixtures::example_box();
    const LinExpr pre = expr({1.9, -1.9}, 0);
    const SymInterval s = SymInterval::point(pre);
    const SymInterval post = relu_single(s, corners(s, box));
    CHECK(post.ub.inputs()[0] == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(post.ub.inputs()[1] == doctest::Approx(-0.95).epsilon(1e-12));
    CHECK(post.ub.constant_term() == doctest::Approx(3.81).epsilon(0.02 / 3.81));
    CHECK(post.ub.constant_term() == doctest::Approx(3.8).epsilon(1e-12));
    CHECK(post.lb.inputs()[0] == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(post.lb.constant_term() == doctest::Approx(0.0));

    const SymInterval neg = SymInterval::point(expr({1, 0}, -5));
    const auto neg_c = corners(neg, box);
    CHECK(classify(neg_c) == ActivationState::inactive);
    CHECK(relu_single(neg, neg_c) == SymInterval::zero(2));

    const SymInterval pos = SymInterval::point(expr({1, 0}, 5));
    const auto pos_c = corners(pos, box);
    CHECK(classify(pos_c) == ActivationState::active);
    CHECK(relu_single(pos, pos_c) == pos);
}

TEST_CASE("forward_abs on the running example")
{
    const AbsPass pass = forward_abs(fixtures::example_first(), fixtures::example_box());
    const NeuronAbs& out = pass.output()[0];
    // -6.51 and 7.98 are the constants of the printed equations; over
    // [-2, 2]^2 those equations concretize to -9.63 and 14.10.
    CHECK(std::fabs(out.pre_corners.lb_lo - -9.63) <= 0.25);
    CHECK(std::fabs(out.pre_corners.ub_hi - 14.10) <= 0.25);
    CHECK(std::fabs(out.pre.lb.inputs()[0] - -0.94) <= 0.05);
    CHECK(std::fabs(out.pre.lb.inputs()[1] - -0.62) <= 0.05);
    CHECK(std::fabs(out.pre.lb.constant_term() - -6.51) <= 0.05);
    CHECK(std::fabs(out.pre.ub.inputs()[0] - 0.71) <= 0.05);
    CHECK(std::fabs(out.pre.ub.inputs()[1] - -2.35) <= 0.05);
    CHECK(std::fabs(out.pre.ub.constant_term() - 7.98) <= 0.05);

    for (const auto& layer : pass.layers) {
        for (const auto& n : layer) {
            if (n.state == ActivationState::active) {
                CHECK(n.post == n.pre);
            } else if (n.state == ActivationState::inactive) {
                CHECK(n.post == SymInterval::zero(2));
            }
        }
    }
}

TEST_CASE("forward_abs identity layer and sampled soundness")
{
    const Network id(2, {{Matrix::Identity(2, 2), vec({0, 0})}});
    const InputBox box(vec({-1, 3}), vec({2, 4}));
    const AbsPass pass = forward_abs(id, box);
    CHECK(pass.output()[0].post == SymInterval::point(LinExpr::input(2, 0)));
    CHECK(pass.output()[1].post == SymInterval::point(LinExpr::input(2, 1)));

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> t(0, 1);
    for (int n = 0; n < 10; ++n) {
        const Network net = oracle::random_network(rng, {3, 3, 3, 3, 8, 8, 1});
        const InputBox b = oracle::random_box(rng, 3);
        const AbsPass p = forward_abs(net, b);

        // Shrinking the box never widens any neuron's concrete post range.
        InputBox inner = b;
        inner.lo[0] += 0.25 * b.width(0);
        const AbsPass q = forward_abs(net, inner);

        for (int s = 0; s < 1000; ++s) {
            std::vector<double> x(3);
            for (int i = 0; i < 3; ++i) {
                x[static_cast<std::size_t>(i)] = b.lo[i] + t(rng) * b.width(i);
            }
            const auto trace = oracle::forward(net, x);
            for (std::size_t k = 0; k < p.layers.size(); ++k) {
                for (std::size_t j = 0; j < p.layers[k].size(); ++j) {
                    const auto& c = p.layers[k][j].pre_corners;
                    REQUIRE(trace.pre[k][j] >= c.lb_lo - 1e-9);
                    REQUIRE(trace.pre[k][j] <= c.ub_hi + 1e-9);
                }
            }
        }
        // First hidden layer: pre-activations are exact affine maps, so the
        // concrete post range can only shrink.
        for (std::size_t j = 0; j < p.layers[0].size(); ++j) {
            const auto& a = p.layers[0][j].pre_corners;
            const auto& c = q.layers[0][j].pre_corners;
            CHECK(std::max(0.0, c.lb_lo) >= std::max(0.0, a.lb_lo) - 1e-6);
            CHECK(std::max(0.0, c.ub_hi) <= std::max(0.0, a.ub_hi) + 1e-6);
        }
    }
}

// Shrinking the box can widen deeper layers: the lower line LB * u / (u - l)
// has d/du = -l * LB / (u - l)^2, negative for LB > 0, so a smaller u lowers
// it. Kept as a visible known failure rather than dropped.
TEST_CASE("concrete post ranges shrink with the box in every layer" * doctest::may_fail())
{
    std::mt19937_64 rng(21);
    std::size_t widened = 0;
    for (int n = 0; n < 200; ++n) {
        const Network net = oracle::random_network(rng, {3, 3, 3, 3, 8, 8, 1});
        const InputBox b = oracle::random_box(rng, 3);
        InputBox inner = b;
        inner.lo[0] += 0.25 * b.width(0);
        const AbsPass p = forward_abs(net, b);
        const AbsPass q = forward_abs(net, inner);
        for (std::size_t k = 0; k < p.layers.size(); ++k) {
            for (std::size_t j = 0; j < p.layers[k].size(); ++j) {
                const auto& a = p.layers[k][j].pre_corners;
                const auto& c = q.layers[k][j].pre_corners;
                widened += std::max(0.0, c.ub_hi) > std::max(0.0, a.ub_hi) + 1e-6
                           || std::max(0.0, c.lb_lo) < std::max(0.0, a.lb_lo) - 1e-6;
            }
        }
    }
    MESSAGE("neurons whose post range widened: " << widened);
    CHECK(widened == 0);
}
