#include "diffverify/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace dv::oracle {

Network random_network(std::mt19937_64& rng, const RandomNetSpec& spec)
{
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int inputs = pick(spec.min_inputs, spec.max_inputs);
    const int hidden = pick(spec.min_hidden_layers, spec.max_hidden_layers);
    std::vector<Layer> layers;
    Eigen::Index prev = inputs;
    for (int k = 0; k <= hidden; ++k) {
        const Eigen::Index width = k == hidden ? spec.outputs : pick(spec.min_width, spec.max_width);
        const double scale = 2.0 / std::sqrt(static_cast<double>(prev));
        std::uniform_real_distribution<double> w(-scale, scale);
        std::uniform_real_distribution<double> b(-0.5, 0.5);
        Layer layer{Matrix(prev, width), Vector(width)};
        for (Eigen::Index j = 0; j < width; ++j) {
            for (Eigen::Index i = 0; i < prev; ++i) {
                layer.weights(i, j) = w(rng);
            }
            layer.bias[j] = b(rng);
        }
        layers.push_back(std::move(layer));
        prev = width;
    }
    return Network(inputs, std::move(layers));
}

InputBox random_box(std::mt19937_64& rng, Eigen::Index dims)
{
    std::uniform_real_distribution<double> width(0.05, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector lo(dims);
    Vector hi(dims);
    for (Eigen::Index i = 0; i < dims; ++i) {
        const double w = width(rng);
        lo[i] = -1.0 + unit(rng) * (2.0 - w);
        hi[i] = lo[i] + w;
    }
    return InputBox(lo, hi);
}

Trace forward(const Network& net, const std::vector<double>& x)
{
    Trace trace;
    std::vector<double> value = x;
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const Layer& layer = net.layer(k);
        std::vector<double> pre(static_cast<std::size_t>(layer.outputs()));
        for (Eigen::Index j = 0; j < layer.outputs(); ++j) {
            double sum = layer.bias[j];
            for (Eigen::Index i = 0; i < layer.inputs(); ++i) {
                sum += value[static_cast<std::size_t>(i)] * layer.weights(i, j);
            }
            pre[static_cast<std::size_t>(j)] = sum;
        }
        std::vector<double> post = pre;
        if (k + 1 < net.layer_count()) {
            for (double& v : post) {
                v = std::max(v, 0.0);
            }
        }
        value = post;
        trace.pre.push_back(std::move(pre));
        trace.post.push_back(std::move(post));
    }
    return trace;
}

namespace {

// Location of a check; rendered to text only when it fails.
struct Where {
    const char* what;
    std::size_t layer;
    std::size_t neuron;
    const char* part;

    std::string str(const char* side) const
    {
        std::ostringstream out;
        out << what << " L" << layer << " N" << neuron << ' ' << part << ' ' << side;
        return out.str();
    }
};

class Checker {
public:
    Checker(SoundnessReport& report, const std::vector<double>& x, double tol)
        : report_(report)
        , x_(x)
        , tol_(tol)
    {
    }

    void within(const SymInterval& s, const Vector& x, const SymValues& sym, double value,
                const Where& where)
    {
        check(s.lb.eval(x, sym) - value, value, where, "lower");
        check(value - s.ub.eval(x, sym), value, where, "upper");
    }

    void within(const ConcreteInterval& c, double value, const Where& where)
    {
        check(c.lo - value, value, where, "lower");
        check(value - c.hi, value, where, "upper");
    }

private:
    void check(double excess, double value, const Where& where, const char* side)
    {
        ++report_.checks;
        if (!(excess <= tol_ * std::max(1.0, std::fabs(value)))) {
            report_.violations.push_back({x_, where.str(side), excess});
        }
    }

    SoundnessReport& report_;
    const std::vector<double>& x_;
    double tol_;
};

void check_network(Checker& check, const AbsPass& pass, const Trace& trace, const Vector& x,
                   const char* name)
{
    for (std::size_t k = 0; k < pass.layers.size(); ++k) {
        for (std::size_t j = 0; j < pass.layers[k].size(); ++j) {
            const NeuronAbs& neuron = pass.layers[k][j];
            check.within(neuron.pre, x, {}, trace.pre[k][j], Where{name, k + 1, j + 1, "pre"});
            check.within(neuron.pre_corners.outer(), trace.pre[k][j],
                         Where{name, k + 1, j + 1, "pre concrete"});
            check.within(neuron.post, x, {}, trace.post[k][j], Where{name, k + 1, j + 1, "post"});
        }
    }
}

std::vector<std::vector<double>> sample_points(const InputBox& box, std::size_t samples,
                                               std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto dims = static_cast<std::size_t>(box.dims());
    std::vector<std::vector<double>> points;

    auto corner = [&](std::uint64_t mask) {
        std::vector<double> x(dims);
        for (std::size_t i = 0; i < dims; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            x[i] = (mask >> i) & 1U ? box.hi[ii] : box.lo[ii];
        }
        return x;
    };
    if (dims <= 12) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << dims); ++mask) {
            points.push_back(corner(mask));
        }
    } else {
        for (int c = 0; c < 4096; ++c) {
            std::vector<double> x(dims);
            for (std::size_t i = 0; i < dims; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                x[i] = unit(rng) < 0.5 ? box.lo[ii] : box.hi[ii];
            }
            points.push_back(std::move(x));
        }
    }
    for (std::size_t s = 0; s < samples; ++s) {
        std::vector<double> x(dims);
        for (std::size_t i = 0; i < dims; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            x[i] = box.lo[ii] + unit(rng) * box.width(ii);
        }
        points.push_back(std::move(x));
    }
    return points;
}

} // namespace

SoundnessReport sample_check(const NetworkPair& pair, const InputBox& box,
                             const DiffAnalysis& analysis, std::size_t samples,
                             std::uint64_t seed, double tol)
{
    SoundnessReport report;
    const auto outputs = static_cast<std::size_t>(pair.first().output_count());
    report.max_observed_diff.assign(outputs, 0.0);

    for (const auto& point : sample_points(box, samples, seed)) {
        ++report.samples_tested;
        const Vector x = Eigen::Map<const Vector>(point.data(), static_cast<Eigen::Index>(point.size()));
        const Trace tf = forward(pair.first(), point);
        const Trace tg = forward(pair.second(), point);
        Checker check(report, point, tol);

        check_network(check, analysis.first, tf, x, "first");
        check_network(check, analysis.second, tg, x, "second");

        SymValues sym;
        for (const SymVarDef& def : analysis.table.defs()) {
            const std::size_t k = def.origin.layer - 1;
            const auto j = static_cast<std::size_t>(def.origin.neuron);
            const double value = tg.post[k][j] - tf.post[k][j];
            sym[def.id] = value;
            check.within(SymInterval{def.lb, def.ub}, x, {}, value,
                         Where{"symvar", def.origin.layer, j + 1, "definition"});
        }

        for (std::size_t k = 0; k < analysis.deltas.size(); ++k) {
            for (std::size_t j = 0; j < analysis.deltas[k].size(); ++j) {
                const DeltaBounds& d = analysis.deltas[k][j];
                const double pre = tg.pre[k][j] - tf.pre[k][j];
                const double post = tg.post[k][j] - tf.post[k][j];
                check.within(d.pre, x, sym, pre, Where{"delta", k + 1, j + 1, "pre"});
                check.within(d.pre_corners.outer(), pre, Where{"delta", k + 1, j + 1, "pre concrete"});
                check.within(d.post, x, sym, post, Where{"delta", k + 1, j + 1, "post"});
            }
        }

        for (std::size_t o = 0; o < outputs; ++o) {
            const double diff = tg.output()[o] - tf.output()[o];
            report.max_observed_diff[o] = std::max(report.max_observed_diff[o], std::fabs(diff));
            check.within(analysis.output[o], x, sym, diff, Where{"output", pair.first().layer_count(), o + 1, "symbolic"});
            check.within(analysis.output_bounds[o], diff, Where{"output", pair.first().layer_count(), o + 1, "concrete"});
        }
    }
    return report;
}

double relu_difference(double n, double delta)
{
    return std::max(n + delta, 0.0) - std::max(n, 0.0);
}

std::vector<std::pair<double, double>> subdivision_vertices(const DeltaDomain& d)
{
    // Lines a*n + b*delta = c.
    struct Line {
        double a, b, c;
    };
    std::vector<Line> lines{{1, 0, d.n_lo}, {1, 0, d.n_hi}, {1, 0, 0.0},
                            {0, 1, d.delta_lo}, {0, 1, d.delta_hi}, {1, 1, 0.0}};
    if (d.n_prime) {
        lines.push_back({1, 1, d.n_prime->first});
        lines.push_back({1, 1, d.n_prime->second});
    }

    const double scale = std::max({1.0, std::fabs(d.n_lo), std::fabs(d.n_hi),
                                   std::fabs(d.delta_lo), std::fabs(d.delta_hi)});
    const double eps = 1e-12 * scale;
    auto feasible = [&](double n, double delta) {
        if (n < d.n_lo - eps || n > d.n_hi + eps || delta < d.delta_lo - eps
            || delta > d.delta_hi + eps) {
            return false;
        }
        if (d.n_prime) {
            const double m = n + delta;
            return m >= d.n_prime->first - eps && m <= d.n_prime->second + eps;
        }
        return true;
    };

    std::vector<std::pair<double, double>> vertices;
    for (std::size_t p = 0; p < lines.size(); ++p) {
        for (std::size_t q = p + 1; q < lines.size(); ++q) {
            const Line& a = lines[p];
            const Line& b = lines[q];
            const double det = a.a * b.b - a.b * b.a;
            if (det == 0.0) {
                continue;
            }
            const double n = (a.c * b.b - a.b * b.c) / det;
            const double delta = (a.a * b.c - a.c * b.a) / det;
            if (feasible(n, delta)) {
                vertices.emplace_back(std::clamp(n, d.n_lo, d.n_hi),
                                      std::clamp(delta, d.delta_lo, d.delta_hi));
            }
        }
    }
    return vertices;
}

bool plane_vertex_check(const DeltaDomain& domain, const Plane& lower, const Plane& upper,
                        double tol)
{
    if (domain.n_lo > domain.n_hi || domain.delta_lo > domain.delta_hi) {
        throw std::invalid_argument("empty box");
    }
    const auto vertices = subdivision_vertices(domain);
    if (vertices.empty()) {
        throw std::invalid_argument("empty box");
    }
    return std::all_of(vertices.begin(), vertices.end(), [&](const auto& v) {
        const double z = relu_difference(v.first, v.second);
        const double slack = tol * std::max(1.0, std::fabs(z));
        return lower.at(v.first, v.second) <= z + slack && upper.at(v.first, v.second) >= z - slack;
    });
}

double central_difference(const NetworkPair& pair, const std::vector<double>& x,
                          Eigen::Index output, Eigen::Index input, double h)
{
    auto diff_at = [&](double offset) {
        std::vector<double> p = x;
        p[static_cast<std::size_t>(input)] += offset;
        const auto o = static_cast<std::size_t>(output);
        return forward(pair.second(), p).output()[o] - forward(pair.first(), p).output()[o];
    };
    return (diff_at(h) - diff_at(-h)) / (2.0 * h);
}

bool kink_free(const NetworkPair& pair, const std::vector<double>& x, Eigen::Index input,
               double h)
{
    std::vector<double> minus = x;
    std::vector<double> plus = x;
    minus[static_cast<std::size_t>(input)] -= h;
    plus[static_cast<std::size_t>(input)] += h;

    // Along a segment where every earlier layer keeps its pattern, each
    // pre-activation is affine, so equal strict signs at both ends rule out
    // a crossing in between.
    for (const Network* net : {&pair.first(), &pair.second()}) {
        const Trace a = forward(*net, minus);
        const Trace b = forward(*net, plus);
        for (std::size_t k = 0; k + 1 < a.pre.size(); ++k) {
            for (std::size_t j = 0; j < a.pre[k].size(); ++j) {
                if (a.pre[k][j] == 0.0 || b.pre[k][j] == 0.0
                    || (a.pre[k][j] > 0.0) != (b.pre[k][j] > 0.0)) {
                    return false;
                }
            }
        }
    }
    return true;
}

} // namespace dv::oracle
