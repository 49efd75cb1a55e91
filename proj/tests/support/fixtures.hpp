#pragma once

#include "diffverify/network.hpp"

#include <initializer_list>
#include <memory>

namespace fixtures {

inline dv::Matrix matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    dv::Matrix m(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row) {
            m(i, j++) = v;
        }
        ++i;
    }
    return m;
}

inline dv::Vector vec(std::initializer_list<double> values)
{
    dv::Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) {
        v[i++] = x;
    }
    return v;
}

// Running example: weights are source x target, all biases zero.
inline dv::Network example_first()
{
    return dv::Network(2, {{matrix({{1.9, 1.1}, {-1.9, 1.0}}), vec({0, 0})},
                           {matrix({{2.1, 0.9}, {-1.0, 1.1}}), vec({0, 0})},
                           {matrix({{1.0}, {-1.0}}), vec({0})}});
}

inline dv::Network example_second()
{
    return dv::Network(2, {{matrix({{2, 1}, {-2, 1}}), vec({0, 0})},
                           {matrix({{2, 1}, {-1, 1}}), vec({0, 0})},
                           {matrix({{1}, {-1}}), vec({0})}});
}

inline dv::NetworkPair example_pair() { return dv::NetworkPair(example_first(), example_second()); }

inline std::shared_ptr<const dv::NetworkPair> example_pair_ptr()
{
    return std::make_shared<const dv::NetworkPair>(example_first(), example_second());
}

inline dv::InputBox example_box() { return dv::InputBox(vec({-2, -2}), vec({2, 2})); }

} // namespace fixtures
