#pragma once

#include "isgd/nn.hpp"

#include <initializer_list>

namespace isgd::test {

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

inline Layer layer(Matrix w, ActivationKind act, bool bias = false) {
    Layer l;
    l.bias = Vector::Zero(w.rows());
    l.weights = std::move(w);
    l.activation = act;
    l.has_bias = bias;
    return l;
}

}  // namespace isgd::test
