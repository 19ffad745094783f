#include "design.hpp"

#include <cmath>

namespace pbrdr::detail {

Design Design::build(const Matrix& x, bool standardize) {
    const Index n = x.rows();
    const Index p = x.cols();
    Design d;
    d.center = Vector::Zero(p);
    d.scale = Vector::Ones(p);
    if (standardize && n > 1) {
        for (Index j = 0; j < p; ++j) {
            const double mean = x.col(j).mean();
            const double ss = (x.col(j).array() - mean).square().sum();
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            d.center[j] = mean;
            d.scale[j] = sd > 0.0 ? sd : 1.0;
        }
    }
    d.z.resize(n, p + 1);
    d.z.col(0).setOnes();
    for (Index j = 0; j < p; ++j) {
        d.z.col(j + 1) = (x.col(j).array() - d.center[j]) / d.scale[j];
    }
    return d;
}

Vector Design::to_original(const Vector& internal) const {
    Vector out(internal.size());
    double intercept = internal[0];
    for (Index j = 0; j < center.size(); ++j) {
        out[j + 1] = internal[j + 1] / scale[j];
        intercept -= out[j + 1] * center[j];
    }
    out[0] = intercept;
    return out;
}

Vector Design::to_internal(const Vector& original) const {
    Vector out(original.size());
    double intercept = original[0];
    for (Index j = 0; j < center.size(); ++j) {
        out[j + 1] = original[j + 1] * scale[j];
        intercept += original[j + 1] * center[j];
    }
    out[0] = intercept;
    return out;
}

Matrix Design::take_rows(std::span<const Index> idx) const {
    Matrix out(static_cast<Index>(idx.size()), z.cols());
    for (Index j = 0; j < z.cols(); ++j) {
        for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k), j) = z(idx[k], j);
    }
    return out;
}

std::vector<Index> treated_rows(const Vector& a) {
    std::vector<Index> rows;
    for (Index i = 0; i < a.size(); ++i) {
        if (a[i] == 1.0) rows.push_back(i);
    }
    return rows;
}

}  // namespace pbrdr::detail
