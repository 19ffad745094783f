#pragma once

#include <span>
#include <vector>

#include "pbrdr/dataset.hpp"

namespace pbrdr::detail {

// Internal design [1, (x - center) / scale] with affine maps between internal
// and original coefficients.
struct Design {
    Matrix z;
    Vector center;
    Vector scale;

    static Design build(const Matrix& x, bool standardize);

    Index rows() const { return z.rows(); }
    Index cols() const { return z.cols(); }

    Vector to_original(const Vector& internal) const;
    Vector to_internal(const Vector& original) const;

    // Submatrix of the given rows, still column-major.
    Matrix take_rows(std::span<const Index> idx) const;
};

std::vector<Index> treated_rows(const Vector& a);

// Snap tiny coordinates to exact zero so active sets are well defined.
inline double snap(double v) { return (v < 1e-14 && v > -1e-14) ? 0.0 : v; }

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace pbrdr::detail
