#pragma once

#include "pbrdr/dataset.hpp"

namespace pbrdr::detail {

// Solves sum_i w_i (y_i - z_i'theta) z_i = 0 by QR of diag(sqrt(w)) z.
// Throws RankDeficient when the weighted design is not of full column rank.
Vector weighted_least_squares(const Matrix& z, const Vector& y, const Vector& w);

}  // namespace pbrdr::detail
