#include "pbrdr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pbrdr/error.hpp"

namespace pbrdr {

Index Dataset::n_treated() const {
    Index count = 0;
    for (Index i = 0; i < a.size(); ++i) count += a[i] == 1.0 ? 1 : 0;
    return count;
}

void Dataset::validate() const {
    if (a.size() != y.size() || x.rows() != y.size()) {
        fail(ErrorKind::DimensionError, "inconsistent lengths: y=" + std::to_string(y.size()) +
                                            " a=" + std::to_string(a.size()) +
                                            " x rows=" + std::to_string(x.rows()));
    }
    if (!y.allFinite() || !x.allFinite()) fail(ErrorKind::DegenerateData, "non-finite entries");
    for (Index i = 0; i < a.size(); ++i) {
        if (a[i] != 0.0 && a[i] != 1.0) {
            fail(ErrorKind::DegenerateData,
                 "treatment must be 0 or 1 (row " + std::to_string(i) + ")");
        }
    }
}

void Dataset::require_both_arms() const {
    validate();
    const Index treated = n_treated();
    if (treated == 0 || treated == n()) {
        fail(ErrorKind::DegenerateData, "treatment is constant across all units");
    }
}

Dataset Dataset::with_treatment_flipped() const {
    Dataset out = *this;
    out.a = Vector::Ones(a.size()) - a;
    return out;
}

Dataset Dataset::select_covariates(std::span<const Index> positions) const {
    Dataset out;
    out.y = y;
    out.a = a;
    out.x.resize(x.rows(), static_cast<Index>(positions.size()));
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const Index pos = positions[k];
        if (pos < 1 || pos > p()) {
            fail(ErrorKind::DimensionError, "covariate position out of range: " + std::to_string(pos));
        }
        out.x.col(static_cast<Index>(k)) = x.col(pos - 1);
    }
    return out;
}

Matrix with_intercept(const Matrix& x) {
    Matrix z(x.rows(), x.cols() + 1);
    z.col(0).setOnes();
    z.rightCols(x.cols()) = x;
    return z;
}

Vector linear_predictor(const Matrix& x, const Vector& coef) {
    Vector eta = Vector::Constant(x.rows(), coef[0]);
    if (x.cols() > 0) eta.noalias() += x * coef.tail(x.cols());
    return eta;
}

IndexSet set_union(const IndexSet& lhs, const IndexSet& rhs) {
    IndexSet out;
    IndexSet l = lhs, r = rhs;
    std::sort(l.begin(), l.end());
    std::sort(r.begin(), r.end());
    std::set_union(l.begin(), l.end(), r.begin(), r.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace pbrdr
