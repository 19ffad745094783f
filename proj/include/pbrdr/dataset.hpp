#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace pbrdr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Coefficient positions 1..p (0 is the intercept) of selected covariates.
using IndexSet = std::vector<Index>;

// Outcome y, binary treatment a and covariates x for n analysis units.
struct Dataset {
    Vector y;
    Vector a;
    Matrix x;

    Index n() const { return y.size(); }
    Index p() const { return x.cols(); }
    Index n_treated() const;

    // Consistent lengths, finite entries, treatment in {0, 1}.
    void validate() const;
    // validate() plus at least one treated and one untreated unit.
    void require_both_arms() const;

    Dataset with_treatment_flipped() const;
    // Keeps only the covariates at the given coefficient positions (1-based).
    Dataset select_covariates(std::span<const Index> positions) const;
};

// Design matrix with a leading column of ones: row i is (1, x_i').
Matrix with_intercept(const Matrix& x);

// Linear predictor coef' (1, x_i) for every row of x.
Vector linear_predictor(const Matrix& x, const Vector& coef);

IndexSet set_union(const IndexSet& lhs, const IndexSet& rhs);

}  // namespace pbrdr
