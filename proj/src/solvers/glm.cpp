#include "glm.hpp"

#include <cmath>
#include <string>

#include "design.hpp"
#include "pbrdr/error.hpp"
#include "pbrdr/solvers.hpp"
#include "pbrdr/special.hpp"
#include "prox_gradient.hpp"

namespace pbrdr {
namespace detail {

Vector weighted_least_squares(const Matrix& z, const Vector& y, const Vector& w) {
    if (z.rows() <= z.cols()) {
        fail(ErrorKind::RankDeficient, "need more units (" + std::to_string(z.rows()) +
                                           ") than coefficients (" + std::to_string(z.cols()) +
                                           ")");
    }
    const Vector root = w.array().sqrt();
    const Matrix zw = root.asDiagonal() * z;
    const Vector yw = root.cwiseProduct(y);
    Eigen::ColPivHouseholderQR<Matrix> qr(zw);
    if (qr.rank() < z.cols()) {
        fail(ErrorKind::RankDeficient, "design has rank " + std::to_string(qr.rank()) + " < " +
                                           std::to_string(z.cols()));
    }
    return qr.solve(yw);
}

}  // namespace detail

namespace {

constexpr int kDefaultNewtonSteps = 100;
constexpr double kSaturatedPredictor = 30.0;

Vector logistic_newton(const Matrix& z, const Vector& a, const SolverOptions& opts,
                       int& iterations, double& score_norm) {
    const Index n = z.rows();
    const int max_iter = opts.max_iter.value_or(kDefaultNewtonSteps);
    const double abar = a.mean();
    Vector theta = Vector::Zero(z.cols());
    theta[0] = std::log(abar / (1.0 - abar));

    Vector eta = z * theta;
    double loss = detail::glm_loss(detail::GlmLoss::Logistic, a, eta, nullptr);
    for (iterations = 0;; ++iterations) {
        Vector pi(n), curv(n);
        for (Index i = 0; i < n; ++i) {
            pi[i] = expit(eta[i]);
            curv[i] = pi[i] * (1.0 - pi[i]);
        }
        const Vector score = z.transpose() * (a - pi) / static_cast<double>(n);
        score_norm = score.lpNorm<Eigen::Infinity>();
        if (score_norm <= opts.tol) break;
        if (theta.lpNorm<Eigen::Infinity>() > 1e3) {
            fail(ErrorKind::Separation, "logistic coefficients diverge (norm > 1e3)");
        }
        if (iterations >= max_iter) {
            fail(ErrorKind::NonConvergence, "Newton iterations exhausted, score norm " +
                                                std::to_string(score_norm));
        }
        const Matrix hessian = z.transpose() * curv.asDiagonal() * z / static_cast<double>(n);
        Eigen::LDLT<Matrix> ldlt(hessian);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            fail(ErrorKind::Separation, "logistic information matrix is singular");
        }
        const Vector step = ldlt.solve(score);
        double t = 1.0;
        for (int halving = 0;; ++halving) {
            const Vector trial = theta + t * step;
            const Vector trial_eta = z * trial;
            const double trial_loss =
                detail::glm_loss(detail::GlmLoss::Logistic, a, trial_eta, nullptr);
            if (trial_loss <= loss + 1e-15 * std::abs(loss) || halving >= 40) {
                theta = trial;
                eta = trial_eta;
                loss = trial_loss;
                break;
            }
            t *= 0.5;
        }
    }
    if (eta.lpNorm<Eigen::Infinity>() > kSaturatedPredictor) {
        fail(ErrorKind::Separation, "fitted probabilities numerically 0 or 1");
    }
    return theta;
}

}  // namespace

PropensityCoefficients fit_logistic_mle(const Dataset& data, const SolverOptions& opts) {
    opts.validate();
    data.require_both_arms();
    if (data.n() <= data.p() + 1) {
        fail(ErrorKind::RankDeficient, "logistic MLE needs n > p + 1");
    }
    const detail::Design design = detail::Design::build(data.x, true);
    PropensityCoefficients out;
    double score_norm = 0.0;
    const Vector theta = logistic_newton(design.z, data.a, opts, out.diagnostics.iterations,
                                         score_norm);
    out.gamma = design.to_original(theta);
    out.active_set = support(theta);
    out.kkt_residual = score_norm;
    return out;
}

OutcomeCoefficients fit_ols(const Dataset& data, bool treated_only) {
    data.validate();
    std::vector<Index> rows;
    if (treated_only) {
        rows = detail::treated_rows(data.a);
    } else {
        for (Index i = 0; i < data.n(); ++i) rows.push_back(i);
    }
    const detail::Design design = detail::Design::build(data.x, true);
    const Matrix z = design.take_rows(rows);
    Vector y(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) y[static_cast<Index>(k)] = data.y[rows[k]];
    const Vector theta = detail::weighted_least_squares(z, y, Vector::Ones(y.size()));

    OutcomeCoefficients out;
    out.beta = design.to_original(theta);
    out.active_set = support(theta);
    const Vector resid = y - z * theta;
    out.kkt_residual =
        (z.transpose() * resid).lpNorm<Eigen::Infinity>() / static_cast<double>(data.n());
    return out;
}

namespace {

Vector expand(const Vector& restricted, const IndexSet& selected, Index p) {
    Vector full = Vector::Zero(p + 1);
    full[0] = restricted[0];
    for (std::size_t k = 0; k < selected.size(); ++k) {
        full[selected[k]] = restricted[static_cast<Index>(k) + 1];
    }
    return full;
}

}  // namespace

PropensityCoefficients refit_propensity(const Dataset& data, const IndexSet& selected,
                                        const SolverOptions& opts) {
    const IndexSet sel = set_union(selected, {});
    PropensityCoefficients fit = fit_logistic_mle(data.select_covariates(sel), opts);
    fit.gamma = expand(fit.gamma, sel, data.p());
    fit.active_set = support(fit.gamma);
    return fit;
}

OutcomeCoefficients refit_outcome(const Dataset& data, const IndexSet& selected) {
    const IndexSet sel = set_union(selected, {});
    OutcomeCoefficients fit = fit_ols(data.select_covariates(sel), true);
    fit.beta = expand(fit.beta, sel, data.p());
    fit.active_set = support(fit.beta);
    return fit;
}

}  // namespace pbrdr
