#include <cmath>
#include <string>

#include "design.hpp"
#include "glm.hpp"
#include "pbrdr/error.hpp"
#include "pbrdr/solvers.hpp"
#include "pbrdr/special.hpp"
#include "prox_gradient.hpp"

namespace pbrdr {
namespace {

constexpr int kDefaultRidgeNewtonSteps = 200;

struct RidgeObjective {
    const Matrix& z;
    const Vector& a;
    double lambda;

    double value(const Vector& theta, const Vector& eta) const {
        return detail::glm_loss(detail::GlmLoss::InverseOdds, a, eta, nullptr) +
               lambda * theta.tail(theta.size() - 1).squaredNorm();
    }
};

Vector expand(const Vector& restricted, const IndexSet& selected, Index p) {
    Vector full = Vector::Zero(p + 1);
    full[0] = restricted[0];
    for (std::size_t k = 0; k < selected.size(); ++k) {
        full[selected[k]] = restricted[static_cast<Index>(k) + 1];
    }
    return full;
}

}  // namespace

NuisanceFit solve_ds_pbr(const Dataset& data, const IndexSet& selected, double lambda_ridge,
                         const SolverOptions& opts) {
    opts.validate();
    data.require_both_arms();
    if (!(lambda_ridge > 0.0) || !std::isfinite(lambda_ridge)) {
        fail(ErrorKind::DomainError, "ridge penalty must be positive");
    }
    const IndexSet sel = set_union(selected, {});
    const Dataset restricted = data.select_covariates(sel);
    const detail::Design design = detail::Design::build(restricted.x, opts.standardize);
    const Matrix& z = design.z;
    const Index n = z.rows();
    const Index k = z.cols();
    const RidgeObjective objective{z, data.a, lambda_ridge};

    const double abar = data.a.mean();
    Vector theta = Vector::Zero(k);
    theta[0] = std::log(abar / (1.0 - abar));
    Vector eta = z * theta;
    double value = objective.value(theta, eta);
    Vector deriv(n);
    Vector grad(k);
    const int max_iter = opts.max_iter.value_or(kDefaultRidgeNewtonSteps);

    int iter = 0;
    for (;; ++iter) {
        detail::glm_loss(detail::GlmLoss::InverseOdds, data.a, eta, &deriv);
        grad = z.transpose() * deriv / static_cast<double>(n);
        grad.tail(k - 1) += 2.0 * lambda_ridge * theta.tail(k - 1);
        if (grad.lpNorm<Eigen::Infinity>() <= opts.tol) break;
        if (iter >= max_iter) {
            fail(ErrorKind::NonConvergence, "ridge-regularised Newton iterations exhausted");
        }
        if (theta.lpNorm<Eigen::Infinity>() > detail::kDivergenceNorm) {
            fail(ErrorKind::NonConvergence, "ridge-regularised propensity fit diverged");
        }
        Vector curv(n);
        for (Index i = 0; i < n; ++i) curv[i] = data.a[i] * std::exp(-eta[i]);
        Matrix hessian = z.transpose() * curv.asDiagonal() * z / static_cast<double>(n);
        hessian.diagonal().tail(k - 1).array() += 2.0 * lambda_ridge;
        Eigen::LDLT<Matrix> ldlt(hessian);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            fail(ErrorKind::NonConvergence, "ridge-regularised Hessian is not positive definite");
        }
        const Vector step = ldlt.solve(grad);
        double t = 1.0;
        for (int halving = 0;; ++halving) {
            const Vector trial = theta - t * step;
            const Vector trial_eta = z * trial;
            const double trial_value = objective.value(trial, trial_eta);
            if ((std::isfinite(trial_value) && trial_value <= value + 1e-15 * std::abs(value)) ||
                halving >= 40) {
                theta = trial;
                eta = trial_eta;
                value = trial_value;
                break;
            }
            t *= 0.5;
        }
    }

    NuisanceFit fit;
    fit.method = NuisanceMethod::DSPBR;
    fit.gamma.gamma = expand(design.to_original(theta), sel, data.p());
    fit.gamma.lambda_gamma = lambda_ridge;
    fit.gamma.active_set = support(fit.gamma.gamma);
    fit.gamma.kkt_residual = grad.lpNorm<Eigen::Infinity>();
    fit.gamma.diagnostics.iterations = iter;

    const std::vector<Index> treated = detail::treated_rows(data.a);
    Vector w(static_cast<Index>(treated.size()));
    Vector y(w.size());
    for (std::size_t m = 0; m < treated.size(); ++m) {
        const Index i = treated[m];
        const double pi = expit(eta[i]);
        if (!(pi > 0.0 && pi < 1.0)) {
            fail(ErrorKind::DegenerateWeights,
                 "fitted propensity of treated unit " + std::to_string(i) + " is not in (0, 1)");
        }
        w[static_cast<Index>(m)] = std::exp(-eta[i]);
        y[static_cast<Index>(m)] = data.y[i];
    }
    const Matrix zt = design.take_rows(treated);
    const Vector beta_internal = detail::weighted_least_squares(zt, y, w);
    const Vector resid = y - zt * beta_internal;

    fit.beta.beta = expand(design.to_original(beta_internal), sel, data.p());
    fit.beta.active_set = support(fit.beta.beta);
    fit.beta.kkt_residual = (zt.transpose() * w.cwiseProduct(resid)).lpNorm<Eigen::Infinity>() /
                            static_cast<double>(n);
    return fit;
}

}  // namespace pbrdr
