#include <cmath>
#include <string>

#include "design.hpp"
#include "pbrdr/error.hpp"
#include "pbrdr/kernels.hpp"
#include "pbrdr/solvers.hpp"
#include "pbrdr/special.hpp"

namespace pbrdr {
namespace {

constexpr int kDefaultSweeps = 100000;

struct CdResult {
    Vector theta;
    int sweeps = 0;
    double kkt = 0.0;
    std::vector<double> trace;
};

// Cyclic coordinate descent for
//   (1/2n) sum_i w_i (y_i - z_i'theta)^2 + lambda sum_{j penalized} |theta_j|
// over the rows of z (units with zero weight are already dropped).
CdResult weighted_lasso_cd(const Matrix& z, const Vector& y, const Vector& w, double n_total,
                           double lambda, bool penalize_intercept, const SolverOptions& opts) {
    const Index m = z.rows();
    const Index k = z.cols();
    const auto rows = static_cast<std::size_t>(m);
    auto col = [&](Index j) { return std::span<const double>(z.col(j).data(), rows); };
    const std::span<const double> wspan(w.data(), rows);

    Vector curvature(k);
    for (Index j = 0; j < k; ++j) curvature[j] = kernels::wdot(wspan, col(j), col(j)) / n_total;

    auto is_penalized = [&](Index j) { return j > 0 || penalize_intercept; };
    auto objective = [&](const Vector& theta, const Vector& r) {
        double pen = 0.0;
        for (Index j = 0; j < k; ++j) {
            if (is_penalized(j)) pen += std::abs(theta[j]);
        }
        return 0.5 * kernels::wdot(wspan, {r.data(), rows}, {r.data(), rows}) / n_total +
               lambda * pen;
    };

    CdResult out;
    Vector theta = Vector::Zero(k);
    Vector r = y;
    const int max_sweeps = opts.max_iter.value_or(kDefaultSweeps);
    if (opts.record_objective) out.trace.push_back(objective(theta, r));

    auto stationarity = [&]() {
        double worst = 0.0;
        for (Index j = 0; j < k; ++j) {
            const double g = -kernels::wdot(wspan, col(j), {r.data(), rows}) / n_total;
            double v;
            if (!is_penalized(j)) {
                v = std::abs(g);
            } else if (theta[j] != 0.0) {
                v = std::abs(g + (theta[j] > 0.0 ? lambda : -lambda));
            } else {
                v = std::max(std::abs(g) - lambda, 0.0);
            }
            worst = std::max(worst, v);
        }
        return worst;
    };

    double kkt = stationarity();
    int sweep = 0;
    while (kkt > opts.tol) {
        if (sweep >= max_sweeps) {
            fail(ErrorKind::NonConvergence, "coordinate descent stopped after " +
                                                std::to_string(sweep) +
                                                " sweeps, KKT residual " + std::to_string(kkt));
        }
        ++sweep;
        for (Index j = 0; j < k; ++j) {
            if (curvature[j] <= 0.0) continue;
            const double g = kernels::wdot(wspan, col(j), {r.data(), rows}) / n_total;
            const double raw = curvature[j] * theta[j] + g;
            const double updated =
                detail::snap((is_penalized(j) ? detail::soft_threshold(raw, lambda) : raw) /
                             curvature[j]);
            const double delta = updated - theta[j];
            if (delta != 0.0) {
                kernels::axpy(-delta, col(j), {r.data(), rows});
                theta[j] = updated;
            }
        }
        if (opts.record_objective) out.trace.push_back(objective(theta, r));
        kkt = stationarity();
    }
    out.theta = std::move(theta);
    out.sweeps = sweep;
    out.kkt = kkt;
    return out;
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        fail(ErrorKind::DomainError, "penalty level must be a finite nonnegative number");
    }
}

OutcomeCoefficients finish(const detail::Design& design, CdResult res, double lambda) {
    OutcomeCoefficients out;
    out.beta = design.to_original(res.theta);
    out.lambda_beta = lambda;
    out.active_set = support(res.theta);
    out.kkt_residual = res.kkt;
    out.diagnostics.iterations = res.sweeps;
    out.diagnostics.objective_trace = std::move(res.trace);
    return out;
}

}  // namespace

OutcomeCoefficients solve_f2(const Dataset& data, const PropensityCoefficients& gamma_hat,
                             double lambda_beta, const SolverOptions& opts) {
    opts.validate();
    data.validate();
    check_lambda(lambda_beta);
    if (gamma_hat.gamma.size() != data.p() + 1 || !gamma_hat.gamma.allFinite()) {
        fail(ErrorKind::DimensionError, "propensity coefficients must be finite with length p + 1");
    }
    const std::vector<Index> treated = detail::treated_rows(data.a);
    if (treated.empty()) fail(ErrorKind::DegenerateData, "no treated units");

    const Vector eta = linear_predictor(data.x, gamma_hat.gamma);
    Vector w(static_cast<Index>(treated.size()));
    Vector y(w.size());
    for (std::size_t k = 0; k < treated.size(); ++k) {
        const Index i = treated[k];
        const double pi = expit(eta[i]);
        if (!(pi > 0.0 && pi < 1.0)) {
            fail(ErrorKind::DegenerateWeights,
                 "fitted propensity of treated unit " + std::to_string(i) + " is not in (0, 1)");
        }
        w[static_cast<Index>(k)] = std::exp(-eta[i]);
        y[static_cast<Index>(k)] = data.y[i];
    }

    const detail::Design design = detail::Design::build(data.x, opts.standardize);
    const Matrix z = design.take_rows(treated);
    const double n = static_cast<double>(data.n());
    const double effective = opts.normalize_weights ? lambda_beta * w.sum() / n : lambda_beta;
    CdResult res = weighted_lasso_cd(z, y, w, n, effective, opts.penalize_intercept, opts);
    return finish(design, std::move(res), effective);
}

OutcomeCoefficients fit_linear_lasso(const Dataset& data, double lambda, bool treated_only,
                                     const SolverOptions& opts) {
    opts.validate();
    data.validate();
    check_lambda(lambda);
    std::vector<Index> rows;
    if (treated_only) {
        rows = detail::treated_rows(data.a);
    } else {
        for (Index i = 0; i < data.n(); ++i) rows.push_back(i);
    }
    if (rows.empty()) fail(ErrorKind::DegenerateData, "no units to fit");

    Vector y(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) y[static_cast<Index>(k)] = data.y[rows[k]];
    const Vector w = Vector::Ones(y.size());

    const detail::Design design = detail::Design::build(data.x, opts.standardize);
    const Matrix z = design.take_rows(rows);
    const double n = static_cast<double>(data.n());
    const double effective =
        opts.normalize_weights ? lambda * static_cast<double>(rows.size()) / n : lambda;
    CdResult res = weighted_lasso_cd(z, y, w, n, effective, opts.penalize_intercept, opts);
    return finish(design, std::move(res), effective);
}

}  // namespace pbrdr
