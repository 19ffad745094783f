#include <cmath>
#include <string>

#include "design.hpp"
#include "pbrdr/error.hpp"
#include "pbrdr/solvers.hpp"
#include "prox_gradient.hpp"

namespace pbrdr {
namespace {

PropensityCoefficients fit_penalised_propensity(const Dataset& data, double lambda,
                                                const SolverOptions& opts,
                                                detail::GlmLoss loss) {
    opts.validate();
    data.require_both_arms();
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        fail(ErrorKind::DomainError, "penalty level must be a finite nonnegative number");
    }

    const detail::Design design = detail::Design::build(data.x, opts.standardize);
    detail::L1GlmProblem prob;
    prob.z = &design.z;
    prob.a = &data.a;
    prob.loss = loss;
    prob.lambda = lambda;
    prob.penalized.assign(static_cast<std::size_t>(design.cols()), 1);
    prob.penalized[0] = opts.penalize_intercept ? 1 : 0;
    prob.divergence = loss == detail::GlmLoss::InverseOdds ? ErrorKind::UnboundedObjective
                                                           : ErrorKind::Separation;

    // Start at the intercept-only calibrated fit expit(theta_0) = mean(A).
    const double abar = data.a.mean();
    Vector theta0 = Vector::Zero(design.cols());
    theta0[0] = std::log(abar / (1.0 - abar));

    detail::L1GlmResult res = detail::minimize_l1_glm(prob, std::move(theta0), opts);

    PropensityCoefficients out;
    out.gamma = design.to_original(res.theta);
    out.lambda_gamma = lambda;
    out.active_set = support(res.theta);
    out.kkt_residual = res.kkt;
    out.diagnostics.iterations = res.iterations;
    out.diagnostics.objective_trace = std::move(res.trace);
    return out;
}

}  // namespace

PropensityCoefficients solve_f1(const Dataset& data, double lambda_gamma,
                                const SolverOptions& opts) {
    return fit_penalised_propensity(data, lambda_gamma, opts, detail::GlmLoss::InverseOdds);
}

PropensityCoefficients fit_logistic_lasso(const Dataset& data, double lambda,
                                          const SolverOptions& opts) {
    return fit_penalised_propensity(data, lambda, opts, detail::GlmLoss::Logistic);
}

}  // namespace pbrdr
