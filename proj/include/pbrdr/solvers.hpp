#pragma once

// Nuisance-parameter fitting for the propensity model expit(gamma'(1, x)) and
// the outcome model beta'(1, x).
//
// Coefficient vectors always have length p + 1 with the intercept at position
// 0. Active sets hold positions 1..p of nonzero coefficients.
//
// When SolverOptions::standardize is set, penalized solvers work internally
// on covariates centered and scaled to unit sample SD and back-transform the
// result. Penalties and KKT residuals then refer to the internal scale, which
// in original units is an l1 penalty with per-coordinate weight sd_j.

#include <optional>
#include <string_view>
#include <vector>

#include "pbrdr/dataset.hpp"

namespace pbrdr {

struct SolverOptions {
    double tol = 1e-8;               // KKT sup-norm stopping threshold
    std::optional<int> max_iter;     // solver-specific default when empty
    bool standardize = true;
    bool penalize_intercept = false;
    // Weighted least-squares lasso fits (solve_f2, fit_linear_lasso) scale the
    // penalty by the share of total weight carried by the fitted rows, i.e.
    // lambda * sum(w A) / n. This is the convention of weight-normalising
    // lasso software; the returned lambda_beta is the level actually applied.
    bool normalize_weights = true;
    bool record_objective = false;   // keep the per-iteration objective trace

    void validate() const;
};

struct SolverDiagnostics {
    int iterations = 0;
    std::vector<double> objective_trace;
};

struct PropensityCoefficients {
    Vector gamma;
    double lambda_gamma = 0.0;
    IndexSet active_set;
    double kkt_residual = 0.0;
    SolverDiagnostics diagnostics;
};

struct OutcomeCoefficients {
    Vector beta;
    double lambda_beta = 0.0;
    IndexSet active_set;
    double kkt_residual = 0.0;
    SolverDiagnostics diagnostics;
};

enum class NuisanceMethod { MLE, LASSO, PostLASSO, DSLASSO, PBR, DSPBR };

std::string_view method_name(NuisanceMethod method);

struct NuisanceFit {
    PropensityCoefficients gamma;
    OutcomeCoefficients beta;
    NuisanceMethod method = NuisanceMethod::PBR;
};

struct Penalties {
    double lambda_gamma = 0.0;
    double lambda_beta = 0.0;
};

// Penalised propensity fit: minimises
//   (1/n) sum [A_i exp(-gamma'z_i) + (1 - A_i) gamma'z_i] + lambda ||gamma||_1
// by monotone accelerated proximal gradient with backtracking.
PropensityCoefficients solve_f1(const Dataset& data, double lambda_gamma,
                                const SolverOptions& opts = {});

// Penalised inverse-odds weighted least squares on the treated units:
//   (1/2n) sum w_i A_i (Y_i - beta'z_i)^2 + lambda ||beta||_1,
// w_i = (1 - pi_i) / pi_i from gamma_hat, by cyclic coordinate descent.
OutcomeCoefficients solve_f2(const Dataset& data, const PropensityCoefficients& gamma_hat,
                             double lambda_beta, const SolverOptions& opts = {});

PropensityCoefficients fit_logistic_mle(const Dataset& data, const SolverOptions& opts = {});
OutcomeCoefficients fit_ols(const Dataset& data, bool treated_only);

PropensityCoefficients fit_logistic_lasso(const Dataset& data, double lambda,
                                          const SolverOptions& opts = {});
OutcomeCoefficients fit_linear_lasso(const Dataset& data, double lambda, bool treated_only,
                                     const SolverOptions& opts = {});

// Unpenalised refits restricted to the covariates in `selected`; excluded
// coefficients are exactly zero.
PropensityCoefficients refit_propensity(const Dataset& data, const IndexSet& selected,
                                        const SolverOptions& opts = {});
OutcomeCoefficients refit_outcome(const Dataset& data, const IndexSet& selected);

// Double-selection bias-reduced fit on the covariates in `selected`: the
// propensity equations carry a ridge term 2 * lambda_ridge * gamma on the
// slopes, the outcome equations are solved exactly with the resulting weights.
NuisanceFit solve_ds_pbr(const Dataset& data, const IndexSet& selected, double lambda_ridge,
                         const SolverOptions& opts = {});

Penalties default_penalties(Index n, Index p);

// Smooth parts of the objectives and their gradients in original units.
double f1_loss(const Dataset& data, const Vector& gamma);
Vector f1_gradient(const Dataset& data, const Vector& gamma);
double f2_loss(const Dataset& data, const Vector& gamma, const Vector& beta);
Vector f2_gradient(const Dataset& data, const Vector& gamma, const Vector& beta);
// Mean negative log-likelihood of the logistic model and its gradient.
double logistic_loss(const Dataset& data, const Vector& gamma);
Vector logistic_gradient(const Dataset& data, const Vector& gamma);

// Sup-norm violation of subgradient stationarity for gradient + lambda *
// weight_j * d|coef_j|. Weights default to 1; position 0 is unpenalized unless
// penalize_intercept.
double kkt_residual(const Vector& gradient, const Vector& coef, double lambda,
                    bool penalize_intercept = false, const Vector* weights = nullptr);

// Per-coefficient penalty weights implied by standardize = true, laid out like
// a coefficient vector: 1 for the intercept, then the sample SD (divisor n - 1)
// of each covariate. Zero-variance columns get weight 1.
Vector covariate_scales(const Matrix& x);

IndexSet support(const Vector& coef);

}  // namespace pbrdr
