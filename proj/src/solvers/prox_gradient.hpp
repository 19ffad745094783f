#pragma once

#include <vector>

#include "design.hpp"
#include "pbrdr/error.hpp"
#include "pbrdr/solvers.hpp"

namespace pbrdr::detail {

enum class GlmLoss {
    InverseOdds,  // A exp(-eta) + (1 - A) eta
    Logistic,     // log(1 + exp(eta)) - A eta
};

// Mean loss over units; writes d loss_i / d eta_i into deriv when non-null.
double glm_loss(GlmLoss loss, const Vector& a, const Vector& eta, Vector* deriv);

struct L1GlmProblem {
    const Matrix* z = nullptr;       // internal design, column 0 is the intercept
    const Vector* a = nullptr;
    GlmLoss loss = GlmLoss::InverseOdds;
    double lambda = 0.0;
    std::vector<char> penalized;     // per column
    ErrorKind divergence = ErrorKind::UnboundedObjective;
};

struct L1GlmResult {
    Vector theta;
    int iterations = 0;
    double kkt = 0.0;
    std::vector<double> trace;
};

inline constexpr int kDefaultProxSteps = 10000;
inline constexpr double kDivergenceNorm = 1e4;

L1GlmResult minimize_l1_glm(const L1GlmProblem& problem, Vector theta0,
                            const SolverOptions& opts);

}  // namespace pbrdr::detail
