#include "prox_gradient.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "pbrdr/kernels.hpp"
#include "pbrdr/special.hpp"

namespace pbrdr::detail {
namespace {

double penalty(const L1GlmProblem& prob, const Vector& theta) {
    double s = 0.0;
    for (Index j = 0; j < theta.size(); ++j) {
        if (prob.penalized[static_cast<std::size_t>(j)]) s += std::abs(theta[j]);
    }
    return prob.lambda * s;
}

double stationarity(const L1GlmProblem& prob, const Vector& grad, const Vector& theta) {
    double worst = 0.0;
    for (Index j = 0; j < theta.size(); ++j) {
        double v;
        if (!prob.penalized[static_cast<std::size_t>(j)]) {
            v = std::abs(grad[j]);
        } else if (theta[j] != 0.0) {
            v = std::abs(grad[j] + (theta[j] > 0.0 ? prob.lambda : -prob.lambda));
        } else {
            v = std::max(std::abs(grad[j]) - prob.lambda, 0.0);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

struct Evaluator {
    const Matrix& z;
    const Vector& a;
    GlmLoss loss;
    Vector deriv;

    double value(const Vector& eta) { return glm_loss(loss, a, eta, nullptr); }

    double value_and_gradient(const Vector& eta, Vector& grad) {
        const double f = glm_loss(loss, a, eta, &deriv);
        const auto n = static_cast<std::size_t>(z.rows());
        kernels::gemv_t(z.data(), n, static_cast<std::size_t>(z.cols()), {deriv.data(), n},
                        {grad.data(), static_cast<std::size_t>(grad.size())});
        grad /= static_cast<double>(n);
        return f;
    }

    void predictor(const Vector& theta, Vector& eta) const {
        const auto n = static_cast<std::size_t>(z.rows());
        kernels::gemv(z.data(), n, static_cast<std::size_t>(z.cols()),
                      {theta.data(), static_cast<std::size_t>(theta.size())}, {eta.data(), n});
    }
};

// Curvature d^2 loss / d eta^2 per unit.
Vector loss_curvature(GlmLoss loss, const Vector& a, const Vector& eta) {
    Vector c(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
        if (loss == GlmLoss::InverseOdds) {
            c[i] = a[i] == 1.0 ? std::exp(-eta[i]) : 0.0;
        } else {
            const double pi = expit(eta[i]);
            c[i] = pi * (1.0 - pi);
        }
    }
    return c;
}

// One Newton step for the smooth problem on the current support, where the
// l1 term is linear with fixed signs. Near the solution first-order steps
// change the objective by less than its rounding error, so this is what takes
// the KKT residual down to tight tolerances. Returns false (leaving the
// incumbent untouched) unless the step keeps every sign, lowers the KKT
// residual and does not raise the objective beyond rounding.
bool newton_polish(const L1GlmProblem& prob, Evaluator& ev, Vector& x, Vector& eta_x,
                   Vector& grad_x, double& f_x, double& obj_x, double& kkt_x) {
    std::vector<Index> free;
    for (Index j = 0; j < x.size(); ++j) {
        if (!prob.penalized[static_cast<std::size_t>(j)] || x[j] != 0.0) free.push_back(j);
    }
    const Index m = static_cast<Index>(free.size());
    const Matrix& z = *prob.z;
    const Vector curv = loss_curvature(prob.loss, *prob.a, eta_x);
    Matrix zs(z.rows(), m);
    Vector g(m);
    for (Index k = 0; k < m; ++k) {
        const Index j = free[static_cast<std::size_t>(k)];
        zs.col(k) = z.col(j);
        g[k] = grad_x[j];
        if (prob.penalized[static_cast<std::size_t>(j)]) {
            g[k] += x[j] > 0.0 ? prob.lambda : -prob.lambda;
        }
    }
    const Matrix h = zs.transpose() * curv.asDiagonal() * zs / static_cast<double>(z.rows());
    Eigen::LDLT<Matrix> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const Vector step = ldlt.solve(g);
    if (!step.allFinite()) return false;

    Vector trial = x;
    for (Index k = 0; k < m; ++k) {
        const Index j = free[static_cast<std::size_t>(k)];
        trial[j] -= step[k];
        if (prob.penalized[static_cast<std::size_t>(j)] && (trial[j] > 0.0) != (x[j] > 0.0)) {
            return false;
        }
    }
    Vector eta_t(eta_x.size()), grad_t(grad_x.size());
    ev.predictor(trial, eta_t);
    const double f_t = ev.value_and_gradient(eta_t, grad_t);
    const double obj_t = f_t + penalty(prob, trial);
    const double kkt_t = stationarity(prob, grad_t, trial);
    if (!std::isfinite(obj_t) || kkt_t >= kkt_x || obj_t > obj_x + 1e-14 * std::abs(obj_x)) {
        return false;
    }
    x = std::move(trial);
    eta_x = std::move(eta_t);
    grad_x = std::move(grad_t);
    f_x = f_t;
    obj_x = obj_t;
    kkt_x = kkt_t;
    return true;
}

constexpr int kPolishEvery = 20;

}  // namespace

double glm_loss(GlmLoss loss, const Vector& a, const Vector& eta, Vector* deriv) {
    const Index n = eta.size();
    double total = 0.0;
    if (loss == GlmLoss::InverseOdds) {
        for (Index i = 0; i < n; ++i) {
            if (a[i] == 1.0) {
                const double e = std::exp(-eta[i]);
                total += e;
                if (deriv) (*deriv)[i] = -e;
            } else {
                total += eta[i];
                if (deriv) (*deriv)[i] = 1.0;
            }
        }
    } else {
        for (Index i = 0; i < n; ++i) {
            const double softplus =
                eta[i] > 0.0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
            total += softplus - a[i] * eta[i];
            if (deriv) (*deriv)[i] = expit(eta[i]) - a[i];
        }
    }
    return total / static_cast<double>(n);
}

L1GlmResult minimize_l1_glm(const L1GlmProblem& prob, Vector theta0, const SolverOptions& opts) {
    const Matrix& z = *prob.z;
    const Index k = z.cols();
    const int max_iter = opts.max_iter.value_or(kDefaultProxSteps);
    Evaluator ev{z, *prob.a, prob.loss, Vector(z.rows())};

    L1GlmResult out;
    Vector x = std::move(theta0);
    Vector eta_x(z.rows());
    ev.predictor(x, eta_x);
    Vector grad_x(k);
    double f_x = ev.value_and_gradient(eta_x, grad_x);
    double obj_x = f_x + penalty(prob, x);
    double kkt_x = stationarity(prob, grad_x, x);
    if (opts.record_objective) out.trace.push_back(obj_x);

    Vector y = x, eta_y = eta_x, grad_y = grad_x;
    double f_y = f_x;
    Vector x_prev = x, eta_prev = eta_x;
    Vector cand(k), eta_c(z.rows()), grad_c(k);
    double momentum = 1.0;
    double lipschitz = 1.0;

    int iter = 0;
    while (kkt_x > opts.tol) {
        if (iter >= max_iter) {
            fail(ErrorKind::NonConvergence, "proximal gradient stopped after " +
                                                std::to_string(iter) +
                                                " steps, KKT residual " + std::to_string(kkt_x));
        }
        ++iter;

        double f_c = 0.0;
        for (;;) {
            const double step = 1.0 / lipschitz;
            for (Index j = 0; j < k; ++j) {
                const double v = y[j] - step * grad_y[j];
                cand[j] = prob.penalized[static_cast<std::size_t>(j)]
                              ? snap(soft_threshold(v, step * prob.lambda))
                              : v;
            }
            ev.predictor(cand, eta_c);
            f_c = ev.value(eta_c);
            const Vector diff = cand - y;
            const double model = f_y + grad_y.dot(diff) + 0.5 * lipschitz * diff.squaredNorm();
            if (std::isfinite(f_c) && f_c <= model + 1e-14 * std::abs(f_y)) break;
            lipschitz *= 2.0;
            if (lipschitz > 1e30) {
                fail(ErrorKind::NonConvergence, "step-size search failed");
            }
        }
        const double obj_c = f_c + penalty(prob, cand);

        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        if (obj_c <= obj_x) {
            x_prev.swap(x);
            eta_prev.swap(eta_x);
            x = cand;
            eta_x = eta_c;
            f_x = ev.value_and_gradient(eta_x, grad_x);
            obj_x = f_x + penalty(prob, x);
            kkt_x = stationarity(prob, grad_x, x);

            const double beta = (momentum - 1.0) / next_momentum;
            momentum = next_momentum;
            if (beta > 0.0) {
                y = x + beta * (x - x_prev);
                eta_y = eta_x + beta * (eta_x - eta_prev);
                f_y = ev.value_and_gradient(eta_y, grad_y);
            } else {
                y = x;
                eta_y = eta_x;
                grad_y = grad_x;
                f_y = f_x;
            }
        } else {
            // Restart from the incumbent: the plain proximal step from x is a
            // descent step, which keeps the objective sequence monotone. If y
            // already was the incumbent the method has stalled on rounding.
            const bool stalled = (y.array() == x.array()).all();
            if (stalled) newton_polish(prob, ev, x, eta_x, grad_x, f_x, obj_x, kkt_x);
            momentum = 1.0;
            y = x;
            eta_y = eta_x;
            grad_y = grad_x;
            f_y = f_x;
        }
        if (iter % kPolishEvery == 0 &&
            newton_polish(prob, ev, x, eta_x, grad_x, f_x, obj_x, kkt_x)) {
            momentum = 1.0;
            x_prev = x;
            eta_prev = eta_x;
            y = x;
            eta_y = eta_x;
            grad_y = grad_x;
            f_y = f_x;
        }
        if (opts.record_objective) out.trace.push_back(obj_x);

        if (!std::isfinite(obj_x) || x.lpNorm<Eigen::Infinity>() > kDivergenceNorm) {
            fail(prob.divergence, "coefficients diverged (norm > 1e4); the objective has no "
                                  "finite minimiser on this data");
        }
        lipschitz *= 0.9;
    }
    out.theta = std::move(x);
    out.iterations = iter;
    out.kkt = kkt_x;
    return out;
}

}  // namespace pbrdr::detail
