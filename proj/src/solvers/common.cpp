#include <cmath>
#include <string>

#include "design.hpp"
#include "pbrdr/error.hpp"
#include "pbrdr/solvers.hpp"
#include "pbrdr/special.hpp"

namespace pbrdr {

void SolverOptions::validate() const {
    if (!(tol > 0.0)) fail(ErrorKind::ConfigError, "solver tolerance must be positive");
    if (max_iter && *max_iter < 1) fail(ErrorKind::ConfigError, "max_iter must be at least 1");
}

std::string_view method_name(NuisanceMethod method) {
    switch (method) {
        case NuisanceMethod::MLE: return "MLE";
        case NuisanceMethod::LASSO: return "LASSO";
        case NuisanceMethod::PostLASSO: return "Post-LASSO";
        case NuisanceMethod::DSLASSO: return "DS-LASSO";
        case NuisanceMethod::PBR: return "P-BR";
        case NuisanceMethod::DSPBR: return "DS-P-BR";
    }
    return "unknown";
}

double kkt_residual(const Vector& gradient, const Vector& coef, double lambda,
                    bool penalize_intercept, const Vector* weights) {
    double worst = 0.0;
    for (Index j = 0; j < coef.size(); ++j) {
        const bool penalized = j > 0 || penalize_intercept;
        const double lam = lambda * (weights ? (*weights)[j] : 1.0);
        double v;
        if (!penalized) {
            v = std::abs(gradient[j]);
        } else if (coef[j] != 0.0) {
            v = std::abs(gradient[j] + (coef[j] > 0.0 ? lam : -lam));
        } else {
            v = std::max(std::abs(gradient[j]) - lam, 0.0);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

Vector covariate_scales(const Matrix& x) {
    Vector out = Vector::Ones(x.cols() + 1);
    out.tail(x.cols()) = detail::Design::build(x, true).scale;
    return out;
}

IndexSet support(const Vector& coef) {
    IndexSet out;
    for (Index j = 1; j < coef.size(); ++j) {
        if (coef[j] != 0.0) out.push_back(j);
    }
    return out;
}

namespace {

double mean_over(const Vector& v) { return v.sum() / static_cast<double>(v.size()); }

}  // namespace

double f1_loss(const Dataset& data, const Vector& gamma) {
    const Vector eta = linear_predictor(data.x, gamma);
    Vector terms(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
        terms[i] = data.a[i] * std::exp(-eta[i]) + (1.0 - data.a[i]) * eta[i];
    }
    return mean_over(terms);
}

Vector f1_gradient(const Dataset& data, const Vector& gamma) {
    const Vector eta = linear_predictor(data.x, gamma);
    Vector g(eta.size());
    for (Index i = 0; i < eta.size(); ++i) g[i] = 1.0 - data.a[i] / expit(eta[i]);
    return with_intercept(data.x).transpose() * g / static_cast<double>(data.n());
}

double f2_loss(const Dataset& data, const Vector& gamma, const Vector& beta) {
    const Vector eta = linear_predictor(data.x, gamma);
    const Vector m = linear_predictor(data.x, beta);
    double total = 0.0;
    for (Index i = 0; i < eta.size(); ++i) {
        if (data.a[i] != 1.0) continue;
        const double pi = expit(eta[i]);
        const double r = data.y[i] - m[i];
        total += (1.0 - pi) / pi * r * r;
    }
    return total / (2.0 * static_cast<double>(data.n()));
}

Vector f2_gradient(const Dataset& data, const Vector& gamma, const Vector& beta) {
    const Vector eta = linear_predictor(data.x, gamma);
    const Vector m = linear_predictor(data.x, beta);
    Vector g = Vector::Zero(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
        if (data.a[i] != 1.0) continue;
        const double pi = expit(eta[i]);
        g[i] = -(1.0 - pi) / pi * (data.y[i] - m[i]);
    }
    return with_intercept(data.x).transpose() * g / static_cast<double>(data.n());
}

double logistic_loss(const Dataset& data, const Vector& gamma) {
    const Vector eta = linear_predictor(data.x, gamma);
    double total = 0.0;
    for (Index i = 0; i < eta.size(); ++i) {
        const double softplus =
            eta[i] > 0.0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
        total += softplus - data.a[i] * eta[i];
    }
    return total / static_cast<double>(data.n());
}

Vector logistic_gradient(const Dataset& data, const Vector& gamma) {
    const Vector eta = linear_predictor(data.x, gamma);
    Vector g(eta.size());
    for (Index i = 0; i < eta.size(); ++i) g[i] = expit(eta[i]) - data.a[i];
    return with_intercept(data.x).transpose() * g / static_cast<double>(data.n());
}

}  // namespace pbrdr
