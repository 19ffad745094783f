#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pbrdr/error.hpp"
#include "pbrdr/simulation.hpp"
#include "pbrdr/solvers.hpp"
#include "pbrdr/special.hpp"
#include "support.hpp"

using namespace pbrdr;
using pbrdr::testing::central_difference;
using pbrdr::testing::random_dataset;
using pbrdr::testing::random_vector;

namespace {

// Bound on the original-unit KKT residual implied by an internal residual
// of tol on the standardized design.
double kkt_bound(const Dataset& d, double tol) {
    const Vector center = d.x.colwise().mean();
    return tol * (1.0 + covariate_scales(d.x).maxCoeff() + center.cwiseAbs().maxCoeff()) * 1.01;
}

Vector linear_lasso_gradient(const Dataset& d, const Vector& beta, bool treated_only) {
    const Vector m = linear_predictor(d.x, beta);
    Vector r = Vector::Zero(d.n());
    for (Index i = 0; i < d.n(); ++i) {
        if (!treated_only || d.a[i] == 1.0) r[i] = -(d.y[i] - m[i]);
    }
    return with_intercept(d.x).transpose() * r / static_cast<double>(d.n());
}

double f1_score_norm(const Dataset& d, const Vector& gamma) {
    // mean((1 - A / pi) z), the unpenalized estimating equations.
    const Vector eta = linear_predictor(d.x, gamma);
    Vector u(d.n());
    for (Index i = 0; i < d.n(); ++i) u[i] = 1.0 - d.a[i] / expit(eta[i]);
    return (with_intercept(d.x).transpose() * u / static_cast<double>(d.n()))
        .lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 20; ++k) {
        const Dataset d = random_dataset(60, 4, 100 + static_cast<std::uint64_t>(k));
        const Vector gamma = random_vector(5, rng, 0.4);
        const Vector beta = random_vector(5, rng, 1.0);
        const auto rel = [](const Vector& g, const Vector& fd) {
            return (g - fd).lpNorm<Eigen::Infinity>() /
                   std::max(1.0, g.lpNorm<Eigen::Infinity>());
        };
        CHECK(rel(f1_gradient(d, gamma),
                  central_difference([&](const Vector& g) { return f1_loss(d, g); }, gamma)) <
              1e-5);
        CHECK(rel(f2_gradient(d, gamma, beta),
                  central_difference([&](const Vector& b) { return f2_loss(d, gamma, b); },
                                     beta)) < 1e-5);
        CHECK(rel(logistic_gradient(d, gamma),
                  central_difference([&](const Vector& g) { return logistic_loss(d, g); },
                                     gamma)) < 1e-5);
    }
}

TEST_CASE("penalized solvers satisfy subgradient stationarity") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        INFO("seed " << seed);
        const Dataset d = random_dataset(120, 15, seed);
        const Vector scales = covariate_scales(d.x);
        const double lam = 0.04 + 0.01 * static_cast<double>(seed % 5);
        const double bound = kkt_bound(d, 1e-8);

        const PropensityCoefficients g = solve_f1(d, lam);
        CHECK(g.kkt_residual <= 1e-8);
        CHECK(kkt_residual(f1_gradient(d, g.gamma), g.gamma, lam, false, &scales) <= bound);

        const OutcomeCoefficients b = solve_f2(d, g, 2.0 * lam);
        CHECK(kkt_residual(f2_gradient(d, g.gamma, b.beta), b.beta, b.lambda_beta, false,
                           &scales) <= bound);

        const PropensityCoefficients lg = fit_logistic_lasso(d, lam);
        CHECK(kkt_residual(logistic_gradient(d, lg.gamma), lg.gamma, lam, false, &scales) <=
              bound);

        const OutcomeCoefficients lb = fit_linear_lasso(d, 2.0 * lam, true);
        CHECK(kkt_residual(linear_lasso_gradient(d, lb.beta, true), lb.beta, lb.lambda_beta,
                           false, &scales) <= bound);
    }
}

TEST_CASE("weight normalization scales the outcome penalty by the treated weight share") {
    const Dataset d = random_dataset(150, 6, 4);
    const PropensityCoefficients g = solve_f1(d, 0.05);
    const Vector eta = linear_predictor(d.x, g.gamma);
    double wsum = 0.0;
    for (Index i = 0; i < d.n(); ++i) {
        if (d.a[i] == 1.0) wsum += std::exp(-eta[i]);
    }
    CHECK(solve_f2(d, g, 0.1).lambda_beta ==
          Catch::Approx(0.1 * wsum / static_cast<double>(d.n())).epsilon(1e-14));
    SolverOptions literal;
    literal.normalize_weights = false;
    CHECK(solve_f2(d, g, 0.1, literal).lambda_beta == 0.1);
    CHECK(fit_linear_lasso(d, 0.1, true).lambda_beta ==
          Catch::Approx(0.1 * d.a.sum() / static_cast<double>(d.n())).epsilon(1e-14));
}

TEST_CASE("outcome lasso with unit weights soft-thresholds on an orthonormal design") {
    // Treated covariates are orthogonal to the intercept and to each other
    // with (1/n) sum_treated x_j^2 = 1, so each slope is S(c_j, lambda) with
    // c_j = (1/n) sum_treated x_j y.
    std::mt19937_64 rng(5);
    const Index n = 80, n1 = 50, p = 4;
    Matrix raw(n1, p);
    for (Index i = 0; i < raw.size(); ++i) raw.data()[i] = random_vector(1, rng)[0];
    raw.rowwise() -= raw.colwise().mean();
    const Eigen::HouseholderQR<Matrix> qr(raw);
    const Matrix q = qr.householderQ() * Matrix::Identity(n1, p) * std::sqrt(double(n));

    Dataset d;
    d.x = Matrix::Zero(n, p);
    d.a = Vector::Zero(n);
    d.y = random_vector(n, rng);
    d.x.topRows(n1) = q;
    d.a.head(n1).setOnes();
    d.x.bottomRows(n - n1) = random_vector((n - n1) * p, rng).reshaped(n - n1, p);
    const Vector true_slopes = (Vector(p) << 1.5, -0.2, 0.05, -0.9).finished();
    d.y.head(n1) = 0.7 + (q * true_slopes).array() + 0.1 * d.y.head(n1).array();

    PropensityCoefficients zero;
    zero.gamma = Vector::Zero(p + 1);  // unit weights
    SolverOptions opts;
    opts.standardize = false;
    opts.normalize_weights = false;
    opts.tol = 1e-12;
    for (double lam : {0.0, 0.1, 0.5, 2.0}) {
        INFO("lambda " << lam);
        const OutcomeCoefficients b = solve_f2(d, zero, lam, opts);
        const OutcomeCoefficients l = fit_linear_lasso(d, lam, true, opts);
        CHECK(b.beta[0] == Catch::Approx(d.y.head(n1).mean()).margin(1e-8));
        for (Index j = 0; j < p; ++j) {
            const double c = q.col(j).dot(d.y.head(n1)) / double(n);
            const double expected = c > lam ? c - lam : (c < -lam ? c + lam : 0.0);
            CHECK(std::abs(b.beta[j + 1] - expected) <= 1e-8);
            CHECK(std::abs(l.beta[j + 1] - expected) <= 1e-8);
        }
    }
}

TEST_CASE("single-slope outcome lasso matches a brute-force grid minimizer") {
    std::mt19937_64 rng(9);
    const Index n = 60;
    Dataset d;
    d.x.resize(n, 1);
    d.a = Vector::Ones(n);
    for (Index i = 0; i < n; ++i) d.a[i] = i % 3 == 0 ? 0.0 : 1.0;
    d.x.col(0) = random_vector(n, rng);
    d.y = 2.0 + 0.8 * d.x.col(0).array() + random_vector(n, rng).array();
    PropensityCoefficients zero;
    zero.gamma = Vector::Zero(2);
    SolverOptions opts;
    opts.standardize = false;
    opts.normalize_weights = false;
    opts.tol = 1e-12;
    const double lam = 0.15;
    const OutcomeCoefficients b = solve_f2(d, zero, lam, opts);

    // Profile out the intercept and scan the slope on a fine grid.
    const auto objective = [&](double slope) {
        double r_mean = 0.0, n1 = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (d.a[i] == 1.0) {
                r_mean += d.y[i] - slope * d.x(i, 0);
                n1 += 1.0;
            }
        }
        r_mean /= n1;
        double s = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (d.a[i] != 1.0) continue;
            const double r = d.y[i] - r_mean - slope * d.x(i, 0);
            s += r * r;
        }
        return s / (2.0 * double(n)) + lam * std::abs(slope);
    };
    double best = 0.0, best_value = objective(0.0);
    for (int k = -300000; k <= 300000; ++k) {
        const double s = k * 1e-5;
        const double v = objective(s);
        if (v < best_value) {
            best_value = v;
            best = s;
        }
    }
    CHECK(std::abs(b.beta[1] - best) <= 2e-5);
    CHECK(objective(b.beta[1]) <= best_value + 1e-12);
}

TEST_CASE("calibration identity and intercept-only fits") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset d = random_dataset(100, 10, seed);
        const PropensityCoefficients g = solve_f1(d, 0.05);
        const Vector eta = linear_predictor(d.x, g.gamma);
        double s = 0.0;
        for (Index i = 0; i < d.n(); ++i) s += d.a[i] / expit(eta[i]);
        CHECK(std::abs(s / double(d.n()) - 1.0) <= 1e-8);
    }
    Dataset d = random_dataset(90, 3, 2);
    const double abar = d.a.mean();
    d.x.resize(d.n(), 0);
    CHECK(expit(solve_f1(d, 0.0).gamma[0]) == Catch::Approx(abar).epsilon(1e-9));
    CHECK(expit(fit_logistic_mle(d).gamma[0]) == Catch::Approx(abar).epsilon(1e-9));
    double treated_mean = 0.0;
    for (Index i = 0; i < d.n(); ++i) treated_mean += d.a[i] * d.y[i];
    treated_mean /= d.a.sum();
    CHECK(fit_ols(d, true).beta[0] == Catch::Approx(treated_mean).epsilon(1e-12));
}

TEST_CASE("zero penalty reduces to the bias-reduced estimating equations") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset d = random_dataset(150, 3, seed);
        const PropensityCoefficients g = solve_f1(d, 0.0);
        CHECK(f1_score_norm(d, g.gamma) <= 1e-7);
        const OutcomeCoefficients b = solve_f2(d, g, 0.0);
        CHECK(f2_gradient(d, g.gamma, b.beta).lpNorm<Eigen::Infinity>() <= 1e-7);

        // Independent weighted normal equations.
        const Matrix z = with_intercept(d.x);
        const Vector eta = linear_predictor(d.x, g.gamma);
        Vector w(d.n());
        for (Index i = 0; i < d.n(); ++i) w[i] = d.a[i] * std::exp(-eta[i]);
        const Matrix lhs = z.transpose() * w.asDiagonal() * z;
        const Vector rhs = z.transpose() * w.asDiagonal() * d.y;
        CHECK((b.beta - lhs.ldlt().solve(rhs)).lpNorm<Eigen::Infinity>() <= 1e-7);
    }
}

TEST_CASE("constant treated outcome gives an intercept-only outcome fit") {
    Dataset d = random_dataset(80, 4, 3);
    for (Index i = 0; i < d.n(); ++i) {
        if (d.a[i] == 1.0) d.y[i] = 2.5;
    }
    const OutcomeCoefficients b = solve_f2(d, solve_f1(d, 0.0), 0.0);
    CHECK(b.beta[0] == Catch::Approx(2.5).epsilon(1e-10));
    CHECK(b.beta.tail(4).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("standardized fits are scale equivariant") {
    Dataset d = random_dataset(120, 6, 8);
    const PropensityCoefficients g = solve_f1(d, 0.04);
    const OutcomeCoefficients b = solve_f2(d, g, 0.08);
    Dataset scaled = d;
    const double c = 7.5;
    scaled.x.col(2) *= c;
    const PropensityCoefficients gs = solve_f1(scaled, 0.04);
    const OutcomeCoefficients bs = solve_f2(scaled, gs, 0.08);
    CHECK((linear_predictor(d.x, g.gamma) - linear_predictor(scaled.x, gs.gamma))
              .lpNorm<Eigen::Infinity>() <= 1e-7);
    CHECK((linear_predictor(d.x, b.beta) - linear_predictor(scaled.x, bs.beta))
              .lpNorm<Eigen::Infinity>() <= 1e-7);
    CHECK(gs.gamma[3] == Catch::Approx(g.gamma[3] / c).margin(1e-8));
    CHECK(bs.beta[3] == Catch::Approx(b.beta[3] / c).margin(1e-8));
}

TEST_CASE("a penalty below the recession threshold is reported as unbounded") {
    // A linear program (tests/oracles/f1_recession.py) finds a direction d with
    // z'd >= 0 on every treated row along which the penalized objective falls
    // at rate 0.540, so no minimiser exists.
    const Dataset d = random_dataset(100, 30, 2);
    try {
        solve_f1(d, 0.03);
        FAIL("expected UnboundedObjective");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnboundedObjective);
    }
    CHECK_NOTHROW(solve_f1(d, 0.1));
}

TEST_CASE("reported objective traces are nonincreasing") {
    SolverOptions opts;
    opts.record_objective = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Dataset d = random_dataset(100, 30, seed);
        const PropensityCoefficients g = solve_f1(d, 0.1, opts);
        const OutcomeCoefficients b = solve_f2(d, g, 0.2, opts);
        const PropensityCoefficients lg = fit_logistic_lasso(d, 0.1, opts);
        for (const auto* trace :
             {&g.diagnostics.objective_trace, &b.diagnostics.objective_trace,
              &lg.diagnostics.objective_trace}) {
            REQUIRE(trace->size() >= 1);
            for (std::size_t k = 1; k < trace->size(); ++k) {
                CHECK((*trace)[k] <= (*trace)[k - 1] + 1e-14 * std::abs((*trace)[k - 1]));
            }
        }
    }
}

TEST_CASE("logistic fits") {
    SECTION("independent treatment gives near-zero slopes") {
        std::mt19937_64 rng(21);
        std::bernoulli_distribution coin(0.4);
        const Index n = 100000;
        Dataset d;
        d.x = random_vector(n * 3, rng).reshaped(n, 3);
        d.a.resize(n);
        for (Index i = 0; i < n; ++i) d.a[i] = coin(rng) ? 1.0 : 0.0;
        d.y = Vector::Zero(n);
        const Vector g = fit_logistic_mle(d).gamma;
        CHECK(g.tail(3).lpNorm<Eigen::Infinity>() < 0.05);
    }
    SECTION("two-cell design recovers hand-computed log-odds") {
        // x = 0: 30 of 100 treated; x = 1: 80 of 100 treated.
        Dataset d;
        d.x.resize(200, 1);
        d.a.resize(200);
        d.y = Vector::Zero(200);
        for (Index i = 0; i < 200; ++i) {
            const bool cell = i >= 100;
            d.x(i, 0) = cell ? 1.0 : 0.0;
            d.a[i] = (cell ? i - 100 < 80 : i < 30) ? 1.0 : 0.0;
        }
        const Vector g = fit_logistic_mle(d).gamma;
        CHECK(g[0] == Catch::Approx(std::log(0.3 / 0.7)).epsilon(1e-10));
        CHECK(g[1] == Catch::Approx(std::log(0.8 / 0.2) - std::log(0.3 / 0.7)).epsilon(1e-10));
        CHECK(fit_logistic_lasso(d, 0.0).gamma[1] == Catch::Approx(g[1]).epsilon(1e-7));
    }
    SECTION("large penalty shrinks every slope") {
        const Dataset d = random_dataset(100, 5, 4);
        const Vector g = fit_logistic_lasso(d, 10.0).gamma;
        CHECK(g.tail(5).isZero(0.0));
        CHECK(expit(g[0]) == Catch::Approx(d.a.mean()).epsilon(1e-8));
        const Vector b = fit_linear_lasso(d, 100.0, true).beta;
        CHECK(b.tail(5).isZero(0.0));
    }
    SECTION("separation is reported") {
        Dataset d = random_dataset(60, 2, 5);
        for (Index i = 0; i < d.n(); ++i) d.a[i] = d.x(i, 0) > 0.0 ? 1.0 : 0.0;
        try {
            fit_logistic_mle(d);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Separation);
        }
        CHECK_THROWS_AS(solve_f1(d, 0.0), Error);
    }
    SECTION("a single arm is degenerate") {
        Dataset d = random_dataset(40, 2, 5);
        d.a.setOnes();
        try {
            solve_f1(d, 0.1);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DegenerateData);
        }
    }
}

TEST_CASE("least squares fits") {
    const Dataset d = random_dataset(90, 5, 6);
    const OutcomeCoefficients ols = fit_ols(d, true);
    Matrix z(0, 6);
    std::vector<double> ys;
    for (Index i = 0; i < d.n(); ++i) {
        if (d.a[i] != 1.0) continue;
        z.conservativeResize(z.rows() + 1, 6);
        z(z.rows() - 1, 0) = 1.0;
        z.row(z.rows() - 1).tail(5) = d.x.row(i);
        ys.push_back(d.y[i]);
    }
    const Vector y = Eigen::Map<const Vector>(ys.data(), static_cast<Index>(ys.size()));
    const Vector direct = (z.transpose() * z).ldlt().solve(z.transpose() * y);
    CHECK((ols.beta - direct).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((fit_linear_lasso(d, 0.0, true).beta - direct).lpNorm<Eigen::Infinity>() <= 1e-7);

    Dataset exact = d;
    const Vector coef = (Vector(6) << 1.0, -2.0, 0.5, 3.0, 0.0, 1.25).finished();
    exact.y = linear_predictor(exact.x, coef);
    CHECK((fit_ols(exact, true).beta - coef).lpNorm<Eigen::Infinity>() <= 1e-12);

    Dataset collinear = d;
    collinear.x.col(1) = collinear.x.col(0);
    CHECK_THROWS_AS(fit_ols(collinear, true), Error);
}

TEST_CASE("post-selection refits") {
    const Dataset d = random_dataset(150, 6, 12);
    const PropensityCoefficients empty = refit_propensity(d, {});
    CHECK(empty.gamma.tail(6).isZero(0.0));
    CHECK(expit(empty.gamma[0]) == Catch::Approx(d.a.mean()).epsilon(1e-9));
    const IndexSet all{1, 2, 3, 4, 5, 6};
    CHECK((refit_propensity(d, all).gamma - fit_logistic_mle(d).gamma)
              .lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK((refit_outcome(d, all).beta - fit_ols(d, true).beta).lpNorm<Eigen::Infinity>() <=
          1e-10);
    const OutcomeCoefficients part = refit_outcome(d, {2, 5});
    CHECK(part.beta[1] == 0.0);
    CHECK(part.beta[3] == 0.0);
    CHECK(part.beta[4] == 0.0);
    CHECK(part.beta[6] == 0.0);

    // Removing shrinkage enlarges the selected coefficients on most draws.
    int larger = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ScenarioSpec spec;
        Rng rng = replication_rng(seed, 0);
        const Dataset s = draw_dataset(true_model(spec), spec.n, spec.p, false, rng);
        const OutcomeCoefficients lasso = fit_linear_lasso(s, 0.2, true);
        const OutcomeCoefficients refit = refit_outcome(s, lasso.active_set);
        bool ok = true;
        for (Index j : lasso.active_set) ok = ok && std::abs(refit.beta[j]) >= std::abs(lasso.beta[j]);
        larger += ok ? 1 : 0;
    }
    CHECK(larger >= 6);
}

TEST_CASE("double-selection bias-reduced fit") {
    const Dataset d = random_dataset(200, 5, 14);
    const IndexSet sel{1, 2};
    SECTION("ridge-regularized equations hold") {
        const double ridge = 0.05;
        const Dataset r = d.select_covariates(sel);
        // Without standardization the ridge acts on the raw slopes; with it, on
        // sd_j * gamma_j, which reads as ridge * sd_j^2 in original units.
        SolverOptions raw;
        raw.standardize = false;
        const Vector scales = covariate_scales(r.x);
        for (bool standardize : {false, true}) {
            INFO("standardize " << standardize);
            const NuisanceFit f = standardize ? solve_ds_pbr(d, sel, ridge)
                                              : solve_ds_pbr(d, sel, ridge, raw);
            Vector g(3);
            g << f.gamma.gamma[0], f.gamma.gamma[1], f.gamma.gamma[2];
            Vector eq = f1_gradient(r, g);
            for (Index j = 1; j < 3; ++j) {
                const double w = standardize ? scales[j] * scales[j] : 1.0;
                eq[j] += 2.0 * ridge * w * g[j];
            }
            CHECK(eq.lpNorm<Eigen::Infinity>() <= 1e-8);
            Vector b(3);
            b << f.beta.beta[0], f.beta.beta[1], f.beta.beta[2];
            CHECK(f2_gradient(r, g, b).lpNorm<Eigen::Infinity>() <= 1e-8);
            for (Index j : {3, 4, 5}) {
                CHECK(f.gamma.gamma[j] == 0.0);
                CHECK(f.beta.beta[j] == 0.0);
            }
        }
    }
    SECTION("vanishing ridge recovers the unpenalized solution") {
        const Dataset r = d.select_covariates(sel);
        const PropensityCoefficients g0 = solve_f1(r, 0.0);
        const OutcomeCoefficients b0 = solve_f2(r, g0, 0.0);
        double previous = 1e300;
        for (double ridge : {1e-1, 1e-2, 1e-3, 1e-5}) {
            const NuisanceFit f = solve_ds_pbr(d, sel, ridge);
            const double gap = std::max(
                std::abs(f.gamma.gamma[1] - g0.gamma[1]) + std::abs(f.gamma.gamma[2] - g0.gamma[2]),
                std::abs(f.beta.beta[1] - b0.beta[1]) + std::abs(f.beta.beta[2] - b0.beta[2]));
            CHECK(gap < previous);
            previous = gap;
        }
        CHECK(previous < 1e-3);
    }
    SECTION("empty selection keeps a calibrated intercept") {
        const NuisanceFit f = solve_ds_pbr(d, {}, 0.1);
        CHECK(f.gamma.gamma.tail(5).isZero(0.0));
        CHECK(expit(f.gamma.gamma[0]) == Catch::Approx(d.a.mean()).epsilon(1e-8));
        const double w = std::exp(-f.gamma.gamma[0]);
        double num = 0.0, den = 0.0;
        for (Index i = 0; i < d.n(); ++i) {
            num += w * d.a[i] * d.y[i];
            den += w * d.a[i];
        }
        CHECK(f.beta.beta[0] == Catch::Approx(num / den).epsilon(1e-10));
    }
}

TEST_CASE("penalized propensity fits improve with sample size") {
    ScenarioSpec spec;
    const TrueModel model = true_model(spec);
    const Vector g_true = scenario1_g(spec.p);
    const double lam_small = default_penalties(200, spec.p).lambda_gamma;
    const double lam_large = default_penalties(2000, spec.p).lambda_gamma;
    double err_small = 0.0, err_large = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng = replication_rng(seed, 0);
        const Dataset small = draw_dataset(model, 200, spec.p, false, rng);
        const Dataset large = draw_dataset(model, 2000, spec.p, false, rng);
        err_small += (solve_f1(small, lam_small).gamma.tail(spec.p) - g_true).norm();
        err_large += (solve_f1(large, lam_large).gamma.tail(spec.p) - g_true).norm();
    }
    CHECK(err_large < err_small);
}
