#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pbrdr/dataset.hpp"

namespace pbrdr {

enum class SurfaceVariant { Fig1, Fig2 };

std::string variant_name(SurfaceVariant v);

struct SurfaceDgp {
    SurfaceVariant variant = SurfaceVariant::Fig1;
    Index n_large = 100000;
    std::uint64_t seed = 1;
};

// X = 3 - V with V ~ Gamma(1, 1) (unit SD, so no rescaling is needed),
// A ~ Bernoulli(expit(-1 + X^2)), Y ~ N(X^2, 1) or N(X^3 - X^2, 1).
Dataset surface_dataset(const SurfaceDgp& dgp);

// E{Y(1)}: 5 for fig1, 7 for fig2.
double surface_mu0_exact(SurfaceVariant v);
// Direct simulation of E{Y(1)}; returns (mean, standard error).
std::pair<double, double> surface_mu0_monte_carlo(SurfaceVariant v, std::int64_t draws,
                                                  std::uint64_t seed);
// The value used for biases: a cached 10^7-draw simulation.
double surface_mu0(SurfaceVariant v);

// The one-covariate working models carry no intercept: pi(X) = expit(gamma X)
// and m(X) = beta X, so each surface point is a pair of scalars.
// DR estimate mean(beta X + A / pi (Y - beta X)) at (gamma, beta). Throws
// PositivityViolation if a treated unit has pi < 1e-6.
double surface_estimate(const Dataset& data, double gamma, double beta);

// Zero-penalty bias-reduced solution: gamma solves mean((1 - A / pi) X) = 0,
// beta solves mean(exp(-gamma X) A (Y - beta X) X) = 0.
std::pair<double, double> surface_br_point(const Dataset& data);

struct ReferenceBias {
    std::string tag;  // BR, MLE-DR, IPW, IMP
    double bias = 0.0;
};

struct SurfaceGrid {
    std::vector<double> gamma_slopes;
    std::vector<double> beta_slopes;
    Matrix raw_bias;       // rows: gamma, cols: beta; NaN where positivity fails
    Matrix rescaled_bias;  // sign(b) sqrt|b|
    std::pair<double, double> br_point{0.0, 0.0};  // (gamma, beta)
    std::vector<ReferenceBias> reference_biases;
    double mu0 = 0.0;
};

// Biases of the BR, MLE-DR, IPW and imputation estimators on one sample.
// IPW sets beta = 0 and gamma to the MLE; IMP is mean(A Y + (1 - A) beta X)
// with beta solving sum A (Y - beta X) = 0.
std::vector<ReferenceBias> reference_biases(const Dataset& data, double mu0);

SurfaceGrid evaluate_surface(const SurfaceDgp& dgp, const std::vector<double>& gamma_grid,
                             const std::vector<double>& beta_grid, int threads = 1);

// Inclusive grid a, a + step, ..., <= b (with a small tolerance for rounding).
std::vector<double> make_grid(double a, double b, double step);
// Parses "A:B:STEP"; ConfigError on malformed input or a non-positive step.
std::vector<double> parse_grid(const std::string& spec);

std::string default_gamma_range(SurfaceVariant v);
std::string default_beta_range(SurfaceVariant v);

// Writes surface.csv, reference_biases.csv and br_point.csv; returns the
// file names written.
std::vector<std::string> export_surface(const SurfaceGrid& grid,
                                        const std::filesystem::path& dir);

struct SurfaceCell {
    double gamma_slope;
    double beta_slope;
    double rescaled_bias;  // NaN for NA
};
std::vector<SurfaceCell> read_surface_csv(const std::filesystem::path& path);

}  // namespace pbrdr
