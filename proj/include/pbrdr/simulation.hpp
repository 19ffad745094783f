#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pbrdr/dataset.hpp"
#include "pbrdr/estimators.hpp"

namespace pbrdr {

enum class Scenario { S1, S2 };

struct ScenarioSpec {
    Scenario scenario = Scenario::S1;
    Index n = 200;
    Index p = 40;
    bool correlated = false;
    bool or_correct = true;
    bool ps_correct = true;
    int reps = 100;
    std::uint64_t seed = 1;
    double c_signal = 0.75;  // Scenario 1 only

    void validate() const;
    // S1_uncorr_ORcorrect_PScorrect_n200_p40
    std::string cell_name() const;
};

struct TrueModel {
    std::function<double(const Vector&)> m0;
    std::function<double(const Vector&)> pi0;
    double mu0 = 0.0;
    double mu0_se = 0.0;  // Monte Carlo SE when mu0 is simulated, else 0
};

using Rng = std::mt19937_64;

// Rows i.i.d. N(0, Sigma) with Sigma = I or sigma_ij = 0.5^|i-j|.
Matrix gen_covariates(Index n, Index p, bool correlated, Rng& rng);

// Coefficient vectors b and g of the first scenario (length p).
Vector scenario1_b(Index p);
Vector scenario1_g(Index p);

TrueModel scenario1_model(const ScenarioSpec& spec);
TrueModel scenario2_model(const ScenarioSpec& spec);
TrueModel true_model(const ScenarioSpec& spec);

// A ~ Bernoulli(pi0(X)), Y ~ N(m0(X), 1) for every unit.
Dataset draw_dataset(const TrueModel& model, Index n, Index p, bool correlated, Rng& rng);

// Independent stream for replication `rep` of a run with master seed `seed`.
Rng replication_rng(std::uint64_t seed, std::uint64_t rep);

struct MetricsRow {
    EstimatorTag estimator = EstimatorTag::Pbr;
    double bias = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double mcsd = 0.0;
    double asse = 0.0;
    double cov = 0.0;
    int n_failed = 0;
};

// bias = mean - mu0, rmse, lower-median absolute error, SD with divisor R - 1
// (0 when R = 1), mean SE and hit rate. Empty input gives NaN metrics.
MetricsRow compute_metrics(std::span<const double> estimates, std::span<const double> ses,
                           std::span<const char> ci_hits, double mu0);

struct MetricsTable {
    std::vector<MetricsRow> rows;  // sorted by estimator name

    const MetricsRow& at(EstimatorTag tag) const;
    // Header estimator,bias,rmse,mae,mcsd,asse,cov,n_failed; %.17g numbers.
    std::string to_csv() const;
};

struct MonteCarloOptions {
    int threads = 1;
    EstimatorOptions estimator;
};

MetricsTable run_monte_carlo(const ScenarioSpec& spec, const std::vector<EstimatorTag>& tags,
                             const MonteCarloOptions& opts = {});

// Plain-text key=value run description. n, p, scenario and the three boolean
// flags may hold comma-separated lists; the run covers their cartesian product.
struct SimulationConfig {
    std::vector<Scenario> scenarios{Scenario::S1};
    std::vector<Index> ns{200};
    std::vector<Index> ps{40};
    std::vector<bool> correlated{false};
    std::vector<bool> or_correct{true};
    std::vector<bool> ps_correct{true};
    int reps = 100;
    std::uint64_t seed = 1;
    double c_signal = 0.75;
    std::vector<EstimatorTag> estimators = default_roster();

    static SimulationConfig parse(const std::string& text);
    static SimulationConfig from_spec(const ScenarioSpec& spec,
                                      std::vector<EstimatorTag> estimators = default_roster());
    std::string serialize() const;
    std::vector<ScenarioSpec> cells() const;
};

}  // namespace pbrdr
