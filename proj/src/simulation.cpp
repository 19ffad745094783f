#include "pbrdr/simulation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "pbrdr/special.hpp"

namespace pbrdr {

void ScenarioSpec::validate() const {
    if (n < 2) fail(ErrorKind::ConfigError, "n must be at least 2");
    if (reps < 1) fail(ErrorKind::ConfigError, "reps must be at least 1");
    if (scenario == Scenario::S1 && p < 15) {
        fail(ErrorKind::DimensionError, "scenario 1 needs p >= 15");
    }
    if (scenario == Scenario::S2 && p < 4) {
        fail(ErrorKind::DimensionError, "scenario 2 needs p >= 4");
    }
    if (!std::isfinite(c_signal)) fail(ErrorKind::ConfigError, "c_signal must be finite");
}

std::string ScenarioSpec::cell_name() const {
    std::string out = scenario == Scenario::S1 ? "S1" : "S2";
    out += correlated ? "_corr" : "_uncorr";
    out += or_correct ? "_ORcorrect" : "_ORincorrect";
    out += ps_correct ? "_PScorrect" : "_PSincorrect";
    out += "_n" + std::to_string(n) + "_p" + std::to_string(p);
    return out;
}

Matrix gen_covariates(Index n, Index p, bool correlated, Rng& rng) {
    if (n < 1 || p < 1) fail(ErrorKind::DimensionError, "covariate matrix needs n, p >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    // Row-wise AR(1) recursion; this is multiplication by the Cholesky factor
    // of sigma_ij = 0.5^|i-j|.
    const double rho = 0.5;
    const double innovation = std::sqrt(1.0 - rho * rho);
    Matrix x(n, p);
    for (Index i = 0; i < n; ++i) {
        double prev = normal(rng);
        x(i, 0) = prev;
        for (Index j = 1; j < p; ++j) {
            const double e = normal(rng);
            prev = correlated ? rho * prev + innovation * e : e;
            x(i, j) = prev;
        }
    }
    return x;
}

Vector scenario1_b(Index p) {
    Vector b = Vector::Zero(p);
    for (Index j = 0; j < 5 && j < p; ++j) b[j] = 1.0 / static_cast<double>(j + 1);
    for (Index j = 10; j < 15 && j < p; ++j) b[j] = 1.0 / static_cast<double>(j - 9);
    return b;
}

Vector scenario1_g(Index p) {
    Vector g = Vector::Zero(p);
    for (Index j = 0; j < 10 && j < p; ++j) g[j] = 1.0 / static_cast<double>(j + 1);
    return g;
}

TrueModel scenario1_model(const ScenarioSpec& spec) {
    if (spec.p < 15) fail(ErrorKind::DimensionError, "scenario 1 needs p >= 15");
    const Vector b = scenario1_b(spec.p);
    const Vector g = scenario1_g(spec.p);
    const double c = spec.c_signal;
    TrueModel model;
    if (spec.or_correct) {
        model.m0 = [b, c](const Vector& x) { return 1.0 + c * b.dot(x); };
    } else {
        model.m0 = [b](const Vector& x) {
            return x[0] * x[0] + b.tail(b.size() - 1).dot(x.tail(x.size() - 1));
        };
    }
    if (spec.ps_correct) {
        model.pi0 = [g](const Vector& x) { return expit(g.dot(x)); };
    } else {
        model.pi0 = [g](const Vector& x) {
            return expit(x[0] * x[0] + g.tail(g.size() - 1).dot(x.tail(x.size() - 1)));
        };
    }
    // Both outcome laws have mean 1: E[1 + c b'X] = 1 and E[X_1^2] = 1.
    model.mu0 = 1.0;
    return model;
}

namespace {

constexpr double kS2Intercept = 210.0;
constexpr double kS2Outcome[4] = {27.4, 13.7, 13.7, 13.7};
constexpr double kS2Propensity[4] = {-1.0, 0.5, -0.25, -0.1};

// (M_1, M_2, M_3, X_4) from the first four covariates.
std::array<double, 4> transformed(const Vector& x) {
    return {std::exp(x[0] / 2.0), x[1] / (1.0 + std::exp(x[0])) + 10.0,
            std::pow(x[0] * x[2] / 25.0 + 0.6, 3.0), x[3]};
}

double s2_outcome(const Vector& x, bool correct) {
    double out = kS2Intercept;
    if (correct) {
        for (int j = 0; j < 4; ++j) out += kS2Outcome[j] * x[j];
    } else {
        const auto m = transformed(x);
        for (int j = 0; j < 4; ++j) out += kS2Outcome[j] * m[static_cast<std::size_t>(j)];
    }
    return out;
}

double s2_propensity(const Vector& x, bool correct) {
    double eta = 0.0;
    if (correct) {
        for (int j = 0; j < 4; ++j) eta += kS2Propensity[j] * x[j];
    } else {
        const auto m = transformed(x);
        for (int j = 0; j < 4; ++j) eta += kS2Propensity[j] * m[static_cast<std::size_t>(j)];
    }
    return expit(eta);
}

constexpr std::int64_t kMu0Draws = 10'000'000;
constexpr std::uint64_t kMu0Seed = 20'180'731;

// E{m0(X)} for the misspecified outcome by direct simulation; only the first
// four covariates enter, so the value depends on the correlation flag alone.
std::pair<double, double> simulated_s2_mu0(bool correlated) {
    static std::mutex mutex;
    static std::map<bool, std::pair<double, double>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(correlated); it != cache.end()) return it->second;

    Rng rng(kMu0Seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double innovation = std::sqrt(0.75);
    Vector x(4);
    long double sum = 0.0L;
    long double sum_sq = 0.0L;
    for (std::int64_t k = 0; k < kMu0Draws; ++k) {
        x[0] = normal(rng);
        for (Index j = 1; j < 4; ++j) {
            const double e = normal(rng);
            x[j] = correlated ? 0.5 * x[j - 1] + innovation * e : e;
        }
        const double m = s2_outcome(x, false);
        sum += m;
        sum_sq += static_cast<long double>(m) * m;
    }
    const long double draws = static_cast<long double>(kMu0Draws);
    const long double mean = sum / draws;
    const long double var = (sum_sq - draws * mean * mean) / (draws - 1.0L);
    const std::pair<double, double> out{static_cast<double>(mean),
                                        static_cast<double>(std::sqrt(var / draws))};
    cache.emplace(correlated, out);
    return out;
}

}  // namespace

TrueModel scenario2_model(const ScenarioSpec& spec) {
    if (spec.p < 4) fail(ErrorKind::DimensionError, "scenario 2 needs p >= 4");
    TrueModel model;
    const bool or_correct = spec.or_correct;
    const bool ps_correct = spec.ps_correct;
    model.m0 = [or_correct](const Vector& x) { return s2_outcome(x, or_correct); };
    model.pi0 = [ps_correct](const Vector& x) { return s2_propensity(x, ps_correct); };
    if (or_correct) {
        model.mu0 = kS2Intercept;
    } else {
        const auto [mu0, se] = simulated_s2_mu0(spec.correlated);
        model.mu0 = mu0;
        model.mu0_se = se;
    }
    return model;
}

TrueModel true_model(const ScenarioSpec& spec) {
    return spec.scenario == Scenario::S1 ? scenario1_model(spec) : scenario2_model(spec);
}

Dataset draw_dataset(const TrueModel& model, Index n, Index p, bool correlated, Rng& rng) {
    Dataset data;
    data.x = gen_covariates(n, p, correlated, rng);
    data.a.resize(n);
    data.y.resize(n);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector row(p);
    for (Index i = 0; i < n; ++i) {
        row = data.x.row(i).transpose();
        const double pi = model.pi0(row);
        data.a[i] = uniform(rng) < pi ? 1.0 : 0.0;
        data.y[i] = model.m0(row) + normal(rng);
    }
    return data;
}

Rng replication_rng(std::uint64_t seed, std::uint64_t rep) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
    return Rng(seq);
}

namespace {

struct RepOutcome {
    bool ok = false;
    double mu = 0.0;
    double se = 0.0;
    bool hit = false;
};

}  // namespace

MetricsTable run_monte_carlo(const ScenarioSpec& spec, const std::vector<EstimatorTag>& tags,
                             const MonteCarloOptions& opts) {
    spec.validate();
    if (tags.empty()) fail(ErrorKind::ConfigError, "no estimators requested");
    const std::vector<EstimatorTag> roster = sorted_by_name(tags);
    const TrueModel model = true_model(spec);
    const std::size_t reps = static_cast<std::size_t>(spec.reps);
    std::vector<std::vector<RepOutcome>> outcomes(reps);

    auto run_rep = [&](std::size_t r) {
        Rng rng = replication_rng(spec.seed, r);
        const Dataset data = draw_dataset(model, spec.n, spec.p, spec.correlated, rng);
        std::vector<RepOutcome> row(roster.size());
        // A draw with an empty arm fails every estimator for this replication.
        if (data.n_treated() == 0 || data.n_treated() == data.n()) {
            outcomes[r] = std::move(row);
            return;
        }
        const auto suite = comparator_suite(data, roster, opts.estimator);
        for (std::size_t k = 0; k < roster.size(); ++k) {
            const SuiteEntry& entry = suite.at(roster[k]);
            if (entry.status != EntryStatus::Ok) continue;
            const EstimateResult& res = *entry.result;
            row[k] = {true, res.mu_hat, res.se,
                      res.ci.first <= model.mu0 && model.mu0 <= res.ci.second};
        }
        outcomes[r] = std::move(row);
    };

    const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(reps)));
    if (threads == 1) {
        for (std::size_t r = 0; r < reps; ++r) run_rep(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < reps; r = next++) {
                    try {
                        run_rep(r);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    MetricsTable table;
    for (std::size_t k = 0; k < roster.size(); ++k) {
        std::vector<double> mus, ses;
        std::vector<char> hits;
        int failed = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            const RepOutcome& o = outcomes[r][k];
            if (!o.ok) {
                ++failed;
                continue;
            }
            mus.push_back(o.mu);
            ses.push_back(o.se);
            hits.push_back(o.hit ? 1 : 0);
        }
        MetricsRow row = compute_metrics(mus, ses, hits, model.mu0);
        row.estimator = roster[k];
        row.n_failed = failed;
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace pbrdr
