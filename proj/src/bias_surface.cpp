#include "pbrdr/bias_surface.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "pbrdr/csv.hpp"
#include "pbrdr/error.hpp"
#include "pbrdr/special.hpp"

namespace pbrdr {

std::string variant_name(SurfaceVariant v) { return v == SurfaceVariant::Fig1 ? "fig1" : "fig2"; }

namespace {

double outcome_mean(SurfaceVariant v, double x) {
    return v == SurfaceVariant::Fig1 ? x * x : x * x * x - x * x;
}

constexpr std::int64_t kMu0Draws = 10'000'000;
constexpr std::uint64_t kMu0Seed = 19'450'101;
constexpr double kPositivityFloor = 1e-6;

}  // namespace

Dataset surface_dataset(const SurfaceDgp& dgp) {
    if (dgp.n_large < 10) fail(ErrorKind::ConfigError, "n_large must be at least 10");
    std::mt19937_64 rng(dgp.seed);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset data;
    data.x.resize(dgp.n_large, 1);
    data.a.resize(dgp.n_large);
    data.y.resize(dgp.n_large);
    for (Index i = 0; i < dgp.n_large; ++i) {
        const double x = 3.0 - gamma(rng);
        data.x(i, 0) = x;
        data.a[i] = uniform(rng) < expit(-1.0 + x * x) ? 1.0 : 0.0;
        data.y[i] = outcome_mean(dgp.variant, x) + normal(rng);
    }
    return data;
}

// With X = 3 - V, E[V^k] = k!: E[X^2] = 9 - 6 + 2 = 5, E[X^3] = 27 - 27 + 18 - 6 = 12.
double surface_mu0_exact(SurfaceVariant v) { return v == SurfaceVariant::Fig1 ? 5.0 : 7.0; }

std::pair<double, double> surface_mu0_monte_carlo(SurfaceVariant v, std::int64_t draws,
                                                  std::uint64_t seed) {
    if (draws < 2) fail(ErrorKind::DomainError, "need at least two draws");
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    long double sum = 0.0L, sum_sq = 0.0L;
    for (std::int64_t k = 0; k < draws; ++k) {
        const double m = outcome_mean(v, 3.0 - gamma(rng));
        sum += m;
        sum_sq += static_cast<long double>(m) * m;
    }
    const long double d = static_cast<long double>(draws);
    const long double mean = sum / d;
    const long double var = (sum_sq - d * mean * mean) / (d - 1.0L);
    return {static_cast<double>(mean), static_cast<double>(std::sqrt(var / d))};
}

double surface_mu0(SurfaceVariant v) {
    static std::mutex mutex;
    static std::map<SurfaceVariant, double> cache;
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(v); it != cache.end()) return it->second;
    const double mu0 = surface_mu0_monte_carlo(v, kMu0Draws, kMu0Seed).first;
    cache.emplace(v, mu0);
    return mu0;
}

namespace {

void require_both_arms(const Dataset& data) {
    const double n1 = data.a.sum();
    if (n1 == 0.0 || n1 == static_cast<double>(data.n())) {
        fail(ErrorKind::DegenerateData, "surface sample needs both arms");
    }
}

// Root of a nondecreasing scalar function: bracket by doubling, then bisect
// until the bracket stops shrinking in floating point.
template <class F>
double monotone_root(F&& f, const char* what) {
    double lo = -1.0, hi = 1.0;
    double flo = f(lo), fhi = f(hi);
    for (int k = 0; k < 60 && !(flo <= 0.0 && fhi >= 0.0); ++k) {
        if (flo > 0.0) {
            hi = lo;
            fhi = flo;
            lo *= 2.0;
            flo = f(lo);
        } else {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            fhi = f(hi);
        }
    }
    if (!(flo <= 0.0 && fhi >= 0.0)) {
        fail(ErrorKind::NonConvergence, std::string("no root found for the ") + what);
    }
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        (fm < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Logistic score mean((expit(gamma X) - A) X) solved for gamma.
double scalar_logistic_mle(const Dataset& data) {
    const auto x = data.x.col(0);
    return monotone_root(
        [&](double g) {
            double s = 0.0;
            for (Index i = 0; i < data.n(); ++i) s += (expit(g * x[i]) - data.a[i]) * x[i];
            return s;
        },
        "logistic score");
}

}  // namespace

double surface_estimate(const Dataset& data, double gamma, double beta) {
    require_both_arms(data);
    double total = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        const double x = data.x(i, 0);
        const double m = beta * x;
        double u = m;
        if (data.a[i] == 1.0) {
            const double pi = expit(gamma * x);
            if (!(pi >= kPositivityFloor)) {
                fail(ErrorKind::PositivityViolation, "treated propensity below 1e-6");
            }
            u += (data.y[i] - m) / pi;
        }
        total += u;
    }
    const double mu = total / static_cast<double>(data.n());
    if (!std::isfinite(mu)) {
        fail(ErrorKind::PositivityViolation, "non-finite DR estimate at this grid cell");
    }
    return mu;
}

std::pair<double, double> surface_br_point(const Dataset& data) {
    require_both_arms(data);
    const auto x = data.x.col(0);
    // d/dgamma of mean(A exp(-gamma X) + (1 - A) gamma X), increasing in gamma.
    const double gamma = monotone_root(
        [&](double g) {
            double s = 0.0;
            for (Index i = 0; i < data.n(); ++i) {
                s += data.a[i] == 1.0 ? -x[i] * std::exp(-g * x[i]) : x[i];
            }
            return s;
        },
        "bias-reduced propensity equation");
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        if (data.a[i] != 1.0) continue;
        const double w = std::exp(-gamma * x[i]);
        num += w * data.y[i] * x[i];
        den += w * x[i] * x[i];
    }
    if (!(den > 0.0)) fail(ErrorKind::DegenerateData, "treated covariate is identically zero");
    return {gamma, num / den};
}

std::vector<ReferenceBias> reference_biases(const Dataset& data, double mu0) {
    require_both_arms(data);
    const auto x = data.x.col(0);
    std::vector<ReferenceBias> out;

    const auto [g_br, b_br] = surface_br_point(data);
    out.push_back({"BR", surface_estimate(data, g_br, b_br) - mu0});

    const double g_mle = scalar_logistic_mle(data);
    double xy = 0.0, xx = 0.0, ay = 0.0, ax = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        if (data.a[i] != 1.0) continue;
        xy += x[i] * data.y[i];
        xx += x[i] * x[i];
        ay += data.y[i];
        ax += x[i];
    }
    out.push_back({"MLE-DR", surface_estimate(data, g_mle, xy / xx) - mu0});
    out.push_back({"IPW", surface_estimate(data, g_mle, 0.0) - mu0});

    const double b_imp = ay / ax;
    double total = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        total += data.a[i] == 1.0 ? data.y[i] : b_imp * x[i];
    }
    out.push_back({"IMP", total / static_cast<double>(data.n()) - mu0});
    return out;
}

SurfaceGrid evaluate_surface(const SurfaceDgp& dgp, const std::vector<double>& gamma_grid,
                             const std::vector<double>& beta_grid, int threads) {
    if (gamma_grid.empty() || beta_grid.empty()) {
        fail(ErrorKind::ConfigError, "surface grids must be nonempty");
    }
    for (double v : gamma_grid)
        if (!std::isfinite(v)) fail(ErrorKind::ConfigError, "grid values must be finite");
    for (double v : beta_grid)
        if (!std::isfinite(v)) fail(ErrorKind::ConfigError, "grid values must be finite");

    const Dataset data = surface_dataset(dgp);
    SurfaceGrid grid;
    grid.gamma_slopes = gamma_grid;
    grid.beta_slopes = beta_grid;
    grid.mu0 = surface_mu0(dgp.variant);
    grid.reference_biases = reference_biases(data, grid.mu0);
    grid.br_point = surface_br_point(data);

    const Index rows = static_cast<Index>(gamma_grid.size());
    const Index cols = static_cast<Index>(beta_grid.size());
    grid.raw_bias.resize(rows, cols);
    grid.rescaled_bias.resize(rows, cols);
    const auto cell = [&](Index r) {
        for (Index c = 0; c < cols; ++c) {
            double b = std::nan("");
            try {
                b = surface_estimate(data, gamma_grid[static_cast<std::size_t>(r)],
                                     beta_grid[static_cast<std::size_t>(c)]) -
                    grid.mu0;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::PositivityViolation) throw;
            }
            grid.raw_bias(r, c) = b;
            grid.rescaled_bias(r, c) = std::isnan(b) ? b : rescale_bias(b);
        }
    };
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(rows)));
    if (workers == 1) {
        for (Index r = 0; r < rows; ++r) cell(r);
    } else {
        std::atomic<Index> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (Index r = next++; r < rows; r = next++) cell(r);
            });
        }
        for (auto& th : pool) th.join();
    }
    return grid;
}

std::vector<double> make_grid(double a, double b, double step) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(step)) {
        fail(ErrorKind::ConfigError, "grid bounds must be finite");
    }
    if (!(step > 0.0)) fail(ErrorKind::ConfigError, "grid step must be positive");
    if (b < a) fail(ErrorKind::ConfigError, "grid upper bound is below the lower bound");
    const double count = std::floor((b - a) / step + 1e-9);
    if (count > 1e6) fail(ErrorKind::ConfigError, "grid has too many points");
    std::vector<double> out;
    for (long k = 0; k <= static_cast<long>(count); ++k) out.push_back(a + step * k);
    return out;
}

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        const auto v = parse_number(item, 0, "grid");
        if (!v) fail(ErrorKind::ConfigError, "grid spec '" + spec + "' has an empty field");
        parts.push_back(*v);
    }
    if (parts.size() != 3) fail(ErrorKind::ConfigError, "grid spec must be A:B:STEP");
    return make_grid(parts[0], parts[1], parts[2]);
}

std::string default_gamma_range(SurfaceVariant) { return "-1:2:0.05"; }

std::string default_beta_range(SurfaceVariant v) {
    return v == SurfaceVariant::Fig1 ? "-12:4:0.25" : "-20:120:2";
}

std::vector<std::string> export_surface(const SurfaceGrid& grid,
                                        const std::filesystem::path& dir) {
    std::string surface = "gamma_slope,beta_slope,rescaled_bias\n";
    for (std::size_t r = 0; r < grid.gamma_slopes.size(); ++r) {
        for (std::size_t c = 0; c < grid.beta_slopes.size(); ++c) {
            surface += format_double(grid.gamma_slopes[r]) + ',' +
                       format_double(grid.beta_slopes[c]) + ',' +
                       format_double(grid.rescaled_bias(static_cast<Index>(r),
                                                        static_cast<Index>(c))) +
                       '\n';
        }
    }
    std::string refs = "tag,bias\n";
    for (const ReferenceBias& rb : grid.reference_biases) {
        refs += rb.tag + ',' + format_double(rb.bias) + '\n';
    }
    const std::string br = "gamma_slope,beta_slope\n" + format_double(grid.br_point.first) + ',' +
                           format_double(grid.br_point.second) + '\n';
    write_text_file(dir / "surface.csv", surface);
    write_text_file(dir / "reference_biases.csv", refs);
    write_text_file(dir / "br_point.csv", br);
    return {"surface.csv", "reference_biases.csv", "br_point.csv"};
}

std::vector<SurfaceCell> read_surface_csv(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    if (table.header != std::vector<std::string>{"gamma_slope", "beta_slope", "rescaled_bias"}) {
        fail(ErrorKind::ConfigError, "unexpected surface header in '" + path.string() + "'");
    }
    std::vector<SurfaceCell> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.line_numbers[r];
        const auto g = parse_number(row[0], line, "gamma_slope");
        const auto b = parse_number(row[1], line, "beta_slope");
        const auto v = parse_number(row[2], line, "rescaled_bias");
        if (!g || !b) fail(ErrorKind::ConfigError, "missing grid coordinate");
        out.push_back({*g, *b, v ? *v : std::nan("")});
    }
    return out;
}

}  // namespace pbrdr
