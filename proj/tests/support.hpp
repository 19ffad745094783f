#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pbrdr/dataset.hpp"

namespace pbrdr::testing {

// Logistic propensity in the first two covariates, linear outcome with noise.
inline Dataset random_dataset(Index n, Index p, std::uint64_t seed, double signal = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Dataset d;
    d.x.resize(n, p);
    d.a.resize(n);
    d.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        double eta = 0.3, mean = 1.0;
        for (Index j = 0; j < p; ++j) {
            d.x(i, j) = normal(rng);
            if (j < 2) eta += signal * d.x(i, j);
            if (j < 3) mean += d.x(i, j) / (1.0 + j);
        }
        d.a[i] = uniform(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        d.y[i] = mean + normal(rng);
    }
    return d;
}

inline Vector random_vector(Index k, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Vector v(k);
    for (Index j = 0; j < k; ++j) v[j] = normal(rng);
    return v;
}

template <class F>
Vector central_difference(F&& f, const Vector& x, double h = 1e-6) {
    Vector g(x.size());
    for (Index j = 0; j < x.size(); ++j) {
        Vector up = x, down = x;
        up[j] += h;
        down[j] -= h;
        g[j] = (f(up) - f(down)) / (2.0 * h);
    }
    return g;
}

// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("pbrdr_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace pbrdr::testing
