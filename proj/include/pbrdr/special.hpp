#pragma once

#include <cmath>

namespace pbrdr {

inline double expit(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse standard normal CDF. Throws DomainError unless 0 < q < 1.
double normal_quantile(double q);

// sign(b) * sqrt(|b|)
inline double rescale_bias(double bias) {
    return bias < 0.0 ? -std::sqrt(-bias) : std::sqrt(bias);
}

}  // namespace pbrdr
