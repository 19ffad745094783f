#include <algorithm>
#include <cmath>

#include "pbrdr/error.hpp"
#include "pbrdr/solvers.hpp"
#include "pbrdr/special.hpp"

namespace pbrdr {

// lambda_gamma = 1.1 / (2 sqrt(n)) * qnorm(1 - 0.05 / max(n, p log n)), natural
// log; lambda_beta is twice that.
Penalties default_penalties(Index n, Index p) {
    if (n < 2 || p < 1) fail(ErrorKind::DomainError, "default penalties need n >= 2 and p >= 1");
    const double nd = static_cast<double>(n);
    const double denom = std::max(nd, static_cast<double>(p) * std::log(nd));
    const double quantile = normal_quantile(1.0 - 0.05 / denom);
    Penalties out;
    out.lambda_gamma = 1.1 / (2.0 * std::sqrt(nd)) * quantile;
    out.lambda_beta = 2.0 * out.lambda_gamma;
    return out;
}

}  // namespace pbrdr
