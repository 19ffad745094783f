#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "pbrdr/csv.hpp"
#include "pbrdr/simulation.hpp"

namespace pbrdr {

MetricsRow compute_metrics(std::span<const double> estimates, std::span<const double> ses,
                           std::span<const char> ci_hits, double mu0) {
    if (ses.size() != estimates.size() || ci_hits.size() != estimates.size()) {
        fail(ErrorKind::DimensionError, "metric inputs must have equal lengths");
    }
    MetricsRow row;
    const std::size_t r = estimates.size();
    if (r == 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.bias = row.rmse = row.mae = row.mcsd = row.asse = row.cov = nan;
        return row;
    }
    const double count = static_cast<double>(r);
    double sum = 0.0, sq_err = 0.0, se_sum = 0.0, hit_sum = 0.0;
    std::vector<double> abs_err(r);
    for (std::size_t k = 0; k < r; ++k) {
        const double err = estimates[k] - mu0;
        sum += estimates[k];
        sq_err += err * err;
        abs_err[k] = std::abs(err);
        se_sum += ses[k];
        hit_sum += ci_hits[k] ? 1.0 : 0.0;
    }
    const double mean = sum / count;
    row.bias = mean - mu0;
    row.rmse = std::sqrt(sq_err / count);
    // Lower median for an even number of replications.
    const std::size_t mid = (r - 1) / 2;
    std::nth_element(abs_err.begin(), abs_err.begin() + static_cast<std::ptrdiff_t>(mid),
                     abs_err.end());
    row.mae = abs_err[mid];
    if (r > 1) {
        double ss = 0.0;
        for (double e : estimates) ss += (e - mean) * (e - mean);
        row.mcsd = std::sqrt(ss / (count - 1.0));
    }
    row.asse = se_sum / count;
    row.cov = hit_sum / count;
    return row;
}

const MetricsRow& MetricsTable::at(EstimatorTag tag) const {
    for (const MetricsRow& row : rows) {
        if (row.estimator == tag) return row;
    }
    fail(ErrorKind::ConfigError, "estimator " + std::string(tag_name(tag)) + " not in table");
}

std::string MetricsTable::to_csv() const {
    std::string out = "estimator,bias,rmse,mae,mcsd,asse,cov,n_failed\n";
    for (const MetricsRow& row : rows) {
        out += std::string(tag_name(row.estimator));
        for (double v : {row.bias, row.rmse, row.mae, row.mcsd, row.asse, row.cov}) {
            out += ',';
            out += format_double(v);
        }
        out += ',' + std::to_string(row.n_failed) + '\n';
    }
    return out;
}

}  // namespace pbrdr
