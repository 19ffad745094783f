#include "pbrdr/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "pbrdr/special.hpp"

namespace pbrdr {

std::string_view tag_name(EstimatorTag tag) {
    switch (tag) {
        case EstimatorTag::OrOls: return "OR-OLS";
        case EstimatorTag::OrLasso: return "OR-LASSO";
        case EstimatorTag::IptwMle: return "IPTW-MLE";
        case EstimatorTag::IptwLasso: return "IPTW-LASSO";
        case EstimatorTag::PopIptwMle: return "PopIPTW-MLE";
        case EstimatorTag::PopIptwLasso: return "PopIPTW-LASSO";
        case EstimatorTag::Mle: return "MLE";
        case EstimatorTag::Lasso: return "LASSO";
        case EstimatorTag::PostLasso: return "Post-LASSO";
        case EstimatorTag::DsLasso: return "DS-LASSO";
        case EstimatorTag::Pbr: return "P-BR";
        case EstimatorTag::DsPbr: return "DS-P-BR";
    }
    return "unknown";
}

const std::vector<EstimatorTag>& all_tags() {
    static const std::vector<EstimatorTag> tags{
        EstimatorTag::OrOls,     EstimatorTag::OrLasso,      EstimatorTag::IptwMle,
        EstimatorTag::IptwLasso, EstimatorTag::PopIptwMle,   EstimatorTag::PopIptwLasso,
        EstimatorTag::Mle,       EstimatorTag::Lasso,        EstimatorTag::PostLasso,
        EstimatorTag::DsLasso,   EstimatorTag::Pbr,          EstimatorTag::DsPbr};
    return tags;
}

const std::vector<EstimatorTag>& default_roster() {
    static const std::vector<EstimatorTag> tags{
        EstimatorTag::OrOls,  EstimatorTag::PopIptwMle, EstimatorTag::OrLasso,
        EstimatorTag::PopIptwLasso, EstimatorTag::Mle,  EstimatorTag::Lasso,
        EstimatorTag::DsLasso, EstimatorTag::PostLasso, EstimatorTag::Pbr,
        EstimatorTag::DsPbr};
    return tags;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::optional<EstimatorTag> parse_tag(std::string_view name) {
    const std::string wanted = lower(name);
    for (EstimatorTag tag : all_tags()) {
        if (lower(tag_name(tag)) == wanted) return tag;
    }
    return std::nullopt;
}

std::vector<EstimatorTag> sorted_by_name(std::vector<EstimatorTag> tags) {
    std::sort(tags.begin(), tags.end(),
              [](EstimatorTag l, EstimatorTag r) { return tag_name(l) < tag_name(r); });
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    return tags;
}

EstimateResult summarize_influence(Vector influence, EstimatorTag tag) {
    EstimateResult out;
    const double n = static_cast<double>(influence.size());
    out.mu_hat = influence.mean();
    const double ss = (influence.array() - out.mu_hat).square().sum();
    out.sigma_hat = influence.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    out.se = out.sigma_hat / std::sqrt(n);
    out.ci = {out.mu_hat - kCiMultiplier * out.se, out.mu_hat + kCiMultiplier * out.se};
    out.influence = std::move(influence);
    out.estimator = tag;
    return out;
}

namespace {

// Fitted propensities, checked (or clipped) on treated units where they are
// used as divisors.
Vector treated_propensities(const Dataset& data, const Vector& gamma,
                            const EstimatorOptions& opts) {
    if (gamma.size() != data.p() + 1) {
        fail(ErrorKind::DimensionError, "propensity coefficients must have length p + 1");
    }
    const Vector eta = linear_predictor(data.x, gamma);
    Vector pi(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
        pi[i] = expit(eta[i]);
        if (data.a[i] == 1.0 && !(pi[i] >= opts.positivity_threshold)) {
            if (!opts.clip_propensity) {
                fail(ErrorKind::PositivityViolation,
                     "fitted propensity " + std::to_string(pi[i]) + " below threshold for unit " +
                         std::to_string(i));
            }
            pi[i] = opts.positivity_threshold;
        }
    }
    return pi;
}

EstimatorTag tag_for(NuisanceMethod method) {
    switch (method) {
        case NuisanceMethod::MLE: return EstimatorTag::Mle;
        case NuisanceMethod::LASSO: return EstimatorTag::Lasso;
        case NuisanceMethod::PostLASSO: return EstimatorTag::PostLasso;
        case NuisanceMethod::DSLASSO: return EstimatorTag::DsLasso;
        case NuisanceMethod::PBR: return EstimatorTag::Pbr;
        case NuisanceMethod::DSPBR: return EstimatorTag::DsPbr;
    }
    return EstimatorTag::Pbr;
}

}  // namespace

Vector influence_values(const Dataset& data, const NuisanceFit& fit,
                        const EstimatorOptions& opts) {
    if (fit.beta.beta.size() != data.p() + 1) {
        fail(ErrorKind::DimensionError, "outcome coefficients must have length p + 1");
    }
    const Vector pi = treated_propensities(data, fit.gamma.gamma, opts);
    const Vector m = linear_predictor(data.x, fit.beta.beta);
    Vector u(data.n());
    for (Index i = 0; i < data.n(); ++i) {
        u[i] = data.a[i] == 1.0 ? m[i] + (data.y[i] - m[i]) / pi[i] : m[i];
    }
    return u;
}

EstimateResult dr_estimate(const Dataset& data, const NuisanceFit& fit,
                           const EstimatorOptions& opts) {
    EstimateResult out = summarize_influence(influence_values(data, fit, opts), tag_for(fit.method));
    out.active_gamma = fit.gamma.active_set;
    out.active_beta = fit.beta.active_set;
    return out;
}

EstimateResult or_estimate(const Dataset& data, const Vector& beta, EstimatorTag tag) {
    if (beta.size() != data.p() + 1) {
        fail(ErrorKind::DimensionError, "outcome coefficients must have length p + 1");
    }
    EstimateResult out = summarize_influence(linear_predictor(data.x, beta), tag);
    out.naive_se = true;
    out.active_beta = support(beta);
    return out;
}

EstimateResult iptw_estimate(const Dataset& data, const Vector& gamma,
                             const EstimatorOptions& opts, EstimatorTag tag) {
    const Vector pi = treated_propensities(data, gamma, opts);
    Vector terms(data.n());
    for (Index i = 0; i < data.n(); ++i) {
        terms[i] = data.a[i] == 1.0 ? data.y[i] / pi[i] : 0.0;
    }
    EstimateResult out = summarize_influence(std::move(terms), tag);
    out.naive_se = true;
    out.active_gamma = support(gamma);
    return out;
}

EstimateResult pop_iptw_estimate(const Dataset& data, const Vector& gamma,
                                 const EstimatorOptions& opts, EstimatorTag tag) {
    const Vector pi = treated_propensities(data, gamma, opts);
    double weight_sum = 0.0;
    double weighted_y = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        if (data.a[i] != 1.0) continue;
        weight_sum += 1.0 / pi[i];
        weighted_y += data.y[i] / pi[i];
    }
    if (!(weight_sum > 0.0)) {
        fail(ErrorKind::PositivityViolation, "no treated units carry inverse-propensity weight");
    }
    const double mu = weighted_y / weight_sum;
    const double mean_weight = weight_sum / static_cast<double>(data.n());
    // Linearisation of the ratio; its mean equals mu.
    Vector phi(data.n());
    for (Index i = 0; i < data.n(); ++i) {
        phi[i] = mu + (data.a[i] == 1.0 ? (data.y[i] - mu) / pi[i] / mean_weight : 0.0);
    }
    EstimateResult out = summarize_influence(std::move(phi), tag);
    out.mu_hat = mu;
    out.ci = {mu - kCiMultiplier * out.se, mu + kCiMultiplier * out.se};
    out.naive_se = true;
    out.active_gamma = support(gamma);
    return out;
}

}  // namespace pbrdr
