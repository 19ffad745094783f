#include <cmath>
#include <functional>
#include <optional>
#include <variant>

#include "pbrdr/estimators.hpp"

namespace pbrdr {

Penalties resolve_penalties(const Dataset& data, const EstimatorOptions& opts) {
    if (opts.penalties) return *opts.penalties;
    if (data.p() == 0) return Penalties{};
    return default_penalties(data.n(), data.p());
}

NuisanceFit fit_mle_nuisances(const Dataset& data, const EstimatorOptions& opts) {
    NuisanceFit fit;
    fit.method = NuisanceMethod::MLE;
    fit.gamma = fit_logistic_mle(data, opts.solver);
    fit.beta = fit_ols(data, true);
    return fit;
}

NuisanceFit fit_lasso_nuisances(const Dataset& data, const EstimatorOptions& opts) {
    const Penalties pen = resolve_penalties(data, opts);
    NuisanceFit fit;
    fit.method = NuisanceMethod::LASSO;
    fit.gamma = fit_logistic_lasso(data, pen.lambda_gamma, opts.solver);
    fit.beta = fit_linear_lasso(data, pen.lambda_beta, true, opts.solver);
    return fit;
}

NuisanceFit fit_post_lasso_nuisances(const Dataset& data, const NuisanceFit& lasso,
                                     const EstimatorOptions& opts) {
    NuisanceFit fit;
    fit.method = NuisanceMethod::PostLASSO;
    fit.gamma = refit_propensity(data, lasso.gamma.active_set, opts.solver);
    fit.beta = refit_outcome(data, lasso.beta.active_set);
    return fit;
}

NuisanceFit fit_ds_lasso_nuisances(const Dataset& data, const NuisanceFit& lasso,
                                   const EstimatorOptions& opts) {
    const IndexSet selected = set_union(lasso.gamma.active_set, lasso.beta.active_set);
    NuisanceFit fit;
    fit.method = NuisanceMethod::DSLASSO;
    fit.gamma = refit_propensity(data, selected, opts.solver);
    fit.beta = refit_outcome(data, selected);
    return fit;
}

NuisanceFit fit_pbr_nuisances(const Dataset& data, const EstimatorOptions& opts) {
    const Penalties pen = resolve_penalties(data, opts);
    NuisanceFit fit;
    fit.method = NuisanceMethod::PBR;
    fit.gamma = solve_f1(data, pen.lambda_gamma, opts.solver);
    fit.beta = solve_f2(data, fit.gamma, pen.lambda_beta, opts.solver);
    return fit;
}

NuisanceFit fit_ds_pbr_nuisances(const Dataset& data, const NuisanceFit& pbr,
                                 const EstimatorOptions& opts) {
    const Penalties pen = resolve_penalties(data, opts);
    // The ridge level reuses the propensity penalty; at p = 0 any positive
    // value gives the same (slope-free) fit.
    const double ridge = pen.lambda_gamma > 0.0 ? pen.lambda_gamma : 1.0;
    const IndexSet selected = set_union(pbr.gamma.active_set, pbr.beta.active_set);
    return solve_ds_pbr(data, selected, ridge, opts.solver);
}

EstimateResult pbr_pipeline(const Dataset& data, const EstimatorOptions& opts) {
    return dr_estimate(data, fit_pbr_nuisances(data, opts), opts);
}

EstimateResult ds_pbr_pipeline(const Dataset& data, const EstimatorOptions& opts) {
    return dr_estimate(data, fit_ds_pbr_nuisances(data, fit_pbr_nuisances(data, opts), opts),
                       opts);
}

namespace {

// Lazily computed nuisance fits shared by the estimators of one suite run. A
// failed fit is remembered so that dependent estimators report the same error.
class NuisanceCache {
public:
    NuisanceCache(const Dataset& data, const EstimatorOptions& opts) : data_(data), opts_(opts) {}

    const NuisanceFit& mle() {
        return get(mle_, [&] { return fit_mle_nuisances(data_, opts_); });
    }
    const NuisanceFit& lasso() {
        return get(lasso_, [&] { return fit_lasso_nuisances(data_, opts_); });
    }
    const NuisanceFit& post_lasso() {
        return get(post_lasso_, [&] { return fit_post_lasso_nuisances(data_, lasso(), opts_); });
    }
    const NuisanceFit& ds_lasso() {
        return get(ds_lasso_, [&] { return fit_ds_lasso_nuisances(data_, lasso(), opts_); });
    }
    const NuisanceFit& pbr() {
        return get(pbr_, [&] { return fit_pbr_nuisances(data_, opts_); });
    }
    const NuisanceFit& ds_pbr() {
        return get(ds_pbr_, [&] { return fit_ds_pbr_nuisances(data_, pbr(), opts_); });
    }

    // Outcome-only and propensity-only pieces for the OR and IPTW families,
    // so that a failing partner model does not take them down.
    const OutcomeCoefficients& ols() {
        return get(ols_, [&] { return fit_ols(data_, true); });
    }
    const PropensityCoefficients& logit_mle() {
        return get(logit_mle_, [&] { return fit_logistic_mle(data_, opts_.solver); });
    }
    const OutcomeCoefficients& linear_lasso() {
        return get(linear_lasso_, [&] {
            return fit_linear_lasso(data_, resolve_penalties(data_, opts_).lambda_beta, true,
                                    opts_.solver);
        });
    }
    const PropensityCoefficients& logit_lasso() {
        return get(logit_lasso_, [&] {
            return fit_logistic_lasso(data_, resolve_penalties(data_, opts_).lambda_gamma,
                                      opts_.solver);
        });
    }

private:
    template <class T>
    using Slot = std::optional<std::variant<T, Error>>;

    template <class T, class F>
    const T& get(Slot<T>& slot, F&& compute) {
        if (!slot) {
            try {
                slot.emplace(std::in_place_index<0>, compute());
            } catch (const Error& e) {
                slot.emplace(std::in_place_index<1>, e);
            }
        }
        if (slot->index() == 1) throw std::get<1>(*slot);
        return std::get<0>(*slot);
    }

    const Dataset& data_;
    const EstimatorOptions& opts_;
    Slot<NuisanceFit> mle_, lasso_, post_lasso_, ds_lasso_, pbr_, ds_pbr_;
    Slot<OutcomeCoefficients> ols_, linear_lasso_;
    Slot<PropensityCoefficients> logit_mle_, logit_lasso_;
};

EstimateResult run_one(NuisanceCache& cache, const Dataset& data, EstimatorTag tag,
                       const EstimatorOptions& opts) {
    switch (tag) {
        case EstimatorTag::OrOls: {
            const OutcomeCoefficients& b = cache.ols();
            return or_estimate(data, b.beta, tag);
        }
        case EstimatorTag::OrLasso: {
            const OutcomeCoefficients& b = cache.linear_lasso();
            return or_estimate(data, b.beta, tag);
        }
        case EstimatorTag::IptwMle: return iptw_estimate(data, cache.logit_mle().gamma, opts, tag);
        case EstimatorTag::IptwLasso:
            return iptw_estimate(data, cache.logit_lasso().gamma, opts, tag);
        case EstimatorTag::PopIptwMle:
            return pop_iptw_estimate(data, cache.logit_mle().gamma, opts, tag);
        case EstimatorTag::PopIptwLasso:
            return pop_iptw_estimate(data, cache.logit_lasso().gamma, opts, tag);
        case EstimatorTag::Mle: return dr_estimate(data, cache.mle(), opts);
        case EstimatorTag::Lasso: return dr_estimate(data, cache.lasso(), opts);
        case EstimatorTag::PostLasso: return dr_estimate(data, cache.post_lasso(), opts);
        case EstimatorTag::DsLasso: return dr_estimate(data, cache.ds_lasso(), opts);
        case EstimatorTag::Pbr: return dr_estimate(data, cache.pbr(), opts);
        case EstimatorTag::DsPbr: return dr_estimate(data, cache.ds_pbr(), opts);
    }
    fail(ErrorKind::ConfigError, "unknown estimator");
}

}  // namespace

EstimateResult estimate(const Dataset& data, EstimatorTag tag, const EstimatorOptions& opts) {
    data.require_both_arms();
    NuisanceCache cache(data, opts);
    return run_one(cache, data, tag, opts);
}

std::map<EstimatorTag, SuiteEntry> comparator_suite(const Dataset& data,
                                                    const std::vector<EstimatorTag>& tags,
                                                    const EstimatorOptions& opts) {
    data.require_both_arms();
    NuisanceCache cache(data, opts);
    std::map<EstimatorTag, SuiteEntry> out;
    for (EstimatorTag tag : tags) {
        SuiteEntry entry;
        if (tag == EstimatorTag::Mle && data.n() <= data.p() + 1) {
            entry.status = EntryStatus::Skipped;
            entry.message = "skipped: DR-MLE requires n > p + 1";
            out[tag] = std::move(entry);
            continue;
        }
        try {
            entry.result = run_one(cache, data, tag, opts);
        } catch (const Error& e) {
            entry.status = EntryStatus::Failed;
            entry.error = e.kind();
            entry.message = e.what();
        }
        out[tag] = std::move(entry);
    }
    return out;
}

AteResult ate_estimate(const Dataset& data, EstimatorTag tag, const EstimatorOptions& opts) {
    AteResult out;
    out.arm1 = estimate(data, tag, opts);
    out.arm0 = estimate(data.with_treatment_flipped(), tag, opts);
    out.ate = out.arm1.mu_hat - out.arm0.mu_hat;
    const Vector diff = out.arm1.influence - out.arm0.influence;
    const double n = static_cast<double>(diff.size());
    const double mean = diff.mean();
    const double ss = (diff.array() - mean).square().sum();
    const double sd = diff.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    out.se = sd / std::sqrt(n);
    out.ci = {out.ate - kCiMultiplier * out.se, out.ate + kCiMultiplier * out.se};
    return out;
}

}  // namespace pbrdr
