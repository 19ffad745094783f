#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pbrdr/dataset.hpp"
#include "pbrdr/error.hpp"
#include "pbrdr/solvers.hpp"

namespace pbrdr {

enum class EstimatorTag {
    OrOls,         // mean of OLS fitted values
    OrLasso,       // mean of lasso fitted values
    IptwMle,       // Horvitz-Thompson with MLE propensity
    IptwLasso,
    PopIptwMle,    // Hajek-normalised IPTW with MLE propensity
    PopIptwLasso,
    Mle,           // DR with MLE/OLS nuisances
    Lasso,         // DR with lasso nuisances
    PostLasso,     // DR with per-model post-lasso refits
    DsLasso,       // DR with refits on the union of both selected sets
    Pbr,           // DR with penalised bias-reduced nuisances
    DsPbr,         // DR with bias-reduced refits on the union of P-BR selections
};

std::string_view tag_name(EstimatorTag tag);
// Case-insensitive; accepts the names produced by tag_name.
std::optional<EstimatorTag> parse_tag(std::string_view name);
const std::vector<EstimatorTag>& all_tags();
// The ten estimators tabulated in the simulation study.
const std::vector<EstimatorTag>& default_roster();
std::vector<EstimatorTag> sorted_by_name(std::vector<EstimatorTag> tags);

struct EstimateResult {
    double mu_hat = 0.0;
    Vector influence;
    double sigma_hat = 0.0;
    double se = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
    EstimatorTag estimator = EstimatorTag::Pbr;
    // Set for the OR and IPTW families: their sample-SD standard error ignores
    // nuisance estimation and is not asymptotically valid.
    bool naive_se = false;
    IndexSet active_gamma;
    IndexSet active_beta;
};

struct AteResult {
    double ate = 0.0;
    double se = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
    EstimateResult arm1;
    EstimateResult arm0;
};

struct EstimatorOptions {
    SolverOptions solver;
    std::optional<Penalties> penalties;  // default_penalties(n, p) when empty
    double positivity_threshold = 1e-6;
    // Clip treated-unit propensities at the threshold instead of failing.
    bool clip_propensity = false;
};

inline constexpr double kCiMultiplier = 1.96;

// U_i = m_i + A_i / pi_i (Y_i - m_i).
Vector influence_values(const Dataset& data, const NuisanceFit& fit,
                        const EstimatorOptions& opts = {});

// Mean, sample SD (divisor n - 1), standard error and 95% interval of U.
EstimateResult summarize_influence(Vector influence, EstimatorTag tag);

EstimateResult dr_estimate(const Dataset& data, const NuisanceFit& fit,
                           const EstimatorOptions& opts = {});
EstimateResult or_estimate(const Dataset& data, const Vector& beta,
                           EstimatorTag tag = EstimatorTag::OrOls);
EstimateResult iptw_estimate(const Dataset& data, const Vector& gamma,
                             const EstimatorOptions& opts = {},
                             EstimatorTag tag = EstimatorTag::IptwMle);
EstimateResult pop_iptw_estimate(const Dataset& data, const Vector& gamma,
                                 const EstimatorOptions& opts = {},
                                 EstimatorTag tag = EstimatorTag::PopIptwMle);

Penalties resolve_penalties(const Dataset& data, const EstimatorOptions& opts);

NuisanceFit fit_mle_nuisances(const Dataset& data, const EstimatorOptions& opts = {});
NuisanceFit fit_lasso_nuisances(const Dataset& data, const EstimatorOptions& opts = {});
NuisanceFit fit_post_lasso_nuisances(const Dataset& data, const NuisanceFit& lasso,
                                     const EstimatorOptions& opts = {});
NuisanceFit fit_ds_lasso_nuisances(const Dataset& data, const NuisanceFit& lasso,
                                   const EstimatorOptions& opts = {});
NuisanceFit fit_pbr_nuisances(const Dataset& data, const EstimatorOptions& opts = {});
NuisanceFit fit_ds_pbr_nuisances(const Dataset& data, const NuisanceFit& pbr,
                                 const EstimatorOptions& opts = {});

// Penalties -> solve_f1 -> solve_f2 -> DR plug-in.
EstimateResult pbr_pipeline(const Dataset& data, const EstimatorOptions& opts = {});
// P-BR selections -> union -> solve_ds_pbr -> DR plug-in.
EstimateResult ds_pbr_pipeline(const Dataset& data, const EstimatorOptions& opts = {});

// Runs a single estimator; throws the first nuisance-fit error.
EstimateResult estimate(const Dataset& data, EstimatorTag tag, const EstimatorOptions& opts = {});

enum class EntryStatus { Ok, Failed, Skipped };

struct SuiteEntry {
    EntryStatus status = EntryStatus::Ok;
    std::optional<EstimateResult> result;
    std::optional<ErrorKind> error;
    std::string message;
};

// Every requested estimator, sharing nuisance fits; failures are recorded per
// entry. The DR-MLE entry is skipped when n <= p + 1.
std::map<EstimatorTag, SuiteEntry> comparator_suite(const Dataset& data,
                                                    const std::vector<EstimatorTag>& tags,
                                                    const EstimatorOptions& opts = {});

// E{Y(1)} - E{Y(0)}; the control arm refits every nuisance on 1 - A.
AteResult ate_estimate(const Dataset& data, EstimatorTag tag, const EstimatorOptions& opts = {});

}  // namespace pbrdr
