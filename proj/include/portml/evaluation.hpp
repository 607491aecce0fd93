#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "portml/decision.hpp"
#include "portml/featfactory.hpp"

namespace portml::evaluation {

// |top-k of ranked ∩ truth| / min(k, |ranked|)
double precision_at_k(const decision::RankedList& ranked,
                      const std::set<std::string>& truth, size_t k);

// |top-k of ranked ∩ truth| / |truth|; nullopt when truth is empty.
std::optional<double> recall_at_k(const decision::RankedList& ranked,
                                  const std::set<std::string>& truth, size_t k);

// Consignee trailing-window service rate before as_of; cold starts score 0.
decision::ScoreSet baseline1_scores(const featfactory::FeatureIndex& index,
                                    const std::vector<std::string>& cohort, int64_t as_of,
                                    int window_days = 182);

// 1.0 iff the consignee's trailing-window rate is strictly above the cutoff
// and the consignee had at least one container in the window.
decision::ScoreSet baseline2_flags(const featfactory::FeatureIndex& index,
                                   const std::vector<std::string>& cohort, int64_t as_of,
                                   int window_days = 182, double cutoff = 0.85);

// Uniform per-container scores keyed by (seed, container id) so that cohort
// permutations draw the same score per id.
decision::ScoreSet random_baseline(const std::vector<std::string>& cohort, uint64_t seed);

// M[i][j] = |Si ∩ Sj| / |Si ∪ Sj|; both empty -> 1, one empty -> 0.
std::array<std::array<double, 8>, 8> jaccard_matrix(
    const std::array<std::set<std::string>, 8>& selected_sets);

struct ImpactParams {
    double alpha = 0.75;  // unproductive move ratio
    double beta = 0.51;   // service-attributable fraction
    double delta_s = 0;   // avoidable fraction, service-related
    double delta_d = 0;   // avoidable fraction, dwell-informed
};

// alpha * beta * delta_s + alpha * (1 - beta) * delta_d
double impact_estimate(const ImpactParams& p);

struct KSweepRow {
    size_t k;
    double precision;
    std::optional<double> recall;
};

std::vector<KSweepRow> k_sweep(const decision::ScoreSet& scores,
                               const std::set<std::string>& truth,
                               const std::vector<size_t>& k_values);

// rows = true label (1..8), cols = assigned label; containers missing from
// truth are excluded and counted.
struct ConfusionResult {
    std::array<std::array<int64_t, 8>, 8> counts{};
    int64_t missing_truth = 0;
};

ConfusionResult assignment_confusion(
    const decision::DwellAssignment& assignment,
    const std::unordered_map<std::string, int>& truth_labels);

}  // namespace portml::evaluation
