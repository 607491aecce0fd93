#include "portml/evaluation.hpp"

#include <algorithm>
#include <stdexcept>

#include "portml/digest.hpp"
#include "portml/rng.hpp"

namespace portml::evaluation {

using ontology::EventKind;

double precision_at_k(const decision::RankedList& ranked,
                      const std::set<std::string>& truth, size_t k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (ranked.empty()) throw std::invalid_argument("empty ranked list");
    size_t denom = std::min(k, ranked.size());
    size_t hits = 0;
    for (size_t i = 0; i < denom; ++i)
        if (truth.count(ranked[i].container_id)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(denom);
}

std::optional<double> recall_at_k(const decision::RankedList& ranked,
                                  const std::set<std::string>& truth, size_t k) {
    if (truth.empty()) return std::nullopt;
    size_t top = std::min(k, ranked.size());
    size_t hits = 0;
    for (size_t i = 0; i < top; ++i)
        if (truth.count(ranked[i].container_id)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

double consignee_rate(const featfactory::FeatureIndex& index,
                      const ontology::OntologyEntity& e, int64_t as_of, int window_days,
                      int64_t* arrivals_out) {
    std::string key = index.key_value_of(e, featfactory::EntityKey::consignee);
    int64_t arr = index.rolling_count(featfactory::EntityKey::consignee, key,
                                      EventKind::arrival, window_days, as_of);
    if (arrivals_out) *arrivals_out = arr;
    if (arr == 0) return 0.0;
    int64_t svc = index.rolling_count(featfactory::EntityKey::consignee, key,
                                      EventKind::service, window_days, as_of);
    return static_cast<double>(svc) / static_cast<double>(arr);
}

}  // namespace

decision::ScoreSet baseline1_scores(const featfactory::FeatureIndex& index,
                                    const std::vector<std::string>& cohort, int64_t as_of,
                                    int window_days) {
    decision::ScoreSet out;
    out.as_of = as_of;
    out.task_id = "service";
    for (const auto& id : cohort) {
        const auto& e = index.store().entity(id);
        out.entries[id] = consignee_rate(index, e, as_of, window_days, nullptr);
    }
    return out;
}

decision::ScoreSet baseline2_flags(const featfactory::FeatureIndex& index,
                                   const std::vector<std::string>& cohort, int64_t as_of,
                                   int window_days, double cutoff) {
    decision::ScoreSet out;
    out.as_of = as_of;
    out.task_id = "service";
    for (const auto& id : cohort) {
        const auto& e = index.store().entity(id);
        int64_t arrivals = 0;
        double rate = consignee_rate(index, e, as_of, window_days, &arrivals);
        out.entries[id] = (arrivals >= 1 && rate > cutoff) ? 1.0 : 0.0;
    }
    return out;
}

decision::ScoreSet random_baseline(const std::vector<std::string>& cohort, uint64_t seed) {
    decision::ScoreSet out;
    out.task_id = "random";
    for (const auto& id : cohort) {
        rng::Rng r(seed ^ digest::fnv1a(id));
        out.entries[id] = r.u01();
    }
    return out;
}

std::array<std::array<double, 8>, 8> jaccard_matrix(
    const std::array<std::set<std::string>, 8>& sets) {
    std::array<std::array<double, 8>, 8> m{};
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            if (i == j) { m[i][j] = 1.0; continue; }
            const auto& a = sets[i];
            const auto& b = sets[j];
            if (a.empty() && b.empty()) { m[i][j] = 1.0; continue; }
            size_t inter = 0;
            for (const auto& x : a) inter += b.count(x);
            size_t uni = a.size() + b.size() - inter;
            m[i][j] = static_cast<double>(inter) / static_cast<double>(uni);
        }
    }
    return m;
}

double impact_estimate(const ImpactParams& p) {
    for (double v : {p.alpha, p.beta, p.delta_s, p.delta_d})
        if (v < 0 || v > 1) throw std::invalid_argument("impact parameter out of [0,1]");
    return p.alpha * p.beta * p.delta_s + p.alpha * (1 - p.beta) * p.delta_d;
}

std::vector<KSweepRow> k_sweep(const decision::ScoreSet& scores,
                               const std::set<std::string>& truth,
                               const std::vector<size_t>& k_values) {
    if (k_values.empty()) throw std::invalid_argument("k_values empty");
    std::vector<KSweepRow> out;
    auto full = decision::rank_topk(scores, scores.entries.size());
    for (size_t k : k_values)
        out.push_back({k, precision_at_k(full, truth, k), recall_at_k(full, truth, k)});
    return out;
}

ConfusionResult assignment_confusion(
    const decision::DwellAssignment& assignment,
    const std::unordered_map<std::string, int>& truth_labels) {
    ConfusionResult res;
    for (const auto& [id, choice] : assignment) {
        auto it = truth_labels.find(id);
        if (it == truth_labels.end()) { ++res.missing_truth; continue; }
        int t = it->second, a = choice.task_index;
        if (t < 1 || t > 8 || a < 1 || a > 8)
            throw std::invalid_argument("label out of range in confusion input");
        res.counts[t - 1][a - 1] += 1;
    }
    return res;
}

}  // namespace portml::evaluation
