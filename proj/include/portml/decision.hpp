#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace portml::decision {

struct ScoreSet {
    int64_t as_of = 0;
    std::string task_id;
    std::unordered_map<std::string, double> entries;  // container id -> score
};

struct RankedEntry {
    std::string container_id;
    int rank;  // 1-based
    double score;
};

using RankedList = std::vector<RankedEntry>;

// Score descending, ties by container id ascending; first min(k, n) entries.
RankedList rank_topk(const ScoreSet& scores, size_t k);

struct DwellChoice {
    int task_index = 0;  // 1..8
    int winning_rank = 0;
    double winning_score = 0;
    bool fallback = false;  // below every threshold; assigned by max margin
};

using DwellAssignment = std::map<std::string, DwellChoice>;

// Three-step rule: (1) per label select containers with score strictly above
// the label's threshold; (2) rank selections by score descending (ties by id);
// (3) multiply-selected containers take the label with the smallest rank
// number, rank ties broken by larger score-threshold margin then lower label
// index. Unselected containers fall back to the max-margin label, flagged.
DwellAssignment assign_dwell(const std::vector<ScoreSet>& score_sets,
                             const std::vector<double>& thresholds);

void write_ranked_list(const RankedList& list, const std::string& path);
void write_assignment(const DwellAssignment& a, const std::string& path);

}  // namespace portml::decision
