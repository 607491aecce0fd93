#include "portml/decision.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "portml/csv.hpp"

namespace portml::decision {

RankedList rank_topk(const ScoreSet& scores, size_t k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (scores.entries.empty()) throw std::invalid_argument("empty score set");
    std::vector<std::pair<std::string, double>> rows(scores.entries.begin(),
                                                     scores.entries.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    RankedList out;
    size_t n = std::min(k, rows.size());
    out.reserve(n);
    for (size_t i = 0; i < n; ++i)
        out.push_back({rows[i].first, static_cast<int>(i + 1), rows[i].second});
    return out;
}

DwellAssignment assign_dwell(const std::vector<ScoreSet>& score_sets,
                             const std::vector<double>& thresholds) {
    if (score_sets.size() != 8 || thresholds.size() != 8)
        throw std::invalid_argument("assign_dwell needs 8 score sets and 8 thresholds");
    for (int t = 1; t < 8; ++t) {
        if (score_sets[t].entries.size() != score_sets[0].entries.size())
            throw std::invalid_argument("cohort mismatch across score sets");
        for (const auto& [id, s] : score_sets[0].entries)
            if (!score_sets[t].entries.count(id))
                throw std::invalid_argument("cohort mismatch: " + id + " missing in task " +
                                            std::to_string(t + 1));
    }

    // Step 1+2: per-label selection (strict >) and ranking.
    // rank_of[label] : container -> 1-based rank within selected set.
    std::vector<std::unordered_map<std::string, int>> rank_of(8);
    for (int t = 0; t < 8; ++t) {
        std::vector<std::pair<std::string, double>> selected;
        for (const auto& [id, s] : score_sets[t].entries)
            if (s > thresholds[t]) selected.emplace_back(id, s);
        std::sort(selected.begin(), selected.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        for (size_t i = 0; i < selected.size(); ++i)
            rank_of[t].emplace(selected[i].first, static_cast<int>(i + 1));
    }

    DwellAssignment out;
    for (const auto& [id, s0] : score_sets[0].entries) {
        DwellChoice best;
        bool found = false;
        for (int t = 0; t < 8; ++t) {
            auto it = rank_of[t].find(id);
            if (it == rank_of[t].end()) continue;
            double score = score_sets[t].entries.at(id);
            double margin = score - thresholds[t];
            bool better = false;
            if (!found) {
                better = true;
            } else if (it->second != best.winning_rank) {
                better = it->second < best.winning_rank;
            } else {
                double best_margin = best.winning_score - thresholds[best.task_index - 1];
                better = margin > best_margin;  // then lower label index = keep first
            }
            if (better) {
                best = {t + 1, it->second, score, false};
                found = true;
            }
        }
        if (!found) {
            // Fallback: label of maximum score - threshold, flagged.
            double best_margin = 0;
            for (int t = 0; t < 8; ++t) {
                double margin = score_sets[t].entries.at(id) - thresholds[t];
                if (t == 0 || margin > best_margin) {
                    best_margin = margin;
                    best = {t + 1, 0, score_sets[t].entries.at(id), true};
                }
            }
        }
        out.emplace(id, best);
    }
    return out;
}

void write_ranked_list(const RankedList& list, const std::string& path) {
    csv::Table t;
    t.header = {"container_id", "rank", "score"};
    char buf[40];
    for (const auto& e : list) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.score);
        t.rows.push_back({e.container_id, std::to_string(e.rank), buf});
    }
    csv::write_file(path, t);
}

void write_assignment(const DwellAssignment& a, const std::string& path) {
    csv::Table t;
    t.header = {"container_id", "label", "rank", "score", "fallback"};
    char buf[40];
    for (const auto& [id, c] : a) {
        std::snprintf(buf, sizeof(buf), "%.17g", c.winning_score);
        t.rows.push_back({id, "dt" + std::to_string(c.task_index),
                          std::to_string(c.winning_rank), buf, c.fallback ? "1" : "0"});
    }
    csv::write_file(path, t);
}

}  // namespace portml::decision
