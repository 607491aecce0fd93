#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace portml::linkage {

// Uppercase, collapse whitespace runs to single spaces, trim ends.
std::string normalize(const std::string& s);

struct TrigramProfile {
    std::string source_text;
    // Trigrams of the boundary-padded normalized text (two '\x01' sentinels
    // per end), packed 3 bytes per trigram; sorted, unique.
    std::vector<uint32_t> trigrams;

    static TrigramProfile from(const std::string& text);
};

// Jaccard coefficient over trigram sets. Both sets empty: 1 when the
// normalized texts are identical, else 0.
double trigram_similarity(const std::string& a, const std::string& b);
double profile_similarity(const TrigramProfile& a, const TrigramProfile& b);

// All (i, j), i < j, whose normalized first characters agree.
std::vector<std::pair<size_t, size_t>> block_candidates(const std::vector<std::string>& names);

struct Edge {
    size_t a, b;
    double score;
};

struct LinkageGraph {
    std::vector<std::string> nodes;
    std::vector<Edge> edges;  // undirected, score >= threshold, no self-edges
    double threshold;
};

LinkageGraph build_graph(const std::vector<std::string>& names, double threshold,
                         bool blocked = true);

struct ConsigneeResolution {
    std::vector<std::string> names;
    std::vector<int64_t> component_of;        // per input index
    std::vector<std::string> canonical_name;  // per component
    std::vector<double> max_edge_score;       // per input index; 0 for singletons

    int64_t n_components() const { return static_cast<int64_t>(canonical_name.size()); }
};

// Components via iterative depth-first traversal over the thresholded graph.
// Canonical name per component: longest member, ties lexicographic.
// Component ids are assigned in order of each component's smallest member
// name, so membership (and ids) are invariant under input permutation.
ConsigneeResolution resolve_consignees(const std::vector<std::string>& names,
                                       double threshold, bool blocked = true);

}  // namespace portml::linkage
