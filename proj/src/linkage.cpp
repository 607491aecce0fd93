#include "portml/linkage.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <stdexcept>

namespace portml::linkage {

std::string normalize(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!out.empty()) pending_space = true;
        } else {
            if (pending_space) { out += ' '; pending_space = false; }
            out += static_cast<char>(std::toupper(c));
        }
    }
    return out;
}

TrigramProfile TrigramProfile::from(const std::string& text) {
    TrigramProfile p;
    p.source_text = text;
    std::string n = normalize(text);
    if (n.empty()) return p;
    std::string padded = "\x01\x01" + n + "\x01\x01";
    p.trigrams.reserve(padded.size() - 2);
    for (size_t i = 0; i + 2 < padded.size(); ++i) {
        uint32_t t = (static_cast<uint32_t>(static_cast<unsigned char>(padded[i])) << 16) |
                     (static_cast<uint32_t>(static_cast<unsigned char>(padded[i + 1])) << 8) |
                     static_cast<uint32_t>(static_cast<unsigned char>(padded[i + 2]));
        p.trigrams.push_back(t);
    }
    std::sort(p.trigrams.begin(), p.trigrams.end());
    p.trigrams.erase(std::unique(p.trigrams.begin(), p.trigrams.end()), p.trigrams.end());
    return p;
}

double profile_similarity(const TrigramProfile& a, const TrigramProfile& b) {
    if (a.trigrams.empty() && b.trigrams.empty())
        return normalize(a.source_text) == normalize(b.source_text) ? 1.0 : 0.0;
    size_t i = 0, j = 0, inter = 0;
    while (i < a.trigrams.size() && j < b.trigrams.size()) {
        if (a.trigrams[i] < b.trigrams[j]) ++i;
        else if (a.trigrams[i] > b.trigrams[j]) ++j;
        else { ++inter; ++i; ++j; }
    }
    size_t uni = a.trigrams.size() + b.trigrams.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double trigram_similarity(const std::string& a, const std::string& b) {
    return profile_similarity(TrigramProfile::from(a), TrigramProfile::from(b));
}

std::vector<std::pair<size_t, size_t>> block_candidates(const std::vector<std::string>& names) {
    std::map<char, std::vector<size_t>> blocks;
    for (size_t i = 0; i < names.size(); ++i) {
        std::string n = normalize(names[i]);
        if (n.empty()) continue;
        blocks[n[0]].push_back(i);
    }
    std::vector<std::pair<size_t, size_t>> pairs;
    for (const auto& [c, idx] : blocks)
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = a + 1; b < idx.size(); ++b)
                pairs.emplace_back(idx[a], idx[b]);
    return pairs;
}

LinkageGraph build_graph(const std::vector<std::string>& names, double threshold,
                         bool blocked) {
    if (threshold <= 0 || threshold > 1)
        throw std::invalid_argument("threshold must be in (0,1]");
    LinkageGraph g;
    g.nodes = names;
    g.threshold = threshold;

    std::vector<TrigramProfile> profiles;
    profiles.reserve(names.size());
    for (const auto& n : names) profiles.push_back(TrigramProfile::from(n));

    auto consider = [&](size_t i, size_t j) {
        double s = profile_similarity(profiles[i], profiles[j]);
        if (s >= threshold) g.edges.push_back({i, j, s});
    };
    if (blocked) {
        for (const auto& [i, j] : block_candidates(names)) consider(i, j);
    } else {
        for (size_t i = 0; i < names.size(); ++i)
            for (size_t j = i + 1; j < names.size(); ++j) consider(i, j);
    }
    return g;
}

ConsigneeResolution resolve_consignees(const std::vector<std::string>& names,
                                       double threshold, bool blocked) {
    LinkageGraph g = build_graph(names, threshold, blocked);
    const size_t n = names.size();

    std::vector<std::vector<size_t>> adj(n);
    std::vector<double> best_edge(n, 0.0);
    for (const auto& e : g.edges) {
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
        best_edge[e.a] = std::max(best_edge[e.a], e.score);
        best_edge[e.b] = std::max(best_edge[e.b], e.score);
    }

    std::vector<int64_t> comp(n, -1);
    std::vector<std::vector<size_t>> members;
    for (size_t start = 0; start < n; ++start) {
        if (comp[start] != -1) continue;
        int64_t id = static_cast<int64_t>(members.size());
        members.emplace_back();
        std::vector<size_t> stack{start};
        comp[start] = id;
        while (!stack.empty()) {
            size_t v = stack.back();
            stack.pop_back();
            members[id].push_back(v);
            for (size_t w : adj[v]) {
                if (comp[w] == -1) {
                    comp[w] = id;
                    stack.push_back(w);
                }
            }
        }
    }

    // Canonical name: longest member, ties lexicographic. Component ids are
    // renumbered by smallest member name for permutation invariance.
    std::vector<std::string> canon(members.size());
    std::vector<std::string> min_name(members.size());
    for (size_t c = 0; c < members.size(); ++c) {
        const std::string* best = nullptr;
        const std::string* smallest = nullptr;
        for (size_t v : members[c]) {
            const std::string& s = names[v];
            if (!best || s.size() > best->size() ||
                (s.size() == best->size() && s < *best))
                best = &s;
            if (!smallest || s < *smallest) smallest = &s;
        }
        canon[c] = *best;
        min_name[c] = *smallest;
    }
    std::vector<size_t> order(members.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return min_name[a] < min_name[b]; });
    std::vector<int64_t> newid(members.size());
    for (size_t r = 0; r < order.size(); ++r) newid[order[r]] = static_cast<int64_t>(r);

    ConsigneeResolution res;
    res.names = names;
    res.component_of.resize(n);
    for (size_t i = 0; i < n; ++i) res.component_of[i] = newid[comp[i]];
    res.canonical_name.resize(members.size());
    for (size_t c = 0; c < members.size(); ++c) res.canonical_name[newid[c]] = canon[c];
    res.max_edge_score = std::move(best_edge);
    return res;
}

}  // namespace portml::linkage
