#include "portml/hsclass.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "portml/csv.hpp"

namespace portml::hsclass {

int HsCatalog::section_of(int chapter) const {
    if (chapter < 1 || chapter > kNumChapters)
        throw std::out_of_range("chapter out of range: " + std::to_string(chapter));
    return chapters[chapter - 1].section;
}

const std::string& HsCatalog::definition_of(int chapter) const {
    if (chapter < 1 || chapter > kNumChapters)
        throw std::out_of_range("chapter out of range: " + std::to_string(chapter));
    return chapters[chapter - 1].definition;
}

HsCatalog load_catalog(const std::string& path) {
    auto t = csv::read_file(path);
    int c_ch = t.col("chapter"), c_sec = t.col("section"), c_def = t.col("definition");
    HsCatalog cat;
    cat.chapters.resize(kNumChapters);
    std::vector<bool> seen(kNumChapters + 1, false);
    for (const auto& r : t.rows) {
        ChapterEntry e;
        e.chapter = std::stoi(r[c_ch]);
        e.section = std::stoi(r[c_sec]);
        e.definition = r[c_def];
        if (e.chapter < 1 || e.chapter > kNumChapters)
            throw std::runtime_error("catalog chapter out of range");
        if (e.section < 1 || e.section > kNumSections)
            throw std::runtime_error("catalog section out of range");
        if (seen[e.chapter]) throw std::runtime_error("duplicate catalog chapter");
        seen[e.chapter] = true;
        cat.chapters[e.chapter - 1] = std::move(e);
    }
    for (int c = 1; c <= kNumChapters; ++c)
        if (!seen[c]) throw std::runtime_error("catalog missing chapter " + std::to_string(c));
    return cat;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char uc : text) {
        if (std::isalnum(uc)) {
            cur += static_cast<char>(std::toupper(uc));
        } else if (!cur.empty()) {
            if (cur.size() >= 2) out.push_back(cur);
            cur.clear();
        }
    }
    if (cur.size() >= 2) out.push_back(cur);
    return out;
}

ChapterVectorIndex build_index(const HsCatalog& catalog) {
    ChapterVectorIndex idx;
    idx.catalog = &catalog;

    std::vector<std::vector<std::string>> chapter_tokens(kNumChapters);
    for (int c = 0; c < kNumChapters; ++c) {
        if (catalog.chapters[c].definition.empty())
            throw std::runtime_error("empty definition for chapter " +
                                     std::to_string(c + 1));
        chapter_tokens[c] = tokenize(catalog.chapters[c].definition);
        if (chapter_tokens[c].empty())
            throw std::runtime_error("definition tokenizes to nothing for chapter " +
                                     std::to_string(c + 1));
    }

    // Vocabulary and document frequencies over the 97 definitions.
    std::vector<int> df;
    for (int c = 0; c < kNumChapters; ++c) {
        std::vector<std::string> uniq = chapter_tokens[c];
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (const auto& tok : uniq) {
            auto it = idx.vocabulary.find(tok);
            if (it == idx.vocabulary.end()) {
                idx.vocabulary.emplace(tok, static_cast<int>(df.size()));
                df.push_back(1);
            } else {
                df[it->second] += 1;
            }
        }
    }
    idx.idf.resize(df.size());
    for (size_t i = 0; i < df.size(); ++i)
        idx.idf[i] = std::log((1.0 + kNumChapters) / (1.0 + df[i])) + 1.0;

    idx.chapter_vectors.resize(kNumChapters);
    for (int c = 0; c < kNumChapters; ++c) {
        std::unordered_map<int, int> counts;
        for (const auto& tok : chapter_tokens[c]) counts[idx.vocabulary.at(tok)]++;
        std::vector<std::pair<int, double>> vec;
        vec.reserve(counts.size());
        double norm2 = 0;
        for (const auto& [ti, n] : counts) {
            double w = n * idx.idf[ti];
            vec.emplace_back(ti, w);
            norm2 += w * w;
        }
        double norm = std::sqrt(norm2);
        for (auto& [ti, w] : vec) w /= norm;
        std::sort(vec.begin(), vec.end());
        idx.chapter_vectors[c] = std::move(vec);
    }
    return idx;
}

std::optional<int> parse_explicit_code(const std::string& description) {
    // Accepts 4- or 6-digit codes ("8471", "847130") and dot-separated
    // subheadings ("8471.30"); chapter = leading two digits when in 1..97.
    const size_t n = description.size();
    auto is_digit = [&](size_t p) {
        return p < n && std::isdigit(static_cast<unsigned char>(description[p]));
    };
    size_t i = 0;
    while (i < n) {
        if (!is_digit(i)) { ++i; continue; }
        size_t j = i;
        while (is_digit(j)) ++j;
        size_t len = j - i;
        size_t run_end = j;
        bool ok = (len == 4 || len == 6);
        if (len == 4 && j < n && description[j] == '.' && is_digit(j + 1)) {
            size_t k = j + 1;
            while (is_digit(k)) ++k;
            if (k - (j + 1) == 2) { ok = true; run_end = k; }
            else ok = false;  // 4 digits '.' wrong-width tail is not a code
        }
        bool bounded_left =
            (i == 0) || !std::isalnum(static_cast<unsigned char>(description[i - 1]));
        bool bounded_right =
            (run_end == n) || !std::isalnum(static_cast<unsigned char>(description[run_end]));
        if (ok && bounded_left && bounded_right) {
            int chapter = (description[i] - '0') * 10 + (description[i + 1] - '0');
            if (chapter >= 1 && chapter <= kNumChapters) return chapter;
        }
        i = run_end + 1;
    }
    return std::nullopt;
}

Classification classify(const std::string& description, const ChapterVectorIndex& index,
                        double floor) {
    Classification out;
    if (auto ch = parse_explicit_code(description)) {
        out.chapter = *ch;
        out.section = index.catalog->section_of(*ch);
        out.method = Method::explicit_code;
        out.score = 1.0;
        return out;
    }

    auto tokens = tokenize(description);
    std::unordered_map<int, int> counts;
    for (const auto& tok : tokens) {
        auto it = index.vocabulary.find(tok);
        if (it != index.vocabulary.end()) counts[it->second]++;
    }
    if (counts.empty()) return out;  // unclassified, score 0

    std::vector<std::pair<int, double>> q;
    q.reserve(counts.size());
    double norm2 = 0;
    for (const auto& [ti, n] : counts) {
        double w = n * index.idf[ti];
        q.emplace_back(ti, w);
        norm2 += w * w;
    }
    double norm = std::sqrt(norm2);
    for (auto& [ti, w] : q) w /= norm;
    std::sort(q.begin(), q.end());

    int best = kUnclassified;
    double best_score = -1;
    for (int c = 0; c < kNumChapters; ++c) {
        const auto& v = index.chapter_vectors[c];
        double dot = 0;
        size_t a = 0, b = 0;
        while (a < q.size() && b < v.size()) {
            if (q[a].first < v[b].first) ++a;
            else if (q[a].first > v[b].first) ++b;
            else { dot += q[a].second * v[b].second; ++a; ++b; }
        }
        if (dot > best_score) { best_score = dot; best = c + 1; }
    }
    if (best_score < floor) return out;
    out.chapter = best;
    out.section = index.catalog->section_of(best);
    out.method = Method::tfidf;
    out.score = best_score;
    return out;
}

}  // namespace portml::hsclass
