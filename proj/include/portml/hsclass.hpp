#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace portml::hsclass {

constexpr int kNumChapters = 97;
constexpr int kNumSections = 21;
constexpr int kUnclassified = 0;

struct ChapterEntry {
    int chapter = 0;  // 1..97
    int section = 0;  // 1..21
    std::string definition;
};

struct HsCatalog {
    std::vector<ChapterEntry> chapters;  // exactly 97, ordered by chapter number

    int section_of(int chapter) const;
    const std::string& definition_of(int chapter) const;
};

HsCatalog load_catalog(const std::string& path);

// Uppercase, split on non-alphanumeric, drop tokens shorter than 2.
std::vector<std::string> tokenize(const std::string& text);

struct ChapterVectorIndex {
    std::unordered_map<std::string, int> vocabulary;  // token -> index
    std::vector<double> idf;                          // smoothed: ln((1+N)/(1+df)) + 1
    // chapter_vectors[c] holds (token index, weight) pairs, L2-normalized.
    std::vector<std::vector<std::pair<int, double>>> chapter_vectors;
    const HsCatalog* catalog = nullptr;
};

ChapterVectorIndex build_index(const HsCatalog& catalog);

enum class Method { explicit_code, tfidf, unclassified };

struct Classification {
    int chapter = kUnclassified;
    int section = kUnclassified;
    Method method = Method::unclassified;
    double score = 0.0;  // cosine similarity; 1.0 for explicit codes
};

// Recognizes 4- or 6-digit HS code tokens (dot-separated subheadings allowed)
// and returns the chapter when the leading two digits fall in 1..97.
std::optional<int> parse_explicit_code(const std::string& description);

Classification classify(const std::string& description, const ChapterVectorIndex& index,
                        double floor = 0.05);

}  // namespace portml::hsclass
