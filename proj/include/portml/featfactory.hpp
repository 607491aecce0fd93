#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "portml/ontology.hpp"

namespace portml::featfactory {

enum class Category { simple, simple_count, aggregate, difference, service, dwell, movement };
enum class EntityKey { none, consignee, chapter, shipping_line, route, cargo_type };
enum class Statistic { none, count, rate, mean, stddev, pct_change };

struct FeatureSpec {
    std::string name;
    Category category = Category::simple;
    EntityKey entity_key = EntityKey::none;
    int window_days = 0;       // required for windowed statistics
    Statistic statistic = Statistic::none;
    std::string field;         // simple features: column or "column:VALUE" one-hot
    int param = 0;             // dwell rate: category 1..8; difference: event kind index

    std::string key_string() const;  // stable serialization, feeds the schema hash
};

// The default feature set used by the pipeline: base variables plus windowed
// counts, service rates, dwell statistics, movement counts and trend features
// keyed by consignee, chapter, shipping line and route.
std::vector<FeatureSpec> default_specs(const std::vector<int>& windows = {7, 21, 42, 182});

struct FeatureMatrix {
    int64_t as_of = 0;
    std::vector<std::string> row_ids;       // cohort container ids, given order
    std::vector<std::string> column_names;  // feature columns incl. __missing indicators
    std::vector<double> values;             // row-major
    uint64_t schema_hash = 0;
    std::vector<FeatureSpec> specs;

    double at(size_t row, size_t col) const { return values[row * column_names.size() + col]; }
    size_t n_rows() const { return row_ids.size(); }
    size_t n_cols() const { return column_names.size(); }
};

uint64_t schema_hash_of(const std::vector<std::string>& column_names);

// Event streams indexed per entity key so windowed statistics are two binary
// searches. Built once per store; all queries censor at their own as_of.
class FeatureIndex {
public:
    explicit FeatureIndex(const ontology::OntologyStore& store);

    const ontology::OntologyStore& store() const { return *store_; }

    // Events of `kind` for entities with the given key value in
    // [as_of - window_days, as_of).
    int64_t rolling_count(EntityKey key, const std::string& key_value,
                          ontology::EventKind kind, int window_days, int64_t as_of) const;
    int64_t rolling_count_all(ontology::EventKind kind, int window_days, int64_t as_of) const;

    struct DwellStats {
        int64_t n = 0;      // exited containers in window
        double mean = 0;    // mean dwell days
        double stddev = 0;
        std::array<int64_t, 8> cat_counts{};
    };
    DwellStats dwell_stats(EntityKey key, const std::string& key_value, int window_days,
                           int64_t as_of) const;
    DwellStats dwell_stats_all(int window_days, int64_t as_of) const;

    std::string key_value_of(const ontology::OntologyEntity& e, EntityKey key) const;

private:
    struct KindTimes {
        std::array<std::vector<int64_t>, 4> by_kind;  // sorted event times
    };
    struct ExitRec {
        int64_t exit_at;
        double dwell_days;
        int category;
    };
    const ontology::OntologyStore* store_;
    std::array<std::unordered_map<std::string, KindTimes>, 5> key_events_;  // per EntityKey-1
    std::array<std::unordered_map<std::string, std::vector<ExitRec>>, 5> key_exits_;
    KindTimes global_events_;
    std::vector<ExitRec> global_exits_;

    static int kind_index(ontology::EventKind k) { return static_cast<int>(k); }
};

// One row per cohort container. Pre: each container's scheduled_arrival lies
// in [as_of, as_of + 24h). Missing histories are imputed with the global
// window statistic and flagged through companion __missing columns.
FeatureMatrix compute_matrix(const FeatureIndex& index, const std::vector<std::string>& cohort,
                             int64_t as_of, const std::vector<FeatureSpec>& specs,
                             bool enforce_cohort = true);

int64_t rolling_count(const ontology::OntologyStore& store, EntityKey key,
                      const std::string& key_value, ontology::EventKind kind,
                      int window_days, int64_t as_of);

// (count_recent - count_prior) / max(count_prior, 1) over two adjacent
// windows of spec.window_days ending at as_of.
double pct_change(const FeatureIndex& index, const FeatureSpec& spec,
                  const std::string& key_value, int64_t as_of);

struct LeakageFinding {
    std::string container_id;
    std::string column;
    double built_value;
    double censored_value;
};

struct AuditReport {
    std::vector<LeakageFinding> findings;
    bool clean() const { return findings.empty(); }
};

// Rebuilds the matrix from a store censored at matrix.as_of and diffs cells.
AuditReport leakage_audit(const FeatureMatrix& matrix, const ontology::OntologyStore& store);

void write_matrix(const FeatureMatrix& m, const std::string& path,
                  const std::string& manifest_path);

}  // namespace portml::featfactory
