#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "portml/featfactory.hpp"
#include "portml/learners.hpp"
#include "portml/ontology.hpp"

namespace portml::governance {

struct TemporalConfig {
    int64_t data_start = 0;
    int64_t data_end = 0;
    int train_window_days = 182;       // "six months"
    int validation_months = 1;         // calendar months
    int retrain_cadence_months = 1;
    int prediction_stride_days = 1;    // daily prediction points; stride for speed

    void validate() const;
};

struct TimeSplit {
    std::string split_id;
    int64_t train_start = 0;
    int64_t train_end = 0;      // == validate_start
    int64_t validate_start = 0;
    int64_t validate_end = 0;
    std::vector<int64_t> train_points;     // daily (strided) within the train window
    std::vector<int64_t> validate_points;  // daily within the validation window
};

// Validation windows tile [data_start + train_window, data_end) at the
// retrain cadence; each split's train window immediately precedes it.
std::vector<TimeSplit> generate_splits(const TemporalConfig& cfg);

// Appendix-style grid constraints. Desk grid: one configuration per
// algorithm family; full grid: the complete cross product.
std::vector<learners::HyperParams> desk_grid(uint64_t seed);
std::vector<learners::HyperParams> full_grid(uint64_t seed);
bool grid_point_allowed(const learners::HyperParams& hp);

struct ExperimentConfig {
    TemporalConfig temporal;
    std::vector<std::string> tasks;
    std::vector<learners::HyperParams> grid;
    std::vector<featfactory::FeatureSpec> feature_specs;
    size_t metric_k = 50;
    uint64_t seed = 1;
    std::string registry_dir;
    bool allow_any_grid = false;  // override Appendix constraints
    bool audit_leakage = true;

    uint64_t digest() const;
};

struct RunResult {
    std::string experiment_id;
    size_t completed_triples = 0;
    size_t skipped_triples = 0;  // already present from a previous run
    size_t leakage_findings = 0;
};

// Runs every (task, split, grid point): trains on strided prediction points
// of the train window, scores every validation prediction point, persists
// model + scores + metrics under registry_dir. Completed triples are skipped
// on rerun.
RunResult run_experiment(const ontology::OntologyStore& store, const ExperimentConfig& cfg);

struct MetricRow {
    int64_t as_of;
    size_t n;
    size_t k;
    double precision;
    double recall;  // NaN when undefined
    double auc;     // NaN when undefined
};

struct RegistryRecord {
    std::string experiment_id;
    std::string task_id;
    std::string split_id;
    std::string grid_id;
    std::string model_file;
    std::string scores_file;
    std::string metrics_file;
    std::string config_digest;
};

std::vector<RegistryRecord> read_registry(const std::string& registry_dir);
std::vector<MetricRow> read_metrics(const std::string& metrics_file);

struct Selection {
    std::string split_id;
    RegistryRecord record;
    double mean_metric;
};

// Per validation split, the grid point maximizing the mean of the metric over
// that split's prediction points. metric: "precision_at_k" | "recall_at_k" |
// "auc". Ties go to the simpler model (fewer estimators, then shallower).
std::vector<Selection> select_best(const std::string& registry_dir,
                                   const std::string& task_id, const std::string& metric);

// Every metric/scores row must reference an existing model file.
bool registry_integrity_ok(const std::string& registry_dir, std::string* problem = nullptr);

// Cohort at a prediction point: containers scheduled to arrive within 24h.
std::vector<std::string> cohort_at(const ontology::OntologyStore& store, int64_t as_of);

}  // namespace portml::governance
