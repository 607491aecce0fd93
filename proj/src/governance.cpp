#include "portml/governance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "portml/csv.hpp"
#include "portml/decision.hpp"
#include "portml/digest.hpp"
#include "portml/evaluation.hpp"
#include "portml/labeling.hpp"
#include "portml/timeutil.hpp"

namespace portml::governance {

namespace fs = std::filesystem;
using timeutil::kSecondsPerDay;

void TemporalConfig::validate() const {
    if (data_end <= data_start) throw std::invalid_argument("empty data span");
    if (train_window_days <= 0 || validation_months <= 0 || retrain_cadence_months <= 0 ||
        prediction_stride_days <= 0)
        throw std::invalid_argument("temporal durations must be positive");
    int64_t first_validate = data_start + int64_t(train_window_days) * kSecondsPerDay;
    if (timeutil::add_months(first_validate, validation_months) > data_end)
        throw std::invalid_argument("data span too short for a single split");
}

std::vector<TimeSplit> generate_splits(const TemporalConfig& cfg) {
    cfg.validate();
    std::vector<TimeSplit> out;
    int64_t v0 = cfg.data_start + int64_t(cfg.train_window_days) * kSecondsPerDay;
    for (int i = 0;; ++i) {
        int64_t vs = timeutil::add_months(v0, i * cfg.retrain_cadence_months);
        int64_t ve = timeutil::add_months(vs, cfg.validation_months);
        if (ve > cfg.data_end) break;
        TimeSplit s;
        s.split_id = "split_" + timeutil::format_date(vs);
        s.validate_start = vs;
        s.validate_end = ve;
        s.train_end = vs;
        s.train_start = vs - int64_t(cfg.train_window_days) * kSecondsPerDay;
        for (int64_t t = s.train_start; t < s.train_end;
             t += int64_t(cfg.prediction_stride_days) * kSecondsPerDay)
            s.train_points.push_back(t);
        for (int64_t t = s.validate_start; t < s.validate_end; t += kSecondsPerDay)
            s.validate_points.push_back(t);
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

bool in_set(int v, std::initializer_list<int> allowed) {
    for (int a : allowed)
        if (v == a) return true;
    return false;
}

bool near_any(double v, std::initializer_list<double> allowed) {
    for (double a : allowed)
        if (std::abs(v - a) < 1e-12) return true;
    return false;
}

}  // namespace

bool grid_point_allowed(const learners::HyperParams& hp) {
    using learners::Algorithm;
    switch (hp.algorithm) {
        case Algorithm::decision_tree:
            return in_set(hp.max_depth, {5, 10, 50}) &&
                   in_set(hp.min_samples_split, {10, 50, 100});
        case Algorithm::random_forest:
            return in_set(hp.n_estimators, {200, 300}) && in_set(hp.max_depth, {5, 10}) &&
                   in_set(hp.min_samples_split, {10, 50});
        case Algorithm::extra_trees:
            return hp.n_estimators == 500 && in_set(hp.max_depth, {5, 10}) &&
                   in_set(hp.min_samples_split, {50, 100});
        case Algorithm::scaled_logistic:
            return (hp.penalty == "l1" || hp.penalty == "l2") &&
                   near_any(hp.regularization_c, {0.0001, 0.01, 0.1, 1.0});
    }
    return false;
}

std::vector<learners::HyperParams> desk_grid(uint64_t seed) {
    using learners::Algorithm;
    std::vector<learners::HyperParams> g;
    learners::HyperParams tree;
    tree.algorithm = Algorithm::decision_tree;
    tree.max_depth = 10;
    tree.min_samples_split = 50;
    tree.seed = seed;
    g.push_back(tree);
    learners::HyperParams forest;
    forest.algorithm = Algorithm::random_forest;
    forest.n_estimators = 200;
    forest.max_depth = 10;
    forest.min_samples_split = 10;
    forest.seed = seed;
    g.push_back(forest);
    learners::HyperParams extra;
    extra.algorithm = Algorithm::extra_trees;
    extra.n_estimators = 500;
    extra.max_depth = 10;
    extra.min_samples_split = 50;
    extra.seed = seed;
    g.push_back(extra);
    learners::HyperParams logit;
    logit.algorithm = Algorithm::scaled_logistic;
    logit.penalty = "l2";
    logit.regularization_c = 1.0;
    logit.seed = seed;
    g.push_back(logit);
    return g;
}

std::vector<learners::HyperParams> full_grid(uint64_t seed) {
    using learners::Algorithm;
    std::vector<learners::HyperParams> g;
    for (int d : {5, 10, 50})
        for (int m : {10, 50, 100}) {
            learners::HyperParams hp;
            hp.algorithm = Algorithm::decision_tree;
            hp.max_depth = d;
            hp.min_samples_split = m;
            hp.seed = seed;
            g.push_back(hp);
        }
    for (int n : {200, 300})
        for (int d : {5, 10})
            for (int m : {10, 50}) {
                learners::HyperParams hp;
                hp.algorithm = Algorithm::random_forest;
                hp.n_estimators = n;
                hp.max_depth = d;
                hp.min_samples_split = m;
                hp.seed = seed;
                g.push_back(hp);
            }
    for (int d : {5, 10})
        for (int m : {50, 100}) {
            learners::HyperParams hp;
            hp.algorithm = Algorithm::extra_trees;
            hp.n_estimators = 500;
            hp.max_depth = d;
            hp.min_samples_split = m;
            hp.seed = seed;
            g.push_back(hp);
        }
    for (const char* p : {"l1", "l2"})
        for (double c : {0.0001, 0.01, 0.1, 1.0}) {
            learners::HyperParams hp;
            hp.algorithm = Algorithm::scaled_logistic;
            hp.penalty = p;
            hp.regularization_c = c;
            hp.seed = seed;
            g.push_back(hp);
        }
    return g;
}

uint64_t ExperimentConfig::digest() const {
    std::vector<std::string> parts;
    parts.push_back(std::to_string(temporal.data_start));
    parts.push_back(std::to_string(temporal.data_end));
    parts.push_back(std::to_string(temporal.train_window_days));
    parts.push_back(std::to_string(temporal.validation_months));
    parts.push_back(std::to_string(temporal.retrain_cadence_months));
    parts.push_back(std::to_string(temporal.prediction_stride_days));
    for (const auto& t : tasks) parts.push_back(t);
    for (const auto& hp : grid) parts.push_back(hp.describe());
    for (const auto& s : feature_specs) parts.push_back(s.key_string());
    parts.push_back(std::to_string(metric_k));
    parts.push_back(std::to_string(seed));
    return digest::fnv1a_list(parts);
}

std::vector<std::string> cohort_at(const ontology::OntologyStore& store, int64_t as_of) {
    std::vector<std::string> out;
    for (const auto& id : store.container_ids()) {
        int64_t sa = store.entity(id).base.scheduled_arrival;
        if (sa >= as_of && sa < as_of + 24 * 3600) out.push_back(id);
    }
    return out;
}

namespace {

struct TripleFiles {
    std::string triple_id, model_file, scores_file, metrics_file, record_file;
};

TripleFiles triple_files(const std::string& dir, const std::string& task,
                         const std::string& split, const std::string& grid_id) {
    TripleFiles f;
    f.triple_id = task + "__" + split + "__" + grid_id;
    f.model_file = dir + "/models/" + f.triple_id + ".json";
    f.scores_file = dir + "/scores/" + f.triple_id + ".csv";
    f.metrics_file = dir + "/metrics/" + f.triple_id + ".csv";
    f.record_file = dir + "/records/" + f.triple_id + ".csv";
    return f;
}

void append_registry_row(const std::string& dir, const RegistryRecord& rec) {
    std::string path = dir + "/registry.csv";
    bool fresh = !fs::exists(path);
    std::ofstream out(path, std::ios::app);
    if (fresh)
        out << "experiment_id,task_id,split_id,grid_id,model_file,scores_file,"
               "metrics_file,config_digest\n";
    out << rec.experiment_id << ',' << rec.task_id << ',' << rec.split_id << ','
        << rec.grid_id << ',' << rec.model_file << ',' << rec.scores_file << ','
        << rec.metrics_file << ',' << rec.config_digest << '\n';
}

}  // namespace

std::vector<RegistryRecord> read_registry(const std::string& registry_dir) {
    std::string path = registry_dir + "/registry.csv";
    std::vector<RegistryRecord> out;
    if (!fs::exists(path)) return out;
    auto t = csv::read_file(path);
    int c0 = t.col("experiment_id"), c1 = t.col("task_id"), c2 = t.col("split_id"),
        c3 = t.col("grid_id"), c4 = t.col("model_file"), c5 = t.col("scores_file"),
        c6 = t.col("metrics_file"), c7 = t.col("config_digest");
    for (const auto& r : t.rows)
        out.push_back({r[c0], r[c1], r[c2], r[c3], r[c4], r[c5], r[c6], r[c7]});
    return out;
}

std::vector<MetricRow> read_metrics(const std::string& metrics_file) {
    auto t = csv::read_file(metrics_file);
    int c_as = t.col("as_of"), c_n = t.col("n"), c_k = t.col("k"),
        c_p = t.col("precision"), c_r = t.col("recall"), c_a = t.col("auc");
    std::vector<MetricRow> out;
    for (const auto& r : t.rows) {
        MetricRow m;
        m.as_of = timeutil::parse_iso(r[c_as]);
        m.n = std::stoull(r[c_n]);
        m.k = std::stoull(r[c_k]);
        m.precision = std::stod(r[c_p]);
        m.recall = r[c_r].empty() ? std::nan("") : std::stod(r[c_r]);
        m.auc = r[c_a].empty() ? std::nan("") : std::stod(r[c_a]);
        out.push_back(m);
    }
    return out;
}

RunResult run_experiment(const ontology::OntologyStore& store, const ExperimentConfig& cfg) {
    if (cfg.grid.empty()) throw std::invalid_argument("empty hyperparameter grid");
    if (cfg.tasks.empty()) throw std::invalid_argument("no tasks");
    if (cfg.registry_dir.empty()) throw std::invalid_argument("registry_dir required");
    if (!cfg.allow_any_grid)
        for (const auto& hp : cfg.grid)
            if (!grid_point_allowed(hp))
                throw std::invalid_argument("grid point outside the allowed sets: " +
                                            hp.describe() +
                                            " (use allow_any_grid to override)");

    fs::create_directories(cfg.registry_dir + "/models");
    fs::create_directories(cfg.registry_dir + "/scores");
    fs::create_directories(cfg.registry_dir + "/metrics");

    RunResult result;
    std::string config_digest = digest::hex(cfg.digest());
    result.experiment_id = "exp_" + config_digest;

    std::set<std::string> done;
    for (const auto& rec : read_registry(cfg.registry_dir))
        done.insert(rec.task_id + "__" + rec.split_id + "__" + rec.grid_id);

    auto splits = generate_splits(cfg.temporal);
    featfactory::FeatureIndex index(store);

    for (const auto& split : splits) {
        // Gather training rows once per split; labels matured at
        // validate_start so no training label looks across the boundary.
        std::vector<featfactory::FeatureMatrix> train_mats;
        std::vector<std::vector<labeling::LabelVector>> train_labels;
        bool any_cohort = false;
        bool audited = false;
        for (int64_t t : split.train_points) {
            auto cohort = cohort_at(store, t);
            if (cohort.empty()) continue;
            any_cohort = true;
            auto X = featfactory::compute_matrix(index, cohort, t, cfg.feature_specs);
            if (cfg.audit_leakage && !audited) {
                auto report = featfactory::leakage_audit(X, store);
                result.leakage_findings += report.findings.size();
                audited = true;
            }
            train_labels.push_back(
                labeling::build_labels(store, cohort, t, cfg.tasks, split.validate_start));
            train_mats.push_back(std::move(X));
        }
        if (!any_cohort)
            throw std::runtime_error("empty cohort at every training prediction point of " +
                                     split.split_id);

        for (const auto& hp_base : cfg.grid) {
            for (size_t ti = 0; ti < cfg.tasks.size(); ++ti) {
                const std::string& task = cfg.tasks[ti];
                auto files = triple_files(cfg.registry_dir, task, split.split_id,
                                          hp_base.describe());
                if (done.count(files.triple_id)) {
                    ++result.skipped_triples;
                    continue;
                }

                // Assemble the training set for this task.
                featfactory::FeatureMatrix X;
                std::vector<int> y;
                for (size_t mi = 0; mi < train_mats.size(); ++mi) {
                    const auto& m = train_mats[mi];
                    const auto& lv = train_labels[mi][ti];
                    if (X.column_names.empty()) {
                        X.column_names = m.column_names;
                        X.schema_hash = m.schema_hash;
                        X.specs = m.specs;
                        X.as_of = m.as_of;
                    }
                    for (size_t r = 0; r < m.n_rows(); ++r) {
                        auto l = lv.entries.at(m.row_ids[r]);
                        if (l == labeling::Label::undetermined) continue;
                        X.row_ids.push_back(m.row_ids[r]);
                        X.values.insert(X.values.end(),
                                        m.values.begin() + r * m.n_cols(),
                                        m.values.begin() + (r + 1) * m.n_cols());
                        y.push_back(l == labeling::Label::positive ? 1 : 0);
                    }
                }
                if (y.empty())
                    throw std::runtime_error("no determined training labels for " +
                                             files.triple_id);

                auto hp = hp_base;
                auto model = learners::train(X, y, hp);
                model.split_id = split.split_id;
                model.save(files.model_file);

                // Score and evaluate every validation prediction point.
                std::ofstream sf(files.scores_file);
                sf << "as_of,container_id,score,label\n";
                std::ofstream mf(files.metrics_file);
                mf << "as_of,n,k,precision,recall,auc\n";
                char buf[40];
                for (int64_t v : split.validate_points) {
                    auto cohort = cohort_at(store, v);
                    if (cohort.empty()) continue;
                    auto Xv = featfactory::compute_matrix(index, cohort, v,
                                                          cfg.feature_specs);
                    auto scores = model.predict(Xv);
                    auto labels = labeling::build_labels(store, cohort, v, {task},
                                                         cfg.temporal.data_end)[0];

                    decision::ScoreSet ss;
                    ss.as_of = v;
                    ss.task_id = task;
                    std::set<std::string> truth;
                    std::vector<double> det_scores;
                    std::vector<int> det_labels;
                    for (size_t r = 0; r < cohort.size(); ++r) {
                        auto l = labels.entries.at(cohort[r]);
                        const char* ls = l == labeling::Label::positive
                                             ? "1"
                                             : (l == labeling::Label::negative ? "0" : "NA");
                        std::snprintf(buf, sizeof(buf), "%.17g", scores[r]);
                        sf << timeutil::format_iso(v) << ',' << cohort[r] << ',' << buf
                           << ',' << ls << '\n';
                        if (l == labeling::Label::undetermined) continue;
                        ss.entries[cohort[r]] = scores[r];
                        det_scores.push_back(scores[r]);
                        det_labels.push_back(l == labeling::Label::positive ? 1 : 0);
                        if (l == labeling::Label::positive) truth.insert(cohort[r]);
                    }
                    if (ss.entries.empty()) continue;

                    size_t k = std::min(cfg.metric_k, ss.entries.size());
                    auto ranked = decision::rank_topk(ss, k);
                    double prec = evaluation::precision_at_k(ranked, truth, k);
                    auto rec = evaluation::recall_at_k(ranked, truth, k);
                    double auc = std::nan("");
                    if (!truth.empty() && truth.size() < ss.entries.size())
                        auc = learners::roc_curve(det_scores, det_labels).auc;

                    mf << timeutil::format_iso(v) << ',' << ss.entries.size() << ',' << k
                       << ',';
                    std::snprintf(buf, sizeof(buf), "%.17g", prec);
                    mf << buf << ',';
                    if (rec) {
                        std::snprintf(buf, sizeof(buf), "%.17g", *rec);
                        mf << buf;
                    }
                    mf << ',';
                    if (!std::isnan(auc)) {
                        std::snprintf(buf, sizeof(buf), "%.17g", auc);
                        mf << buf;
                    }
                    mf << '\n';
                }
                sf.close();
                mf.close();

                RegistryRecord rec{result.experiment_id, task,          split.split_id,
                                   hp_base.describe(),   files.model_file,
                                   files.scores_file,    files.metrics_file,
                                   config_digest};
                append_registry_row(cfg.registry_dir, rec);
                done.insert(files.triple_id);
                ++result.completed_triples;
            }
        }
    }
    return result;
}

namespace {

// Simplicity order for tie-breaking: fewer estimators, then shallower.
std::pair<int, int> complexity_of(const std::string& grid_id) {
    // grid ids look like "random_forest_d10_m50_n200" or
    // "scaled_logistic_l2_C1.000000"
    int n_estimators = 1, depth = 0;
    auto find_int = [&](const std::string& tag) -> std::optional<int> {
        auto p = grid_id.find(tag);
        if (p == std::string::npos) return std::nullopt;
        return std::atoi(grid_id.c_str() + p + tag.size());
    };
    if (auto n = find_int("_n")) n_estimators = *n;
    if (auto d = find_int("_d")) depth = *d;
    return {n_estimators, depth};
}

}  // namespace

std::vector<Selection> select_best(const std::string& registry_dir,
                                   const std::string& task_id, const std::string& metric) {
    auto registry = read_registry(registry_dir);
    std::vector<RegistryRecord> mine;
    for (const auto& r : registry)
        if (r.task_id == task_id) mine.push_back(r);
    if (mine.empty())
        throw std::runtime_error("no completed experiments for task " + task_id);

    std::set<std::string> split_ids;
    for (const auto& r : mine) split_ids.insert(r.split_id);

    std::vector<Selection> out;
    for (const auto& split : split_ids) {
        std::optional<Selection> best;
        for (const auto& r : mine) {
            if (r.split_id != split) continue;
            auto rows = read_metrics(r.metrics_file);
            double sum = 0;
            size_t n = 0;
            for (const auto& m : rows) {
                double v = metric == "precision_at_k"
                               ? m.precision
                               : (metric == "recall_at_k" ? m.recall : m.auc);
                if (std::isnan(v)) continue;
                sum += v;
                ++n;
            }
            double mean = n ? sum / n : -1;
            bool take = false;
            if (!best) take = true;
            else if (mean > best->mean_metric) take = true;
            else if (mean == best->mean_metric &&
                     complexity_of(r.grid_id) < complexity_of(best->record.grid_id))
                take = true;
            if (take) best = Selection{split, r, mean};
        }
        out.push_back(*best);
    }
    return out;
}

bool registry_integrity_ok(const std::string& registry_dir, std::string* problem) {
    for (const auto& r : read_registry(registry_dir)) {
        for (const auto& f : {r.model_file, r.scores_file, r.metrics_file}) {
            if (!fs::exists(f)) {
                if (problem) *problem = "missing file: " + f;
                return false;
            }
        }
    }
    return true;
}

}  // namespace portml::governance
