// portml: container-terminal predictive pipeline driver.
//
// Subcommands run individual stages against a workspace directory; `all`
// chains them end to end and writes a report bundle. Every stage stamps its
// outputs with the digest of the resolved configuration so artifacts can be
// traced back to the exact settings that produced them.
//
// Exit codes: 0 success, 2 usage error, 3 invalid configuration,
// 4 missing upstream artifact, 5 stage failure.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "portml/csv.hpp"
#include "portml/decision.hpp"
#include "portml/digest.hpp"
#include "portml/evaluation.hpp"
#include "portml/featfactory.hpp"
#include "portml/governance.hpp"
#include "portml/hsclass.hpp"
#include "portml/labeling.hpp"
#include "portml/learners.hpp"
#include "portml/linkage.hpp"
#include "portml/ontology.hpp"
#include "portml/synthworld.hpp"
#include "portml/timeutil.hpp"

namespace fs = std::filesystem;
using namespace portml;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitMissing = 4;
constexpr int kExitStage = 5;

struct MissingArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config ---

// Flat key-value settings grouped by [section]; values addressed as
// "section.key". Command-line --set overrides win over the file.
class Settings {
public:
    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::string line, section;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[' && line.back() == ']') {
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (section.empty() || key.empty())
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": key outside a [section]");
            values_[section + "." + key] = val;
        }
    }

    void apply_override(const std::string& kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || kv.find('.') == std::string::npos || eq == 0)
            throw ConfigError("--set expects section.key=value, got: " + kv);
        values_[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    }

    std::string get(const std::string& key, const std::string& def) const {
        auto it = values_.find(key);
        return it == values_.end() ? def : it->second;
    }
    double get_double(const std::string& key, double def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError("bad number for " + key + ": " + it->second);
        }
    }
    int64_t get_int(const std::string& key, int64_t def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            size_t pos = 0;
            int64_t v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError("bad integer for " + key + ": " + it->second);
        }
    }
    bool get_bool(const std::string& key, bool def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (it->second == "1" || it->second == "true") return true;
        if (it->second == "0" || it->second == "false") return false;
        throw ConfigError("bad boolean for " + key + ": " + it->second);
    }
    int64_t get_date(const std::string& key, const std::string& def) const {
        std::string s = get(key, def);
        try {
            return timeutil::parse_iso(s);
        } catch (const std::exception& e) {
            throw ConfigError("bad date for " + key + ": " + e.what());
        }
    }
    std::vector<std::string> get_list(const std::string& key, const std::string& def) const {
        std::string s = get(key, def);
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    // Digest over the fully resolved sorted key=value list (std::map keeps
    // the iteration order stable).
    std::string digest() const {
        std::vector<std::string> parts;
        for (const auto& [k, v] : values_) parts.push_back(k + "=" + v);
        return digest::hex(digest::fnv1a_list(parts));
    }

    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

private:
    std::map<std::string, std::string> values_;
};

struct Ctx {
    Settings cfg;
    std::string workspace;
    bool full_grid = false;

    std::string path(const std::string& rel) const { return workspace + "/" + rel; }

    void require(const std::string& rel, const std::string& producer) const {
        if (!fs::exists(path(rel)))
            throw MissingArtifact("missing artifact " + path(rel) + "; run `" + producer +
                                  "` first");
    }

    // Append-safe stamp: one file per stage holding the config digest and the
    // digests of the stage's outputs.
    void stamp(const std::string& stage, const std::vector<std::string>& outputs) const {
        fs::create_directories(path("stamps"));
        std::ofstream out(path("stamps/" + stage + ".txt"));
        out << "config_digest=" << cfg.digest() << "\n";
        for (const auto& rel : outputs)
            out << rel << "=" << digest::hex(digest::file_digest(path(rel))) << "\n";
    }
};

// ---------------------------------------------------------------- stages ---

synthworld::WorldConfig world_config(const Ctx& ctx) {
    synthworld::WorldConfig w;
    const auto& c = ctx.cfg;
    w.seed = static_cast<uint64_t>(c.get_int("world.seed", 7));
    w.n_containers = c.get_int("world.n_containers", 4000);
    w.start_date = c.get_date("world.start_date", "2020-01-01");
    w.end_date = c.get_date("world.end_date", "2021-01-01");
    w.n_consignees = c.get_int("world.n_consignees", 200);
    w.variant_rate = c.get_double("world.variant_rate", 0.3);
    w.service_base_rate = c.get_double("world.service_base_rate", 0.33);
    w.signal_strength = c.get_double("world.signal_strength", 1.0);
    w.zipf_exponent = c.get_double("world.zipf_exponent", 1.1);
    w.corruption_rate = c.get_double("world.corruption_rate", 0.01);
    w.first_char_break_rate = c.get_double("world.first_char_break_rate", 0.0);
    w.catalog_path = c.get("paths.hs_catalog", std::string(PORTML_DATA_DIR) + "/hs_chapters.csv");
    w.validate();
    return w;
}

governance::TemporalConfig temporal_config(const Ctx& ctx) {
    governance::TemporalConfig t;
    const auto& c = ctx.cfg;
    t.data_start = c.get_date("temporal.data_start", c.get("world.start_date", "2020-01-01"));
    t.data_end = c.get_date("temporal.data_end", c.get("world.end_date", "2021-01-01"));
    t.train_window_days = static_cast<int>(c.get_int("temporal.train_window_days", 182));
    t.validation_months = static_cast<int>(c.get_int("temporal.validation_months", 1));
    t.retrain_cadence_months = static_cast<int>(c.get_int("temporal.retrain_cadence_months", 1));
    t.prediction_stride_days = static_cast<int>(c.get_int("temporal.prediction_stride_days", 7));
    t.validate();
    return t;
}

std::vector<featfactory::FeatureSpec> feature_specs(const Ctx& ctx) {
    std::vector<int> windows;
    for (const auto& s : ctx.cfg.get_list("experiment.windows", "7,21,42,182"))
        windows.push_back(std::stoi(s));
    return featfactory::default_specs(windows);
}

int64_t decision_as_of(const Ctx& ctx, const ontology::OntologyStore& store) {
    // Default: latest validation day whose cohort is nonempty (the tail of
    // the data span may have no scheduled arrivals).
    std::string explicit_day = ctx.cfg.get("decision.as_of", "");
    if (!explicit_day.empty()) return timeutil::parse_iso(explicit_day);
    auto splits = governance::generate_splits(temporal_config(ctx));
    for (auto split = splits.rbegin(); split != splits.rend(); ++split)
        for (auto day = split->validate_points.rbegin();
             day != split->validate_points.rend(); ++day)
            if (!governance::cohort_at(store, *day).empty()) return *day;
    throw std::runtime_error("no validation day with a nonempty cohort");
}

void stage_generate(const Ctx& ctx) {
    auto w = world_config(ctx);
    auto tables = synthworld::generate_world(w);
    fs::create_directories(ctx.path("raw"));
    synthworld::write_tables(tables, ctx.path("raw/containers.csv"),
                             ctx.path("raw/events.csv"), ctx.path("raw/truth.csv"));
    ctx.stamp("generate", {"raw/containers.csv", "raw/events.csv", "raw/truth.csv"});
    std::cout << "generate: " << tables.containers.size() << " containers, "
              << tables.events.size() << " events -> " << ctx.path("raw") << "\n";
}

void stage_ingest(const Ctx& ctx) {
    ctx.require("raw/containers.csv", "generate");
    ctx.require("raw/events.csv", "generate");
    auto raw = ontology::ingest_raw(ctx.path("raw/containers.csv"), ctx.path("raw/events.csv"));
    auto clean = ontology::clean(raw, ctx.cfg.get_double("ingest.max_reject_rate", 0.5));
    auto built = ontology::build_ontology(clean);
    fs::create_directories(ctx.path("quarantine"));
    ontology::write_quarantine(clean.quarantined_containers, raw.containers.header,
                               ctx.path("quarantine/containers.csv"));
    ontology::write_quarantine(clean.quarantined_events, raw.events.header,
                               ctx.path("quarantine/events.csv"));
    ontology::write_quarantine(built.orphan_events, raw.events.header,
                               ctx.path("quarantine/orphan_events.csv"));
    ontology::save_store(built.store, ctx.path("store"));
    ctx.stamp("ingest", {"store/entities.csv", "store/events.csv"});
    std::cout << "ingest: " << built.store.n_entities() << " entities, "
              << built.store.n_events() << " events; quarantined "
              << clean.quarantined_containers.size() << "+" << clean.quarantined_events.size()
              << "+" << built.orphan_events.size() << " rows\n";
}

void stage_link(const Ctx& ctx) {
    ctx.require("store/entities.csv", "ingest");
    auto store = ontology::load_store(ctx.path("store"));
    std::vector<std::string> names;
    names.reserve(store.n_entities());
    for (const auto& id : store.container_ids())
        names.push_back(store.entity(id).base.consignee_raw);
    double threshold = ctx.cfg.get_double("linkage.threshold", 0.8);
    auto res = linkage::resolve_consignees(names, threshold,
                                           ctx.cfg.get_bool("linkage.blocked", true));
    for (size_t i = 0; i < names.size(); ++i)
        store.entity_mut(store.container_ids()[i]).consignee_id = res.component_of[i];
    ontology::save_store(store, ctx.path("store"));

    fs::create_directories(ctx.path("linkage"));
    csv::Table t;
    t.header = {"consignee_id", "canonical_name"};
    for (int64_t c = 0; c < res.n_components(); ++c)
        t.rows.push_back({std::to_string(c), res.canonical_name[c]});
    csv::write_file(ctx.path("linkage/consignees.csv"), t);
    ctx.stamp("link", {"linkage/consignees.csv", "store/entities.csv"});
    std::cout << "link: " << names.size() << " names -> " << res.n_components()
              << " consignees (threshold " << threshold << ")\n";
}

void stage_classify(const Ctx& ctx) {
    ctx.require("store/entities.csv", "ingest");
    auto store = ontology::load_store(ctx.path("store"));
    auto catalog = hsclass::load_catalog(
        ctx.cfg.get("paths.hs_catalog", std::string(PORTML_DATA_DIR) + "/hs_chapters.csv"));
    auto index = hsclass::build_index(catalog);
    double floor = ctx.cfg.get_double("hsclass.floor", 0.05);

    fs::create_directories(ctx.path("classify"));
    csv::Table t;
    t.header = {"container_id", "chapter", "section", "method", "score"};
    char buf[40];
    size_t unclassified = 0;
    for (const auto& id : store.container_ids()) {
        auto& e = store.entity_mut(id);
        auto c = hsclass::classify(e.base.merchandise_description, index, floor);
        e.hs_chapter = c.chapter;
        e.hs_section = c.section;
        if (c.chapter == hsclass::kUnclassified) ++unclassified;
        const char* method = c.method == hsclass::Method::explicit_code
                                 ? "explicit_code"
                                 : (c.method == hsclass::Method::tfidf ? "tfidf"
                                                                       : "unclassified");
        std::snprintf(buf, sizeof(buf), "%.6f", c.score);
        t.rows.push_back({id, std::to_string(c.chapter), std::to_string(c.section), method,
                          buf});
    }
    ontology::save_store(store, ctx.path("store"));
    csv::write_file(ctx.path("classify/chapters.csv"), t);
    ctx.stamp("classify", {"classify/chapters.csv", "store/entities.csv"});
    std::cout << "classify: " << store.n_entities() - unclassified << "/"
              << store.n_entities() << " containers classified\n";
}

void stage_features(const Ctx& ctx) {
    ctx.require("store/entities.csv", "ingest");
    auto store = ontology::load_store(ctx.path("store"));
    featfactory::FeatureIndex index(store);
    int64_t as_of = decision_as_of(ctx, store);
    auto cohort = governance::cohort_at(store, as_of);
    if (cohort.empty())
        throw std::runtime_error("empty cohort at " + timeutil::format_iso(as_of));
    auto X = featfactory::compute_matrix(index, cohort, as_of, feature_specs(ctx));
    fs::create_directories(ctx.path("features"));
    featfactory::write_matrix(X, ctx.path("features/matrix.csv"),
                              ctx.path("features/manifest.txt"));
    ctx.stamp("features", {"features/matrix.csv"});
    std::cout << "features: " << X.n_rows() << " x " << X.n_cols() << " at "
              << timeutil::format_iso(as_of) << "\n";
}

void stage_labels(const Ctx& ctx) {
    ctx.require("store/entities.csv", "ingest");
    auto store = ontology::load_store(ctx.path("store"));
    int64_t as_of = decision_as_of(ctx, store);
    auto cohort = governance::cohort_at(store, as_of);
    if (cohort.empty())
        throw std::runtime_error("empty cohort at " + timeutil::format_iso(as_of));
    int64_t horizon = ctx.cfg.get_date("labels.data_horizon",
                                       ctx.cfg.get("world.end_date", "2021-01-01"));
    auto labels = labeling::build_labels(store, cohort, as_of, labeling::kAllTasks, horizon);
    fs::create_directories(ctx.path("labels"));
    csv::Table t;
    t.header = {"container_id"};
    for (const auto& lv : labels) t.header.push_back(lv.task_id);
    for (const auto& id : cohort) {
        std::vector<std::string> row{id};
        for (const auto& lv : labels) {
            auto l = lv.entries.at(id);
            row.push_back(l == labeling::Label::undetermined
                              ? "NA"
                              : std::to_string(static_cast<int>(l)));
        }
        t.rows.push_back(row);
    }
    csv::write_file(ctx.path("labels/labels.csv"), t);
    ctx.stamp("labels", {"labels/labels.csv"});
    std::cout << "labels: " << cohort.size() << " containers at "
              << timeutil::format_iso(as_of) << "\n";
}

governance::ExperimentConfig experiment_config(const Ctx& ctx) {
    governance::ExperimentConfig cfg;
    cfg.temporal = temporal_config(ctx);
    cfg.tasks = ctx.cfg.get_list("experiment.tasks",
                                 "service,dt1,dt2,dt3,dt4,dt5,dt6,dt7,dt8");
    uint64_t seed = static_cast<uint64_t>(ctx.cfg.get_int("experiment.seed", 1));
    cfg.grid = ctx.full_grid ? governance::full_grid(seed) : governance::desk_grid(seed);
    std::string algos = ctx.cfg.get("experiment.algorithms", "");
    if (!algos.empty()) {
        auto wanted = ctx.cfg.get_list("experiment.algorithms", "");
        std::vector<learners::HyperParams> filtered;
        for (const auto& hp : cfg.grid)
            for (const auto& w : wanted)
                if (learners::algorithm_name(hp.algorithm) == w) filtered.push_back(hp);
        if (filtered.empty()) throw ConfigError("experiment.algorithms matches no grid point");
        cfg.grid = filtered;
    }
    cfg.feature_specs = feature_specs(ctx);
    cfg.metric_k = static_cast<size_t>(ctx.cfg.get_int("experiment.metric_k", 20));
    cfg.seed = seed;
    cfg.registry_dir = ctx.path("registry");
    cfg.audit_leakage = ctx.cfg.get_bool("experiment.audit_leakage", true);
    for (const auto& t : cfg.tasks)
        if (t != "service" && !labeling::is_dwell_task(t))
            throw ConfigError("unknown task in experiment.tasks: " + t);
    return cfg;
}

void stage_run_experiment(const Ctx& ctx) {
    ctx.require("store/entities.csv", "ingest");
    auto store = ontology::load_store(ctx.path("store"));
    auto cfg = experiment_config(ctx);
    auto result = governance::run_experiment(store, cfg);
    if (result.leakage_findings > 0)
        throw std::runtime_error("leakage audit reported " +
                                 std::to_string(result.leakage_findings) + " findings");
    ctx.stamp("run-experiment", {"registry/registry.csv"});
    std::cout << "run-experiment: " << result.completed_triples << " completed, "
              << result.skipped_triples << " skipped (" << result.experiment_id << ")\n";
}

// Youden threshold from a grid point's persisted validation scores.
double threshold_from_scores(const std::string& scores_file) {
    auto t = csv::read_file(scores_file);
    int c_s = t.col("score"), c_l = t.col("label");
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : t.rows) {
        if (r[c_l] == "NA") continue;
        scores.push_back(std::stod(r[c_s]));
        labels.push_back(std::stoi(r[c_l]));
    }
    bool has0 = false, has1 = false;
    for (int l : labels) (l ? has1 : has0) = true;
    if (!has0 || !has1) return 0.5;  // degenerate validation labels
    return learners::youden_threshold(learners::roc_curve(scores, labels));
}

void stage_assign(const Ctx& ctx) {
    ctx.require("store/entities.csv", "ingest");
    ctx.require("registry/registry.csv", "run-experiment");
    auto store = ontology::load_store(ctx.path("store"));
    featfactory::FeatureIndex index(store);
    int64_t as_of = decision_as_of(ctx, store);
    auto cohort = governance::cohort_at(store, as_of);
    if (cohort.empty())
        throw std::runtime_error("empty cohort at " + timeutil::format_iso(as_of));
    auto specs = feature_specs(ctx);
    auto X = featfactory::compute_matrix(index, cohort, as_of, specs);
    std::string metric = ctx.cfg.get("decision.selection_metric", "precision_at_k");
    fs::create_directories(ctx.path("decisions"));

    // Service ranking from the best service model of the final split.
    auto pick = [&](const std::string& task) -> governance::Selection {
        auto sel = governance::select_best(ctx.path("registry"), task, metric);
        return sel.back();  // splits are date-ordered; use the most recent
    };

    size_t k = static_cast<size_t>(ctx.cfg.get_int("decision.k", 20));
    {
        auto sel = pick("service");
        auto model = learners::TrainedModel::load(sel.record.model_file);
        decision::ScoreSet ss;
        ss.as_of = as_of;
        ss.task_id = "service";
        auto scores = model.predict(X);
        for (size_t i = 0; i < cohort.size(); ++i) ss.entries[cohort[i]] = scores[i];
        auto ranked = decision::rank_topk(ss, std::min(k, ss.entries.size()));
        decision::write_ranked_list(ranked, ctx.path("decisions/service_topk.csv"));
    }

    // Dwell assignment across dt1..dt8 with per-task Youden thresholds.
    std::vector<decision::ScoreSet> dwell_scores;
    std::vector<double> thresholds;
    csv::Table tt;
    tt.header = {"task", "grid_id", "split_id", "threshold"};
    char buf[40];
    for (const auto& task : labeling::kDwellTasks) {
        auto sel = pick(task);
        auto model = learners::TrainedModel::load(sel.record.model_file);
        decision::ScoreSet ss;
        ss.as_of = as_of;
        ss.task_id = task;
        auto scores = model.predict(X);
        for (size_t i = 0; i < cohort.size(); ++i) ss.entries[cohort[i]] = scores[i];
        dwell_scores.push_back(std::move(ss));
        double thr = threshold_from_scores(sel.record.scores_file);
        thresholds.push_back(thr);
        std::snprintf(buf, sizeof(buf), "%.17g", thr);
        tt.rows.push_back({task, sel.record.grid_id, sel.record.split_id, buf});
    }
    csv::write_file(ctx.path("decisions/thresholds.csv"), tt);
    auto assignment = decision::assign_dwell(dwell_scores, thresholds);
    decision::write_assignment(assignment, ctx.path("decisions/dwell_assignment.csv"));

    // Per-label selected sets feed the label-overlap (Jaccard) analysis.
    std::array<std::set<std::string>, 8> selected;
    for (int t = 0; t < 8; ++t)
        for (const auto& [id, s] : dwell_scores[t].entries)
            if (s > thresholds[t]) selected[t].insert(id);
    auto jm = evaluation::jaccard_matrix(selected);
    csv::Table jt;
    jt.header = {"label"};
    for (int j = 1; j <= 8; ++j) jt.header.push_back("dt" + std::to_string(j));
    for (int i = 0; i < 8; ++i) {
        std::vector<std::string> row{"dt" + std::to_string(i + 1)};
        for (int j = 0; j < 8; ++j) {
            std::snprintf(buf, sizeof(buf), "%.6f", jm[i][j]);
            row.push_back(buf);
        }
        jt.rows.push_back(row);
    }
    csv::write_file(ctx.path("decisions/jaccard.csv"), jt);
    ctx.stamp("assign", {"decisions/service_topk.csv", "decisions/dwell_assignment.csv",
                         "decisions/thresholds.csv", "decisions/jaccard.csv"});
    std::cout << "assign: " << cohort.size() << " containers at "
              << timeutil::format_iso(as_of) << "\n";
}

void stage_evaluate(const Ctx& ctx) {
    ctx.require("store/entities.csv", "ingest");
    ctx.require("registry/registry.csv", "run-experiment");
    auto store = ontology::load_store(ctx.path("store"));
    featfactory::FeatureIndex index(store);
    std::string metric = ctx.cfg.get("decision.selection_metric", "precision_at_k");
    auto cfg = experiment_config(ctx);
    fs::create_directories(ctx.path("eval"));
    char buf[40];

    // Model selection summary: best grid point per (task, split).
    csv::Table sum;
    sum.header = {"task", "split_id", "grid_id", "mean_metric"};
    for (const auto& task : cfg.tasks) {
        for (const auto& sel : governance::select_best(ctx.path("registry"), task, metric)) {
            std::snprintf(buf, sizeof(buf), "%.17g", sel.mean_metric);
            sum.rows.push_back({task, sel.split_id, sel.record.grid_id, buf});
        }
    }
    csv::write_file(ctx.path("eval/selection.csv"), sum);

    // Baseline comparison on the service task at the decision point, against
    // mature labels.
    int64_t as_of = decision_as_of(ctx, store);
    auto cohort = governance::cohort_at(store, as_of);
    if (cohort.empty())
        throw std::runtime_error("empty cohort at " + timeutil::format_iso(as_of));
    auto labels =
        labeling::build_labels(store, cohort, as_of, {"service"}, cfg.temporal.data_end)[0];
    std::set<std::string> truth;
    for (const auto& [id, l] : labels.entries)
        if (l == labeling::Label::positive) truth.insert(id);
    size_t k = std::min(static_cast<size_t>(ctx.cfg.get_int("decision.k", 20)), cohort.size());

    auto score_of = [&](const decision::ScoreSet& ss) {
        auto ranked = decision::rank_topk(ss, k);
        return evaluation::precision_at_k(ranked, truth, k);
    };
    csv::Table bt;
    bt.header = {"method", "precision_at_k", "k"};
    auto add = [&](const std::string& name, double p) {
        std::snprintf(buf, sizeof(buf), "%.17g", p);
        bt.rows.push_back({name, buf, std::to_string(k)});
    };
    add("baseline1_trailing_rate", score_of(evaluation::baseline1_scores(index, cohort, as_of)));
    add("baseline2_flag",
        score_of(evaluation::baseline2_flags(index, cohort, as_of, 182,
                                             ctx.cfg.get_double("evaluate.cutoff", 0.85))));
    add("random", score_of(evaluation::random_baseline(cohort, cfg.seed)));
    {
        auto sel = governance::select_best(ctx.path("registry"), "service", metric).back();
        auto model = learners::TrainedModel::load(sel.record.model_file);
        auto X = featfactory::compute_matrix(index, cohort, as_of, cfg.feature_specs);
        auto scores = model.predict(X);
        decision::ScoreSet ss;
        for (size_t i = 0; i < cohort.size(); ++i) ss.entries[cohort[i]] = scores[i];
        add("model_" + sel.record.grid_id, score_of(ss));

        std::vector<size_t> ks;
        for (const auto& s : ctx.cfg.get_list("evaluate.k_values", "10,20,50"))
            ks.push_back(std::min<size_t>(std::stoull(s), cohort.size()));
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
        csv::Table kt;
        kt.header = {"k", "precision", "recall"};
        for (const auto& row : evaluation::k_sweep(ss, truth, ks)) {
            std::snprintf(buf, sizeof(buf), "%.17g", row.precision);
            std::string prec = buf;
            std::string rec;
            if (row.recall) {
                std::snprintf(buf, sizeof(buf), "%.17g", *row.recall);
                rec = buf;
            }
            kt.rows.push_back({std::to_string(row.k), prec, rec});
        }
        csv::write_file(ctx.path("eval/k_sweep.csv"), kt);
    }
    csv::write_file(ctx.path("eval/baselines.csv"), bt);
    ctx.stamp("evaluate", {"eval/selection.csv", "eval/baselines.csv", "eval/k_sweep.csv"});
    std::cout << "evaluate: selection + baselines at " << timeutil::format_iso(as_of) << "\n";
}

void stage_report(const Ctx& ctx) {
    for (const auto& [rel, producer] :
         std::vector<std::pair<std::string, std::string>>{
             {"eval/selection.csv", "evaluate"},
             {"eval/baselines.csv", "evaluate"},
             {"eval/k_sweep.csv", "evaluate"},
             {"decisions/service_topk.csv", "assign"},
             {"decisions/dwell_assignment.csv", "assign"},
             {"decisions/jaccard.csv", "assign"}})
        ctx.require(rel, producer);

    fs::create_directories(ctx.path("report"));
    std::vector<std::string> bundle;
    auto copy_in = [&](const std::string& rel, const std::string& name) {
        fs::copy_file(ctx.path(rel), ctx.path("report/" + name),
                      fs::copy_options::overwrite_existing);
        bundle.push_back("report/" + name);
    };
    copy_in("eval/selection.csv", "model_selection.csv");
    copy_in("eval/baselines.csv", "service_baselines.csv");
    copy_in("eval/k_sweep.csv", "service_k_sweep.csv");
    copy_in("decisions/service_topk.csv", "service_topk.csv");
    copy_in("decisions/dwell_assignment.csv", "dwell_assignment.csv");
    copy_in("decisions/jaccard.csv", "dwell_jaccard.csv");

    // Reshuffle-avoidance envelope from the impact model.
    evaluation::ImpactParams low, high;
    low.alpha = high.alpha = ctx.cfg.get_double("impact.alpha", 0.75);
    low.beta = high.beta = ctx.cfg.get_double("impact.beta", 0.51);
    low.delta_s = ctx.cfg.get_double("impact.delta_s_low", 0.25);
    low.delta_d = ctx.cfg.get_double("impact.delta_d_low", 0.10);
    high.delta_s = ctx.cfg.get_double("impact.delta_s_high", 0.40);
    high.delta_d = ctx.cfg.get_double("impact.delta_d_high", 0.20);
    csv::Table it;
    it.header = {"scenario", "alpha", "beta", "delta_s", "delta_d", "avoidable_fraction"};
    char buf[40];
    auto impact_row = [&](const std::string& name, const evaluation::ImpactParams& p) {
        std::vector<std::string> row{name};
        for (double v : {p.alpha, p.beta, p.delta_s, p.delta_d,
                         evaluation::impact_estimate(p)}) {
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            row.push_back(buf);
        }
        it.rows.push_back(row);
    };
    impact_row("conservative", low);
    impact_row("optimistic", high);
    csv::write_file(ctx.path("report/impact.csv"), it);
    bundle.push_back("report/impact.csv");

    // Manifest: config digest plus content digest of every bundle file,
    // written last so two identical runs produce identical manifests.
    std::sort(bundle.begin(), bundle.end());
    std::ofstream mf(ctx.path("report/MANIFEST.txt"));
    mf << "config_digest=" << ctx.cfg.digest() << "\n";
    for (const auto& rel : bundle)
        mf << fs::path(rel).filename().string() << "="
           << digest::hex(digest::file_digest(ctx.path(rel))) << "\n";
    mf.close();
    bundle.push_back("report/MANIFEST.txt");
    ctx.stamp("report", bundle);
    std::cout << "report: bundle written to " << ctx.path("report") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Container-terminal predictive pipeline"};
    app.require_subcommand(1);

    std::string config_path, workspace = "work";
    std::vector<std::string> overrides;
    bool full_grid = false;
    app.add_option("--config", config_path, "Config file (flat key-value with [sections])");
    app.add_option("--workspace", workspace, "Workspace root for all artifacts");
    app.add_option("--set", overrides, "Override a config value: section.key=value");
    app.add_flag("--full-grid", full_grid, "Use the complete hyperparameter grid");

    struct Stage {
        const char* name;
        const char* help;
        void (*fn)(const Ctx&);
    };
    const std::vector<Stage> stages = {
        {"generate", "Generate a synthetic raw dataset", stage_generate},
        {"ingest", "Ingest, clean and quarantine raw tables", stage_ingest},
        {"link", "Resolve consignee name variants", stage_link},
        {"classify", "Assign goods-taxonomy chapters from descriptions", stage_classify},
        {"features", "Write the feature matrix for the decision cohort", stage_features},
        {"labels", "Write labels for the decision cohort", stage_labels},
        {"run-experiment", "Train and evaluate across temporal splits", stage_run_experiment},
        {"assign", "Rank for service and assign dwell labels", stage_assign},
        {"evaluate", "Model selection summary and baseline comparison", stage_evaluate},
        {"report", "Collect the report bundle", stage_report},
    };
    std::vector<CLI::App*> subs;
    for (const auto& s : stages) {
        subs.push_back(app.add_subcommand(s.name, s.help));
        subs.back()->fallthrough();
    }
    CLI::App* all = app.add_subcommand("all", "Run the full chain end to end");
    all->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    Ctx ctx;
    ctx.workspace = workspace;
    ctx.full_grid = full_grid;
    try {
        if (!config_path.empty()) ctx.cfg.load_file(config_path);
        for (const auto& kv : overrides) ctx.cfg.apply_override(kv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    auto run = [&](void (*fn)(const Ctx&)) -> int {
        try {
            fs::create_directories(ctx.workspace);
            fn(ctx);
            return 0;
        } catch (const MissingArtifact& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitMissing;
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitConfig;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitStage;
        }
    };

    if (all->parsed()) {
        for (const auto& s : stages)
            if (int rc = run(s.fn)) return rc;
        return 0;
    }
    for (size_t i = 0; i < stages.size(); ++i)
        if (subs[i]->parsed()) return run(stages[i].fn);
    return kExitUsage;
}
