#include "portml/featfactory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "portml/digest.hpp"
#include "portml/labeling.hpp"
#include "portml/timeutil.hpp"

namespace portml::featfactory {

using ontology::EventKind;
using timeutil::kSecondsPerDay;

std::string FeatureSpec::key_string() const {
    return name + "|" + std::to_string(static_cast<int>(category)) + "|" +
           std::to_string(static_cast<int>(entity_key)) + "|" +
           std::to_string(window_days) + "|" + std::to_string(static_cast<int>(statistic)) +
           "|" + field + "|" + std::to_string(param);
}

uint64_t schema_hash_of(const std::vector<std::string>& column_names) {
    return digest::fnv1a_list(column_names);
}

std::vector<FeatureSpec> default_specs(const std::vector<int>& windows) {
    auto w = [&](size_t i) { return windows[std::min(i, windows.size() - 1)]; };
    const int w_short = w(0), w_mid = w(1), w_long = w(2), w_base = w(3);

    std::vector<FeatureSpec> s;
    auto simple = [&](const std::string& name, const std::string& field) {
        s.push_back({name, Category::simple, EntityKey::none, 0, Statistic::none, field, 0});
    };
    simple("net_weight", "net_weight");
    simple("gross_weight", "gross_weight");
    simple("weight_ratio", "weight_ratio");
    simple("hazardous", "hazardous");
    simple("liner_client", "liner_client");
    for (const char* d : {"20FT", "40FT", "40HC", "45FT"})
        simple(std::string("dim_") + d, std::string("dimension:") + d);
    for (const char* t : {"DRY", "REEFER", "OPEN_TOP", "TANK", "FLAT_RACK"})
        simple(std::string("ctype_") + t, std::string("container_type:") + t);
    for (const char* t : {"GENERAL", "REEFER", "HAZARDOUS", "BULK"})
        simple(std::string("cargo_") + t, std::string("cargo_type:") + t);

    auto windowed = [&](const std::string& name, Category c, EntityKey k, int wd,
                        Statistic st, int param = 0) {
        s.push_back({name, c, k, wd, st, "", param});
    };
    windowed("cons_arrivals_w" + std::to_string(w_mid), Category::simple_count,
             EntityKey::consignee, w_mid, Statistic::count);
    windowed("cons_arrivals_w" + std::to_string(w_base), Category::simple_count,
             EntityKey::consignee, w_base, Statistic::count);
    windowed("chap_arrivals_w" + std::to_string(w_mid), Category::simple_count,
             EntityKey::chapter, w_mid, Statistic::count);
    windowed("line_arrivals_w" + std::to_string(w_mid), Category::simple_count,
             EntityKey::shipping_line, w_mid, Statistic::count);

    windowed("cons_share_w" + std::to_string(w_long), Category::aggregate,
             EntityKey::consignee, w_long, Statistic::rate);
    windowed("chap_share_w" + std::to_string(w_long), Category::aggregate,
             EntityKey::chapter, w_long, Statistic::rate);

    windowed("cons_svc_rate_w" + std::to_string(w_long), Category::service,
             EntityKey::consignee, w_long, Statistic::rate);
    windowed("cons_svc_rate_w" + std::to_string(w_base), Category::service,
             EntityKey::consignee, w_base, Statistic::rate);
    windowed("chap_svc_rate_w" + std::to_string(w_long), Category::service,
             EntityKey::chapter, w_long, Statistic::rate);
    windowed("chap_svc_rate_w" + std::to_string(w_base), Category::service,
             EntityKey::chapter, w_base, Statistic::rate);
    windowed("line_svc_rate_w" + std::to_string(w_long), Category::service,
             EntityKey::shipping_line, w_long, Statistic::rate);
    windowed("route_svc_rate_w" + std::to_string(w_long), Category::service,
             EntityKey::route, w_long, Statistic::rate);
    windowed("cargo_svc_rate_w" + std::to_string(w_long), Category::service,
             EntityKey::cargo_type, w_long, Statistic::rate);
    windowed("cons_svc_count_w" + std::to_string(w_mid), Category::service,
             EntityKey::consignee, w_mid, Statistic::count);

    windowed("chap_dwell_mean_w" + std::to_string(w_long), Category::dwell,
             EntityKey::chapter, w_long, Statistic::mean);
    windowed("chap_dwell_std_w" + std::to_string(w_long), Category::dwell,
             EntityKey::chapter, w_long, Statistic::stddev);
    windowed("cons_dwell_mean_w" + std::to_string(w_long), Category::dwell,
             EntityKey::consignee, w_long, Statistic::mean);
    windowed("line_dwell_mean_w" + std::to_string(w_long), Category::dwell,
             EntityKey::shipping_line, w_long, Statistic::mean);
    for (int k = 1; k <= 8; ++k)
        windowed("chap_dt" + std::to_string(k) + "_share_w" + std::to_string(w_long),
                 Category::dwell, EntityKey::chapter, w_long, Statistic::rate, k);
    windowed("cons_dt1_share_w" + std::to_string(w_base), Category::dwell,
             EntityKey::consignee, w_base, Statistic::rate, 1);
    windowed("cons_dt8_share_w" + std::to_string(w_base), Category::dwell,
             EntityKey::consignee, w_base, Statistic::rate, 8);

    windowed("cons_moves_w" + std::to_string(w_mid), Category::movement,
             EntityKey::consignee, w_mid, Statistic::count);
    windowed("chap_moves_per_arrival_w" + std::to_string(w_long), Category::movement,
             EntityKey::chapter, w_long, Statistic::mean);

    windowed("cons_arrivals_chg_w" + std::to_string(w_mid), Category::difference,
             EntityKey::consignee, w_mid, Statistic::pct_change,
             static_cast<int>(EventKind::arrival));
    windowed("chap_svc_chg_w" + std::to_string(w_mid), Category::difference,
             EntityKey::chapter, w_mid, Statistic::pct_change,
             static_cast<int>(EventKind::service));
    windowed("line_arrivals_chg_w" + std::to_string(w_short), Category::difference,
             EntityKey::shipping_line, w_short, Statistic::pct_change,
             static_cast<int>(EventKind::arrival));
    return s;
}

std::string FeatureIndex::key_value_of(const ontology::OntologyEntity& e,
                                       EntityKey key) const {
    switch (key) {
        case EntityKey::consignee:
            return e.consignee_id >= 0 ? std::to_string(e.consignee_id)
                                       : "raw:" + e.base.consignee_raw;
        case EntityKey::chapter: return std::to_string(e.hs_chapter);
        case EntityKey::shipping_line: return e.base.shipping_line;
        case EntityKey::route: return e.base.route;
        case EntityKey::cargo_type: return e.base.cargo_type;
        case EntityKey::none: break;
    }
    throw std::invalid_argument("entity key required");
}

FeatureIndex::FeatureIndex(const ontology::OntologyStore& store) : store_(&store) {
    for (const auto& id : store.container_ids()) {
        const auto& e = store.entity(id);
        const auto& events = store.all_events(id);
        std::string keys[5];
        for (int k = 0; k < 5; ++k)
            keys[k] = key_value_of(e, static_cast<EntityKey>(k + 1));

        int64_t arrival = -1;
        for (const auto& ev : events) {
            int ki = kind_index(ev.kind);
            global_events_.by_kind[ki].push_back(ev.at);
            for (int k = 0; k < 5; ++k)
                key_events_[k][keys[k]].by_kind[ki].push_back(ev.at);
            if (ev.kind == EventKind::arrival && arrival < 0) arrival = ev.at;
            if (ev.kind == EventKind::exit && arrival >= 0) {
                ExitRec rec{ev.at, static_cast<double>(ev.at - arrival) / kSecondsPerDay,
                            labeling::dwell_category(arrival, ev.at)};
                global_exits_.push_back(rec);
                for (int k = 0; k < 5; ++k) key_exits_[k][keys[k]].push_back(rec);
            }
        }
    }
    auto sort_times = [](KindTimes& kt) {
        for (auto& v : kt.by_kind) std::sort(v.begin(), v.end());
    };
    sort_times(global_events_);
    for (auto& m : key_events_)
        for (auto& [k, kt] : m) sort_times(kt);
    auto by_exit = [](const ExitRec& a, const ExitRec& b) { return a.exit_at < b.exit_at; };
    std::sort(global_exits_.begin(), global_exits_.end(), by_exit);
    for (auto& m : key_exits_)
        for (auto& [k, v] : m) std::sort(v.begin(), v.end(), by_exit);
}

namespace {

int64_t count_in_window(const std::vector<int64_t>& sorted_times, int64_t lo, int64_t hi) {
    auto a = std::lower_bound(sorted_times.begin(), sorted_times.end(), lo);
    auto b = std::lower_bound(sorted_times.begin(), sorted_times.end(), hi);
    return b - a;
}

}  // namespace

int64_t FeatureIndex::rolling_count(EntityKey key, const std::string& key_value,
                                    EventKind kind, int window_days, int64_t as_of) const {
    if (window_days < 1) throw std::invalid_argument("window_days must be >= 1");
    const auto& m = key_events_[static_cast<int>(key) - 1];
    auto it = m.find(key_value);
    if (it == m.end()) return 0;
    int64_t lo = as_of - static_cast<int64_t>(window_days) * kSecondsPerDay;
    return count_in_window(it->second.by_kind[kind_index(kind)], lo, as_of);
}

int64_t FeatureIndex::rolling_count_all(EventKind kind, int window_days, int64_t as_of) const {
    int64_t lo = as_of - static_cast<int64_t>(window_days) * kSecondsPerDay;
    return count_in_window(global_events_.by_kind[kind_index(kind)], lo, as_of);
}

static FeatureIndex::DwellStats compute_dwell_stats(
    const std::vector<std::pair<double, int>>& window_rows) {
    FeatureIndex::DwellStats s;
    s.n = static_cast<int64_t>(window_rows.size());
    if (s.n == 0) return s;
    double sum = 0, sum2 = 0;
    for (const auto& [d, cat] : window_rows) {
        sum += d;
        sum2 += d * d;
        s.cat_counts[cat - 1] += 1;
    }
    s.mean = sum / s.n;
    double var = sum2 / s.n - s.mean * s.mean;
    s.stddev = var > 0 ? std::sqrt(var) : 0.0;
    return s;
}

FeatureIndex::DwellStats FeatureIndex::dwell_stats(EntityKey key, const std::string& key_value,
                                                   int window_days, int64_t as_of) const {
    const auto& m = key_exits_[static_cast<int>(key) - 1];
    auto it = m.find(key_value);
    if (it == m.end()) return {};
    int64_t lo = as_of - static_cast<int64_t>(window_days) * kSecondsPerDay;
    std::vector<std::pair<double, int>> rows;
    auto cmp = [](const ExitRec& r, int64_t t) { return r.exit_at < t; };
    auto a = std::lower_bound(it->second.begin(), it->second.end(), lo, cmp);
    auto b = std::lower_bound(it->second.begin(), it->second.end(), as_of, cmp);
    for (auto p = a; p != b; ++p) rows.emplace_back(p->dwell_days, p->category);
    return compute_dwell_stats(rows);
}

FeatureIndex::DwellStats FeatureIndex::dwell_stats_all(int window_days, int64_t as_of) const {
    int64_t lo = as_of - static_cast<int64_t>(window_days) * kSecondsPerDay;
    std::vector<std::pair<double, int>> rows;
    auto cmp = [](const ExitRec& r, int64_t t) { return r.exit_at < t; };
    auto a = std::lower_bound(global_exits_.begin(), global_exits_.end(), lo, cmp);
    auto b = std::lower_bound(global_exits_.begin(), global_exits_.end(), as_of, cmp);
    for (auto p = a; p != b; ++p) rows.emplace_back(p->dwell_days, p->category);
    return compute_dwell_stats(rows);
}

int64_t rolling_count(const ontology::OntologyStore& store, EntityKey key,
                      const std::string& key_value, EventKind kind, int window_days,
                      int64_t as_of) {
    FeatureIndex idx(store);
    return idx.rolling_count(key, key_value, kind, window_days, as_of);
}

double pct_change(const FeatureIndex& index, const FeatureSpec& spec,
                  const std::string& key_value, int64_t as_of) {
    auto kind = static_cast<EventKind>(spec.param);
    int64_t recent = index.rolling_count(spec.entity_key, key_value, kind,
                                         spec.window_days, as_of);
    int64_t prior =
        index.rolling_count(spec.entity_key, key_value, kind, spec.window_days,
                            as_of - static_cast<int64_t>(spec.window_days) * kSecondsPerDay);
    return static_cast<double>(recent - prior) /
           static_cast<double>(std::max<int64_t>(prior, 1));
}

namespace {

bool spec_imputes(const FeatureSpec& s) {
    if (s.category == Category::service && s.statistic == Statistic::rate) return true;
    if (s.category == Category::dwell) return true;
    if (s.category == Category::movement && s.statistic == Statistic::mean) return true;
    return false;
}

double simple_value(const ontology::OntologyEntity& e, const std::string& field) {
    auto colon = field.find(':');
    if (colon != std::string::npos) {
        std::string col = field.substr(0, colon), val = field.substr(colon + 1);
        const std::string* actual = nullptr;
        if (col == "dimension") actual = &e.base.dimension;
        else if (col == "container_type") actual = &e.base.container_type;
        else if (col == "cargo_type") actual = &e.base.cargo_type;
        else throw std::invalid_argument("unknown one-hot column: " + col);
        return *actual == val ? 1.0 : 0.0;
    }
    if (field == "net_weight") return e.base.net_weight;
    if (field == "gross_weight") return e.base.gross_weight;
    if (field == "weight_ratio")
        return e.base.net_weight / std::max(e.base.gross_weight, 1.0);
    if (field == "hazardous") return e.base.hazardous ? 1.0 : 0.0;
    if (field == "liner_client") return e.base.liner_client ? 1.0 : 0.0;
    throw std::invalid_argument("unknown simple field: " + field);
}

}  // namespace

FeatureMatrix compute_matrix(const FeatureIndex& index, const std::vector<std::string>& cohort,
                             int64_t as_of, const std::vector<FeatureSpec>& specs,
                             bool enforce_cohort) {
    const auto& store = index.store();
    for (const auto& id : cohort) {
        const auto& e = store.entity(id);  // throws on unknown id
        int64_t sa = e.base.scheduled_arrival;
        if (enforce_cohort && (sa < as_of || sa >= as_of + 24 * 3600))
            throw std::invalid_argument("cohort violation: " + id +
                                        " not scheduled within 24h of as_of");
    }

    FeatureMatrix m;
    m.as_of = as_of;
    m.row_ids = cohort;
    m.specs = specs;
    for (const auto& s : specs) {
        m.column_names.push_back(s.name);
        if (spec_imputes(s)) m.column_names.push_back(s.name + "__missing");
    }
    m.schema_hash = schema_hash_of(m.column_names);
    m.values.assign(cohort.size() * m.column_names.size(), 0.0);

    // Global fallbacks for cold-start imputation, one per imputing spec.
    std::vector<double> global_value(specs.size(), 0.0);
    for (size_t si = 0; si < specs.size(); ++si) {
        const auto& s = specs[si];
        if (!spec_imputes(s)) continue;
        if (s.category == Category::service) {
            int64_t svc = index.rolling_count_all(EventKind::service, s.window_days, as_of);
            int64_t arr = index.rolling_count_all(EventKind::arrival, s.window_days, as_of);
            global_value[si] = arr > 0 ? static_cast<double>(svc) / arr : 0.0;
        } else if (s.category == Category::dwell) {
            auto g = index.dwell_stats_all(s.window_days, as_of);
            if (s.statistic == Statistic::mean) global_value[si] = g.mean;
            else if (s.statistic == Statistic::stddev) global_value[si] = g.stddev;
            else if (s.statistic == Statistic::rate)
                global_value[si] =
                    g.n > 0 ? static_cast<double>(g.cat_counts[s.param - 1]) / g.n : 0.0;
        } else if (s.category == Category::movement) {
            int64_t mv = index.rolling_count_all(EventKind::yard_move, s.window_days, as_of);
            int64_t arr = index.rolling_count_all(EventKind::arrival, s.window_days, as_of);
            global_value[si] = arr > 0 ? static_cast<double>(mv) / arr : 0.0;
        }
    }

    for (size_t row = 0; row < cohort.size(); ++row) {
        const auto& e = store.entity(cohort[row]);
        size_t col = 0;
        for (size_t si = 0; si < specs.size(); ++si) {
            const auto& s = specs[si];
            double value = 0.0, missing = 0.0;
            switch (s.category) {
                case Category::simple:
                    value = simple_value(e, s.field);
                    break;
                case Category::simple_count: {
                    value = static_cast<double>(index.rolling_count(
                        s.entity_key, index.key_value_of(e, s.entity_key),
                        EventKind::arrival, s.window_days, as_of));
                    break;
                }
                case Category::aggregate: {
                    int64_t mine = index.rolling_count(
                        s.entity_key, index.key_value_of(e, s.entity_key),
                        EventKind::arrival, s.window_days, as_of);
                    int64_t all =
                        index.rolling_count_all(EventKind::arrival, s.window_days, as_of);
                    value = all > 0 ? static_cast<double>(mine) / all : 0.0;
                    break;
                }
                case Category::service: {
                    std::string kv = index.key_value_of(e, s.entity_key);
                    int64_t svc = index.rolling_count(s.entity_key, kv, EventKind::service,
                                                      s.window_days, as_of);
                    if (s.statistic == Statistic::count) {
                        value = static_cast<double>(svc);
                    } else {
                        int64_t arr = index.rolling_count(s.entity_key, kv,
                                                          EventKind::arrival,
                                                          s.window_days, as_of);
                        if (arr == 0) { value = global_value[si]; missing = 1.0; }
                        else value = static_cast<double>(svc) / arr;
                    }
                    break;
                }
                case Category::dwell: {
                    auto st = index.dwell_stats(s.entity_key,
                                                index.key_value_of(e, s.entity_key),
                                                s.window_days, as_of);
                    if (st.n == 0) { value = global_value[si]; missing = 1.0; }
                    else if (s.statistic == Statistic::mean) value = st.mean;
                    else if (s.statistic == Statistic::stddev) value = st.stddev;
                    else if (s.statistic == Statistic::rate)
                        value = static_cast<double>(st.cat_counts[s.param - 1]) / st.n;
                    break;
                }
                case Category::movement: {
                    std::string kv = index.key_value_of(e, s.entity_key);
                    int64_t mv = index.rolling_count(s.entity_key, kv, EventKind::yard_move,
                                                     s.window_days, as_of);
                    if (s.statistic == Statistic::count) {
                        value = static_cast<double>(mv);
                    } else {
                        int64_t arr = index.rolling_count(s.entity_key, kv,
                                                          EventKind::arrival,
                                                          s.window_days, as_of);
                        if (arr == 0) { value = global_value[si]; missing = 1.0; }
                        else value = static_cast<double>(mv) / arr;
                    }
                    break;
                }
                case Category::difference:
                    value = pct_change(index, s, index.key_value_of(e, s.entity_key), as_of);
                    break;
            }
            m.values[row * m.column_names.size() + col] = value;
            ++col;
            if (spec_imputes(s)) {
                m.values[row * m.column_names.size() + col] = missing;
                ++col;
            }
        }
    }
    return m;
}

AuditReport leakage_audit(const FeatureMatrix& matrix, const ontology::OntologyStore& store) {
    AuditReport report;
    auto censored = store.censored_at(matrix.as_of);
    FeatureIndex idx(censored);
    FeatureMatrix rebuilt =
        compute_matrix(idx, matrix.row_ids, matrix.as_of, matrix.specs,
                       /*enforce_cohort=*/false);
    for (size_t r = 0; r < matrix.n_rows(); ++r) {
        for (size_t c = 0; c < matrix.n_cols(); ++c) {
            double a = matrix.at(r, c), b = rebuilt.at(r, c);
            if (a != b && !(std::isnan(a) && std::isnan(b)))
                report.findings.push_back({matrix.row_ids[r], matrix.column_names[c], a, b});
        }
    }
    return report;
}

void write_matrix(const FeatureMatrix& m, const std::string& path,
                  const std::string& manifest_path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "container_id";
    for (const auto& c : m.column_names) out << ',' << c;
    out << '\n';
    char buf[40];
    for (size_t r = 0; r < m.n_rows(); ++r) {
        out << m.row_ids[r];
        for (size_t c = 0; c < m.n_cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m.at(r, c));
            out << ',' << buf;
        }
        out << '\n';
    }
    std::ofstream mf(manifest_path);
    mf << "as_of=" << timeutil::format_iso(m.as_of) << "\n"
       << "schema_hash=" << digest::hex(m.schema_hash) << "\n"
       << "n_rows=" << m.n_rows() << "\n"
       << "n_cols=" << m.n_cols() << "\n";
    for (const auto& s : m.specs) mf << "spec=" << s.key_string() << "\n";
}

}  // namespace portml::featfactory
