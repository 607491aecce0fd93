#include "portml/ontology.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "portml/digest.hpp"
#include "portml/timeutil.hpp"

namespace portml::ontology {

namespace fs = std::filesystem;

const std::vector<OntologyStore::Event> OntologyStore::kNoEvents;

const char* kind_name(EventKind k) {
    switch (k) {
        case EventKind::arrival: return "arrival";
        case EventKind::service: return "service";
        case EventKind::exit: return "exit";
        case EventKind::yard_move: return "yard_move";
    }
    return "?";
}

std::optional<EventKind> parse_kind(const std::string& s) {
    if (s == "arrival") return EventKind::arrival;
    if (s == "service") return EventKind::service;
    if (s == "exit") return EventKind::exit;
    if (s == "yard_move") return EventKind::yard_move;
    return std::nullopt;
}

static const std::vector<std::string> kContainerHeader = {
    "container_id", "consignee",     "merchandise_description",
    "net_weight",   "gross_weight",  "dimension",
    "container_type", "cargo_type",  "hazardous",
    "liner_client", "shipping_line", "route",
    "scheduled_arrival"};
static const std::vector<std::string> kEventHeader = {"container_id", "kind", "at"};

static void check_table(const csv::Table& t, const std::vector<std::string>& expected,
                        const std::string& what) {
    if (t.header != expected) {
        std::string msg = "malformed header in " + what + " (got:";
        for (const auto& h : t.header) msg += " " + h;
        msg += ")";
        throw std::runtime_error(msg);
    }
    std::vector<size_t> bad;
    for (size_t i = 0; i < t.rows.size(); ++i)
        if (t.rows[i].size() != expected.size()) bad.push_back(i + 2);  // 1-based + header
    if (!bad.empty()) {
        std::string msg = what + ": wrong column count at line(s)";
        for (size_t i = 0; i < bad.size() && i < 20; ++i)
            msg += " " + std::to_string(bad[i]);
        if (bad.size() > 20) msg += " ... (" + std::to_string(bad.size()) + " total)";
        throw std::runtime_error(msg);
    }
}

RawStore ingest_raw(const std::string& container_file, const std::string& event_file) {
    RawStore raw;
    raw.containers = csv::read_file(container_file);
    raw.events = csv::read_file(event_file);
    check_table(raw.containers, kContainerHeader, container_file);
    check_table(raw.events, kEventHeader, event_file);
    return raw;
}

// Parses a weight that may carry thousands separators ("12,500").
static std::optional<double> parse_weight(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::string digits;
    for (char c : s) {
        if (c == ',') continue;
        if ((c < '0' || c > '9') && c != '.' && c != '-') return std::nullopt;
        digits += c;
    }
    if (digits.empty()) return std::nullopt;
    try {
        size_t used = 0;
        double v = std::stod(digits, &used);
        if (used != digits.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

CleanStore clean(const RawStore& raw, double max_reject_rate) {
    CleanStore out;
    const auto& t = raw.containers;
    int c_id = t.col("container_id"), c_cons = t.col("consignee"),
        c_desc = t.col("merchandise_description"), c_net = t.col("net_weight"),
        c_gross = t.col("gross_weight"), c_dim = t.col("dimension"),
        c_ctype = t.col("container_type"), c_cargo = t.col("cargo_type"),
        c_haz = t.col("hazardous"), c_liner = t.col("liner_client"),
        c_line = t.col("shipping_line"), c_route = t.col("route"),
        c_sched = t.col("scheduled_arrival");

    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        auto reject = [&](const std::string& why) {
            out.quarantined_containers.push_back({i + 2, r, why});
        };
        auto net = parse_weight(r[c_net]);
        auto gross = parse_weight(r[c_gross]);
        if (!net || !gross) { reject("unparseable weight"); continue; }
        if (*net < 0 || *gross < 0) { reject("negative weight"); continue; }
        if (*gross < *net) { reject("weight inversion"); continue; }
        if (r[c_id].empty()) { reject("missing container id"); continue; }
        if (r[c_cons].empty()) { reject("missing consignee"); continue; }
        if (r[c_sched].empty()) { reject("missing scheduled_arrival"); continue; }
        CleanContainer c;
        c.container_id = r[c_id];
        c.net_weight = *net;
        c.gross_weight = *gross;
        c.dimension = r[c_dim];
        c.container_type = r[c_ctype];
        c.cargo_type = r[c_cargo];
        c.hazardous = r[c_haz] == "1" || r[c_haz] == "true";
        c.liner_client = r[c_liner] == "1" || r[c_liner] == "true";
        c.shipping_line = r[c_line];
        c.route = r[c_route];
        c.consignee_raw = r[c_cons];
        c.merchandise_description = r[c_desc];
        try {
            c.scheduled_arrival = timeutil::parse_iso(r[c_sched]);
        } catch (...) {
            reject("bad scheduled_arrival timestamp");
            continue;
        }
        out.containers.push_back(std::move(c));
    }

    const auto& e = raw.events;
    int e_id = e.col("container_id"), e_kind = e.col("kind"), e_at = e.col("at");
    for (size_t i = 0; i < e.rows.size(); ++i) {
        const auto& r = e.rows[i];
        auto kind = parse_kind(r[e_kind]);
        if (!kind) {
            out.quarantined_events.push_back({i + 2, r, "unknown event kind"});
            continue;
        }
        int64_t at;
        try {
            at = timeutil::parse_iso(r[e_at]);
        } catch (...) {
            out.quarantined_events.push_back({i + 2, r, "bad timestamp"});
            continue;
        }
        out.events.push_back({r[e_id], *kind, at});
    }

    if (!t.rows.empty()) {
        double rate = static_cast<double>(out.quarantined_containers.size()) / t.rows.size();
        if (rate > max_reject_rate)
            throw std::runtime_error("schema mismatch: container rejection rate " +
                                     std::to_string(rate) + " exceeds threshold");
    }
    return out;
}

void OntologyStore::add_entity(OntologyEntity e) {
    const std::string id = e.base.container_id;
    if (entities_.count(id)) throw std::runtime_error("duplicate entity: " + id);
    ids_.push_back(id);
    entities_.emplace(id, std::move(e));
}

void OntologyStore::add_event(const std::string& container_id, EventKind kind, int64_t at) {
    events_[container_id].push_back({kind, at});
}

void OntologyStore::finalize() {
    for (auto& [id, ev] : events_)
        std::sort(ev.begin(), ev.end(),
                  [](const Event& a, const Event& b) {
                      return a.at != b.at ? a.at < b.at : a.kind < b.kind;
                  });
}

bool OntologyStore::has(const std::string& container_id) const {
    return entities_.count(container_id) > 0;
}

const OntologyEntity& OntologyStore::entity(const std::string& container_id) const {
    auto it = entities_.find(container_id);
    if (it == entities_.end())
        throw std::out_of_range("unknown container: " + container_id);
    return it->second;
}

OntologyEntity& OntologyStore::entity_mut(const std::string& container_id) {
    auto it = entities_.find(container_id);
    if (it == entities_.end())
        throw std::out_of_range("unknown container: " + container_id);
    return it->second;
}

const std::vector<OntologyStore::Event>& OntologyStore::all_events(
    const std::string& container_id) const {
    auto it = events_.find(container_id);
    return it == events_.end() ? kNoEvents : it->second;
}

std::vector<OntologyStore::Event> OntologyStore::events_before(
    const std::string& container_id, int64_t t) const {
    const auto& ev = all_events(container_id);
    std::vector<Event> out;
    for (const auto& e : ev) {
        if (e.at < t) out.push_back(e);
        else break;
    }
    return out;
}

OntologyStore OntologyStore::censored_at(int64_t t) const {
    OntologyStore out;
    out.ids_ = ids_;
    out.entities_ = entities_;
    for (const auto& [id, ev] : events_) {
        std::vector<Event> kept;
        for (const auto& e : ev)
            if (e.at < t) kept.push_back(e);
        if (!kept.empty()) out.events_.emplace(id, std::move(kept));
    }
    return out;
}

size_t OntologyStore::n_events() const {
    size_t n = 0;
    for (const auto& [id, ev] : events_) n += ev.size();
    return n;
}

BuildResult build_ontology(const CleanStore& clean) {
    BuildResult out;
    for (const auto& c : clean.containers) {
        OntologyEntity e;
        e.base = c;
        out.store.add_entity(std::move(e));
    }
    size_t line = 0;
    for (const auto& ev : clean.events) {
        ++line;
        if (!out.store.has(ev.container_id)) {
            out.orphan_events.push_back(
                {line, {ev.container_id, kind_name(ev.kind), timeutil::format_iso(ev.at)},
                 "orphan event"});
            continue;
        }
        out.store.add_event(ev.container_id, ev.kind, ev.at);
    }
    out.store.finalize();
    return out;
}

void save_store(const OntologyStore& store, const std::string& dir) {
    fs::create_directories(dir);
    csv::Table ent;
    ent.header = kContainerHeader;
    ent.header.push_back("consignee_id");
    ent.header.push_back("hs_chapter");
    ent.header.push_back("hs_section");
    for (const auto& id : store.container_ids()) {
        const auto& e = store.entity(id);
        const auto& b = e.base;
        char net[32], gross[32];
        std::snprintf(net, sizeof(net), "%.3f", b.net_weight);
        std::snprintf(gross, sizeof(gross), "%.3f", b.gross_weight);
        ent.rows.push_back({b.container_id, b.consignee_raw, b.merchandise_description, net,
                            gross, b.dimension, b.container_type, b.cargo_type,
                            b.hazardous ? "1" : "0", b.liner_client ? "1" : "0",
                            b.shipping_line, b.route,
                            timeutil::format_iso(b.scheduled_arrival),
                            std::to_string(e.consignee_id), std::to_string(e.hs_chapter),
                            std::to_string(e.hs_section)});
    }
    csv::write_file(dir + "/entities.csv", ent);

    csv::Table evt;
    evt.header = kEventHeader;
    for (const auto& id : store.container_ids())
        for (const auto& e : store.all_events(id))
            evt.rows.push_back({id, kind_name(e.kind), timeutil::format_iso(e.at)});
    csv::write_file(dir + "/events.csv", evt);

    std::ofstream mf(dir + "/manifest.txt");
    mf << "entities=" << store.n_entities() << "\n"
       << "events=" << store.n_events() << "\n"
       << "entities_digest=" << digest::hex(digest::file_digest(dir + "/entities.csv")) << "\n"
       << "events_digest=" << digest::hex(digest::file_digest(dir + "/events.csv")) << "\n";
}

OntologyStore load_store(const std::string& dir) {
    auto ent = csv::read_file(dir + "/entities.csv");
    OntologyStore store;
    int c_id = ent.col("container_id"), c_cons = ent.col("consignee"),
        c_desc = ent.col("merchandise_description"), c_net = ent.col("net_weight"),
        c_gross = ent.col("gross_weight"), c_dim = ent.col("dimension"),
        c_ctype = ent.col("container_type"), c_cargo = ent.col("cargo_type"),
        c_haz = ent.col("hazardous"), c_liner = ent.col("liner_client"),
        c_line = ent.col("shipping_line"), c_route = ent.col("route"),
        c_sched = ent.col("scheduled_arrival"), c_cid = ent.col("consignee_id"),
        c_ch = ent.col("hs_chapter"), c_sec = ent.col("hs_section");
    for (const auto& r : ent.rows) {
        OntologyEntity e;
        e.base.container_id = r[c_id];
        e.base.consignee_raw = r[c_cons];
        e.base.merchandise_description = r[c_desc];
        e.base.net_weight = std::stod(r[c_net]);
        e.base.gross_weight = std::stod(r[c_gross]);
        e.base.dimension = r[c_dim];
        e.base.container_type = r[c_ctype];
        e.base.cargo_type = r[c_cargo];
        e.base.hazardous = r[c_haz] == "1";
        e.base.liner_client = r[c_liner] == "1";
        e.base.shipping_line = r[c_line];
        e.base.route = r[c_route];
        e.base.scheduled_arrival = timeutil::parse_iso(r[c_sched]);
        e.consignee_id = std::stoll(r[c_cid]);
        e.hs_chapter = std::stoi(r[c_ch]);
        e.hs_section = std::stoi(r[c_sec]);
        store.add_entity(std::move(e));
    }
    auto evt = csv::read_file(dir + "/events.csv");
    int e_id = evt.col("container_id"), e_kind = evt.col("kind"), e_at = evt.col("at");
    for (const auto& r : evt.rows) {
        auto k = parse_kind(r[e_kind]);
        if (!k) throw std::runtime_error("bad event kind in store: " + r[e_kind]);
        store.add_event(r[e_id], *k, timeutil::parse_iso(r[e_at]));
    }
    store.finalize();
    return store;
}

void write_quarantine(const std::vector<QuarantinedRow>& rows,
                      const std::vector<std::string>& source_header,
                      const std::string& path) {
    csv::Table t;
    t.header = source_header;
    t.header.push_back("reason");
    for (const auto& q : rows) {
        auto r = q.fields;
        r.push_back(q.reason);
        t.rows.push_back(std::move(r));
    }
    csv::write_file(path, t);
}

}  // namespace portml::ontology
