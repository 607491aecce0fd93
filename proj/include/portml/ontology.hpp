#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "portml/csv.hpp"

namespace portml::ontology {

enum class EventKind { arrival, service, exit, yard_move };

const char* kind_name(EventKind k);
std::optional<EventKind> parse_kind(const std::string& s);

struct RawStore {
    csv::Table containers;
    csv::Table events;
};

// Rows are preserved verbatim. Structural problems (missing file, bad header,
// wrong column count) are hard errors with line diagnostics; semantic
// problems are deferred to clean().
RawStore ingest_raw(const std::string& container_file, const std::string& event_file);

struct CleanContainer {
    std::string container_id;
    double net_weight = 0;
    double gross_weight = 0;
    std::string dimension;
    std::string container_type;
    std::string cargo_type;
    bool hazardous = false;
    bool liner_client = false;
    std::string shipping_line;
    std::string route;
    std::string consignee_raw;
    std::string merchandise_description;
    int64_t scheduled_arrival = 0;
};

struct CleanEvent {
    std::string container_id;
    EventKind kind = EventKind::arrival;
    int64_t at = 0;
};

struct QuarantinedRow {
    size_t line_no = 0;  // 1-based data row number in the source table
    std::vector<std::string> fields;
    std::string reason;
};

struct CleanStore {
    std::vector<CleanContainer> containers;
    std::vector<CleanEvent> events;
    std::vector<QuarantinedRow> quarantined_containers;
    std::vector<QuarantinedRow> quarantined_events;
};

// Types and standardizes rows; invariant violators are quarantined with a
// reason, never dropped. Aborts if the rejection rate exceeds max_reject_rate.
CleanStore clean(const RawStore& raw, double max_reject_rate = 0.5);

struct OntologyEntity {
    CleanContainer base;
    int64_t consignee_id = -1;  // filled by linkage; -1 = unresolved
    int hs_chapter = 0;         // 0 = unclassified
    int hs_section = 0;
};

class OntologyStore {
public:
    struct Event {
        EventKind kind;
        int64_t at;
    };

    void add_entity(OntologyEntity e);
    void add_event(const std::string& container_id, EventKind kind, int64_t at);
    void finalize();  // sorts per-container event streams by time

    bool has(const std::string& container_id) const;
    const OntologyEntity& entity(const std::string& container_id) const;
    OntologyEntity& entity_mut(const std::string& container_id);
    const std::vector<std::string>& container_ids() const { return ids_; }

    // Events strictly before t, in ascending time order.
    std::vector<Event> events_before(const std::string& container_id, int64_t t) const;
    const std::vector<Event>& all_events(const std::string& container_id) const;

    // Copy with every event at or after t removed; entities untouched.
    OntologyStore censored_at(int64_t t) const;

    size_t n_entities() const { return ids_.size(); }
    size_t n_events() const;

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, OntologyEntity> entities_;
    std::unordered_map<std::string, std::vector<Event>> events_;
    static const std::vector<Event> kNoEvents;
};

struct BuildResult {
    OntologyStore store;
    std::vector<QuarantinedRow> orphan_events;
};

BuildResult build_ontology(const CleanStore& clean);

void save_store(const OntologyStore& store, const std::string& dir);
OntologyStore load_store(const std::string& dir);

void write_quarantine(const std::vector<QuarantinedRow>& rows,
                      const std::vector<std::string>& source_header,
                      const std::string& path);

}  // namespace portml::ontology
