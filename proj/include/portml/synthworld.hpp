#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "portml/rng.hpp"

namespace portml::synthworld {

struct WorldConfig {
    uint64_t seed = 7;
    int64_t n_containers = 10000;
    int64_t start_date = 0;  // epoch seconds, midnight UTC
    int64_t end_date = 0;
    int64_t n_consignees = 500;
    double variant_rate = 0.3;
    double service_base_rate = 0.33;
    std::array<double, 8> dwell_category_weights = {0.08, 0.10, 0.12, 0.12,
                                                    0.12, 0.10, 0.08, 0.28};
    double signal_strength = 0.8;
    double zipf_exponent = 1.1;      // per-consignee volume tail; not a calibrated target
    double corruption_rate = 0.0;    // fraction of container rows with planted weight inversion
    double first_char_break_rate = 0.0;
    std::string catalog_path = "data/hs_chapters.csv";

    void validate() const;  // throws std::invalid_argument on any violation
};

struct ContainerRow {
    std::string container_id;
    std::string consignee;  // free text, possibly a spelling variant
    std::string merchandise_description;
    std::string net_weight;    // as emitted, may carry thousands separators
    std::string gross_weight;
    std::string dimension;
    std::string container_type;
    std::string cargo_type;
    bool hazardous = false;
    bool liner_client = false;
    std::string shipping_line;
    std::string route;
    int64_t scheduled_arrival = 0;
};

struct EventRow {
    std::string container_id;
    std::string kind;  // arrival | service | exit | yard_move
    int64_t at = 0;
};

struct TruthRow {
    std::string container_id;
    int64_t consignee_canonical_id = 0;
    std::string canonical_name;
    int true_chapter = 0;
    int true_dwell_category = 0;  // 1..8
    double true_dwell_days = 0;
    bool service_flag = false;
    bool corrupted = false;
};

struct RawTables {
    std::vector<ContainerRow> containers;
    std::vector<EventRow> events;
    std::vector<TruthRow> truth;
};

RawTables generate_world(const WorldConfig& config);

// Emits the canonical name unchanged with probability 1 - variant_rate,
// otherwise a perturbation (punctuation insertion, corporate suffix, case
// change, single-character edit). The first character is preserved unless
// break_first_char draws true.
std::string emit_name_variant(const std::string& canonical_name, rng::Rng& rng,
                              double variant_rate, double first_char_break_rate = 0.0);

// Writes containers/events/truth as CSV with mandatory headers.
void write_tables(const RawTables& t, const std::string& containers_path,
                  const std::string& events_path, const std::string& truth_path);

}  // namespace portml::synthworld
