#include "portml/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "portml/csv.hpp"
#include "portml/hsclass.hpp"
#include "portml/timeutil.hpp"

namespace portml::synthworld {

namespace {

using timeutil::kSecondsPerDay;

constexpr const char* kDimensions[] = {"20FT", "40FT", "40HC", "45FT"};
constexpr const char* kContainerTypes[] = {"DRY", "REEFER", "OPEN_TOP", "TANK", "FLAT_RACK"};
constexpr const char* kCargoTypes[] = {"GENERAL", "REEFER", "HAZARDOUS", "BULK"};
constexpr const char* kSuffixes[] = {" SA", " CO", " SPA", " AG"};
constexpr const char* kNoiseWords[] = {"CARGO", "BOXED", "PALLETIZED", "GENERAL", "GOODS",
                                       "ASSORTED", "SHIPMENT", "CONSOLIDATED"};

std::string make_word(rng::Rng& r) {
    static const char* syl[] = {"BA", "CO", "DEL", "FER", "GAL", "HOR", "KAN", "LIM",
                                "MON", "NOR", "PRA", "QUI", "ROS", "SAL", "TOR", "VAL",
                                "WES", "ZAN", "MER", "TRI", "DUR", "PEL", "VIS", "ORT"};
    int ns = 3 + static_cast<int>(r.below(2));
    std::string w;
    for (int i = 0; i < ns; ++i) w += syl[r.below(std::size(syl))];
    return w;
}

// Canonical consignee names; kept long enough that the gentler perturbation
// classes stay above the default 0.8 trigram threshold.
std::vector<std::string> make_canonical_names(rng::Rng& r, int64_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    std::vector<std::string> seen;
    while (static_cast<int64_t>(names.size()) < n) {
        std::string name;
        int words = 4;
        for (int i = 0; i < words; ++i) {
            if (i) name += ' ';
            name += make_word(r);
        }
        while (name.size() < 30) name += ' ' + make_word(r);
        if (std::find(names.begin(), names.end(), name) == names.end())
            names.push_back(std::move(name));
    }
    return names;
}

// Greedy 0/1 planting (one fractional remainder) so that the volume-weighted
// mean of q equals target exactly in expectation.
std::vector<double> plant_binary_propensity(const std::vector<double>& volume_share,
                                            double target, rng::Rng& r) {
    size_t n = volume_share.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[r.below(i)]);
    std::vector<double> q(n, 0.0);
    double cum = 0;
    for (size_t idx : order) {
        double w = volume_share[idx];
        if (cum + w <= target) {
            q[idx] = 1.0;
            cum += w;
        } else if (cum < target) {
            q[idx] = (target - cum) / w;
            cum = target;
        }
    }
    return q;
}

// Apportion 97 chapter slots to the 8 dwell categories by largest remainder,
// then assign categories to a shuffled chapter order in runs.
std::vector<int> plant_chapter_categories(const std::array<double, 8>& weights,
                                          rng::Rng& r) {
    const int n_ch = hsclass::kNumChapters;
    std::array<int, 8> slots{};
    std::array<double, 8> rem{};
    int used = 0;
    for (int k = 0; k < 8; ++k) {
        double exact = weights[k] * n_ch;
        slots[k] = static_cast<int>(std::floor(exact));
        rem[k] = exact - slots[k];
        used += slots[k];
    }
    std::vector<int> by_rem(8);
    std::iota(by_rem.begin(), by_rem.end(), 0);
    std::stable_sort(by_rem.begin(), by_rem.end(),
                     [&](int a, int b) { return rem[a] > rem[b]; });
    for (int i = 0; i < n_ch - used; ++i) slots[by_rem[i % 8]] += 1;

    std::vector<int> chapters(n_ch);
    std::iota(chapters.begin(), chapters.end(), 1);
    for (size_t i = chapters.size(); i > 1; --i)
        std::swap(chapters[i - 1], chapters[r.below(i)]);
    std::vector<int> cat_of(n_ch + 1, 0);
    size_t pos = 0;
    for (int k = 0; k < 8; ++k)
        for (int s = 0; s < slots[k]; ++s) cat_of[chapters[pos++]] = k + 1;
    return cat_of;
}

std::string format_weight(double kg, bool thousands, rng::Rng&) {
    long v = static_cast<long>(std::lround(kg));
    std::string s = std::to_string(v);
    if (thousands && s.size() > 3) {
        std::string out;
        int lead = static_cast<int>(s.size()) % 3;
        if (lead == 0) lead = 3;
        out = s.substr(0, lead);
        for (size_t i = lead; i < s.size(); i += 3) out += "," + s.substr(i, 3);
        return out;
    }
    return s;
}

}  // namespace

void WorldConfig::validate() const {
    if (n_containers <= 0) throw std::invalid_argument("n_containers must be positive");
    if (end_date <= start_date) throw std::invalid_argument("end_date must follow start_date");
    if (n_consignees <= 0) throw std::invalid_argument("n_consignees must be positive");
    double sum = 0;
    for (double w : dwell_category_weights) {
        if (w < 0) throw std::invalid_argument("negative dwell weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("dwell_category_weights must sum to 1");
    for (double f : {variant_rate, service_base_rate, signal_strength, corruption_rate,
                     first_char_break_rate})
        if (f < 0 || f > 1) throw std::invalid_argument("fraction out of [0,1]");
    if (end_date - start_date < 62 * kSecondsPerDay)
        throw std::invalid_argument("date span too short (need at least ~2 months)");
}

std::string emit_name_variant(const std::string& canonical_name, rng::Rng& rng,
                              double variant_rate, double first_char_break_rate) {
    if (canonical_name.empty()) throw std::invalid_argument("empty canonical name");
    if (!rng.bernoulli(variant_rate)) return canonical_name;

    std::string s = canonical_name;
    if (first_char_break_rate > 0 && rng.bernoulli(first_char_break_rate)) {
        return "THE " + s;  // breaks first-character blocking on purpose
    }
    switch (rng.below(4)) {
        case 0: {  // punctuation insertion after a word boundary
            size_t pos = 1 + rng.below(s.size() - 1);
            while (pos < s.size() && s[pos] != ' ') ++pos;
            s.insert(pos, ".");
            break;
        }
        case 1:  // corporate suffix
            s += kSuffixes[rng.below(std::size(kSuffixes))];
            break;
        case 2: {  // case change; normalizes away in linkage
            for (size_t i = 1; i < s.size(); ++i)
                if (s[i - 1] != ' ' && s[i] >= 'A' && s[i] <= 'Z')
                    s[i] = static_cast<char>(s[i] - 'A' + 'a');
            break;
        }
        default: {  // single-character substitution, never position 0
            size_t pos = 1 + rng.below(s.size() - 1);
            char repl = static_cast<char>('A' + rng.below(26));
            if (s[pos] == repl) repl = (repl == 'Z') ? 'A' : static_cast<char>(repl + 1);
            s[pos] = repl;
            break;
        }
    }
    return s;
}

RawTables generate_world(const WorldConfig& config) {
    config.validate();
    rng::Rng r(config.seed);
    RawTables out;

    auto catalog = hsclass::load_catalog(config.catalog_path);
    std::vector<std::vector<std::string>> chapter_vocab(hsclass::kNumChapters + 1);
    for (const auto& e : catalog.chapters)
        chapter_vocab[e.chapter] = hsclass::tokenize(e.definition);

    auto names = make_canonical_names(r, config.n_consignees);

    // Zipf-tailed consignee volume.
    std::vector<double> vol(config.n_consignees);
    double vol_sum = 0;
    for (int64_t c = 0; c < config.n_consignees; ++c) {
        vol[c] = 1.0 / std::pow(static_cast<double>(c + 1), config.zipf_exponent);
        vol_sum += vol[c];
    }
    std::vector<double> share(config.n_consignees), cdf(config.n_consignees);
    double acc = 0;
    for (int64_t c = 0; c < config.n_consignees; ++c) {
        share[c] = vol[c] / vol_sum;
        acc += share[c];
        cdf[c] = acc;
    }

    auto q_cons = plant_binary_propensity(share, config.service_base_rate, r);
    std::vector<double> chapter_share(hsclass::kNumChapters, 1.0 / hsclass::kNumChapters);
    auto q_chap = plant_binary_propensity(chapter_share, config.service_base_rate, r);
    auto cat_of_chapter = plant_chapter_categories(config.dwell_category_weights, r);

    const int n_lines = 12, n_routes = 20;
    std::vector<std::string> lines, routes;
    for (int i = 0; i < n_lines; ++i) lines.push_back("LINE" + std::to_string(i + 1));
    for (int i = 0; i < n_routes; ++i) routes.push_back("ROUTE" + std::to_string(i + 1));

    // Variant pools are built lazily and reused so the unique-string universe
    // stays bounded.
    std::vector<std::vector<std::string>> variant_pool(config.n_consignees);

    const int64_t arrival_lo = config.start_date + kSecondsPerDay;
    const int64_t arrival_hi = config.end_date - 31 * kSecondsPerDay;
    const double s = config.signal_strength;

    out.containers.reserve(config.n_containers);
    out.truth.reserve(config.n_containers);

    for (int64_t i = 0; i < config.n_containers; ++i) {
        ContainerRow row;
        TruthRow tr;
        char idbuf[24];
        std::snprintf(idbuf, sizeof(idbuf), "CT%08lld", static_cast<long long>(i + 1));
        row.container_id = idbuf;
        tr.container_id = idbuf;

        // Consignee draw from the Zipf cdf.
        double u = r.u01();
        int64_t cons = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
        if (cons >= config.n_consignees) cons = config.n_consignees - 1;
        tr.consignee_canonical_id = cons;
        tr.canonical_name = names[cons];

        if (r.bernoulli(config.variant_rate)) {
            auto& pool = variant_pool[cons];
            if (pool.size() < 4 || r.bernoulli(0.25)) {
                pool.push_back(
                    emit_name_variant(names[cons], r, 1.0, config.first_char_break_rate));
            }
            row.consignee = pool[r.below(pool.size())];
        } else {
            row.consignee = names[cons];
        }

        int chapter = 1 + static_cast<int>(r.below(hsclass::kNumChapters));
        tr.true_chapter = chapter;

        // Merchandise description: keyword bag from the chapter vocabulary,
        // ~25% carrying an explicit HS code token.
        std::string desc;
        if (r.bernoulli(0.25)) {
            int heading = 10 + static_cast<int>(r.below(90));
            char code[16];
            if (r.bernoulli(0.5))
                std::snprintf(code, sizeof(code), "%02d%02d.%02d", chapter, heading % 100,
                              static_cast<int>(r.below(90)) + 10);
            else
                std::snprintf(code, sizeof(code), "%02d%02d", chapter, heading % 100);
            desc = code;
        }
        const auto& vocab = chapter_vocab[chapter];
        int n_tok = 4 + static_cast<int>(r.below(4));
        for (int t = 0; t < n_tok; ++t) {
            if (!desc.empty()) desc += ' ';
            desc += vocab[r.below(vocab.size())];
        }
        int n_noise = static_cast<int>(r.below(3));
        for (int t = 0; t < n_noise; ++t)
            desc += std::string(" ") + kNoiseWords[r.below(std::size(kNoiseWords))];
        row.merchandise_description = desc;

        // Outcomes.
        double p_service = (1 - s) * config.service_base_rate +
                           s * 0.5 * (q_cons[cons] + q_chap[chapter - 1]);
        tr.service_flag = r.bernoulli(p_service);

        int cat;
        if (r.bernoulli(s)) {
            cat = cat_of_chapter[chapter];
        } else {
            std::vector<double> w(config.dwell_category_weights.begin(),
                                  config.dwell_category_weights.end());
            cat = 1 + static_cast<int>(r.categorical(w));
        }
        tr.true_dwell_category = cat;
        double dwell_days;
        if (cat == 1) dwell_days = r.uniform(0.25, 1.99);
        else if (cat == 8) dwell_days = r.uniform(8.0, 21.0);
        else dwell_days = r.uniform(static_cast<double>(cat), cat + 0.999);
        tr.true_dwell_days = dwell_days;

        int64_t arrival = arrival_lo + static_cast<int64_t>(r.u01() * (arrival_hi - arrival_lo));
        arrival -= arrival % 60;
        row.scheduled_arrival = arrival;
        int64_t exit_ts = arrival + static_cast<int64_t>(dwell_days * kSecondsPerDay);

        out.events.push_back({row.container_id, "arrival", arrival});
        if (tr.service_flag) {
            double svc_days = r.uniform(0.05, std::min(dwell_days * 0.9, 5.5));
            out.events.push_back(
                {row.container_id, "service",
                 arrival + static_cast<int64_t>(svc_days * kSecondsPerDay)});
        }
        int n_moves = r.poisson(0.4 + 0.2 * std::min(dwell_days, 12.0));
        std::vector<int64_t> move_ts;
        for (int m = 0; m < n_moves; ++m)
            move_ts.push_back(arrival + 1 +
                              static_cast<int64_t>(r.u01() * (exit_ts - arrival - 2)));
        std::sort(move_ts.begin(), move_ts.end());
        for (int64_t t : move_ts) out.events.push_back({row.container_id, "yard_move", t});
        out.events.push_back({row.container_id, "exit", exit_ts});

        // Attributes.
        double net = r.uniform(500, 28000);
        double tare = r.uniform(1800, 4500);
        tr.corrupted = r.bernoulli(config.corruption_rate);
        double g = net + tare, nn = net;
        if (tr.corrupted) std::swap(g, nn);  // planted weight inversion
        bool thousands = r.bernoulli(0.1);
        row.net_weight = format_weight(nn, thousands, r);
        row.gross_weight = format_weight(g, thousands, r);
        row.dimension = kDimensions[r.below(std::size(kDimensions))];
        row.container_type = kContainerTypes[r.below(std::size(kContainerTypes))];
        row.cargo_type = kCargoTypes[r.below(std::size(kCargoTypes))];
        row.hazardous = row.cargo_type == "HAZARDOUS";
        row.liner_client = r.bernoulli(0.3);
        row.shipping_line = lines[r.below(lines.size())];
        row.route = routes[r.below(routes.size())];

        out.containers.push_back(std::move(row));
        out.truth.push_back(std::move(tr));
    }
    return out;
}

void write_tables(const RawTables& t, const std::string& containers_path,
                  const std::string& events_path, const std::string& truth_path) {
    csv::Table ct;
    ct.header = {"container_id", "consignee", "merchandise_description", "net_weight",
                 "gross_weight", "dimension", "container_type", "cargo_type", "hazardous",
                 "liner_client", "shipping_line", "route", "scheduled_arrival"};
    for (const auto& c : t.containers)
        ct.rows.push_back({c.container_id, c.consignee, c.merchandise_description,
                           c.net_weight, c.gross_weight, c.dimension, c.container_type,
                           c.cargo_type, c.hazardous ? "1" : "0", c.liner_client ? "1" : "0",
                           c.shipping_line, c.route, timeutil::format_iso(c.scheduled_arrival)});
    csv::write_file(containers_path, ct);

    csv::Table et;
    et.header = {"container_id", "kind", "at"};
    for (const auto& e : t.events)
        et.rows.push_back({e.container_id, e.kind, timeutil::format_iso(e.at)});
    csv::write_file(events_path, et);

    csv::Table tt;
    tt.header = {"container_id", "consignee_canonical_id", "canonical_name", "true_chapter",
                 "true_dwell_category", "true_dwell_days", "service_flag", "corrupted"};
    for (const auto& x : t.truth) {
        char days[32];
        std::snprintf(days, sizeof(days), "%.6f", x.true_dwell_days);
        tt.rows.push_back({x.container_id, std::to_string(x.consignee_canonical_id),
                           x.canonical_name, std::to_string(x.true_chapter),
                           std::to_string(x.true_dwell_category), days,
                           x.service_flag ? "1" : "0", x.corrupted ? "1" : "0"});
    }
    csv::write_file(truth_path, tt);
}

}  // namespace portml::synthworld
