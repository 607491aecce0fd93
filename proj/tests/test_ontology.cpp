#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "portml/ontology.hpp"
#include "portml/synthworld.hpp"
#include "portml/timeutil.hpp"

using namespace portml;
namespace fs = std::filesystem;

namespace {

const std::string kContainerHeader =
    "container_id,consignee,merchandise_description,net_weight,gross_weight,dimension,"
    "container_type,cargo_type,hazardous,liner_client,shipping_line,route,scheduled_arrival";
const std::string kEventHeader = "container_id,kind,at";

std::string container_row(const std::string& id, const std::string& net,
                          const std::string& gross, const std::string& consignee = "ACME",
                          const std::string& sched = "2020-03-01T08:00:00") {
    return id + "," + consignee + ",WIDGETS," + net + "," + gross +
           ",40ft,dry,general,0,0,LINE1,ROUTE1," + sched;
}

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / ("portml_ont_" + std::to_string(::getpid()) + "_" +
                                           std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string file(const std::string& name, const std::string& content) {
        auto p = (dir / name).string();
        std::ofstream(p) << content;
        return p;
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

synthworld::WorldConfig small_world_config() {
    synthworld::WorldConfig w;
    w.seed = 21;
    w.n_containers = 3000;
    w.start_date = timeutil::parse_iso("2020-01-01");
    w.end_date = timeutil::parse_iso("2021-01-01");
    w.n_consignees = 120;
    w.corruption_rate = 0.01;
    w.catalog_path = std::string(PORTML_DATA_DIR) + "/hs_chapters.csv";
    return w;
}

struct GeneratedFiles {
    TempDir tmp;
    std::string containers, events, truth;
    synthworld::RawTables tables;
    GeneratedFiles() {
        tables = synthworld::generate_world(small_world_config());
        containers = (tmp.dir / "containers.csv").string();
        events = (tmp.dir / "events.csv").string();
        truth = (tmp.dir / "truth.csv").string();
        synthworld::write_tables(tables, containers, events, truth);
    }
};

}  // namespace

TEST_CASE("identity ingestion preserves row counts and bytes") {
    GeneratedFiles g;
    auto raw = ontology::ingest_raw(g.containers, g.events);
    CHECK(raw.containers.rows.size() == g.tables.containers.size());
    CHECK(raw.events.rows.size() == g.tables.events.size());
    // spot-check verbatim preservation
    CHECK(raw.containers.rows[0][1] == g.tables.containers[0].consignee);
    CHECK(raw.containers.rows[0][3] == g.tables.containers[0].net_weight);
}

TEST_CASE("missing file and malformed header are rejected") {
    TempDir tmp;
    auto ev = tmp.file("e.csv", kEventHeader + "\n");
    CHECK_THROWS(ontology::ingest_raw((tmp.dir / "nope.csv").string(), ev));
    auto bad = tmp.file("bad.csv", "container_id,consignee\nX,Y\n");
    CHECK_THROWS_WITH_AS(ontology::ingest_raw(bad, ev),
                         doctest::Contains("malformed header"), std::runtime_error);
}

TEST_CASE("wrong column counts are reported with line numbers") {
    TempDir tmp;
    auto ev = tmp.file("e.csv", kEventHeader + "\n");
    std::string content = kContainerHeader + "\n" + container_row("C1", "100", "200") + "\n" +
                          "C2,short,row\n" + container_row("C3", "100", "200") + "\n" +
                          "C4,also,short\n";
    auto cf = tmp.file("c.csv", content);
    try {
        ontology::ingest_raw(cf, ev);
        FAIL("expected a malformed-row error");
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("3") != std::string::npos);
        CHECK(msg.find("5") != std::string::npos);
    }
}

TEST_CASE("empty file with valid header ingests zero rows") {
    TempDir tmp;
    auto cf = tmp.file("c.csv", kContainerHeader + "\n");
    auto ev = tmp.file("e.csv", kEventHeader + "\n");
    auto raw = ontology::ingest_raw(cf, ev);
    CHECK(raw.containers.rows.empty());
    CHECK(raw.events.rows.empty());
}

TEST_CASE("clean parses thousands separators and quarantines invariant violators") {
    TempDir tmp;
    std::string content = kContainerHeader + "\n" +
                          container_row("C1", "\"12,500\"", "\"13,000\"") + "\n" +  // ok
                          container_row("C2", "300", "200") + "\n" +                // inversion
                          container_row("C3", "abc", "200") + "\n" +                // unparseable
                          container_row("C4", "-5", "200") + "\n" +                 // negative
                          container_row("C5", "100", "200", "") + "\n" +            // no consignee
                          container_row("C6", "100", "200", "ACME", "") + "\n" +    // no sched
                          container_row("C7", "100", "200", "ACME", "not-a-date") + "\n";
    auto cf = tmp.file("c.csv", content);
    auto ev = tmp.file("e.csv", kEventHeader + "\nC1,arrival,2020-03-01T09:00:00\n");
    auto clean = ontology::clean(ontology::ingest_raw(cf, ev), 0.99);
    REQUIRE(clean.containers.size() == 1);
    CHECK(clean.containers[0].net_weight == doctest::Approx(12500.0));
    CHECK(clean.containers[0].gross_weight == doctest::Approx(13000.0));
    REQUIRE(clean.quarantined_containers.size() == 6);
    auto reason_of = [&](const std::string& id) {
        for (const auto& q : clean.quarantined_containers)
            if (q.fields[0] == id) return q.reason;
        return std::string("<missing>");
    };
    CHECK(reason_of("C2") == "weight inversion");
    CHECK(reason_of("C3") == "unparseable weight");
    CHECK(reason_of("C4") == "negative weight");
    CHECK(reason_of("C5") == "missing consignee");
    CHECK(reason_of("C6") == "missing scheduled_arrival");
    CHECK(reason_of("C7") == "bad scheduled_arrival timestamp");
}

TEST_CASE("excessive rejection rate aborts") {
    TempDir tmp;
    std::string content = kContainerHeader + "\n";
    for (int i = 0; i < 10; ++i)
        content += container_row("C" + std::to_string(i), "300", "200") + "\n";  // all inverted
    auto cf = tmp.file("c.csv", content);
    auto ev = tmp.file("e.csv", kEventHeader + "\n");
    CHECK_THROWS_WITH_AS(ontology::clean(ontology::ingest_raw(cf, ev), 0.5),
                         doctest::Contains("schema mismatch"), std::runtime_error);
}

TEST_CASE("planted corruption count equals the quarantine count exactly") {
    GeneratedFiles g;
    size_t planted = 0;
    for (const auto& x : g.tables.truth) planted += x.corrupted ? 1 : 0;
    REQUIRE(planted > 0);
    auto clean = ontology::clean(ontology::ingest_raw(g.containers, g.events), 0.5);
    size_t inversions = 0;
    for (const auto& q : clean.quarantined_containers)
        if (q.reason == "weight inversion") ++inversions;
    CHECK(inversions == planted);
    // Round trip accounting: kept + quarantined = ingested.
    CHECK(clean.containers.size() + clean.quarantined_containers.size() ==
          g.tables.containers.size());
    CHECK(clean.events.size() + clean.quarantined_events.size() == g.tables.events.size());
}

TEST_CASE("build orders events and quarantines orphans") {
    TempDir tmp;
    auto cf = tmp.file("c.csv", kContainerHeader + "\n" + container_row("C1", "100", "200") +
                                    "\n");
    auto ev = tmp.file("e.csv", kEventHeader +
                                    "\nC1,exit,2020-03-09T10:00:00"
                                    "\nC1,arrival,2020-03-02T10:00:00"
                                    "\nC1,service,2020-03-04T10:00:00"
                                    "\nGHOST,arrival,2020-03-02T10:00:00\n");
    auto built = ontology::build_ontology(
        ontology::clean(ontology::ingest_raw(cf, ev), 0.5));
    REQUIRE(built.orphan_events.size() == 1);
    CHECK(built.orphan_events[0].fields[0] == "GHOST");
    const auto& evs = built.store.all_events("C1");
    REQUIRE(evs.size() == 3);
    CHECK(evs[0].kind == ontology::EventKind::arrival);
    CHECK(evs[1].kind == ontology::EventKind::service);
    CHECK(evs[2].kind == ontology::EventKind::exit);
    CHECK(std::is_sorted(evs.begin(), evs.end(),
                         [](const auto& a, const auto& b) { return a.at < b.at; }));

    // Strict cutoff: nothing before the first event's own timestamp.
    CHECK(built.store.events_before("C1", evs[0].at).empty());
    CHECK(built.store.events_before("C1", evs[0].at + 1).size() == 1);
}

TEST_CASE("events_before matches a linear-scan oracle on a generated world") {
    GeneratedFiles g;
    auto built = ontology::build_ontology(
        ontology::clean(ontology::ingest_raw(g.containers, g.events), 0.5));
    std::unordered_map<std::string, std::vector<std::pair<int64_t, std::string>>> oracle;
    for (const auto& e : g.tables.events)
        oracle[e.container_id].emplace_back(timeutil::parse_iso(
                                                timeutil::format_iso(e.at)),
                                            e.kind);
    int64_t t0 = timeutil::parse_iso("2020-04-01");
    int64_t t1 = timeutil::parse_iso("2020-08-01");
    for (const auto& id : built.store.container_ids()) {
        for (int64_t t : {t0, t1}) {
            auto got = built.store.events_before(id, t);
            size_t expect = 0;
            for (const auto& [at, kind] : oracle[id])
                if (at < t) ++expect;
            CHECK(got.size() == expect);
            for (const auto& e : got) CHECK(e.at < t);
        }
        // As-of monotonicity: earlier cutoff yields a prefix.
        auto a = built.store.events_before(id, t0);
        auto b = built.store.events_before(id, t1);
        REQUIRE(a.size() <= b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].at == b[i].at);
            CHECK(a[i].kind == b[i].kind);
        }
    }
}

TEST_CASE("censored store drops exactly the events at or after the cutoff") {
    GeneratedFiles g;
    auto built = ontology::build_ontology(
        ontology::clean(ontology::ingest_raw(g.containers, g.events), 0.5));
    int64_t cut = timeutil::parse_iso("2020-06-15");
    auto censored = built.store.censored_at(cut);
    CHECK(censored.n_entities() == built.store.n_entities());
    size_t expect = 0;
    for (const auto& id : built.store.container_ids())
        expect += built.store.events_before(id, cut).size();
    CHECK(censored.n_events() == expect);
    for (const auto& id : censored.container_ids())
        for (const auto& e : censored.all_events(id)) CHECK(e.at < cut);
}

TEST_CASE("store save/load round trip preserves entities and events") {
    GeneratedFiles g;
    auto built = ontology::build_ontology(
        ontology::clean(ontology::ingest_raw(g.containers, g.events), 0.5));
    // exercise the enrichment fields
    auto& first = built.store.entity_mut(built.store.container_ids()[0]);
    first.consignee_id = 42;
    first.hs_chapter = 85;
    first.hs_section = 16;
    TempDir tmp;
    auto dir = (tmp.dir / "store").string();
    ontology::save_store(built.store, dir);
    auto back = ontology::load_store(dir);
    REQUIRE(back.n_entities() == built.store.n_entities());
    REQUIRE(back.n_events() == built.store.n_events());
    const auto& e0 = back.entity(built.store.container_ids()[0]);
    CHECK(e0.consignee_id == 42);
    CHECK(e0.hs_chapter == 85);
    CHECK(e0.hs_section == 16);
    for (const auto& id : built.store.container_ids()) {
        const auto& a = built.store.all_events(id);
        const auto& b = back.all_events(id);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].at == b[i].at);
            CHECK(a[i].kind == b[i].kind);
        }
        CHECK(built.store.entity(id).base.merchandise_description ==
              back.entity(id).base.merchandise_description);
    }
}

TEST_CASE("quarantine file mirrors the source schema plus a reason column") {
    GeneratedFiles g;
    auto raw = ontology::ingest_raw(g.containers, g.events);
    auto clean = ontology::clean(raw, 0.5);
    REQUIRE(!clean.quarantined_containers.empty());
    TempDir tmp;
    auto qp = (tmp.dir / "q.csv").string();
    ontology::write_quarantine(clean.quarantined_containers, raw.containers.header, qp);
    auto q = csv::read_file(qp);
    auto expected = raw.containers.header;
    expected.push_back("reason");
    CHECK(q.header == expected);
    CHECK(q.rows.size() == clean.quarantined_containers.size());
}
