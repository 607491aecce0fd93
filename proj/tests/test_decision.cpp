#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "portml/decision.hpp"
#include "portml/rng.hpp"

using namespace portml;
using decision::DwellAssignment;
using decision::ScoreSet;

namespace {

ScoreSet make_scores(const std::vector<std::pair<std::string, double>>& entries,
                     const std::string& task = "service") {
    ScoreSet s;
    s.task_id = task;
    for (const auto& [id, v] : entries) s.entries[id] = v;
    return s;
}

// Independent reimplementation of the three-step assignment rule, written in
// terms of counting rather than sorting.
int oracle_rank(const ScoreSet& s, double threshold, const std::string& id) {
    double mine = s.entries.at(id);
    if (!(mine > threshold)) return 0;  // not selected
    int rank = 1;
    for (const auto& [other, v] : s.entries) {
        if (other == id || !(v > threshold)) continue;
        if (v > mine || (v == mine && other < id)) ++rank;
    }
    return rank;
}

DwellAssignment oracle_assign(const std::vector<ScoreSet>& ss,
                              const std::vector<double>& th) {
    DwellAssignment out;
    for (const auto& [id, unused] : ss[0].entries) {
        decision::DwellChoice best;
        bool found = false;
        for (int t = 0; t < 8; ++t) {
            int r = oracle_rank(ss[t], th[t], id);
            if (r == 0) continue;
            double score = ss[t].entries.at(id);
            double margin = score - th[t];
            if (found) {
                double bm = best.winning_score - th[best.task_index - 1];
                if (r > best.winning_rank) continue;
                if (r == best.winning_rank && margin <= bm) continue;
            }
            best = {t + 1, r, score, false};
            found = true;
        }
        if (!found) {
            int arg = 0;
            double bm = ss[0].entries.at(id) - th[0];
            for (int t = 1; t < 8; ++t) {
                double m = ss[t].entries.at(id) - th[t];
                if (m > bm) {
                    bm = m;
                    arg = t;
                }
            }
            best = {arg + 1, 0, ss[arg].entries.at(id), true};
        }
        out.emplace(id, best);
    }
    return out;
}

}  // namespace

TEST_CASE("rank_topk orders by score then id and truncates") {
    auto s = make_scores({{"b", 0.9}, {"a", 0.9}, {"c", 0.5}, {"d", 0.7}});
    auto top = decision::rank_topk(s, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].container_id == "a");  // tie with b broken by id
    CHECK(top[0].rank == 1);
    CHECK(top[0].score == 0.9);
    CHECK(top[1].container_id == "b");
    CHECK(top[1].rank == 2);
    CHECK(top[2].container_id == "d");
    CHECK(top[2].score == 0.7);
    // k beyond n returns everything; smaller k is a prefix (nesting).
    auto all = decision::rank_topk(s, 99);
    REQUIRE(all.size() == 4);
    CHECK(all[3].container_id == "c");
    for (size_t i = 0; i < top.size(); ++i) {
        CHECK(all[i].container_id == top[i].container_id);
        CHECK(all[i].rank == top[i].rank);
    }
    CHECK_THROWS_AS(decision::rank_topk(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(decision::rank_topk(ScoreSet{}, 3), std::invalid_argument);
}

TEST_CASE("rank_topk ordering is invariant under positive scaling") {
    auto s = make_scores({{"x", 0.31}, {"y", 0.72}, {"z", 0.11}, {"w", 0.55}});
    auto scaled = s;
    for (auto& [id, v] : scaled.entries) v *= 3.0;
    auto a = decision::rank_topk(s, 4), b = decision::rank_topk(scaled, 4);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].container_id == b[i].container_id);
        CHECK(a[i].rank == b[i].rank);
    }
}

TEST_CASE("assign_dwell validates its inputs") {
    std::vector<ScoreSet> ss(8, make_scores({{"a", 0.5}}));
    std::vector<double> th(8, 0.4);
    CHECK_NOTHROW(decision::assign_dwell(ss, th));
    CHECK_THROWS_AS(decision::assign_dwell({ss[0]}, th), std::invalid_argument);
    CHECK_THROWS_AS(decision::assign_dwell(ss, {0.4}), std::invalid_argument);
    auto bad = ss;
    bad[3] = make_scores({{"b", 0.5}});  // same size, different cohort
    CHECK_THROWS_AS(decision::assign_dwell(bad, th), std::invalid_argument);
    bad[3] = make_scores({{"a", 0.5}, {"b", 0.6}});  // extra container
    CHECK_THROWS_AS(decision::assign_dwell(bad, th), std::invalid_argument);
}

TEST_CASE("a container selected by exactly one label takes it") {
    std::vector<ScoreSet> ss;
    for (int t = 0; t < 8; ++t)
        ss.push_back(make_scores({{"a", t == 4 ? 0.9 : 0.1}}, "dt" + std::to_string(t + 1)));
    std::vector<double> th(8, 0.5);
    auto a = decision::assign_dwell(ss, th);
    REQUIRE(a.count("a"));
    CHECK(a.at("a").task_index == 5);
    CHECK(a.at("a").winning_rank == 1);
    CHECK(a.at("a").winning_score == 0.9);
    CHECK(!a.at("a").fallback);
}

TEST_CASE("smaller rank beats larger rank regardless of label index") {
    // Container "x" is rank 3 on dt2 but rank 1 on dt5.
    std::vector<ScoreSet> ss;
    for (int t = 0; t < 8; ++t) {
        if (t == 1) {
            // dt2: two competitors outscore x, all above threshold.
            ss.push_back(make_scores({{"x", 0.6}, {"c1", 0.8}, {"c2", 0.7}}, "dt2"));
        } else if (t == 4) {
            // dt5: only x clears the threshold.
            ss.push_back(make_scores({{"x", 0.55}, {"c1", 0.1}, {"c2", 0.1}}, "dt5"));
        } else {
            ss.push_back(make_scores({{"x", 0.0}, {"c1", 0.0}, {"c2", 0.0}},
                                     "dt" + std::to_string(t + 1)));
        }
    }
    std::vector<double> th(8, 0.5);
    auto a = decision::assign_dwell(ss, th);
    CHECK(a.at("x").task_index == 5);
    CHECK(a.at("x").winning_rank == 1);
    CHECK(a.at("c1").task_index == 2);
    CHECK(a.at("c1").winning_rank == 1);
    CHECK(a.at("c2").task_index == 2);
    CHECK(a.at("c2").winning_rank == 2);
}

TEST_CASE("equal ranks break by margin, then by lower label index") {
    // "m" is rank 1 on both dt3 (margin 0.2) and dt6 (margin 0.3): dt6 wins.
    std::vector<ScoreSet> ss;
    for (int t = 0; t < 8; ++t) {
        double s = 0.0;
        if (t == 2) s = 0.7;
        if (t == 5) s = 0.8;
        ss.push_back(make_scores({{"m", s}}, "dt" + std::to_string(t + 1)));
    }
    std::vector<double> th(8, 0.5);
    auto a = decision::assign_dwell(ss, th);
    CHECK(a.at("m").task_index == 6);
    CHECK(!a.at("m").fallback);

    // Identical margins on dt3 and dt6: the lower label index is kept.
    ss[5] = make_scores({{"m", 0.7}}, "dt6");
    auto b = decision::assign_dwell(ss, th);
    CHECK(b.at("m").task_index == 3);
}

TEST_CASE("containers below every threshold fall back to the max-margin label") {
    std::vector<ScoreSet> ss;
    // Thresholds differ so the best margin is not simply the best score.
    std::vector<double> th = {0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.5, 0.9};
    for (int t = 0; t < 8; ++t) {
        double s = t == 3 ? 0.6 : (t == 6 ? 0.45 : 0.1);
        ss.push_back(make_scores({{"f", s}}, "dt" + std::to_string(t + 1)));
    }
    // Margins: dt4 = 0.6-0.9 = -0.3, dt7 = 0.45-0.5 = -0.05 (best).
    auto a = decision::assign_dwell(ss, th);
    CHECK(a.at("f").fallback);
    CHECK(a.at("f").task_index == 7);
    CHECK(a.at("f").winning_rank == 0);
    CHECK(a.at("f").winning_score == 0.45);
}

TEST_CASE("every cohort container receives exactly one label") {
    rng::Rng r(61);
    std::vector<std::string> ids;
    for (int i = 0; i < 40; ++i)
        ids.push_back("c" + std::string(i < 10 ? "0" : "") + std::to_string(i));
    std::vector<ScoreSet> ss(8);
    for (int t = 0; t < 8; ++t) {
        ss[t].task_id = "dt" + std::to_string(t + 1);
        for (const auto& id : ids) ss[t].entries[id] = r.u01();
    }
    std::vector<double> th(8, 0.6);
    auto a = decision::assign_dwell(ss, th);
    REQUIRE(a.size() == ids.size());
    for (const auto& id : ids) {
        REQUIRE(a.count(id));
        CHECK(a.at(id).task_index >= 1);
        CHECK(a.at(id).task_index <= 8);
    }
}

TEST_CASE("assignment agrees with an independent counting oracle on random fixtures") {
    rng::Rng r(62);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 5 + int(r.below(20));
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i)
            ids.push_back("c" + std::string(i < 10 ? "0" : "") + std::to_string(i));
        std::vector<ScoreSet> ss(8);
        for (int t = 0; t < 8; ++t) {
            ss[t].task_id = "dt" + std::to_string(t + 1);
            // Coarse score lattice to provoke rank and margin ties.
            for (const auto& id : ids) ss[t].entries[id] = 0.1 * double(r.below(11));
        }
        std::vector<double> th(8);
        for (auto& v : th) v = 0.1 * double(1 + r.below(8));
        auto got = decision::assign_dwell(ss, th);
        auto want = oracle_assign(ss, th);
        REQUIRE(got.size() == want.size());
        for (const auto& [id, w] : want) {
            REQUIRE(got.count(id));
            const auto& g = got.at(id);
            CHECK(g.task_index == w.task_index);
            CHECK(g.winning_rank == w.winning_rank);
            CHECK(g.winning_score == w.winning_score);
            CHECK(g.fallback == w.fallback);
        }
    }
}

TEST_CASE("assignment is invariant under a common affine shift of scores and thresholds") {
    rng::Rng r(63);
    std::vector<ScoreSet> ss(8), shifted(8);
    std::vector<double> th(8), th2(8);
    for (int t = 0; t < 8; ++t) {
        ss[t].task_id = shifted[t].task_id = "dt" + std::to_string(t + 1);
        th[t] = 0.1 * double(1 + r.below(8));
        th2[t] = th[t] + 0.25;
        for (int i = 0; i < 12; ++i) {
            std::string id = "c" + std::to_string(100 + i);
            double v = 0.05 * double(r.below(20));
            ss[t].entries[id] = v;
            shifted[t].entries[id] = v + 0.25;
        }
    }
    auto a = decision::assign_dwell(ss, th);
    auto b = decision::assign_dwell(shifted, th2);
    for (const auto& [id, c] : a) {
        CHECK(b.at(id).task_index == c.task_index);
        CHECK(b.at(id).winning_rank == c.winning_rank);
        CHECK(b.at(id).fallback == c.fallback);
    }
}
