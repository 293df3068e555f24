#include <gtest/gtest.h>

#include <sstream>

#include <diar/scoring.hpp>

#include "der_oracle.hpp"
#include "test_util.hpp"

using namespace diar;

namespace {

Diarization diar_of(std::vector<SpeakerTurn> recs, const std::string& id = "rec") {
    Diarization d;
    d.recording_id = id;
    d.records = std::move(recs);
    d.normalize();
    return d;
}

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

std::size_t parse_error_line(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_rttm(in);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST(Rttm, ParsesSpeakerLine) {
    std::istringstream in("SPEAKER rec1 1 0.000 2.500 <NA> <NA> spkA <NA> <NA>\n");
    auto m = parse_rttm(in);
    ASSERT_EQ(m.size(), 1u);
    const auto& d = m.at("rec1");
    ASSERT_EQ(d.records.size(), 1u);
    EXPECT_EQ(d.records[0], (SpeakerTurn{"spkA", 0.0, 2.5}));
}

TEST(Rttm, SkipsOtherTypesAndGroupsRecordings) {
    std::istringstream in(
        "SPKR-INFO rec1 1 <NA> <NA> <NA> unknown spkA <NA> <NA>\n"
        "SPEAKER rec2 1 1.000 1.000 <NA> <NA> b <NA> <NA>\n"
        "\n"
        "SPEAKER rec1 1 3.000 1.000 <NA> <NA> a <NA> <NA>\n"
        "SPEAKER rec1 1 0.500 1.000 <NA> <NA> a <NA> <NA>\n");
    auto m = parse_rttm(in);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.at("rec1").records.size(), 2u);
    EXPECT_EQ(m.at("rec1").records[0].onset, 0.5);
    EXPECT_EQ(m.at("rec2").recording_id, "rec2");
}

TEST(Rttm, ErrorsReportLineNumber) {
    EXPECT_EQ(parse_error_line("SPEAKER r 1 0.0 1.0 <NA> <NA> a <NA>\n"), 1u);
    EXPECT_EQ(parse_error_line("SPEAKER r 1 0.0 1.0 <NA> <NA> a <NA> <NA>\nSPEAKER r 1 2.0 -1.0 <NA> <NA> a <NA> <NA>\n"), 2u);
    EXPECT_EQ(parse_error_line("\n\nSPEAKER r 1 zero 1.0 <NA> <NA> a <NA> <NA>\n"), 3u);
    EXPECT_EQ(parse_error_line("SPEAKER r x 0.0 1.0 <NA> <NA> a <NA> <NA>\n"), 1u);
}

TEST(Rttm, FormatHasThreeDecimals) {
    auto d = diar_of({{"a", 1.23456, 2.5}});
    EXPECT_EQ(format_rttm(d), "SPEAKER rec 1 1.235 1.265 <NA> <NA> a <NA> <NA>\n");
}

TEST(Rttm, RoundTripWithinOneMillisecond) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    testutil::TempDir dir;
    for (int trial = 0; trial < 200; ++trial) {
        Diarization d;
        d.recording_id = "rec" + std::to_string(trial % 3);
        double t = 10 * u(gen);
        for (int i = 0; i < 6; ++i) {
            double e = t + 0.05 + 3 * u(gen);
            d.records.push_back({"s" + std::to_string(i % 3), t, e});
            t = e + 0.02 + u(gen);
        }
        d.normalize();
        write_rttm(d, dir.path / "x.rttm");
        auto back = read_rttm(dir.path / "x.rttm").at(d.recording_id);
        ASSERT_EQ(back.records.size(), d.records.size());
        for (std::size_t i = 0; i < d.records.size(); ++i) {
            EXPECT_EQ(back.records[i].speaker, d.records[i].speaker);
            EXPECT_NEAR(back.records[i].onset, d.records[i].onset, 1e-3);
            EXPECT_NEAR(back.records[i].offset, d.records[i].offset, 1e-3);
        }
    }
    EXPECT_THROW(read_rttm(dir.path / "missing.rttm"), Error);
}

TEST(Uem, ParsesAndValidates) {
    std::istringstream in(";; comment\nrec 1 0.0 5.0\nrec 1 7.0 9.0\nother 1 1 2\n");
    auto uem = parse_uem(in);
    ASSERT_NE(uem.find("rec"), nullptr);
    EXPECT_EQ(uem.find("rec")->size(), 2u);
    EXPECT_EQ(uem.find("none"), nullptr);
    std::istringstream bad("rec 1 5.0 4.0\n");
    EXPECT_THROW(parse_uem(bad), ParseError);
    std::istringstream short_line("rec 1 5.0\n");
    EXPECT_THROW(parse_uem(short_line), ParseError);
}

TEST(Mapping, DiagonalDominant) {
    auto m = optimal_mapping(from_rows({{5, 1}, {0, 4}}));
    EXPECT_EQ(m, (std::vector<int>{0, 1}));
}

TEST(Mapping, DegenerateZero) { EXPECT_EQ(optimal_mapping(from_rows({{0}})), (std::vector<int>{0})); }

TEST(Mapping, RectangularMapsSmallerSide) {
    // 2 references x 3 hypotheses: both references mapped, one hypothesis left over
    auto m = optimal_mapping(from_rows({{1, 5, 0}, {4, 0, 2}}));
    EXPECT_EQ(m, (std::vector<int>{1, 0}));
    // 3 references x 2 hypotheses: every hypothesis mapped
    auto t = optimal_mapping(from_rows({{1, 4}, {5, 0}, {0, 2}}));
    int mapped = 0;
    for (int c : t) mapped += c >= 0;
    EXPECT_EQ(mapped, 2);
    EXPECT_EQ(t, (std::vector<int>{1, 0, -1}));
}

TEST(Mapping, TiesLexicographic) {
    EXPECT_EQ(optimal_mapping(from_rows({{1, 1}, {1, 1}})), (std::vector<int>{0, 1}));
    EXPECT_EQ(optimal_mapping(from_rows({{0, 0, 0}, {0, 0, 0}})), (std::vector<int>{0, 1}));
}

TEST(Mapping, MatchesExhaustiveSearch) {
    std::mt19937_64 gen(8);
    std::uniform_int_distribution<int> val(0, 4);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t r = 1 + trial % 4, c = 1 + (trial / 4) % 4;
        Matrix m(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) m(i, j) = val(gen);
        // exhaustive: best total over injective row -> column-or-none maps
        double best = 0;
        std::vector<int> assign(r, -1);
        auto rec = [&](auto&& self, std::size_t i, double acc) -> void {
            if (i == r) {
                best = std::max(best, acc);
                return;
            }
            for (int j = -1; j < static_cast<int>(c); ++j) {
                if (j >= 0 && std::find(assign.begin(), assign.begin() + static_cast<long>(i), j) !=
                                  assign.begin() + static_cast<long>(i))
                    continue;
                assign[i] = j;
                self(self, i + 1, acc + (j >= 0 ? m(i, static_cast<std::size_t>(j)) : 0.0));
            }
            assign[i] = -1;
        };
        rec(rec, 0, 0.0);
        auto got = optimal_mapping(m);
        double total = 0;
        std::vector<int> used;
        for (std::size_t i = 0; i < r; ++i) {
            if (got[i] < 0) continue;
            EXPECT_EQ(std::count(used.begin(), used.end(), got[i]), 0);
            used.push_back(got[i]);
            total += m(i, static_cast<std::size_t>(got[i]));
        }
        EXPECT_EQ(total, best);
        EXPECT_EQ(used.size(), std::min(r, c));
    }
}

TEST(Der, IdenticalIsZero) {
    auto d = diar_of({{"A", 0, 3}, {"B", 2, 6}, {"A", 7, 9}});
    for (double collar : {0.0, 0.25, 1.0}) EXPECT_EQ(der(d, d, collar).der, 0.0);
}

TEST(Der, SplitSingleSpeaker) {
    auto ref = diar_of({{"A", 0, 10}});
    auto hyp = diar_of({{"spk1", 0, 8}, {"spk2", 8, 10}});
    auto rep = der(ref, hyp, 0.0);
    EXPECT_NEAR(rep.der, 0.20, 1e-12);
    EXPECT_NEAR(rep.confusion, 2.0, 1e-12);
    EXPECT_EQ(rep.mapping, (std::vector<std::pair<std::string, std::string>>{{"spk1", "A"}}));
}

TEST(Der, MergedTwoSpeakers) {
    auto ref = diar_of({{"A", 0, 5}, {"B", 5, 10}});
    auto hyp = diar_of({{"x", 0, 10}});
    auto rep = der(ref, hyp, 0.0);
    EXPECT_NEAR(rep.der, 0.50, 1e-12);
    EXPECT_NEAR(rep.confusion, 5.0, 1e-12);
    EXPECT_EQ(rep.miss, 0.0);
}

TEST(Der, MissAndFalseAlarm) {
    auto ref = diar_of({{"A", 0, 4}});
    auto hyp = diar_of({{"x", 1, 6}});
    auto rep = der(ref, hyp, 0.0);
    EXPECT_NEAR(rep.miss, 1.0, 1e-12);
    EXPECT_NEAR(rep.false_alarm, 2.0, 1e-12);
    EXPECT_NEAR(rep.der, 0.75, 1e-12);
}

TEST(Der, OverlappingReferenceCountsTwice) {
    auto ref = diar_of({{"A", 0, 4}, {"B", 2, 4}});
    auto hyp = diar_of({{"x", 0, 4}});
    auto rep = der(ref, hyp, 0.0);
    EXPECT_NEAR(rep.total_ref, 6.0, 1e-12);
    EXPECT_NEAR(rep.miss, 2.0, 1e-12);
}

TEST(Der, CollarShrinksScoredTime) {
    auto ref = diar_of({{"A", 0, 5}, {"B", 5, 10}});
    auto hyp = diar_of({{"x", 0, 5.2}, {"y", 5.2, 10}});
    EXPECT_GT(der(ref, hyp, 0.0).der, 0.0);
    EXPECT_EQ(der(ref, hyp, 0.25).der, 0.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double c : {0.0, 0.1, 0.25, 0.5, 1.0}) {
        double tr = der(ref, hyp, c).total_ref;
        EXPECT_LE(tr, prev);
        prev = tr;
    }
}

TEST(Der, UemRestrictsScoring) {
    auto ref = diar_of({{"A", 0, 10}});
    auto hyp = diar_of({{"x", 0, 5}});
    UemSpec uem;
    uem.regions.emplace("rec", Timeline({{0, 5}}));
    EXPECT_EQ(der(ref, hyp, 0.0, uem).der, 0.0);
    EXPECT_NEAR(der(ref, hyp, 0.0).der, 0.5, 1e-12);
}

TEST(Der, EmptyReference) {
    Diarization empty;
    empty.recording_id = "rec";
    auto rep = der(empty, empty, 0.0);
    EXPECT_EQ(rep.der, 0.0);
    EXPECT_FALSE(rep.no_reference);
    auto fa = der(empty, diar_of({{"x", 0, 1}}), 0.0);
    EXPECT_TRUE(std::isinf(fa.der));
    EXPECT_TRUE(fa.no_reference);
}

TEST(Der, MismatchedRecordingIds) {
    EXPECT_THROW(der(diar_of({{"A", 0, 1}}, "a"), diar_of({{"A", 0, 1}}, "b")), std::invalid_argument);
}

TEST(Der, InvariantUnderHypothesisRenaming) {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 50; ++trial) {
        auto ref = testutil::random_diarization(gen, 3, 15, "r", true);
        auto hyp = testutil::random_diarization(gen, 3, 15, "h", false);
        auto renamed = hyp;
        for (auto& r : renamed.records) r.speaker = "zz" + r.speaker;
        renamed.normalize();
        EXPECT_NEAR(der(ref, hyp).der, der(ref, renamed).der, 1e-12);
        EXPECT_EQ(der(hyp, hyp).der, 0.0);
    }
}

TEST(Der, MatchesBruteForceOracle) {
    std::mt19937_64 gen(2718);
    std::uniform_int_distribution<int> spk(1, 4);
    for (int trial = 0; trial < 60; ++trial) {
        auto ref = testutil::random_diarization(gen, spk(gen), 20, "r", true);
        auto hyp = testutil::random_diarization(gen, spk(gen), 20, "h", false);
        for (double collar : {0.0, 0.25}) {
            auto rep = der(ref, hyp, collar);
            double oracle = testutil::oracle_der(ref, hyp, collar);
            if (std::isinf(oracle)) {
                EXPECT_TRUE(std::isinf(rep.der));
                continue;
            }
            double slack = 1e-6 + 0.002 * static_cast<double>(testutil::boundary_count(ref, hyp)) / rep.total_ref;
            EXPECT_NEAR(rep.der, oracle, slack) << "trial " << trial << " collar " << collar;
        }
    }
}

TEST(Aggregate, SumsDurations) {
    DerReport a, b;
    a.total_ref = 10;
    a.miss = 1;
    b.total_ref = 30;
    b.confusion = 3;
    auto t = aggregate({a, b});
    EXPECT_NEAR(t.der, 0.1, 1e-12);
    EXPECT_EQ(t.recording_id, "ALL");
}
