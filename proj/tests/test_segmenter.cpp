#include <gtest/gtest.h>

#include <random>

#include <diar/segmenter.hpp>

using namespace diar;

namespace {

void expect_segments(const SegmentList& got, const std::vector<Interval>& want) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_NEAR(got[i].onset, want[i].onset, 1e-12) << "segment " << i;
        EXPECT_NEAR(got[i].offset, want[i].offset, 1e-12) << "segment " << i;
    }
}

Timeline random_timeline(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> gap(0.01, 3.0);
    std::uniform_real_distribution<double> len(0.05, 12.0);
    std::uniform_int_distribution<int> count(1, 6);
    std::vector<Interval> iv;
    double t = gap(gen);
    for (int i = count(gen); i > 0; --i) {
        double d = len(gen);
        iv.push_back({t, t + d});
        t += d + gap(gen);
    }
    return Timeline(iv);
}

}  // namespace

TEST(Windowing, FiveSecondRegion) {
    auto segs = window_regions(Timeline({{0.0, 5.0}}));
    expect_segments(segs, {{0.0, 2.0}, {1.6, 3.6}, {3.0, 5.0}});
}

TEST(Windowing, ExactFit) { expect_segments(window_regions(Timeline({{0.0, 2.0}})), {{0.0, 2.0}}); }

TEST(Windowing, ShortRegion) { expect_segments(window_regions(Timeline({{0.0, 1.0}})), {{0.0, 1.0}}); }

TEST(Windowing, HopAlignedRegionHasNoTail) {
    // 2.0 + 1.6 = 3.6: the second window ends exactly at the region end
    expect_segments(window_regions(Timeline({{10.0, 13.6}})), {{10.0, 12.0}, {11.6, 13.6}});
}

TEST(Windowing, RecordingIdIsCarried) {
    auto segs = window_regions(Timeline({{0.0, 1.0}}), {}, "rec7");
    EXPECT_EQ(segs.recording_id, "rec7");
}

TEST(Windowing, EmptyTimeline) { EXPECT_TRUE(window_regions(Timeline{}).empty()); }

TEST(Windowing, ConfigValidation) {
    EXPECT_THROW(window_regions(Timeline({{0, 1}}), WindowConfig{2.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(window_regions(Timeline({{0, 1}}), WindowConfig{2.0, 2.0}), std::invalid_argument);
    EXPECT_DOUBLE_EQ((WindowConfig{}.hop()), 1.6);
}

TEST(Windowing, RandomRegionsCoverageAndLength) {
    std::mt19937_64 gen(2024);
    const WindowConfig cfg;
    for (int trial = 0; trial < 1000; ++trial) {
        Timeline tl = random_timeline(gen);
        auto segs = window_regions(tl, cfg);
        ASSERT_FALSE(segs.empty());
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const auto& s = segs[i];
            ASSERT_GT(s.duration(), 0.0);
            ASSERT_LE(s.duration(), cfg.window + 1e-9);
            if (i > 0) { ASSERT_GE(s.onset, segs[i - 1].onset); }
            bool inside = false;
            for (const auto& r : tl) inside = inside || (s.onset >= r.onset - 1e-9 && s.offset <= r.offset + 1e-9);
            ASSERT_TRUE(inside) << "segment spills outside speech";
            if (i > 0 && tl.contains(0.5 * (s.onset + segs[i - 1].offset))) {
                double ov = segs[i - 1].offset - s.onset;
                if (ov > -1e-9) { ASSERT_LT(ov, cfg.window); }
            }
        }
        // union of the segments reproduces the timeline exactly
        Timeline uni(segs.segments);
        ASSERT_EQ(uni.size(), tl.size());
        for (std::size_t r = 0; r < tl.size(); ++r) {
            ASSERT_NEAR(uni[r].onset, tl[r].onset, 1e-9);
            ASSERT_NEAR(uni[r].offset, tl[r].offset, 1e-9);
        }
    }
}

TEST(Windowing, SplitAndRemergeInvariant) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 200; ++trial) {
        Timeline tl = random_timeline(gen);
        std::vector<Interval> split;
        for (const auto& r : tl) {
            double m = r.onset + u(gen) * r.duration();
            split.push_back({r.onset, m});
            split.push_back({m, r.offset});
        }
        EXPECT_EQ(window_regions(Timeline(split)), window_regions(tl));
    }
}
