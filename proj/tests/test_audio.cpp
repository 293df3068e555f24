#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include <diar/audio.hpp>
#include <diar/features.hpp>
#include <diar/sad.hpp>

#include "test_util.hpp"

using namespace diar;

namespace {

AudioBuffer parse(const std::string& raw) {
    return parse_wav({reinterpret_cast<const unsigned char*>(raw.data()), raw.size()});
}

// Magnitude of the naive DFT at integer frequency bins 0..n/2.
std::size_t dominant_bin(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> acc{};
        const std::complex<double> w = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / n);
        std::complex<double> rot{1.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            acc += x[i] * rot;
            rot *= w;
        }
        if (std::abs(acc) > best_mag) {
            best_mag = std::abs(acc);
            best = k;
        }
    }
    return best;
}

}  // namespace

TEST(Wav, MonoPassthrough) {
    std::vector<std::int32_t> pcm(16000);
    for (std::size_t i = 0; i < pcm.size(); ++i) pcm[i] = static_cast<std::int32_t>(i % 2000) - 1000;
    auto buf = parse(testutil::wav_bytes(1, 16, 16000, pcm));
    ASSERT_EQ(buf.samples.size(), 16000u);
    EXPECT_EQ(buf.sample_rate, 16000);
    EXPECT_DOUBLE_EQ(buf.duration(), 1.0);
    for (std::size_t i = 0; i < pcm.size(); ++i) ASSERT_EQ(buf.samples[i], pcm[i] / 32768.0);
}

TEST(Wav, StereoIsAveraged) {
    std::vector<std::int32_t> pcm;
    for (int i = 0; i < 800; ++i) {
        pcm.push_back(16384);   // +0.5
        pcm.push_back(-16384);  // -0.5
    }
    auto buf = parse(testutil::wav_bytes(2, 16, 8000, pcm));
    ASSERT_EQ(buf.samples.size(), 800u);
    EXPECT_EQ(buf.sample_rate, 8000);
    for (double s : buf.samples) EXPECT_EQ(s, 0.0);
}

TEST(Wav, SkipsUnknownChunks) {
    auto buf = parse(testutil::wav_bytes(1, 16, 16000, {1, 2, 3}, 1, true));
    ASSERT_EQ(buf.samples.size(), 3u);
    EXPECT_EQ(buf.samples[2], 3 / 32768.0);
}

TEST(Wav, EightBitIsFormatErrorNamingFmtChunk) {
    try {
        parse(testutil::wav_bytes(1, 8, 16000, {1, 2, 3, 4}));
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("'fmt '"), std::string::npos);
        EXPECT_EQ(e.offset(), 12u);
    }
}

TEST(Wav, NonPcmIsFormatError) {
    EXPECT_THROW(parse(testutil::wav_bytes(1, 16, 16000, {0, 0}, 3)), FormatError);
}

TEST(Wav, GarbageIsFormatError) { EXPECT_THROW(parse("not a wave file at all"), FormatError); }

TEST(Wav, MissingFileIsError) {
    EXPECT_THROW(read_wav("/nonexistent/definitely/missing.wav"), Error);
}

TEST(Wav, WriteReadRoundTrip) {
    testutil::TempDir dir;
    AudioBuffer buf;
    buf.sample_rate = 16000;
    for (int i = -500; i < 500; ++i) buf.samples.push_back(i / 32768.0);
    write_wav(buf, dir.path / "x.wav");
    auto back = read_wav(dir.path / "x.wav");
    EXPECT_EQ(back.sample_rate, 16000);
    EXPECT_EQ(back.samples, buf.samples);
}

TEST(Resample, IdentityIsBitExact) {
    auto t = testutil::tone(440.0, 0.5, 16000);
    auto out = resample(t, 16000);
    EXPECT_EQ(out.samples, t.samples);
    EXPECT_EQ(out.sample_rate, 16000);
}

TEST(Resample, LengthArithmetic) {
    auto t = testutil::tone(440.0, 1.0, 8000);
    auto out = resample(t, 16000);
    EXPECT_EQ(out.sample_rate, 16000);
    EXPECT_NEAR(static_cast<double>(out.samples.size()), 16000.0, 1.0);
    auto down = resample(testutil::tone(440.0, 1.0, 44100), 16000);
    EXPECT_NEAR(static_cast<double>(down.samples.size()), 16000.0, 1.0);
}

TEST(Resample, ToneKeepsItsFrequency) {
    auto out = resample(testutil::tone(1000.0, 1.0, 8000), 16000);
    out.samples.resize(16000);
    // 1 s of signal: bin k is k Hz
    EXPECT_EQ(dominant_bin(out.samples), 1000u);
}

TEST(Resample, UpDownRoundTripCorrelates) {
    const int r = 8000;
    for (double f : {300.0, 950.0, 1700.0}) {
        auto x = testutil::tone(f, 1.0, r, 0.7);
        auto back = resample(resample(x, 2 * r), r);
        ASSERT_NEAR(static_cast<double>(back.samples.size()), static_cast<double>(x.samples.size()), 2.0);
        std::size_t n = std::min(back.samples.size(), x.samples.size());
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += x.samples[i] * back.samples[i];
            sxx += x.samples[i] * x.samples[i];
            syy += back.samples[i] * back.samples[i];
        }
        EXPECT_GT(sxy / std::sqrt(sxx * syy), 0.99) << "tone " << f;
    }
}

TEST(Resample, RejectsBadRate) {
    EXPECT_THROW(resample(testutil::tone(100.0, 0.1, 8000), 0), std::invalid_argument);
}

TEST(Mfcc, FrameCountForOneSecond) {
    auto fm = mfcc(testutil::tone(300.0, 1.0, 16000), 13);
    EXPECT_EQ(fm.n_frames, 98u);
    EXPECT_EQ(fm.frame_times.size(), 98u);
    EXPECT_DOUBLE_EQ(fm.frame_times[0], 0.0125);
    EXPECT_NEAR(fm.frame_times[1] - fm.frame_times[0], 0.010, 1e-12);
}

TEST(Mfcc, SilenceIsTheLogFloorConstant) {
    AudioBuffer silence;
    silence.samples.assign(8000, 0.0);
    MfccConfig cfg;
    auto fm = mfcc(silence, 20, cfg);
    ASSERT_GT(fm.n_frames, 0u);
    // orthonormal DCT of a constant log(floor) vector: only c0 is non-zero
    const double c0 = std::log(cfg.log_floor) * std::sqrt(static_cast<double>(cfg.n_mel));
    for (std::size_t f = 0; f < fm.n_frames; ++f) {
        auto r = fm.row(f);
        EXPECT_NEAR(r[0], c0, 1e-9);
        for (std::size_t k = 1; k < fm.n_coeffs; ++k) EXPECT_NEAR(r[k], 0.0, 1e-9);
    }
}

TEST(Mfcc, Deterministic) {
    auto t = testutil::tone(523.0, 0.7, 16000);
    auto a = mfcc(t, 20);
    auto b = mfcc(t, 20);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.frame_times, b.frame_times);
}

TEST(Mfcc, ShortBufferIsEmpty) {
    AudioBuffer b;
    b.samples.assign(399, 0.1);
    EXPECT_TRUE(mfcc(b, 13).empty());
}

TEST(Mfcc, RejectsWrongRateAndCount) {
    EXPECT_THROW(mfcc(testutil::tone(300.0, 0.1, 8000), 13), std::invalid_argument);
    EXPECT_THROW(mfcc(testutil::tone(300.0, 0.1, 16000), 41), std::invalid_argument);
}

TEST(Cmvn, UnitSpreadZeroMeanOnMask) {
    auto fm = mfcc(testutil::tone(700.0, 0.5, 16000), 8);
    for (std::size_t f = 0; f < fm.n_frames; ++f) fm.row(f)[3] += static_cast<double>(f % 7);
    auto out = cmvn(fm);
    for (std::size_t k = 0; k < out.n_coeffs; ++k) {
        double s = 0, sq = 0;
        for (std::size_t f = 0; f < out.n_frames; ++f) {
            s += out.row(f)[k];
            sq += out.row(f)[k] * out.row(f)[k];
        }
        EXPECT_NEAR(s / out.n_frames, 0.0, 1e-9);
        if (k == 3) { EXPECT_NEAR(sq / out.n_frames, 1.0, 1e-9); }
    }
}

TEST(Sad, DigitalSilenceIsEmpty) {
    AudioBuffer b;
    b.samples.assign(16000 * 3, 0.0);
    EXPECT_TRUE(detect_speech(b).empty());
}

TEST(Sad, LoudNoiseCoversWholeFile) {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd(0.0, testutil::db_to_amp(-6.0));
    AudioBuffer b;
    b.samples.resize(16000 * 4);
    for (auto& s : b.samples) s = std::clamp(nd(gen), -1.0, 1.0);
    auto tl = detect_speech(b);
    ASSERT_EQ(tl.size(), 1u);
    EXPECT_NEAR(tl[0].onset, 0.0, 0.1);
    EXPECT_NEAR(tl[0].offset, 4.0, 0.1);
}

TEST(Sad, TwoToneBursts) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd(0.0, testutil::db_to_amp(-60.0));
    AudioBuffer b;
    b.samples.resize(16000 * 6);
    for (std::size_t i = 0; i < b.samples.size(); ++i) {
        double t = static_cast<double>(i) / 16000;
        double v = nd(gen);
        if ((t >= 1.0 && t < 2.0) || (t >= 4.0 && t < 5.0)) v += 0.3 * std::sin(2 * std::numbers::pi * 440 * t);
        b.samples[i] = v;
    }
    auto tl = detect_speech(b);
    ASSERT_EQ(tl.size(), 2u);
    EXPECT_NEAR(tl[0].onset, 1.0, 0.05);
    EXPECT_NEAR(tl[0].offset, 2.0, 0.05);
    EXPECT_NEAR(tl[1].onset, 4.0, 0.05);
    EXPECT_NEAR(tl[1].offset, 5.0, 0.05);
}

TEST(Sad, OutputInvariantsOnRandomBursts) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1e-3);
    SadConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        AudioBuffer b;
        b.samples.resize(16000 * 5);
        bool on = false;
        for (std::size_t i = 0; i < b.samples.size(); ++i) {
            if (i % 800 == 0 && u(gen) < 0.3) on = !on;
            b.samples[i] = nd(gen) + (on ? 0.2 * std::sin(0.3 * static_cast<double>(i)) : 0.0);
        }
        auto tl = detect_speech(b, cfg);
        for (std::size_t i = 0; i < tl.size(); ++i) {
            EXPECT_GE(tl[i].onset, 0.0);
            EXPECT_LE(tl[i].offset, b.duration());
            EXPECT_GE(tl[i].duration(), cfg.min_speech - 1e-9);
            if (i > 0) { EXPECT_GT(tl[i].onset, tl[i - 1].offset); }
        }
    }
}

TEST(Sad, ConfigValidation) {
    SadConfig cfg;
    cfg.frame_hop = 0.05;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = SadConfig{};
    cfg.min_speech = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Lab, OverlapsMerge) {
    std::istringstream in("0.00 2.50 speech\n2.40 4.00 speech\n");
    auto tl = parse_lab(in);
    ASSERT_EQ(tl.size(), 1u);
    EXPECT_EQ(tl[0], (Interval{0.0, 4.0}));
}

TEST(Lab, EmptyInput) {
    std::istringstream in("");
    EXPECT_TRUE(parse_lab(in).empty());
}

TEST(Lab, InvertedIntervalReportsLine) {
    std::istringstream in("3.0 1.0 speech\n");
    try {
        parse_lab(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1u);
    }
}

TEST(Lab, MalformedAndNegativeReportLine) {
    std::istringstream bad("0 1 speech\n1.5 two speech\n");
    try {
        parse_lab(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream neg("0 1 speech\n\n-1 2 speech\n");
    try {
        parse_lab(neg);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream fields("0 1\n");
    EXPECT_THROW(parse_lab(fields), ParseError);
}

TEST(Lab, SerializeReparseIsFixedPoint) {
    std::istringstream in("5.5 6.25 speech\n0.1 0.3 speech\n0.3005 1.7 speech\n2 3.333333333 speech\n");
    auto once = parse_lab(in);
    std::istringstream again(format_lab(once));
    auto twice = parse_lab(again);
    EXPECT_EQ(once, twice);
    EXPECT_EQ(format_lab(once), format_lab(twice));
    ASSERT_EQ(once.size(), 3u);  // 0.3 and 0.3005 are within merge epsilon
}

TEST(Lab, MissingFileIsError) { EXPECT_THROW(read_lab("/nonexistent/x.lab"), Error); }
