#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "audio.hpp"
#include "diarization.hpp"
#include "rng.hpp"
#include "rttm.hpp"
#include "sad.hpp"
#include "timeline.hpp"

namespace diar {

/// Seeded synthetic conversation. Times are drawn on a 1 ms grid so the
/// rendered audio and the reference RTTM agree exactly.
struct SynthConfig {
    int n_speakers = 3;
    double duration = 60.0;
    double turn_min = 2.5;
    double turn_max = 7.0;
    double pause_prob = 1.0;
    double pause_min = 0.3;
    double pause_max = 1.0;
    std::vector<double> fundamentals = {110.0, 185.0, 270.0, 140.0, 230.0, 320.0, 125.0, 205.0};
    double speech_level_db = -16.0;
    double noise_floor_db = -60.0;
    // per-syllable formant jitter as a ratio: formant * [1/(1+s), 1+s]
    double vowel_spread = 0.25;
    // phrase-level prosody: pitch ratio spread, spectral tilt spread, phrase length bounds
    double pitch_spread = 0.08;
    double tilt_spread = 0.3;
    double phrase_min = 0.4;
    double phrase_max = 1.0;
    int sample_rate = 16000;
    std::uint64_t seed = 0;
    std::string recording_id;

    void validate() const {
        if (n_speakers < 1) throw std::invalid_argument("SynthConfig: n_speakers must be >= 1");
        if (!(duration > 0)) throw std::invalid_argument("SynthConfig: duration must be positive");
        if (!(turn_min > 0 && turn_max >= turn_min)) throw std::invalid_argument("SynthConfig: bad turn bounds");
        if (!(pause_prob >= 0 && pause_prob <= 1)) throw std::invalid_argument("SynthConfig: pause_prob in [0, 1]");
        if (!(pause_min > 0 && pause_max >= pause_min)) throw std::invalid_argument("SynthConfig: bad pause bounds");
        if (!(pitch_spread >= 0 && tilt_spread >= 0)) throw std::invalid_argument("SynthConfig: spreads must be >= 0");
        if (!(phrase_min > 0 && phrase_max >= phrase_min)) throw std::invalid_argument("SynthConfig: bad phrase bounds");
        if (!(vowel_spread >= 0)) throw std::invalid_argument("SynthConfig: vowel_spread must be >= 0");
    }

    std::string id() const { return recording_id.empty() ? "synth" + std::to_string(seed) : recording_id; }
};

struct SynthCorpus {
    AudioBuffer audio;
    Diarization reference;
    Timeline speech;
};

namespace detail {

struct Voice {
    double f0;
    double formant;
    double am_rate;
};

inline Voice voice_for(const SynthConfig& cfg, int speaker) {
    double f0 = cfg.fundamentals[static_cast<std::size_t>(speaker) % cfg.fundamentals.size()];
    if (static_cast<std::size_t>(speaker) >= cfg.fundamentals.size()) {
        f0 *= 1.0 + 0.07 * static_cast<double>(speaker / static_cast<int>(cfg.fundamentals.size()));
    }
    return {f0, 500.0 + 650.0 * static_cast<double>(speaker % 5), 3.0 + 0.5 * static_cast<double>(speaker % 5)};
}

}  // namespace detail

/// Turn-taking Markov chain rendered as harmonic complexes with a per-speaker
/// formant and mild amplitude modulation, over Gaussian noise at the floor.
inline SynthCorpus synth_corpus(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const long total_ms = std::lround(cfg.duration * 1000.0);
    auto draw_ms = [&](double lo, double hi) { return std::lround(rng.uniform(lo, hi) * 1000.0); };

    SynthCorpus out;
    out.reference.recording_id = cfg.id();
    struct Turn {
        int speaker;
        long on_ms;
        long off_ms;
    };
    std::vector<Turn> turns;
    int speaker = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_speakers)));
    for (long t = 0; t < total_ms;) {
        long end = std::min(total_ms, t + std::max(1L, draw_ms(cfg.turn_min, cfg.turn_max)));
        turns.push_back({speaker, t, end});
        t = end;
        if (rng.uniform() < cfg.pause_prob) t += draw_ms(cfg.pause_min, cfg.pause_max);
        if (cfg.n_speakers > 1) {
            int next = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_speakers - 1)));
            speaker = next >= speaker ? next + 1 : next;
        }
    }

    const int sr = cfg.sample_rate;
    const auto n_samples = static_cast<std::size_t>(total_ms) * static_cast<std::size_t>(sr) / 1000;
    out.audio.sample_rate = sr;
    out.audio.samples.assign(n_samples, 0.0);
    const double noise_rms = std::pow(10.0, cfg.noise_floor_db / 20.0);
    const double speech_rms = std::pow(10.0, cfg.speech_level_db / 20.0);
    const double two_pi = 2.0 * std::numbers::pi;
    const double ramp = 0.005 * sr;
    // the source waveform (harmonic phase pattern) is a fixed trait of each voice
    std::vector<std::vector<double>> voice_phases(static_cast<std::size_t>(cfg.n_speakers));
    for (int spk = 0; spk < cfg.n_speakers; ++spk) {
        const auto voice = detail::voice_for(cfg, spk);
        for (int h = 1; h * voice.f0 < 0.45 * sr; ++h) voice_phases[static_cast<std::size_t>(spk)].push_back(rng.uniform(0.0, two_pi));
    }

    for (const auto& turn : turns) {
        const auto voice = detail::voice_for(cfg, turn.speaker);
        const double am_rate = voice.am_rate;
        const double am_phase = rng.uniform(0.0, two_pi);
        const auto b = static_cast<std::size_t>(turn.on_ms) * static_cast<std::size_t>(sr) / 1000;
        const auto e = static_cast<std::size_t>(turn.off_ms) * static_cast<std::size_t>(sr) / 1000;
        const auto& phases = voice_phases[static_cast<std::size_t>(turn.speaker)];
        const std::size_t n_harm = phases.size();

        // phrases carry prosody: pitch offset and spectral tilt held for a
        // second or two, so longer stretches of one voice are not identical
        struct Phrase {
            std::size_t begin;
            double pitch;
            double tilt;
        };
        std::vector<Phrase> phrases;
        for (std::size_t at = b; at < e;) {
            phrases.push_back({at, std::exp(rng.uniform(-1.0, 1.0) * std::log1p(cfg.pitch_spread)),
                               1.0 + cfg.tilt_spread * rng.uniform(-1.0, 1.0)});
            at += static_cast<std::size_t>(rng.uniform(cfg.phrase_min, cfg.phrase_max) * sr);
        }
        auto phrase_at = [&](std::size_t i) {
            auto it = std::upper_bound(phrases.begin(), phrases.end(), i,
                                       [](std::size_t x, const Phrase& ph) { return x < ph.begin; });
            return static_cast<std::size_t>(it - phrases.begin()) - 1;
        };

        // one AM cycle is a syllable with its own vowel (formant position);
        // harmonic amplitudes are interpolated between syllable centres
        auto cycle_at = [&](double t) { return am_rate * t + am_phase / two_pi - 0.5; };
        const auto first_syl = static_cast<long>(std::floor(cycle_at(static_cast<double>(b) / sr)));
        const auto last_syl = static_cast<long>(std::floor(cycle_at(static_cast<double>(e) / sr))) + 1;
        std::vector<std::vector<double>> syllables;
        for (long k = first_syl; k <= last_syl; ++k) {
            const double centre = (static_cast<double>(k) + 1.0 - am_phase / two_pi) / am_rate;
            const auto ci = static_cast<std::size_t>(std::clamp(centre * sr, static_cast<double>(b), static_cast<double>(e - 1)));
            const auto& ph = phrases[phrase_at(ci)];
            const double f0 = voice.f0 * ph.pitch;
            const double formant = voice.formant * std::exp(rng.uniform(-1.0, 1.0) * std::log1p(cfg.vowel_spread));
            std::vector<double> amps(n_harm, 0.0);
            double power = 0.0;
            for (std::size_t h = 0; h < n_harm; ++h) {
                const double f = static_cast<double>(h + 1) * f0;
                if (f >= 0.45 * sr) break;
                double df = (f - formant) / 350.0;
                amps[h] = std::pow(static_cast<double>(h + 1), -ph.tilt) * (0.3 + 3.0 * std::exp(-df * df));
                power += 0.5 * amps[h] * amps[h];
            }
            for (auto& a : amps) a *= speech_rms / std::sqrt(power);
            syllables.push_back(std::move(amps));
        }

        // per-harmonic unit phasors advanced by complex rotation; retuned at
        // phrase boundaries, which keeps the phase continuous
        std::vector<std::complex<double>> osc(n_harm), step(n_harm);
        for (std::size_t h = 0; h < n_harm; ++h) {
            const double w = two_pi * static_cast<double>(h + 1) * voice.f0 / sr;
            osc[h] = std::polar(1.0, w * static_cast<double>(b) + phases[h]);
        }
        std::size_t next_phrase = 0;
        for (std::size_t i = b; i < e; ++i) {
            if (next_phrase < phrases.size() && i == phrases[next_phrase].begin) {
                const double w = two_pi * voice.f0 * phrases[next_phrase].pitch / sr;
                for (std::size_t h = 0; h < n_harm; ++h) step[h] = std::polar(1.0, w * static_cast<double>(h + 1));
                ++next_phrase;
            }
            const double t = static_cast<double>(i) / sr;
            const double c = cycle_at(t);
            const double kf = std::floor(c);
            const double u = c - kf;
            const auto& lo = syllables[static_cast<std::size_t>(static_cast<long>(kf) - first_syl)];
            const auto& hi = syllables[static_cast<std::size_t>(static_cast<long>(kf) - first_syl + 1)];
            double v = 0.0;
            for (std::size_t h = 0; h < n_harm; ++h) {
                v += ((1.0 - u) * lo[h] + u * hi[h]) * osc[h].imag();
                osc[h] *= step[h];
            }
            if ((i - b) % 4096 == 4095) {
                for (auto& o : osc) o /= std::abs(o);
            }
            double env = 1.0 + 0.3 * std::sin(two_pi * am_rate * t + am_phase);
            double pos = static_cast<double>(i - b);
            double tail = static_cast<double>(e - 1 - i);
            if (pos < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * pos / ramp);
            if (tail < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * tail / ramp);
            out.audio.samples[i] += env * v;
        }
        out.reference.records.push_back(
            {"spk" + std::to_string(turn.speaker), turn.on_ms / 1000.0, turn.off_ms / 1000.0});
    }
    for (auto& s : out.audio.samples) s += noise_rms * rng.normal();
    // quantize exactly as the PCM16 writer does so in-memory and on-disk audio agree
    for (auto& s : out.audio.samples) s = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0) / 32768.0;

    std::vector<Interval> speech;
    for (const auto& r : out.reference.records) speech.push_back({r.onset, r.offset});
    out.speech = Timeline(std::move(speech));
    out.reference.normalize();
    return out;
}

/// Writes <id>.wav, <id>.rttm and <id>.lab into `dir`.
inline void write_synth(const SynthCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string& id = corpus.reference.recording_id;
    write_wav(corpus.audio, dir / (id + ".wav"));
    write_rttm(corpus.reference, dir / (id + ".rttm"));
    write_lab(corpus.speech, dir / (id + ".lab"));
}

}  // namespace diar
