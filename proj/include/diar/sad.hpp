#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "audio.hpp"
#include "error.hpp"
#include "text.hpp"
#include "timeline.hpp"

namespace diar {

/// Energy speech activity detector settings. Durations in seconds.
struct SadConfig {
    double frame_len = 0.025;
    double frame_hop = 0.010;
    double energy_margin_db = 9.0;  // above the tracked noise floor
    double hangover = 0.2;          // non-speech dips up to this long between speech frames are held
    double min_speech = 0.25;
    double min_silence = 0.1;
    double floor_ceiling_db = -40.0;  // tracked floor never exceeds this level (dBFS)

    void validate() const {
        if (!(frame_len > 0 && frame_hop > 0 && energy_margin_db > 0 && hangover > 0 && min_speech > 0 &&
              min_silence > 0)) {
            throw std::invalid_argument("SadConfig: durations and margin must be positive");
        }
        if (frame_hop > frame_len) throw std::invalid_argument("SadConfig: frame_hop must not exceed frame_len");
    }
};

namespace detail {

// Runs of equal values as (value, begin, end) with end exclusive.
struct Run {
    bool speech;
    std::size_t begin;
    std::size_t end;
};

inline std::vector<Run> runs_of(const std::vector<bool>& v) {
    std::vector<Run> out;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        out.push_back({v[i], i, j});
        i = j;
    }
    return out;
}

// Flips interior runs of `target` shorter than `max_frames` frames.
inline void fill_short_runs(std::vector<bool>& v, bool target, std::size_t max_frames, bool interior_only) {
    for (const auto& r : runs_of(v)) {
        if (r.speech != target || r.end - r.begin >= max_frames) continue;
        if (interior_only && (r.begin == 0 || r.end == v.size())) continue;
        std::fill(v.begin() + static_cast<long>(r.begin), v.begin() + static_cast<long>(r.end), !target);
    }
}

}  // namespace detail

/// Per-frame log energy in dBFS (RMS relative to full scale).
inline std::vector<double> frame_energies_db(const AudioBuffer& buf, const SadConfig& cfg) {
    auto len = static_cast<std::size_t>(std::llround(cfg.frame_len * buf.sample_rate));
    auto hop = static_cast<std::size_t>(std::llround(cfg.frame_hop * buf.sample_rate));
    len = std::max<std::size_t>(len, 1);
    hop = std::max<std::size_t>(hop, 1);
    std::vector<double> out;
    const std::size_t n = buf.samples.size();
    std::size_t n_frames = n < len ? 1 : (n - len) / hop + 1;
    out.reserve(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
        std::size_t b = f * hop;
        std::size_t e = std::min(n, b + len);
        double sq = 0.0;
        for (std::size_t i = b; i < e; ++i) sq += buf.samples[i] * buf.samples[i];
        out.push_back(10.0 * std::log10(sq / static_cast<double>(std::max<std::size_t>(e - b, 1)) + 1e-12));
    }
    return out;
}

/// Energy-based SAD. The noise floor is the 10th percentile of frame
/// energies over the whole file (capped at `floor_ceiling_db`); frames more
/// than `energy_margin_db` above it are speech candidates.
inline Timeline detect_speech(const AudioBuffer& buf, const SadConfig& cfg = {}) {
    cfg.validate();
    if (buf.samples.empty()) throw std::invalid_argument("detect_speech: empty buffer");
    const auto energies = frame_energies_db(buf, cfg);
    std::vector<double> sorted = energies;
    auto nth = sorted.begin() + static_cast<long>((sorted.size() - 1) / 10);
    std::nth_element(sorted.begin(), nth, sorted.end());
    const double floor_db = std::min(*nth, cfg.floor_ceiling_db);
    const double threshold = floor_db + cfg.energy_margin_db;

    std::vector<bool> speech(energies.size());
    for (std::size_t i = 0; i < energies.size(); ++i) speech[i] = energies[i] > threshold;

    auto frames_for = [&](double seconds) {
        return static_cast<std::size_t>(std::ceil(seconds / cfg.frame_hop - 1e-9));
    };
    detail::fill_short_runs(speech, false, frames_for(cfg.hangover) + 1, true);
    detail::fill_short_runs(speech, true, frames_for(cfg.min_speech), false);
    detail::fill_short_runs(speech, false, frames_for(cfg.min_silence), true);

    const double duration = buf.duration();
    const double first_center = std::min(cfg.frame_len, duration) / 2.0;
    std::vector<Interval> out;
    for (const auto& r : detail::runs_of(speech)) {
        if (!r.speech) continue;
        double on = first_center + r.begin * cfg.frame_hop - cfg.frame_hop / 2.0;
        double off = first_center + (r.end - 1) * cfg.frame_hop + cfg.frame_hop / 2.0;
        if (r.begin == 0) on = 0.0;
        if (r.end == speech.size()) off = duration;
        on = std::clamp(on, 0.0, duration);
        off = std::clamp(off, 0.0, duration);
        if (off > on) out.push_back({on, off});
    }
    return Timeline(std::move(out));
}

/// Parses "<onset> <offset> <label>" lines (label conventionally "speech").
inline Timeline parse_lab(std::istream& in) {
    std::vector<Interval> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = text::split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 3) throw ParseError("lab: expected '<onset> <offset> speech'", lineno);
        auto on = text::parse_double(fields[0]);
        auto off = text::parse_double(fields[1]);
        if (!on || !off) throw ParseError("lab: unparsable time value", lineno);
        if (*on < 0 || *off < 0) throw ParseError("lab: negative time", lineno);
        if (*on >= *off) throw ParseError("lab: onset must be smaller than offset", lineno);
        out.push_back({*on, *off});
    }
    return Timeline(std::move(out));
}

inline Timeline read_lab(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open lab file: " + path.string());
    return parse_lab(in);
}

inline std::string format_lab(const Timeline& tl) {
    std::string out;
    for (const auto& iv : tl) out += text::shortest(iv.onset) + " " + text::shortest(iv.offset) + " speech\n";
    return out;
}

inline void write_lab(const Timeline& tl, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write lab file: " + path.string());
    out << format_lab(tl);
}

}  // namespace diar
