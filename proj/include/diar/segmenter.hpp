#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "timeline.hpp"

namespace diar {

struct WindowConfig {
    double window = 2.0;
    double overlap = 0.4;

    double hop() const { return window - overlap; }

    void validate() const {
        if (!(overlap > 0.0 && overlap < window)) {
            throw std::invalid_argument("WindowConfig: require 0 < overlap < window");
        }
    }
};

struct SegmentList {
    std::vector<Interval> segments;
    std::string recording_id;

    std::size_t size() const { return segments.size(); }
    bool empty() const { return segments.empty(); }
    const Interval& operator[](std::size_t i) const { return segments[i]; }
    auto begin() const { return segments.begin(); }
    auto end() const { return segments.end(); }

    friend bool operator==(const SegmentList&, const SegmentList&) = default;
};

/// Cuts each speech region into windows of at most `cfg.window` seconds
/// spaced `cfg.hop()` apart. A region not covered by whole windows gets a
/// final window right-aligned to its end.
inline SegmentList window_regions(const Timeline& speech, const WindowConfig& cfg = {},
                                  std::string recording_id = {}) {
    cfg.validate();
    constexpr double kEps = 1e-9;
    SegmentList out;
    out.recording_id = std::move(recording_id);
    const double hop = cfg.hop();
    for (const auto& region : speech) {
        const double s = region.onset;
        const double e = region.offset;
        if (e - s <= cfg.window + kEps) {
            out.segments.push_back({s, e});
            continue;
        }
        double covered = s;
        for (long i = 0;; ++i) {
            double start = s + static_cast<double>(i) * hop;
            double stop = start + cfg.window;
            if (stop > e + kEps) break;
            stop = std::min(stop, e);
            out.segments.push_back({start, stop});
            covered = stop;
        }
        if (covered < e - kEps) {
            Interval tail{std::max(s, e - cfg.window), e};
            if (!(std::abs(tail.onset - out.segments.back().onset) < kEps &&
                  std::abs(tail.offset - out.segments.back().offset) < kEps)) {
                out.segments.push_back(tail);
            }
        } else {
            out.segments.back().offset = e;
        }
    }
    return out;
}

}  // namespace diar
