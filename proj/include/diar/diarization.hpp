#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "segmenter.hpp"
#include "timeline.hpp"

namespace diar {

struct SpeakerTurn {
    std::string speaker;
    double onset = 0.0;
    double offset = 0.0;

    double duration() const { return offset - onset; }
    friend bool operator==(const SpeakerTurn&, const SpeakerTurn&) = default;
};

/// "Who spoke when" for one recording.
///
/// normalize() sorts records by (onset, speaker) and merges same-speaker
/// records that overlap or are separated by less than kMergeGap.
struct Diarization {
    static constexpr double kMergeGap = 0.010;

    std::string recording_id;
    std::vector<SpeakerTurn> records;

    void normalize() {
        std::vector<SpeakerTurn> kept;
        for (auto& r : records)
            if (r.offset > r.onset) kept.push_back(std::move(r));
        std::sort(kept.begin(), kept.end(), [](const SpeakerTurn& a, const SpeakerTurn& b) {
            if (a.speaker != b.speaker) return a.speaker < b.speaker;
            return a.onset < b.onset;
        });
        std::vector<SpeakerTurn> merged;
        for (auto& r : kept) {
            if (!merged.empty() && merged.back().speaker == r.speaker && r.onset - merged.back().offset < kMergeGap) {
                merged.back().offset = std::max(merged.back().offset, r.offset);
            } else {
                merged.push_back(std::move(r));
            }
        }
        std::sort(merged.begin(), merged.end(), [](const SpeakerTurn& a, const SpeakerTurn& b) {
            if (a.onset != b.onset) return a.onset < b.onset;
            return a.speaker < b.speaker;
        });
        records = std::move(merged);
    }

    std::set<std::string> speakers() const {
        std::set<std::string> s;
        for (const auto& r : records) s.insert(r.speaker);
        return s;
    }

    double total_duration() const {
        double d = 0.0;
        for (const auto& r : records) d += r.duration();
        return d;
    }

    friend bool operator==(const Diarization&, const Diarization&) = default;
};

inline std::string speaker_name(int label) { return "spk" + std::to_string(label); }

/// Turns per-segment labels into non-overlapping speaker records. Where
/// consecutive segments of one speech region overlap, the boundary falls at
/// the middle of the overlap; every region is covered exactly.
inline Diarization labels_to_diarization(const SegmentList& segs, const std::vector<int>& labels,
                                        const Timeline& speech) {
    Diarization d;
    d.recording_id = segs.recording_id;
    const std::size_t n = segs.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& seg = segs[i];
        double on = seg.onset;
        double off = seg.offset;
        if (i > 0 && segs[i - 1].offset > seg.onset) on = 0.5 * (seg.onset + segs[i - 1].offset);
        if (i + 1 < n && segs[i + 1].onset < seg.offset) off = 0.5 * (segs[i + 1].onset + seg.offset);
        // keep the record inside the speech region holding the segment
        for (const auto& region : speech) {
            if (seg.midpoint() >= region.onset && seg.midpoint() <= region.offset) {
                on = std::max(on, region.onset);
                off = std::min(off, region.offset);
                break;
            }
        }
        if (off > on) d.records.push_back({speaker_name(labels[i]), on, off});
    }
    d.normalize();
    return d;
}

}  // namespace diar
