#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace diar {

struct Interval {
    double onset = 0.0;
    double offset = 0.0;

    double duration() const { return offset - onset; }
    double midpoint() const { return 0.5 * (onset + offset); }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Ordered, disjoint set of time intervals in seconds.
///
/// Construction normalizes: intervals are sorted, and any two ending and
/// starting less than `kMergeEpsilon` apart (or overlapping) are merged.
class Timeline {
public:
    static constexpr double kMergeEpsilon = 1e-3;

    Timeline() = default;
    explicit Timeline(std::vector<Interval> intervals) : intervals_(normalize(std::move(intervals))) {}

    const std::vector<Interval>& intervals() const { return intervals_; }
    bool empty() const { return intervals_.empty(); }
    std::size_t size() const { return intervals_.size(); }
    auto begin() const { return intervals_.begin(); }
    auto end() const { return intervals_.end(); }
    const Interval& operator[](std::size_t i) const { return intervals_[i]; }

    double total_duration() const {
        double sum = 0.0;
        for (const auto& iv : intervals_) sum += iv.duration();
        return sum;
    }

    bool contains(double t) const {
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), t,
                                   [](double v, const Interval& iv) { return v < iv.onset; });
        if (it == intervals_.begin()) return false;
        --it;
        return t >= it->onset && t <= it->offset;
    }

    friend bool operator==(const Timeline&, const Timeline&) = default;

private:
    static std::vector<Interval> normalize(std::vector<Interval> in) {
        for (const auto& iv : in) {
            if (!(iv.onset < iv.offset)) throw std::invalid_argument("Timeline: interval with onset >= offset");
        }
        std::sort(in.begin(), in.end(), [](const Interval& a, const Interval& b) {
            return a.onset < b.onset || (a.onset == b.onset && a.offset < b.offset);
        });
        std::vector<Interval> out;
        out.reserve(in.size());
        for (const auto& iv : in) {
            if (!out.empty() && iv.onset - out.back().offset < kMergeEpsilon) {
                out.back().offset = std::max(out.back().offset, iv.offset);
            } else {
                out.push_back(iv);
            }
        }
        return out;
    }

    std::vector<Interval> intervals_;
};

}  // namespace diar
