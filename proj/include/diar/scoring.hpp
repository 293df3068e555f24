#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diarization.hpp"
#include "hungarian.hpp"
#include "rttm.hpp"
#include "timeline.hpp"

namespace diar {

constexpr double kDefaultCollar = 0.25;

struct DerReport {
    std::string recording_id;
    double total_ref = 0.0;
    double miss = 0.0;
    double false_alarm = 0.0;
    double confusion = 0.0;
    double der = 0.0;
    bool no_reference = false;  // no scored reference speech, but hypothesis speech present
    std::vector<std::pair<std::string, std::string>> mapping;  // hypothesis -> reference

    double errors() const { return miss + false_alarm + confusion; }
};

/// Scored time as sorted disjoint intervals: the UEM regions (or [0, last
/// speech end]) minus +-collar around every reference boundary.
inline std::vector<Interval> scored_regions(const Diarization& ref, const Diarization& hyp, double collar,
                                            const Timeline* uem) {
    std::vector<Interval> base;
    if (uem) {
        base = uem->intervals();
    } else {
        double end = 0.0;
        for (const auto& r : ref.records) end = std::max(end, r.offset);
        for (const auto& r : hyp.records) end = std::max(end, r.offset);
        if (end > 0.0) base.push_back({0.0, end});
    }
    if (collar <= 0.0 || ref.records.empty()) return base;
    std::vector<Interval> zones;
    for (const auto& r : ref.records) {
        zones.push_back({r.onset - collar, r.onset + collar});
        zones.push_back({r.offset - collar, r.offset + collar});
    }
    std::sort(zones.begin(), zones.end(), [](const Interval& a, const Interval& b) { return a.onset < b.onset; });
    std::vector<Interval> merged;
    for (const auto& z : zones) {
        if (!merged.empty() && z.onset <= merged.back().offset) {
            merged.back().offset = std::max(merged.back().offset, z.offset);
        } else {
            merged.push_back(z);
        }
    }
    std::vector<Interval> out;
    for (const auto& iv : base) {
        double cur = iv.onset;
        for (const auto& z : merged) {
            if (z.offset <= cur || z.onset >= iv.offset) continue;
            if (z.onset > cur) out.push_back({cur, z.onset});
            cur = std::max(cur, z.offset);
            if (cur >= iv.offset) break;
        }
        if (cur < iv.offset) out.push_back({cur, iv.offset});
    }
    return out;
}

/// Diarization error rate by exact event sweep.
///
/// Within scored time, each elementary span with R active reference and H
/// active hypothesis speakers contributes R to total_ref, max(0, R-H) to
/// miss, max(0, H-R) to false alarm and min(R, H) - correct to confusion,
/// with the speaker mapping maximizing total scored overlap.
inline DerReport der(const Diarization& ref, const Diarization& hyp, double collar = kDefaultCollar,
                     const UemSpec& uem = {}) {
    if (!ref.recording_id.empty() && !hyp.recording_id.empty() && ref.recording_id != hyp.recording_id) {
        throw std::invalid_argument("der: recording ids differ: " + ref.recording_id + " vs " + hyp.recording_id);
    }
    DerReport rep;
    rep.recording_id = ref.recording_id.empty() ? hyp.recording_id : ref.recording_id;
    const auto scored = scored_regions(ref, hyp, collar, uem.find(rep.recording_id));

    std::vector<double> cuts;
    for (const auto& r : ref.records) cuts.insert(cuts.end(), {r.onset, r.offset});
    for (const auto& r : hyp.records) cuts.insert(cuts.end(), {r.onset, r.offset});
    for (const auto& s : scored) cuts.insert(cuts.end(), {s.onset, s.offset});
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    if (cuts.size() < 2) return rep;
    const std::size_t spans = cuts.size() - 1;

    auto index_of = [&](double t) {
        return static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), t) - cuts.begin());
    };
    auto labels_of = [](const Diarization& d) {
        std::vector<std::string> names;
        for (const auto& r : d.records) names.push_back(r.speaker);
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        return names;
    };
    const auto ref_names = labels_of(ref);
    const auto hyp_names = labels_of(hyp);
    // activity[s][k]: number of records of speaker s covering span k
    auto activity = [&](const Diarization& d, const std::vector<std::string>& names) {
        std::vector<std::vector<int>> act(names.size(), std::vector<int>(spans + 1, 0));
        for (const auto& r : d.records) {
            auto s = static_cast<std::size_t>(std::lower_bound(names.begin(), names.end(), r.speaker) - names.begin());
            act[s][index_of(r.onset)] += 1;
            act[s][index_of(r.offset)] -= 1;
        }
        for (auto& a : act)
            for (std::size_t k = 1; k <= spans; ++k) a[k] += a[k - 1];
        return act;
    };
    const auto ref_act = activity(ref, ref_names);
    const auto hyp_act = activity(hyp, hyp_names);

    std::vector<bool> is_scored(spans, false);
    for (const auto& s : scored) {
        for (std::size_t k = index_of(s.onset); k < index_of(s.offset); ++k) is_scored[k] = true;
    }

    Matrix overlap(ref_names.size(), hyp_names.size());
    for (std::size_t k = 0; k < spans; ++k) {
        if (!is_scored[k]) continue;
        const double dt = cuts[k + 1] - cuts[k];
        for (std::size_t r = 0; r < ref_names.size(); ++r) {
            if (ref_act[r][k] <= 0) continue;
            for (std::size_t h = 0; h < hyp_names.size(); ++h)
                if (hyp_act[h][k] > 0) overlap(r, h) += dt;
        }
    }
    const auto row_to_col = optimal_mapping(overlap);
    std::vector<int> hyp_to_ref(hyp_names.size(), -1);
    for (std::size_t r = 0; r < row_to_col.size(); ++r) {
        if (row_to_col[r] >= 0) {
            hyp_to_ref[static_cast<std::size_t>(row_to_col[r])] = static_cast<int>(r);
            rep.mapping.emplace_back(hyp_names[static_cast<std::size_t>(row_to_col[r])], ref_names[r]);
        }
    }
    std::sort(rep.mapping.begin(), rep.mapping.end());

    for (std::size_t k = 0; k < spans; ++k) {
        if (!is_scored[k]) continue;
        const double dt = cuts[k + 1] - cuts[k];
        int n_ref = 0, n_hyp = 0, correct = 0;
        for (std::size_t r = 0; r < ref_names.size(); ++r) n_ref += ref_act[r][k] > 0 ? 1 : 0;
        for (std::size_t h = 0; h < hyp_names.size(); ++h) {
            if (hyp_act[h][k] <= 0) continue;
            ++n_hyp;
            int r = hyp_to_ref[h];
            if (r >= 0 && ref_act[static_cast<std::size_t>(r)][k] > 0) ++correct;
        }
        rep.total_ref += dt * n_ref;
        rep.miss += dt * std::max(0, n_ref - n_hyp);
        rep.false_alarm += dt * std::max(0, n_hyp - n_ref);
        rep.confusion += dt * (std::min(n_ref, n_hyp) - correct);
    }
    if (rep.total_ref > 0.0) {
        rep.der = rep.errors() / rep.total_ref;
    } else if (rep.false_alarm > 0.0) {
        rep.der = std::numeric_limits<double>::infinity();
        rep.no_reference = true;
    }
    return rep;
}

/// Sums per-recording reports; the overall DER is total error over total reference.
inline DerReport aggregate(const std::vector<DerReport>& reports) {
    DerReport total;
    total.recording_id = "ALL";
    for (const auto& r : reports) {
        total.total_ref += r.total_ref;
        total.miss += r.miss;
        total.false_alarm += r.false_alarm;
        total.confusion += r.confusion;
    }
    if (total.total_ref > 0.0) {
        total.der = total.errors() / total.total_ref;
    } else if (total.false_alarm > 0.0) {
        total.der = std::numeric_limits<double>::infinity();
        total.no_reference = true;
    }
    return total;
}

}  // namespace diar
