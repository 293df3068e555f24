#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "diarization.hpp"
#include "features.hpp"
#include "timeline.hpp"

namespace diar {

struct ResegConfig {
    double loop_prob = 0.99;
    int em_iters = 3;
    double min_duration = 0.25;
    bool enabled = true;
    double variance_floor = 1e-3;

    void validate() const {
        if (!(loop_prob > 0.0 && loop_prob < 1.0)) throw std::invalid_argument("ResegConfig: loop_prob must be in (0, 1)");
        if (em_iters < 1) throw std::invalid_argument("ResegConfig: em_iters must be >= 1");
        if (!(min_duration >= 0.0)) throw std::invalid_argument("ResegConfig: min_duration must be >= 0");
    }
};

namespace detail {

struct DiagGaussian {
    std::vector<double> mean;
    std::vector<double> var;
    double log_norm = 0.0;
    bool valid = false;

    double log_likelihood(std::span<const double> x) const {
        double s = log_norm;
        for (std::size_t k = 0; k < x.size(); ++k) {
            double d = x[k] - mean[k];
            s -= 0.5 * d * d / var[k];
        }
        return s;
    }
};

// Refits speaker s from its assigned frames; a speaker with no frames keeps its previous parameters.
inline void refit(std::vector<DiagGaussian>& models, const FeatureMatrix& feats, const std::vector<std::size_t>& frames,
                  const std::vector<int>& labels, double var_floor) {
    const std::size_t d = feats.n_coeffs;
    const std::size_t k = models.size();
    std::vector<std::vector<double>> sum(k, std::vector<double>(d, 0.0)), sq(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        auto s = static_cast<std::size_t>(labels[i]);
        auto r = feats.row(frames[i]);
        ++count[s];
        for (std::size_t c = 0; c < d; ++c) {
            sum[s][c] += r[c];
            sq[s][c] += r[c] * r[c];
        }
    }
    for (std::size_t s = 0; s < k; ++s) {
        if (count[s] == 0) continue;
        auto& g = models[s];
        g.mean.assign(d, 0.0);
        g.var.assign(d, 0.0);
        g.log_norm = 0.0;
        const double n = static_cast<double>(count[s]);
        for (std::size_t c = 0; c < d; ++c) {
            g.mean[c] = sum[s][c] / n;
            g.var[c] = std::max(var_floor, sq[s][c] / n - g.mean[c] * g.mean[c]);
            g.log_norm -= 0.5 * std::log(2.0 * std::numbers::pi * g.var[c]);
        }
        g.valid = true;
    }
}

// Viterbi over frames [b, e) of `frames`; writes decoded states into `labels`.
inline void viterbi(const std::vector<DiagGaussian>& models, const FeatureMatrix& feats,
                    const std::vector<std::size_t>& frames, std::size_t b, std::size_t e, double log_stay,
                    double log_switch, std::vector<int>& labels) {
    const std::size_t k = models.size();
    const std::size_t t_len = e - b;
    if (t_len == 0) return;
    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> score(k), next(k), emit(k);
    std::vector<int> back(t_len * k, 0);
    auto emissions = [&](std::size_t t) {
        auto x = feats.row(frames[b + t]);
        for (std::size_t s = 0; s < k; ++s) emit[s] = models[s].valid ? models[s].log_likelihood(x) : neg_inf;
    };
    emissions(0);
    for (std::size_t s = 0; s < k; ++s) score[s] = emit[s];
    for (std::size_t t = 1; t < t_len; ++t) {
        emissions(t);
        for (std::size_t s = 0; s < k; ++s) {
            double best = neg_inf;
            int arg = static_cast<int>(s);
            for (std::size_t p = 0; p < k; ++p) {
                double v = score[p] + (p == s ? log_stay : log_switch);
                if (v > best) {
                    best = v;
                    arg = static_cast<int>(p);
                }
            }
            next[s] = best + emit[s];
            back[t * k + s] = arg;
        }
        std::swap(score, next);
    }
    int state = static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
    for (std::size_t t = t_len; t-- > 0;) {
        labels[b + t] = state;
        state = back[t * k + static_cast<std::size_t>(state)];
    }
}

// Majority vote over a centered window, restricted to [b, e); ties keep the current label.
inline void mode_smooth(std::vector<int>& labels, std::size_t b, std::size_t e, std::size_t half, std::size_t k) {
    if (half == 0 || e - b < 2) return;
    std::vector<int> out(labels.begin() + static_cast<long>(b), labels.begin() + static_cast<long>(e));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = b; i < e; ++i) {
        std::fill(counts.begin(), counts.end(), 0);
        std::size_t lo = i >= b + half ? i - half : b;
        std::size_t hi = std::min(e, i + half + 1);
        for (std::size_t j = lo; j < hi; ++j) ++counts[static_cast<std::size_t>(labels[j])];
        std::size_t best = static_cast<std::size_t>(labels[i]);
        for (std::size_t s = 0; s < k; ++s)
            if (counts[s] > counts[best]) best = s;
        out[i - b] = static_cast<int>(best);
    }
    std::copy(out.begin(), out.end(), labels.begin() + static_cast<long>(b));
}

inline int label_at(const Diarization& d, const std::map<std::string, int>& index, double t) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& r : d.records) {
        double dist = t < r.onset ? r.onset - t : (t >= r.offset ? t - r.offset : 0.0);
        if (dist < best_d) {
            best_d = dist;
            best = index.at(r.speaker);
            if (dist == 0.0) break;
        }
    }
    return best;
}

}  // namespace detail

/// Frame-level HMM resegmentation of a first-pass diarization.
///
/// States are the first-pass speakers with diagonal Gaussian emissions over
/// `feats`, initialized from the first-pass labels. Each EM iteration
/// Viterbi-decodes every speech region independently and refits the
/// Gaussians from the alignment. The final decode is mode-smoothed over a
/// `min_duration` window and converted back to intervals that tile the
/// speech regions.
inline Diarization resegment(const FeatureMatrix& feats, const Diarization& first_pass, const Timeline& speech,
                             const ResegConfig& cfg = {}) {
    cfg.validate();
    const auto names_set = first_pass.speakers();
    if (!cfg.enabled || names_set.size() <= 1 || feats.empty()) return first_pass;
    const std::vector<std::string> names(names_set.begin(), names_set.end());
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<int>(i);
    const std::size_t k = names.size();

    // speech frames grouped by region
    std::vector<std::size_t> frames;
    std::vector<std::pair<std::size_t, std::size_t>> region_span;
    for (const auto& region : speech) {
        std::size_t b = frames.size();
        auto lo = std::lower_bound(feats.frame_times.begin(), feats.frame_times.end(), region.onset);
        for (auto it = lo; it != feats.frame_times.end() && *it <= region.offset; ++it) {
            frames.push_back(static_cast<std::size_t>(it - feats.frame_times.begin()));
        }
        region_span.emplace_back(b, frames.size());
    }
    std::vector<int> labels(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        labels[i] = detail::label_at(first_pass, index, feats.frame_times[frames[i]]);
    }

    std::vector<detail::DiagGaussian> models(k);
    detail::refit(models, feats, frames, labels, cfg.variance_floor);
    const double log_stay = std::log(cfg.loop_prob);
    const double log_switch = std::log((1.0 - cfg.loop_prob) / static_cast<double>(k - 1));
    for (int it = 0; it <= cfg.em_iters; ++it) {
        for (const auto& [b, e] : region_span) detail::viterbi(models, feats, frames, b, e, log_stay, log_switch, labels);
        if (it < cfg.em_iters) detail::refit(models, feats, frames, labels, cfg.variance_floor);
    }
    const auto half = static_cast<std::size_t>(std::llround(cfg.min_duration / feats.frame_hop)) / 2;
    for (const auto& [b, e] : region_span) detail::mode_smooth(labels, b, e, half, k);

    Diarization out;
    out.recording_id = first_pass.recording_id;
    for (std::size_t r = 0; r < speech.size(); ++r) {
        const auto& region = speech[r];
        const auto [b, e] = region_span[r];
        if (b == e) {
            out.records.push_back({names[static_cast<std::size_t>(detail::label_at(first_pass, index, region.midpoint()))],
                                   region.onset, region.offset});
            continue;
        }
        double start = region.onset;
        for (std::size_t i = b; i < e; ++i) {
            bool last = i + 1 == e;
            if (!last && labels[i + 1] == labels[i]) continue;
            double stop = last ? region.offset
                               : 0.5 * (feats.frame_times[frames[i]] + feats.frame_times[frames[i + 1]]);
            out.records.push_back({names[static_cast<std::size_t>(labels[i])], start, stop});
            start = stop;
        }
    }
    out.normalize();
    return out;
}

}  // namespace diar
