#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "embeddings.hpp"
#include "linalg.hpp"
#include "segmenter.hpp"

namespace diar {

/// Square symmetric similarity matrix indexed by a segment list.
struct AffinityMatrix {
    Matrix values;
    SegmentList segs;

    std::size_t n() const { return values.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

struct FusionConfig {
    std::vector<double> weights;

    void validate() const {
        if (weights.empty()) throw std::invalid_argument("FusionConfig: no weights");
        double sum = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("FusionConfig: weights must be >= 0");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("FusionConfig: weights must sum to 1");
    }
};

/// values(i, j) = <v_i, v_j>, with an exact unit diagonal.
inline AffinityMatrix cosine_affinity(const EmbeddingSet& set) {
    if (set.empty()) throw std::invalid_argument("cosine_affinity: empty embedding set");
    const std::size_t n = set.size();
    AffinityMatrix out{Matrix(n, n), set.segments()};
    for (std::size_t i = 0; i < n; ++i) {
        out.values(i, i) = 1.0;
        const auto& vi = set.entries[i].vector;
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& vj = set.entries[j].vector;
            double dot = 0.0;
            for (std::size_t k = 0; k < set.dim; ++k) dot += static_cast<double>(vi[k]) * vj[k];
            out.values(i, j) = dot;
            out.values(j, i) = dot;
        }
    }
    return out;
}

/// Elementwise convex combination of affinity streams.
///
/// Evaluated as S_a + sum_k w_k (S_k - S_a), anchored on the heaviest stream
/// a, which is algebraically the weighted sum and reproduces S_a bit-exactly
/// when the other streams carry zero weight or equal S_a.
inline AffinityMatrix fuse(const std::vector<AffinityMatrix>& streams, const FusionConfig& cfg) {
    cfg.validate();
    if (streams.empty()) throw std::invalid_argument("fuse: no streams");
    if (cfg.weights.size() != streams.size()) {
        throw std::invalid_argument("fuse: " + std::to_string(cfg.weights.size()) + " weights for " +
                                    std::to_string(streams.size()) + " streams");
    }
    const std::size_t n = streams[0].n();
    for (std::size_t s = 1; s < streams.size(); ++s) {
        if (streams[s].n() != n || !streams[s].values.square()) {
            throw std::invalid_argument("fuse: stream " + std::to_string(s) + " has size " +
                                        std::to_string(streams[s].n()) + ", expected " + std::to_string(n));
        }
        const auto& a = streams[s].segs.segments;
        const auto& b = streams[0].segs.segments;
        bool same = a.size() == b.size();
        for (std::size_t i = 0; same && i < a.size(); ++i) {
            same = std::abs(a[i].onset - b[i].onset) < 1e-6 && std::abs(a[i].offset - b[i].offset) < 1e-6;
        }
        if (!same) throw std::invalid_argument("fuse: stream " + std::to_string(s) + " is on a different segmentation");
    }
    const std::size_t anchor = static_cast<std::size_t>(
        std::max_element(cfg.weights.begin(), cfg.weights.end()) - cfg.weights.begin());
    AffinityMatrix out = streams[anchor];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double base = streams[anchor].values(i, j);
            double delta = 0.0;
            for (std::size_t s = 0; s < streams.size(); ++s) {
                if (s == anchor || cfg.weights[s] == 0.0) continue;
                delta += cfg.weights[s] * (streams[s].values(i, j) - base);
            }
            out.values(i, j) = base + delta;
        }
    }
    return out;
}

/// Row-wise p-pruning: each row keeps the entries at least as large as its
/// ceil(p·n)-th largest value (ties at the cut are all kept, the diagonal
/// always), the result is symmetrized by averaging with its transpose and
/// negatives are clamped.
inline Matrix refine(const Matrix& s, double p) {
    if (!s.square()) throw std::invalid_argument("refine: matrix must be square");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("refine: p must be in (0, 1]");
    const std::size_t n = s.rows();
    const auto keep = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-12)), 1, std::max<std::size_t>(n, 1));
    Matrix pruned(n, n);
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = s.row(i);
        std::copy(row.begin(), row.end(), sorted.begin());
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(keep - 1), sorted.end(), std::greater<>());
        const double cut = sorted[keep - 1];
        for (std::size_t j = 0; j < n; ++j)
            if (j == i || row[j] >= cut) pruned(i, j) = row[j];
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out(i, j) = std::max(0.0, 0.5 * (pruned(i, j) + pruned(j, i)));
    }
    return out;
}

inline AffinityMatrix refine(const AffinityMatrix& s, double p) { return {refine(s.values, p), s.segs}; }

}  // namespace diar
