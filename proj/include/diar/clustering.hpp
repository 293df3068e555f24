#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "affinity.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace diar {

struct ClusterResult {
    std::vector<int> labels;
    int k = 0;
    double p_star = 0.0;
    std::vector<double> eigengaps;  // gaps of the selected p
};

struct SpectralConfig {
    std::vector<double> p_grid = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
    int max_speakers = 10;
    int kmeans_restarts = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (p_grid.empty()) throw std::invalid_argument("SpectralConfig: empty p grid");
        for (double p : p_grid)
            if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("SpectralConfig: grid values must be in (0, 1]");
        if (max_speakers < 1) throw std::invalid_argument("SpectralConfig: max_speakers must be >= 1");
        if (kmeans_restarts < 1) throw std::invalid_argument("SpectralConfig: kmeans_restarts must be >= 1");
    }
};

/// Renumbers labels in order of first appearance, so the first segment is 0.
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
    std::vector<int> map;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int l = labels[i];
        if (l < 0) throw std::invalid_argument("canonical_labels: negative label");
        if (static_cast<std::size_t>(l) >= map.size()) map.resize(static_cast<std::size_t>(l) + 1, -1);
        if (map[static_cast<std::size_t>(l)] < 0) {
            map[static_cast<std::size_t>(l)] = *std::max_element(map.begin(), map.end()) + 1;
        }
        out[i] = map[static_cast<std::size_t>(l)];
    }
    return out;
}

/// Symmetric normalized Laplacian I - D^-1/2 A D^-1/2; a zero-degree node
/// gets an identity row.
inline Matrix normalized_laplacian(const Matrix& a) {
    const std::size_t n = a.rows();
    std::vector<double> inv_sqrt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += a(i, j);
        inv_sqrt[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) l(i, j) = -a(i, j) * inv_sqrt[i] * inv_sqrt[j];
        l(i, i) += 1.0;
        if (inv_sqrt[i] == 0.0) {
            for (std::size_t j = 0; j < n; ++j) l(i, j) = l(j, i) = 0.0;
            l(i, i) = 1.0;
        }
    }
    return l;
}

struct NmeCandidate {
    double p = 0.0;
    int k = 1;
    double max_gap = 0.0;
    double ratio = std::numeric_limits<double>::infinity();
    std::vector<double> gaps;
};

struct NmeEstimate {
    int k = 1;
    double p_star = 0.0;
    std::vector<double> eigengaps;
    std::vector<NmeCandidate> candidates;
};

/// Normalized-maximum-eigengap model selection.
///
/// For each p, the largest of the first min(max_speakers, n-1) Laplacian
/// eigengaps votes k_p; p* minimizes p / max_gap (smaller p on ties). When no
/// p yields a gap above 1e-12 the estimate is k = 1 at the largest p.
inline NmeEstimate estimate_k_nme(const Matrix& s, const SpectralConfig& cfg = {}) {
    cfg.validate();
    const std::size_t n = s.rows();
    if (n == 0) throw std::invalid_argument("estimate_k_nme: empty affinity matrix");
    NmeEstimate est;
    est.p_star = *std::max_element(cfg.p_grid.begin(), cfg.p_grid.end());
    if (n == 1) return est;
    const std::size_t max_i = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_speakers), n - 1);
    double best_ratio = std::numeric_limits<double>::infinity();
    for (double p : cfg.p_grid) {
        auto eig = jacobi_eigh(normalized_laplacian(refine(s, p)));
        NmeCandidate c;
        c.p = p;
        for (std::size_t i = 1; i <= max_i; ++i) c.gaps.push_back(eig.values[i] - eig.values[i - 1]);
        auto it = std::max_element(c.gaps.begin(), c.gaps.end());
        c.max_gap = *it;
        c.k = static_cast<int>(it - c.gaps.begin()) + 1;
        if (c.max_gap > 1e-12) c.ratio = p / c.max_gap;
        if (c.ratio < best_ratio || (c.ratio == best_ratio && std::isfinite(c.ratio) && p < est.p_star)) {
            best_ratio = c.ratio;
            est.k = c.k;
            est.p_star = p;
            est.eigengaps = c.gaps;
        }
        est.candidates.push_back(std::move(c));
    }
    return est;
}

/// Rows of the k smallest-eigenvalue eigenvectors of the normalized
/// Laplacian of refine(S, p), each row L2-normalized.
inline Matrix spectral_embed(const Matrix& s, double p_star, int k) {
    const std::size_t n = s.rows();
    if (k < 1 || static_cast<std::size_t>(k) > n) throw std::invalid_argument("spectral_embed: require 1 <= k <= n");
    auto eig = jacobi_eigh(normalized_laplacian(refine(s, p_star)));
    Matrix out(n, static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
            out(i, j) = eig.vectors(i, j);
            sq += out(i, j) * out(i, j);
        }
        if (sq > 0.0) {
            double inv = 1.0 / std::sqrt(sq);
            for (auto& v : out.row(i)) v *= inv;
        }
    }
    return out;
}

struct KmeansResult {
    std::vector<int> labels;
    double inertia = 0.0;
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline KmeansResult kmeans_once(const Matrix& x, int k, Rng& rng, int max_iter) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const auto kk = static_cast<std::size_t>(k);
    Matrix centers(kk, d);

    // k-means++ seeding
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    std::copy(x.row(first).begin(), x.row(first).end(), centers.row(0).begin());
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = sq_dist(x.row(i), centers.row(0));
    for (std::size_t c = 1; c < kk; ++c) {
        double total = 0.0;
        for (double v : dist) total += v;
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist[i];
                if (dist[i] > 0.0 && acc > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.below(n));
        }
        std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], sq_dist(x.row(i), centers.row(c)));
    }

    std::vector<int> labels(n, -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(x.row(i), centers.row(0));
            for (std::size_t c = 1; c < kk; ++c) {
                double dd = sq_dist(x.row(i), centers.row(c));
                if (dd < best_d) {
                    best_d = dd;
                    best = static_cast<int>(c);
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        Matrix sums(kk, d);
        std::vector<std::size_t> counts(kk, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = static_cast<std::size_t>(labels[i]);
            ++counts[c];
            for (std::size_t j = 0; j < d; ++j) sums(c, j) += x(i, j);
        }
        for (std::size_t c = 0; c < kk; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its centroid
            for (std::size_t j = 0; j < d; ++j) centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
        }
    }
    KmeansResult r;
    r.labels = labels;
    for (std::size_t i = 0; i < n; ++i) r.inertia += sq_dist(x.row(i), centers.row(static_cast<std::size_t>(labels[i])));
    return r;
}

}  // namespace detail

/// Seeded k-means++ / Lloyd; best of `restarts` runs by inertia (earliest
/// run on ties). Labels are renumbered by first appearance.
inline KmeansResult kmeans(const Matrix& coords, int k, std::uint64_t seed, int restarts = 10, int max_iter = 300) {
    const std::size_t n = coords.rows();
    if (k < 1 || static_cast<std::size_t>(k) > n) throw std::invalid_argument("kmeans: require 1 <= k <= n");
    Rng rng(seed);
    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        auto res = detail::kmeans_once(coords, k, rng, max_iter);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    best.labels = canonical_labels(best.labels);
    return best;
}

/// Full spectral pipeline: NME estimate of (k, p*), optional fixed k,
/// spectral embedding and k-means.
inline ClusterResult spectral_cluster(const Matrix& s, const SpectralConfig& cfg = {},
                                      std::optional<int> num_speakers = std::nullopt) {
    const std::size_t n = s.rows();
    auto est = estimate_k_nme(s, cfg);
    ClusterResult out;
    out.p_star = est.p_star;
    out.eigengaps = est.eigengaps;
    int k = num_speakers ? std::clamp(*num_speakers, 1, static_cast<int>(n)) : est.k;
    if (k == 1) {
        out.labels.assign(n, 0);
        out.k = 1;
        return out;
    }
    auto coords = spectral_embed(s, est.p_star, k);
    out.labels = kmeans(coords, k, cfg.seed, cfg.kmeans_restarts).labels;
    out.k = *std::max_element(out.labels.begin(), out.labels.end()) + 1;
    return out;
}

/// Stopping rule for agglomerative clustering.
struct AhcStop {
    std::optional<int> target_k;
    double threshold = 0.5;  // merge while the closest linkage distance is <= threshold
};

/// Average-linkage AHC on distance 1 - S. Ties merge the lexicographically
/// smallest (i, j) pair of cluster indices, clusters being indexed by their
/// smallest member.
inline std::vector<int> ahc(const Matrix& s, const AhcStop& stop) {
    const std::size_t n = s.rows();
    if (n == 0) throw std::invalid_argument("ahc: empty affinity matrix");
    if (stop.target_k && (*stop.target_k < 1 || static_cast<std::size_t>(*stop.target_k) > n)) {
        throw std::invalid_argument("ahc: target_k must be in [1, n]");
    }
    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) dist(i, j) = 1.0 - 0.5 * (s(i, j) + s(j, i));
    std::vector<bool> alive(n, true);
    std::vector<std::size_t> size(n, 1);
    std::vector<std::size_t> owner(n);
    for (std::size_t i = 0; i < n; ++i) owner[i] = i;
    std::size_t clusters = n;
    while (clusters > 1) {
        if (stop.target_k && clusters <= static_cast<std::size_t>(*stop.target_k)) break;
        std::size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (alive[j] && dist(i, j) < best) {
                    best = dist(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        if (!stop.target_k && best > stop.threshold) break;
        for (std::size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi || k == bj) continue;
            double d = (static_cast<double>(size[bi]) * dist(bi, k) + static_cast<double>(size[bj]) * dist(bj, k)) /
                       static_cast<double>(size[bi] + size[bj]);
            dist(bi, k) = dist(k, bi) = d;
        }
        size[bi] += size[bj];
        alive[bj] = false;
        for (auto& o : owner)
            if (o == bj) o = bi;
        --clusters;
    }
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(owner[i]);
    return canonical_labels(labels);
}

}  // namespace diar
