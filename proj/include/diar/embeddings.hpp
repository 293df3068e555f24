#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "error.hpp"
#include "features.hpp"
#include "segmenter.hpp"

namespace diar {

struct EmbeddingEntry {
    double onset = 0.0;
    double offset = 0.0;
    std::vector<float> vector;

    friend bool operator==(const EmbeddingEntry&, const EmbeddingEntry&) = default;
};

/// One fixed-dimension vector per segment. Entries are sorted by onset.
struct EmbeddingSet {
    std::size_t dim = 0;
    std::vector<EmbeddingEntry> entries;
    std::string recording_id;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    SegmentList segments() const {
        SegmentList s;
        s.recording_id = recording_id;
        for (const auto& e : entries) s.segments.push_back({e.onset, e.offset});
        return s;
    }

    friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

/// Time-stamped vectors from a frame-level model.
struct FrameVector {
    double time = 0.0;
    std::vector<double> vector;
};

namespace detail {

inline std::vector<float> l2_normalized(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("embedding: cannot normalize a zero or non-finite vector");
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
    return out;
}

// Distance from t to the closed interval [a, b].
inline double distance_to(double t, double a, double b) {
    if (t < a) return a - t;
    if (t > b) return t - b;
    return 0.0;
}

template <typename Times>
std::size_t nearest_index(const Times& times, std::size_t n, double a, double b) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double d = distance_to(times(i), a, b);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

/// Baseline embedder: per segment, concat(mean, stddev) of the MFCC frames
/// whose centers fall in [onset, offset), L2-normalized.
inline EmbeddingSet embed_baseline(const FeatureMatrix& feats, const SegmentList& segs) {
    EmbeddingSet out;
    out.recording_id = segs.recording_id;
    out.dim = 2 * feats.n_coeffs;
    if (segs.empty()) return out;
    if (feats.empty()) throw Error("embed_baseline: empty feature matrix with non-empty segment list");
    const std::size_t d = feats.n_coeffs;
    std::vector<double> acc(2 * d);
    for (const auto& seg : segs) {
        auto lo = std::lower_bound(feats.frame_times.begin(), feats.frame_times.end(), seg.onset);
        auto hi = std::lower_bound(feats.frame_times.begin(), feats.frame_times.end(), seg.offset);
        std::size_t b = static_cast<std::size_t>(lo - feats.frame_times.begin());
        std::size_t e = static_cast<std::size_t>(hi - feats.frame_times.begin());
        if (b >= e) {
            b = detail::nearest_index([&](std::size_t i) { return feats.frame_times[i]; }, feats.n_frames,
                                      seg.onset, seg.offset);
            e = b + 1;
        }
        std::fill(acc.begin(), acc.end(), 0.0);
        const double count = static_cast<double>(e - b);
        for (std::size_t f = b; f < e; ++f) {
            auto r = feats.row(f);
            for (std::size_t k = 0; k < d; ++k) acc[k] += r[k];
        }
        for (std::size_t k = 0; k < d; ++k) acc[k] /= count;
        for (std::size_t f = b; f < e; ++f) {
            auto r = feats.row(f);
            for (std::size_t k = 0; k < d; ++k) {
                double dev = r[k] - acc[k];
                acc[d + k] += dev * dev;
            }
        }
        for (std::size_t k = 0; k < d; ++k) acc[d + k] = std::sqrt(acc[d + k] / count);
        out.entries.push_back({seg.onset, seg.offset, detail::l2_normalized(acc)});
    }
    return out;
}

/// Average-pools frame-level vectors over each segment, then L2-normalizes.
/// A segment containing no frame borrows the nearest frame.
inline EmbeddingSet pool_frames(std::span<const FrameVector> frames, const SegmentList& segs) {
    if (frames.empty()) throw Error("pool_frames: no frame vectors");
    const std::size_t dim = frames.front().vector.size();
    if (dim == 0) throw Error("pool_frames: zero-dimensional frame vectors");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].vector.size() != dim) throw Error("pool_frames: frame " + std::to_string(i) + " has wrong dim");
        if (i > 0 && frames[i].time < frames[i - 1].time) throw Error("pool_frames: frame times must be increasing");
    }
    EmbeddingSet out;
    out.dim = dim;
    out.recording_id = segs.recording_id;
    std::vector<double> acc(dim);
    for (const auto& seg : segs) {
        std::fill(acc.begin(), acc.end(), 0.0);
        std::size_t count = 0;
        for (const auto& fr : frames) {
            if (fr.time >= seg.onset && fr.time < seg.offset) {
                for (std::size_t k = 0; k < dim; ++k) acc[k] += fr.vector[k];
                ++count;
            }
        }
        if (count == 0) {
            std::size_t i = detail::nearest_index([&](std::size_t j) { return frames[j].time; }, frames.size(),
                                                  seg.onset, seg.offset);
            acc = frames[i].vector;
            count = 1;
        }
        for (auto& x : acc) x /= static_cast<double>(count);
        out.entries.push_back({seg.onset, seg.offset, detail::l2_normalized(acc)});
    }
    return out;
}

/// Re-expresses `set` on the target segmentation: an entry with the same
/// span (within 1 ms) is copied; otherwise the overlap-duration-weighted mean
/// of intersecting entries is taken, or the nearest entry by midpoint.
inline EmbeddingSet align_to_segments(const EmbeddingSet& set, const SegmentList& segs) {
    if (set.empty()) throw Error("align_to_segments: empty embedding set");
    constexpr double kSameSpan = 1e-3;
    EmbeddingSet out;
    out.dim = set.dim;
    out.recording_id = segs.recording_id.empty() ? set.recording_id : segs.recording_id;
    std::vector<double> acc(set.dim);
    for (const auto& seg : segs) {
        const EmbeddingEntry* exact = nullptr;
        for (const auto& e : set.entries) {
            if (std::abs(e.onset - seg.onset) < kSameSpan && std::abs(e.offset - seg.offset) < kSameSpan) {
                exact = &e;
                break;
            }
        }
        if (exact) {
            out.entries.push_back({seg.onset, seg.offset, exact->vector});
            continue;
        }
        std::fill(acc.begin(), acc.end(), 0.0);
        double total = 0.0;
        for (const auto& e : set.entries) {
            double ov = std::min(e.offset, seg.offset) - std::max(e.onset, seg.onset);
            if (ov <= 0.0) continue;
            for (std::size_t k = 0; k < set.dim; ++k) acc[k] += ov * e.vector[k];
            total += ov;
        }
        if (total <= 0.0) {
            const double mid = seg.midpoint();
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < set.entries.size(); ++i) {
                double d = std::abs(0.5 * (set.entries[i].onset + set.entries[i].offset) - mid);
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            out.entries.push_back({seg.onset, seg.offset, set.entries[best].vector});
            continue;
        }
        out.entries.push_back({seg.onset, seg.offset, detail::l2_normalized(acc)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// EMB1 binary format, little-endian:
//   "EMB1" | u32 version (1) | u32 n_segments | u32 dim |
//   n_segments × (f64 onset | f64 offset | dim × f32)
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kEmbVersion = 1;
inline constexpr std::size_t kEmbHeaderBytes = 16;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const unsigned char* p) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::string encode_emb(const EmbeddingSet& set) {
    if (set.dim == 0) throw Error("EMB1: dim must be positive");
    std::string out = "EMB1";
    detail::put_le<std::uint32_t>(out, kEmbVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.entries.size()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim));
    for (const auto& e : set.entries) {
        if (e.vector.size() != set.dim) throw Error("EMB1: entry vector does not match dim");
        detail::put_le<double>(out, e.onset);
        detail::put_le<double>(out, e.offset);
        for (float v : e.vector) detail::put_le<float>(out, v);
    }
    return out;
}

inline EmbeddingSet decode_emb(std::span<const unsigned char> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "EMB1", 4) != 0) throw FormatError("EMB1: bad magic", 0);
    if (bytes.size() < kEmbHeaderBytes) throw FormatError("EMB1: truncated header", bytes.size());
    auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
    if (version != kEmbVersion) throw FormatError("EMB1: unsupported version " + std::to_string(version), 4);
    auto n = detail::get_le<std::uint32_t>(bytes.data() + 8);
    auto dim = detail::get_le<std::uint32_t>(bytes.data() + 12);
    if (dim == 0) throw FormatError("EMB1: dim must be positive", 12);
    const std::size_t record = 16 + 4 * static_cast<std::size_t>(dim);
    EmbeddingSet set;
    set.dim = dim;
    set.entries.reserve(n);
    std::size_t pos = kEmbHeaderBytes;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (pos + record > bytes.size()) {
            throw FormatError("EMB1: truncated payload, header declares " + std::to_string(n) +
                                  " segments but only " + std::to_string(i) + " are complete",
                              pos);
        }
        EmbeddingEntry e;
        e.onset = detail::get_le<double>(bytes.data() + pos);
        e.offset = detail::get_le<double>(bytes.data() + pos + 8);
        if (!std::isfinite(e.onset)) throw FormatError("EMB1: non-finite onset", pos);
        if (!std::isfinite(e.offset)) throw FormatError("EMB1: non-finite offset", pos + 8);
        e.vector.resize(dim);
        for (std::uint32_t k = 0; k < dim; ++k) {
            std::size_t at = pos + 16 + 4 * static_cast<std::size_t>(k);
            e.vector[k] = detail::get_le<float>(bytes.data() + at);
            if (!std::isfinite(e.vector[k])) throw FormatError("EMB1: non-finite value", at);
        }
        set.entries.push_back(std::move(e));
        pos += record;
    }
    if (pos != bytes.size()) throw FormatError("EMB1: trailing bytes after declared payload", pos);
    return set;
}

inline void write_emb(const EmbeddingSet& set, const std::filesystem::path& path) {
    std::string bytes = encode_emb(set);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write EMB1 file: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Reads an EMB1 file; the recording id defaults to the file stem.
inline EmbeddingSet read_emb(const std::filesystem::path& path, std::string recording_id = {}) {
    std::string raw = detail::read_file_bytes(path);
    EmbeddingSet set = decode_emb({reinterpret_cast<const unsigned char*>(raw.data()), raw.size()});
    set.recording_id = recording_id.empty() ? path.stem().string() : std::move(recording_id);
    return set;
}

}  // namespace diar
