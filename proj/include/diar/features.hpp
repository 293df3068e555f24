#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "audio.hpp"

namespace diar {

/// Row-major frames × coefficients matrix with per-frame center times.
struct FeatureMatrix {
    std::size_t n_frames = 0;
    std::size_t n_coeffs = 0;
    std::vector<double> values;
    std::vector<double> frame_times;
    double frame_hop = 0.010;
    double frame_len = 0.025;

    bool empty() const { return n_frames == 0; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * n_coeffs, n_coeffs}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * n_coeffs, n_coeffs}; }

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

namespace detail {

// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k];
                auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

}  // namespace detail

struct MfccConfig {
    int sample_rate = 16000;
    std::size_t frame_len = 400;
    std::size_t frame_hop = 160;
    std::size_t fft_size = 512;
    std::size_t n_mel = 40;
    double low_hz = 0.0;
    double high_hz = 8000.0;
    double log_floor = 1e-10;  // applied to mel energies before log
};

/// Number of full frames in `n_samples`, or 0 when shorter than one frame.
inline std::size_t count_frames(std::size_t n_samples, std::size_t frame_len, std::size_t hop) {
    return n_samples < frame_len ? 0 : (n_samples - frame_len) / hop + 1;
}

/// Triangular mel filterbank, n_mel × (fft_size/2 + 1).
inline std::vector<std::vector<double>> mel_filterbank(const MfccConfig& cfg) {
    const std::size_t n_bins = cfg.fft_size / 2 + 1;
    const double mel_lo = detail::hz_to_mel(cfg.low_hz);
    const double mel_hi = detail::hz_to_mel(cfg.high_hz);
    std::vector<double> edges(cfg.n_mel + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = detail::mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (cfg.n_mel + 1));
    }
    std::vector<std::vector<double>> bank(cfg.n_mel, std::vector<double>(n_bins, 0.0));
    for (std::size_t m = 0; m < cfg.n_mel; ++m) {
        double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (std::size_t b = 0; b < n_bins; ++b) {
            double f = static_cast<double>(b) * cfg.sample_rate / cfg.fft_size;
            if (f > lo && f < hi) bank[m][b] = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
        }
    }
    return bank;
}

/// MFCCs: Hamming-windowed frames, power spectrum, mel filterbank, log,
/// orthonormal DCT-II; the first `n_coeffs` cepstra (c0 included) are kept.
inline FeatureMatrix mfcc(const AudioBuffer& buf, std::size_t n_coeffs, const MfccConfig& cfg = {}) {
    if (buf.sample_rate != cfg.sample_rate) throw std::invalid_argument("mfcc: buffer must be at 16 kHz");
    if (n_coeffs == 0 || n_coeffs > cfg.n_mel) throw std::invalid_argument("mfcc: n_coeffs must be in [1, n_mel]");
    FeatureMatrix fm;
    fm.n_coeffs = n_coeffs;
    fm.frame_hop = static_cast<double>(cfg.frame_hop) / cfg.sample_rate;
    fm.frame_len = static_cast<double>(cfg.frame_len) / cfg.sample_rate;
    fm.n_frames = count_frames(buf.samples.size(), cfg.frame_len, cfg.frame_hop);
    if (fm.n_frames == 0) return fm;

    std::vector<double> window(cfg.frame_len);
    for (std::size_t i = 0; i < cfg.frame_len; ++i) {
        window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (cfg.frame_len - 1));
    }
    const auto bank = mel_filterbank(cfg);
    std::vector<std::vector<double>> dct(n_coeffs, std::vector<double>(cfg.n_mel));
    for (std::size_t k = 0; k < n_coeffs; ++k) {
        double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / cfg.n_mel);
        for (std::size_t m = 0; m < cfg.n_mel; ++m) {
            dct[k][m] = scale * std::cos(std::numbers::pi * k * (m + 0.5) / cfg.n_mel);
        }
    }

    fm.values.assign(fm.n_frames * n_coeffs, 0.0);
    fm.frame_times.resize(fm.n_frames);
    std::vector<std::complex<double>> spectrum(cfg.fft_size);
    std::vector<double> power(cfg.fft_size / 2 + 1);
    std::vector<double> logmel(cfg.n_mel);
    for (std::size_t f = 0; f < fm.n_frames; ++f) {
        const std::size_t start = f * cfg.frame_hop;
        fm.frame_times[f] = (static_cast<double>(start) + cfg.frame_len / 2.0) / cfg.sample_rate;
        std::fill(spectrum.begin(), spectrum.end(), std::complex<double>{});
        for (std::size_t i = 0; i < cfg.frame_len; ++i) spectrum[i] = buf.samples[start + i] * window[i];
        detail::fft(spectrum);
        for (std::size_t b = 0; b < power.size(); ++b) power[b] = std::norm(spectrum[b]);
        for (std::size_t m = 0; m < cfg.n_mel; ++m) {
            double e = 0.0;
            for (std::size_t b = 0; b < power.size(); ++b) e += bank[m][b] * power[b];
            logmel[m] = std::log(std::max(e, cfg.log_floor));
        }
        auto out = fm.row(f);
        for (std::size_t k = 0; k < n_coeffs; ++k) {
            double c = 0.0;
            for (std::size_t m = 0; m < cfg.n_mel; ++m) c += dct[k][m] * logmel[m];
            out[k] = c;
        }
    }
    return fm;
}

/// Copy restricted to coefficients [first, first + count).
inline FeatureMatrix slice_coeffs(const FeatureMatrix& fm, std::size_t first, std::size_t count) {
    if (first + count > fm.n_coeffs) throw std::invalid_argument("slice_coeffs: range exceeds n_coeffs");
    FeatureMatrix out = fm;
    out.n_coeffs = count;
    out.values.assign(fm.n_frames * count, 0.0);
    for (std::size_t f = 0; f < fm.n_frames; ++f) {
        auto src = fm.row(f);
        std::copy(src.begin() + static_cast<long>(first), src.begin() + static_cast<long>(first + count),
                  out.row(f).begin());
    }
    return out;
}

/// Subtracts the per-coefficient mean over the selected frames (all when `mask` is empty).
inline FeatureMatrix mean_normalize(FeatureMatrix fm, const std::vector<bool>& mask = {}) {
    if (fm.empty()) return fm;
    std::vector<double> mean(fm.n_coeffs, 0.0);
    std::size_t count = 0;
    for (std::size_t f = 0; f < fm.n_frames; ++f) {
        if (!mask.empty() && !mask[f]) continue;
        auto r = fm.row(f);
        for (std::size_t k = 0; k < fm.n_coeffs; ++k) mean[k] += r[k];
        ++count;
    }
    if (count == 0) return fm;
    for (auto& m : mean) m /= static_cast<double>(count);
    for (std::size_t f = 0; f < fm.n_frames; ++f) {
        auto r = fm.row(f);
        for (std::size_t k = 0; k < fm.n_coeffs; ++k) r[k] -= mean[k];
    }
    return fm;
}

/// Mean and variance normalization per coefficient over the selected frames.
/// Coefficients whose spread is negligible next to their magnitude are only mean-centred,
/// so rounding noise on a constant coefficient is not blown up to unit variance.
inline FeatureMatrix cmvn(const FeatureMatrix& fm, const std::vector<bool>& mask = {}) {
    FeatureMatrix out = mean_normalize(fm, mask);
    if (out.empty()) return out;
    std::vector<double> sq(out.n_coeffs, 0.0), raw(out.n_coeffs, 0.0);
    std::size_t count = 0;
    for (std::size_t f = 0; f < out.n_frames; ++f) {
        if (!mask.empty() && !mask[f]) continue;
        auto r = out.row(f);
        auto o = fm.row(f);
        for (std::size_t k = 0; k < out.n_coeffs; ++k) {
            sq[k] += r[k] * r[k];
            raw[k] += o[k] * o[k];
        }
        ++count;
    }
    if (count == 0) return out;
    for (std::size_t k = 0; k < out.n_coeffs; ++k) {
        sq[k] = std::sqrt(sq[k] / static_cast<double>(count));
        raw[k] = std::sqrt(raw[k] / static_cast<double>(count));
    }
    for (std::size_t f = 0; f < out.n_frames; ++f) {
        auto r = out.row(f);
        for (std::size_t k = 0; k < out.n_coeffs; ++k) {
            if (sq[k] > 1e-9 * raw[k]) r[k] /= sq[k];
        }
    }
    return out;
}

}  // namespace diar
