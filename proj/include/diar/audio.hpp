#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "error.hpp"

namespace diar {

/// Mono PCM signal with amplitudes in [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = 16000;

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace detail

/// Decodes a RIFF/WAVE PCM16 file held in memory. Stereo is averaged to mono.
inline AudioBuffer parse_wav(std::span<const unsigned char> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw FormatError("not a RIFF/WAVE file: missing 'RIFF'/'WAVE' header chunk", 0);
    }
    std::size_t pos = 12;
    bool have_fmt = false;
    int channels = 0;
    int rate = 0;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        std::string id(reinterpret_cast<const char*>(hdr), 4);
        std::size_t size = detail::read_u32le(hdr + 4);
        std::size_t body = pos + 8;
        if (id == "fmt ") {
            if (size < 16 || body + 16 > bytes.size()) throw FormatError("truncated 'fmt ' chunk", pos);
            int format_tag = detail::read_u16le(bytes.data() + body);
            channels = detail::read_u16le(bytes.data() + body + 2);
            rate = static_cast<int>(detail::read_u32le(bytes.data() + body + 4));
            int bits = detail::read_u16le(bytes.data() + body + 14);
            if (format_tag != 1) {
                throw FormatError("'fmt ' chunk: unsupported format tag " + std::to_string(format_tag) +
                                      " (only PCM is supported)", pos);
            }
            if (bits != 16) {
                throw FormatError("'fmt ' chunk: unsupported bit depth " + std::to_string(bits) +
                                      " (only 16-bit PCM is supported)", pos);
            }
            if (channels != 1 && channels != 2) {
                throw FormatError("'fmt ' chunk: unsupported channel count " + std::to_string(channels), pos);
            }
            if (rate <= 0) throw FormatError("'fmt ' chunk: invalid sample rate", pos);
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw FormatError("'data' chunk precedes 'fmt ' chunk", pos);
            std::size_t avail = std::min(size, bytes.size() - body);
            std::size_t frame_bytes = 2 * static_cast<std::size_t>(channels);
            std::size_t n = avail / frame_bytes;
            AudioBuffer buf;
            buf.sample_rate = rate;
            buf.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int c = 0; c < channels; ++c) {
                    auto raw = static_cast<std::int16_t>(
                        detail::read_u16le(bytes.data() + body + i * frame_bytes + 2 * static_cast<std::size_t>(c)));
                    acc += raw / 32768.0;
                }
                buf.samples[i] = acc / channels;
            }
            return buf;
        }
        pos = body + size + (size & 1);
    }
    if (!have_fmt) throw FormatError("missing 'fmt ' chunk", 12);
    throw FormatError("missing 'data' chunk", pos);
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error("wav file not found: " + path.string());
    std::string raw = detail::read_file_bytes(path);
    try {
        return parse_wav({reinterpret_cast<const unsigned char*>(raw.data()), raw.size()});
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.message(), e.offset());
    }
}

/// Encodes mono PCM16; samples are clipped to [-1, 1) and rounded.
inline std::string encode_wav(const AudioBuffer& buf) {
    std::string out;
    auto n = static_cast<std::uint32_t>(buf.samples.size());
    out.reserve(44 + 2 * static_cast<std::size_t>(n));
    out += "RIFF";
    detail::put_u32le(out, 36 + 2 * n);
    out += "WAVEfmt ";
    detail::put_u32le(out, 16);
    detail::put_u16le(out, 1);
    detail::put_u16le(out, 1);
    detail::put_u32le(out, static_cast<std::uint32_t>(buf.sample_rate));
    detail::put_u32le(out, static_cast<std::uint32_t>(buf.sample_rate) * 2);
    detail::put_u16le(out, 2);
    detail::put_u16le(out, 16);
    out += "data";
    detail::put_u32le(out, 2 * n);
    for (double s : buf.samples) {
        double v = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        detail::put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
    return out;
}

inline void write_wav(const AudioBuffer& buf, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    std::string bytes = encode_wav(buf);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Band-limited rational resampler: Kaiser-windowed sinc (beta 8) with 32
/// taps per output phase at the narrower of the two rates.
class Resampler {
public:
    static constexpr int kTapsPerPhase = 32;
    static constexpr double kKaiserBeta = 8.0;

    Resampler(int source_rate, int target_rate) {
        if (source_rate <= 0 || target_rate <= 0) throw std::invalid_argument("resample: rates must be positive");
        int g = std::gcd(source_rate, target_rate);
        up_ = target_rate / g;
        down_ = source_rate / g;
        cutoff_ = std::min(1.0, static_cast<double>(up_) / down_);
        half_width_ = static_cast<int>(std::ceil(kTapsPerPhase / 2.0 / cutoff_));
        taps_ = 2 * half_width_;
        // phase ph corresponds to fractional input offset ph/up_
        table_.resize(static_cast<std::size_t>(up_) * taps_);
        double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
        for (int ph = 0; ph < up_; ++ph) {
            double frac = static_cast<double>(ph) / up_;
            for (int t = 0; t < taps_; ++t) {
                double x = (t - half_width_ + 1) - frac;  // input index offset relative to floor position
                double ratio = x / (half_width_);
                double w = std::abs(ratio) >= 1.0
                               ? 0.0
                               : std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - ratio * ratio)) / i0_beta;
                double arg = cutoff_ * x;
                double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
                table_[static_cast<std::size_t>(ph) * taps_ + t] = cutoff_ * sinc * w;
            }
        }
    }

    std::vector<double> process(std::span<const double> in) const {
        auto n_in = static_cast<long long>(in.size());
        auto n_out = static_cast<long long>(std::llround(static_cast<double>(n_in) * up_ / down_));
        std::vector<double> out(static_cast<std::size_t>(n_out));
        for (long long m = 0; m < n_out; ++m) {
            long long num = m * down_;
            long long base = num / up_;
            int ph = static_cast<int>(num % up_);
            const double* h = &table_[static_cast<std::size_t>(ph) * taps_];
            double acc = 0.0;
            for (int t = 0; t < taps_; ++t) {
                long long k = base + (t - half_width_ + 1);
                if (k >= 0 && k < n_in) acc += in[static_cast<std::size_t>(k)] * h[t];
            }
            out[static_cast<std::size_t>(m)] = acc;
        }
        return out;
    }

private:
    int up_ = 1;
    int down_ = 1;
    double cutoff_ = 1.0;
    int half_width_ = 16;
    int taps_ = 32;
    std::vector<double> table_;
};

/// Resamples to `target_rate`; returns the input unchanged when rates match.
inline AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("resample: target_rate must be positive");
    if (target_rate == buf.sample_rate) return buf;
    Resampler r(buf.sample_rate, target_rate);
    return AudioBuffer{r.process(buf.samples), target_rate};
}

}  // namespace diar
