#pragma once

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "affinity.hpp"
#include "audio.hpp"
#include "clustering.hpp"
#include "diarization.hpp"
#include "embeddings.hpp"
#include "features.hpp"
#include "reseg.hpp"
#include "rttm.hpp"
#include "sad.hpp"
#include "segmenter.hpp"
#include "text.hpp"

namespace diar {

enum class Clusterer { spectral, ahc };

/// One embedding stream: the builtin MFCC-statistics embedder (empty path)
/// or an EMB1 file / directory of <recording>.emb files.
struct StreamSpec {
    std::string name = "builtin";
    std::filesystem::path path;

    bool builtin() const { return path.empty(); }
};

struct PipelineConfig {
    std::optional<std::filesystem::path> lab;  // external SAD: file or directory of <recording>.lab
    SadConfig sad;
    WindowConfig window;
    std::vector<StreamSpec> streams = {StreamSpec{}};
    std::vector<double> weights;  // per stream; empty means equal weights
    Clusterer clusterer = Clusterer::spectral;
    SpectralConfig spectral;
    double ahc_threshold = 0.5;
    std::optional<int> num_speakers;
    ResegConfig reseg{.enabled = false};
    std::size_t n_mfcc = 20;
    std::uint64_t seed = 0;

    std::vector<double> effective_weights() const {
        if (!weights.empty()) return weights;
        return std::vector<double>(streams.size(), 1.0 / static_cast<double>(streams.size()));
    }

    void validate() const {
        if (streams.empty()) throw std::invalid_argument("PipelineConfig: at least one embedding stream is required");
        auto w = effective_weights();
        if (w.size() != streams.size()) throw std::invalid_argument("PipelineConfig: one fusion weight per stream");
        FusionConfig{w}.validate();
        window.validate();
        sad.validate();
        spectral.validate();
        reseg.validate();
        if (n_mfcc < 2 || n_mfcc > MfccConfig{}.n_mel) throw std::invalid_argument("PipelineConfig: n_mfcc must be in [2, 40]");
        if (num_speakers && *num_speakers < 1) throw std::invalid_argument("PipelineConfig: num_speakers must be >= 1");
    }
};

/// Single-recording preset mirroring the speaker track: one stream, HMM resegmentation.
inline PipelineConfig track1_preset(PipelineConfig cfg = {}) {
    if (cfg.streams.empty()) cfg.streams = {StreamSpec{}};
    cfg.streams.resize(1);
    cfg.weights = {1.0};
    cfg.reseg.enabled = true;
    return cfg;
}

/// Language-track preset: two streams fused 0.8 / 0.2, no resegmentation.
inline PipelineConfig track2_preset(PipelineConfig cfg) {
    if (cfg.streams.size() != 2) throw std::invalid_argument("track2 preset needs exactly two embedding streams");
    cfg.weights = {0.8, 0.2};
    cfg.reseg.enabled = false;
    return cfg;
}

/// Error raised inside a pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, std::string recording, const std::string& what)
        : Error("[" + recording + "] stage " + stage + ": " + what), stage_(std::move(stage)),
          recording_(std::move(recording)) {}

    const std::string& stage() const { return stage_; }
    const std::string& recording() const { return recording_; }

private:
    std::string stage_;
    std::string recording_;
};

struct StageTiming {
    std::string stage;
    double ms = 0.0;
};

struct RecordingResult {
    std::string recording_id;
    Timeline speech;
    SegmentList segments;
    ClusterResult clusters;
    Diarization first_pass;
    Diarization diarization;
    std::vector<StageTiming> timings;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }

    /// One line of space-separated key=value fields.
    std::string diagnostics() const {
        std::ostringstream os;
        os << "recording=" << recording_id << " status=" << (ok() ? "ok" : "error");
        if (!ok()) {
            os << " error=\"" << error << "\"";
            return os.str();
        }
        os << " speech_regions=" << speech.size() << " speech_sec=" << text::fixed(speech.total_duration(), 3)
           << " segments=" << segments.size() << " k=" << clusters.k
           << " p_star=" << text::fixed(clusters.p_star, 2) << " speakers=" << diarization.speakers().size();
        for (const auto& t : timings) os << " t_" << t.stage << "_ms=" << text::fixed(t.ms, 1);
        return os.str();
    }
};

namespace detail {

template <typename F>
auto timed_stage(const std::string& stage, const std::string& rec, std::vector<StageTiming>& timings, F&& fn) {
    auto start = std::chrono::steady_clock::now();
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            timings.push_back({stage, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()});
        } else {
            auto r = fn();
            timings.push_back({stage, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()});
            return r;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, rec, e.what());
    }
}

inline std::filesystem::path resolve_per_recording(const std::filesystem::path& p, const std::string& rec,
                                                   const std::string& ext) {
    if (std::filesystem::is_directory(p)) return p / (rec + ext);
    return p;
}

}  // namespace detail

/// Runs the full pipeline on decoded audio.
///
/// `speech` overrides the builtin SAD; `external[i]` supplies the
/// embeddings of stream i when that stream is not builtin. Every external
/// stream is aligned to the windowed SAD segmentation before fusion.
inline RecordingResult diarize_recording(const AudioBuffer& input, const std::string& recording_id,
                                         const PipelineConfig& cfg, const std::optional<Timeline>& speech = std::nullopt,
                                         const std::vector<std::optional<EmbeddingSet>>& external = {}) {
    cfg.validate();
    RecordingResult res;
    res.recording_id = recording_id;
    auto& tm = res.timings;
    const auto& rec = recording_id;

    AudioBuffer audio = detail::timed_stage("resample", rec, tm, [&] { return resample(input, 16000); });
    res.speech = detail::timed_stage("sad", rec, tm, [&] {
        if (speech) return *speech;
        if (audio.samples.empty()) return Timeline{};
        return detect_speech(audio, cfg.sad);
    });
    res.first_pass.recording_id = rec;
    res.diarization.recording_id = rec;
    if (res.speech.empty()) return res;

    res.segments = detail::timed_stage("segment", rec, tm, [&] { return window_regions(res.speech, cfg.window, rec); });
    const FeatureMatrix feats = detail::timed_stage("features", rec, tm, [&] { return mfcc(audio, cfg.n_mfcc); });

    std::vector<AffinityMatrix> affinities = detail::timed_stage("embed", rec, tm, [&] {
        std::vector<AffinityMatrix> out;
        std::optional<FeatureMatrix> normalized;
        for (std::size_t s = 0; s < cfg.streams.size(); ++s) {
            EmbeddingSet set;
            if (cfg.streams[s].builtin()) {
                if (!normalized) {
                    std::vector<bool> mask(feats.n_frames);
                    for (std::size_t f = 0; f < feats.n_frames; ++f) mask[f] = res.speech.contains(feats.frame_times[f]);
                    // c0 is dropped (loudness, not voice); the rest are CMVN'd over speech
                    normalized = cmvn(slice_coeffs(feats, 1, feats.n_coeffs - 1), mask);
                }
                set = embed_baseline(*normalized, res.segments);
            } else {
                if (s >= external.size() || !external[s]) {
                    throw Error("no embeddings supplied for stream '" + cfg.streams[s].name + "'");
                }
                set = align_to_segments(*external[s], res.segments);
            }
            out.push_back(cosine_affinity(set));
        }
        return out;
    });

    res.clusters = detail::timed_stage("cluster", rec, tm, [&] {
        AffinityMatrix fused = fuse(affinities, FusionConfig{cfg.effective_weights()});
        if (cfg.clusterer == Clusterer::ahc) {
            ClusterResult c;
            AhcStop stop;
            if (cfg.num_speakers) stop.target_k = std::clamp(*cfg.num_speakers, 1, static_cast<int>(fused.n()));
            stop.threshold = cfg.ahc_threshold;
            c.labels = ahc(fused.values, stop);
            c.k = *std::max_element(c.labels.begin(), c.labels.end()) + 1;
            return c;
        }
        SpectralConfig sc = cfg.spectral;
        sc.seed = cfg.seed;
        return spectral_cluster(fused.values, sc, cfg.num_speakers);
    });

    res.first_pass = labels_to_diarization(res.segments, res.clusters.labels, res.speech);
    res.diarization = res.first_pass;
    if (cfg.reseg.enabled) {
        res.diarization = detail::timed_stage("reseg", rec, tm, [&] {
            return resegment(feats, res.first_pass, res.speech, cfg.reseg);
        });
    }
    return res;
}

/// Reads the recording's inputs from disk and runs the pipeline; any stage
/// failure is captured in the result instead of thrown.
inline RecordingResult run_recording(const std::filesystem::path& wav, const PipelineConfig& cfg) {
    const std::string rec = wav.stem().string();
    RecordingResult failed;
    failed.recording_id = rec;
    try {
        std::vector<StageTiming> scratch;
        AudioBuffer audio = detail::timed_stage("read", rec, scratch, [&] { return read_wav(wav); });
        std::optional<Timeline> speech;
        if (cfg.lab) {
            speech = detail::timed_stage("read", rec, scratch,
                                         [&] { return read_lab(detail::resolve_per_recording(*cfg.lab, rec, ".lab")); });
        }
        std::vector<std::optional<EmbeddingSet>> external(cfg.streams.size());
        for (std::size_t s = 0; s < cfg.streams.size(); ++s) {
            if (cfg.streams[s].builtin()) continue;
            external[s] = detail::timed_stage("read", rec, scratch, [&] {
                return read_emb(detail::resolve_per_recording(cfg.streams[s].path, rec, ".emb"), rec);
            });
        }
        return diarize_recording(audio, rec, cfg, speech, external);
    } catch (const std::exception& e) {
        failed.error = e.what();
        return failed;
    }
}

/// Runs recordings on up to `jobs` threads; results keep input order.
inline std::vector<RecordingResult> run_pipeline(const std::vector<std::filesystem::path>& wavs,
                                                 const PipelineConfig& cfg, unsigned jobs = 1) {
    std::vector<RecordingResult> results(wavs.size());
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, wavs.size()))));
    std::size_t next = 0;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next >= wavs.size()) return;
                i = next++;
            }
            results[i] = run_recording(wavs[i], cfg);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

/// Writes `content` to `path` through a temporary file and rename.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write file: " + tmp.string());
        out << content;
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace diar
