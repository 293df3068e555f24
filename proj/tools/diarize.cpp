#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <diar/diar.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunArgs {
    std::string wav;
    std::string lab;
    std::vector<std::string> emb;
    std::string fusion;
    double window = 2.0;
    double overlap = 0.4;
    std::string clusterer = "spectral";
    int max_speakers = 10;
    int num_speakers = 0;
    std::string reseg = "off";
    bool reseg_given = false;
    std::string preset;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    std::string out;
    std::string diagnostics;
};

std::vector<fs::path> list_wavs(const fs::path& p) {
    if (!fs::exists(p)) throw UsageError("--wav: no such file or directory: " + p.string());
    if (!fs::is_directory(p)) return {p};
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// "NAME:W,NAME:W" -> weights in stream order
std::vector<double> parse_fusion(const std::string& text_in, const std::vector<diar::StreamSpec>& streams) {
    std::map<std::string, double> by_name;
    std::size_t pos = 0;
    while (pos <= text_in.size()) {
        auto comma = text_in.find(',', pos);
        auto item = diar::text::trim(text_in.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        auto colon = item.rfind(':');
        auto w = colon == std::string::npos ? std::nullopt : diar::text::parse_double(item.substr(colon + 1));
        if (!w) throw UsageError("--fusion: expected NAME:WEIGHT, got '" + item + "'");
        by_name[item.substr(0, colon)] = *w;
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    std::vector<double> weights;
    for (const auto& s : streams) {
        auto it = by_name.find(s.name);
        if (it == by_name.end()) throw UsageError("--fusion: no weight for stream '" + s.name + "'");
        weights.push_back(it->second);
        by_name.erase(it);
    }
    if (!by_name.empty()) throw UsageError("--fusion: unknown stream '" + by_name.begin()->first + "'");
    return weights;
}

diar::PipelineConfig build_config(const RunArgs& a) {
    diar::PipelineConfig cfg;
    if (!a.lab.empty()) cfg.lab = a.lab;
    cfg.window = diar::WindowConfig{a.window, a.overlap};
    if (!a.emb.empty()) {
        cfg.streams.clear();
        for (const auto& e : a.emb) {
            auto eq = e.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == e.size()) {
                throw UsageError("--emb: expected NAME=PATH, got '" + e + "'");
            }
            std::string path = e.substr(eq + 1);
            cfg.streams.push_back({e.substr(0, eq), path == "builtin" ? fs::path{} : fs::path{path}});
        }
    }
    if (a.preset == "track1") {
        cfg = diar::track1_preset(cfg);
    } else if (a.preset == "track2") {
        cfg = diar::track2_preset(cfg);
    }
    if (!a.fusion.empty()) cfg.weights = parse_fusion(a.fusion, cfg.streams);
    cfg.clusterer = a.clusterer == "ahc" ? diar::Clusterer::ahc : diar::Clusterer::spectral;
    cfg.spectral.max_speakers = a.max_speakers;
    if (a.num_speakers > 0) cfg.num_speakers = a.num_speakers;
    if (a.preset.empty() || a.reseg_given) cfg.reseg.enabled = a.reseg == "hmm";
    cfg.seed = a.seed;
    cfg.validate();
    return cfg;
}

int run_cmd(const RunArgs& a) {
    diar::PipelineConfig cfg;
    std::vector<fs::path> wavs;
    try {
        cfg = build_config(a);
        wavs = list_wavs(a.wav);
    } catch (const std::exception& e) {
        std::cerr << "diarize run: " << e.what() << "\n";
        return kExitUsage;
    }
    auto results = diar::run_pipeline(wavs, cfg, a.jobs);

    std::vector<diar::Diarization> ok;
    std::string diag;
    int status = kExitOk;
    for (const auto& r : results) {
        diag += r.diagnostics() + "\n";
        if (r.ok()) {
            ok.push_back(r.diarization);
        } else {
            std::cerr << "diarize run: " << r.error << "\n";
            status = kExitFailed;
        }
    }
    std::string rttm;
    for (const auto& d : ok) rttm += diar::format_rttm(d);
    try {
        diar::write_atomically(a.out, rttm);
        if (!a.diagnostics.empty()) diar::write_atomically(a.diagnostics, diag);
    } catch (const std::exception& e) {
        std::cerr << "diarize run: " << e.what() << "\n";
        return kExitFailed;
    }
    std::cout << diag;
    return status;
}

struct ScoreArgs {
    std::string ref;
    std::string hyp;
    double collar = diar::kDefaultCollar;
    std::string uem;
    std::string report;
    bool ignore_missing = false;
};

std::string percent(double der) { return std::isfinite(der) ? diar::text::fixed(100.0 * der, 2) : "inf"; }

json report_json(const diar::DerReport& r) {
    json mapping = json::object();
    for (const auto& [h, ref] : r.mapping) mapping[h] = ref;
    return {{"recording", r.recording_id}, {"total_ref", r.total_ref}, {"miss", r.miss},
            {"false_alarm", r.false_alarm}, {"confusion", r.confusion},
            {"der", std::isfinite(r.der) ? json(r.der) : json(nullptr)}, {"no_reference", r.no_reference},
            {"mapping", mapping}};
}

int score_cmd(const ScoreArgs& a) {
    std::map<std::string, diar::Diarization> ref, hyp;
    diar::UemSpec uem;
    try {
        ref = diar::read_rttm(a.ref);
        hyp = diar::read_rttm(a.hyp);
        if (!a.uem.empty()) uem = diar::read_uem(a.uem);
    } catch (const std::exception& e) {
        std::cerr << "diarize score: " << e.what() << "\n";
        return kExitFailed;
    }
    int status = kExitOk;
    std::vector<diar::DerReport> reports;
    json doc = {{"collar", a.collar}, {"recordings", json::array()}, {"skipped", json::array()}};
    for (const auto& [id, h] : hyp) {
        if (!ref.count(id)) {
            if (a.ignore_missing) {
                std::cout << id << " skipped (not in reference)\n";
                doc["skipped"].push_back(id);
            } else {
                std::cerr << "diarize score: recording " << id << " is in the hypothesis but not the reference\n";
                status = kExitFailed;
            }
        }
    }
    std::set<std::string> ids;
    for (const auto& [id, r] : ref) ids.insert(id);
    for (const auto& id : ids) {
        diar::Diarization h;
        h.recording_id = id;
        if (auto it = hyp.find(id); it != hyp.end()) h = it->second;
        auto rep = diar::der(ref.at(id), h, a.collar, uem);
        std::cout << id << " DER " << percent(rep.der) << " (miss " << diar::text::fixed(rep.miss, 3) << " fa "
                  << diar::text::fixed(rep.false_alarm, 3) << " conf " << diar::text::fixed(rep.confusion, 3)
                  << " ref " << diar::text::fixed(rep.total_ref, 3) << ")"
                  << (rep.no_reference ? " no reference speech" : "") << "\n";
        doc["recordings"].push_back(report_json(rep));
        reports.push_back(rep);
    }
    auto total = diar::aggregate(reports);
    std::cout << "OVERALL DER " << percent(total.der) << "\n";
    doc["overall"] = report_json(total);
    if (!a.report.empty()) {
        try {
            diar::write_atomically(a.report, doc.dump(2) + "\n");
        } catch (const std::exception& e) {
            std::cerr << "diarize score: " << e.what() << "\n";
            return kExitFailed;
        }
    }
    return status;
}

struct SynthArgs {
    int speakers = 3;
    double duration = 60.0;
    std::uint64_t seed = 0;
    double pause_prob = diar::SynthConfig{}.pause_prob;
    std::string out;
};

int synth_cmd(const SynthArgs& a) {
    diar::SynthConfig sc;
    sc.n_speakers = a.speakers;
    sc.duration = a.duration;
    sc.seed = a.seed;
    sc.pause_prob = a.pause_prob;
    try {
        sc.validate();
    } catch (const std::exception& e) {
        std::cerr << "diarize synth: " << e.what() << "\n";
        return kExitUsage;
    }
    try {
        auto corpus = diar::synth_corpus(sc);
        diar::write_synth(corpus, a.out);
        std::cout << (fs::path(a.out) / (sc.id() + ".wav")).string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "diarize synth: " << e.what() << "\n";
        return kExitFailed;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speaker and language diarization by spectral clustering"};
    app.require_subcommand(1);

    RunArgs run;
    // config files are only read by the top-level app; run options go under a [run] section
    app.set_config("--config", "", "Read options from a file ([run] section, 'key = value'); flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    auto* run_app = app.add_subcommand("run", "Diarize WAV files into RTTM");
    run_app->fallthrough();
    run_app->add_option("--wav", run.wav, "WAV file or directory of .wav files")->required();
    run_app->add_option("--lab", run.lab, "External SAD: .lab file or directory of <recording>.lab");
    run_app->add_option("--emb", run.emb, "Embedding stream NAME=PATH (EMB1 file or directory); PATH 'builtin' for the MFCC embedder")
        ->take_all();
    run_app->add_option("--fusion", run.fusion, "Fusion weights NAME:W,...");
    run_app->add_option("--window", run.window, "Window length in seconds")->capture_default_str();
    run_app->add_option("--overlap", run.overlap, "Window overlap in seconds")->capture_default_str();
    run_app->add_option("--clusterer", run.clusterer)->check(CLI::IsMember({"spectral", "ahc"}))->capture_default_str();
    run_app->add_option("--max-speakers", run.max_speakers)->check(CLI::PositiveNumber)->capture_default_str();
    run_app->add_option("--num-speakers", run.num_speakers, "Fix the speaker count")->check(CLI::PositiveNumber);
    run_app->add_option("--reseg", run.reseg)->check(CLI::IsMember({"off", "hmm"}))->capture_default_str();
    run_app->add_option("--preset", run.preset)->check(CLI::IsMember({"track1", "track2"}));
    run_app->add_option("--seed", run.seed)->capture_default_str();
    run_app->add_option("--jobs", run.jobs)->check(CLI::PositiveNumber)->capture_default_str();
    run_app->add_option("--out", run.out, "Output RTTM")->required();
    run_app->add_option("--diagnostics", run.diagnostics, "Also write the per-recording diagnostics here");

    ScoreArgs score;
    auto* score_app = app.add_subcommand("score", "Score a hypothesis RTTM against a reference");
    score_app->add_option("--ref", score.ref)->required();
    score_app->add_option("--hyp", score.hyp)->required();
    score_app->add_option("--collar", score.collar)->check(CLI::NonNegativeNumber)->capture_default_str();
    score_app->add_option("--uem", score.uem);
    score_app->add_option("--report", score.report, "Write a JSON report");
    score_app->add_flag("--ignore-missing", score.ignore_missing, "Skip hypothesis recordings absent from the reference");

    SynthArgs synth;
    auto* synth_app = app.add_subcommand("synth", "Generate a synthetic conversation (wav, rttm, lab)");
    synth_app->add_option("--speakers", synth.speakers)->check(CLI::PositiveNumber)->capture_default_str();
    synth_app->add_option("--duration", synth.duration)->check(CLI::PositiveNumber)->capture_default_str();
    synth_app->add_option("--seed", synth.seed)->capture_default_str();
    synth_app->add_option("--pause-prob", synth.pause_prob)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    synth_app->add_option("--out", synth.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (run_app->parsed()) {
        run.reseg_given = run_app->count("--reseg") > 0;
        return run_cmd(run);
    }
    if (score_app->parsed()) return score_cmd(score);
    return synth_cmd(synth);
}
