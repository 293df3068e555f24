#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "diarization.hpp"
#include "error.hpp"
#include "text.hpp"
#include "timeline.hpp"

namespace diar {

/// Parses SPEAKER lines; other record types are skipped. Records of each
/// recording are normalized.
inline std::map<std::string, Diarization> parse_rttm(std::istream& in) {
    std::map<std::string, Diarization> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto f = text::split_ws(line);
        if (f.empty() || f[0] != "SPEAKER") continue;
        if (f.size() != 10) {
            throw ParseError("rttm: SPEAKER line needs 10 fields, got " + std::to_string(f.size()), lineno);
        }
        if (!text::parse_long(f[2])) throw ParseError("rttm: unparsable channel", lineno);
        auto on = text::parse_double(f[3]);
        auto dur = text::parse_double(f[4]);
        if (!on || !dur) throw ParseError("rttm: unparsable number", lineno);
        if (*dur < 0) throw ParseError("rttm: negative duration", lineno);
        if (*on < 0) throw ParseError("rttm: negative onset", lineno);
        auto& d = out[std::string(f[1])];
        d.recording_id = std::string(f[1]);
        if (*dur > 0) d.records.push_back({std::string(f[7]), *on, *on + *dur});
    }
    for (auto& [id, d] : out) d.normalize();
    return out;
}

inline std::map<std::string, Diarization> read_rttm(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open rttm file: " + path.string());
    return parse_rttm(in);
}

/// One SPEAKER line per record; onset and duration with 3 decimals.
inline std::string format_rttm(const Diarization& d) {
    std::string out;
    for (const auto& r : d.records) {
        out += "SPEAKER " + d.recording_id + " 1 " + text::fixed(r.onset, 3) + " " + text::fixed(r.duration(), 3) +
               " <NA> <NA> " + r.speaker + " <NA> <NA>\n";
    }
    return out;
}

inline void write_rttm(const std::vector<Diarization>& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write rttm file: " + path.string());
    for (const auto& d : ds) out << format_rttm(d);
}

inline void write_rttm(const Diarization& d, const std::filesystem::path& path) {
    write_rttm(std::vector<Diarization>{d}, path);
}

/// Scored regions per recording; a recording without an entry is scored in full.
struct UemSpec {
    std::map<std::string, Timeline> regions;

    const Timeline* find(const std::string& recording_id) const {
        auto it = regions.find(recording_id);
        return it == regions.end() ? nullptr : &it->second;
    }
};

inline UemSpec parse_uem(std::istream& in) {
    std::map<std::string, std::vector<Interval>> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto f = text::split_ws(line);
        if (f.empty() || f[0].starts_with(";;")) continue;
        if (f.size() != 4) throw ParseError("uem: expected '<recording> <channel> <onset> <offset>'", lineno);
        if (!text::parse_long(f[1])) throw ParseError("uem: unparsable channel", lineno);
        auto on = text::parse_double(f[2]);
        auto off = text::parse_double(f[3]);
        if (!on || !off) throw ParseError("uem: unparsable number", lineno);
        if (*on < 0 || *on >= *off) throw ParseError("uem: invalid region", lineno);
        raw[std::string(f[0])].push_back({*on, *off});
    }
    UemSpec uem;
    for (auto& [id, ivs] : raw) uem.regions.emplace(id, Timeline(std::move(ivs)));
    return uem;
}

inline UemSpec read_uem(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open uem file: " + path.string());
    return parse_uem(in);
}

}  // namespace diar
