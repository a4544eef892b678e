#pragma once

#include "nowcast/csv.hpp"
#include "nowcast/detail/sha256.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/panel.hpp"

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace nowcast {

enum class Transform { None, YoyLog, YoyDiff, PerCapita, PerCapitaYoyLog };

[[nodiscard]] inline Transform parse_transform(std::string_view text) {
    if (text == "none" || text.empty()) return Transform::None;
    if (text == "yoy_log") return Transform::YoyLog;
    if (text == "yoy_diff") return Transform::YoyDiff;
    if (text == "per_capita") return Transform::PerCapita;
    if (text == "per_capita_yoy_log") return Transform::PerCapitaYoyLog;
    throw ParseError("unknown transform '" + std::string(text) + "'");
}

[[nodiscard]] constexpr bool needs_population(Transform t) noexcept {
    return t == Transform::PerCapita || t == Transform::PerCapitaYoyLog;
}

/// One ingest manifest line; relative paths resolve against the manifest's directory.
struct IngestEntry {
    std::string variable;
    std::string file;
    Frequency frequency = Frequency::Annual;
    Transform transform = Transform::None;
    std::string population;  ///< annual population file, only for per-capita transforms
};

inline constexpr const char* kIngestHeader = "variable,file,frequency,transform,population";
inline constexpr const char* kStoreManifest = "MANIFEST.csv";
inline constexpr const char* kStoreHeader = "variable,frequency,file,sha256";

[[nodiscard]] inline std::vector<IngestEntry> read_ingest_manifest(std::istream& in, const std::string& source) {
    std::vector<IngestEntry> out;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto where = source + ":" + std::to_string(line_no) + ": ";
        if (!header) {
            if (text != kIngestHeader) throw ParseError(where + "expected header " + kIngestHeader);
            header = true;
            continue;
        }
        const auto f = detail::split(text, ',');
        if (f.size() != 4 && f.size() != 5) throw ParseError(where + "expected 4 or 5 fields");
        IngestEntry e;
        e.variable = std::string(f[0]);
        e.file = std::string(f[1]);
        try {
            e.frequency = parse_frequency(f[2]);
            e.transform = parse_transform(f[3]);
        } catch (const ParseError& err) {
            throw ParseError(where + err.what());
        }
        if (f.size() == 5) e.population = std::string(f[4]);
        if (e.variable.empty() || e.file.empty()) throw ParseError(where + "empty variable or file");
        if (needs_population(e.transform) && e.population.empty()) {
            throw ParseError(where + "per-capita transform for '" + e.variable + "' needs a population file");
        }
        if (!seen.insert(e.variable).second) throw ParseError(where + "variable '" + e.variable + "' listed twice");
        out.push_back(std::move(e));
    }
    if (!header) throw ParseError(source + ": empty manifest");
    return out;
}

[[nodiscard]] inline MixedFreqSeries apply_transform(const MixedFreqSeries& s, Transform t,
                                                     const std::map<std::string, MixedFreqSeries>& population) {
    auto pop = [&]() -> const MixedFreqSeries& {
        const auto it = population.find(s.entity());
        if (it == population.end()) throw CoverageError("no population series for entity '" + s.entity() + "'");
        return it->second;
    };
    switch (t) {
        case Transform::None: return s;
        case Transform::YoyLog: return yoy_log_growth(s);
        case Transform::YoyDiff: return yoy_difference(s);
        case Transform::PerCapita: return per_capita(s, pop());
        case Transform::PerCapitaYoyLog: return yoy_log_growth(per_capita(s, pop()));
    }
    return s;
}

/// Reads raw files listed in a manifest and applies each transform.
[[nodiscard]] inline PanelDataset ingest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw NotFoundError("cannot open manifest '" + manifest_path + "'");
    const auto base = std::filesystem::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& f) {
        const std::filesystem::path p(f);
        return (p.is_absolute() ? p : base / p).string();
    };
    PanelDataset data;
    for (const auto& e : read_ingest_manifest(in, manifest_path)) {
        std::map<std::string, MixedFreqSeries> population;
        if (needs_population(e.transform)) {
            for (auto& s : read_series_csv_file(resolve(e.population), Frequency::Annual)) {
                population.emplace(s.entity(), std::move(s));
            }
        }
        const auto path = resolve(e.file);
        for (const auto& s : read_series_csv_file(path, e.frequency)) {
            const auto context = path + ": variable '" + e.variable + "': ";
            try {
                data.add(e.variable, apply_transform(s, e.transform, population));
            } catch (const DomainError& err) {
                throw DomainError(context + err.what());
            } catch (const LengthError& err) {
                throw LengthError(context + err.what());
            } catch (const CoverageError& err) {
                throw CoverageError(context + err.what());
            }
        }
    }
    return data;
}

/// Writes one normalized CSV per variable plus a manifest of SHA-256 checksums; `comment` opens every file.
inline void write_store(const PanelDataset& data, const std::string& dir, const std::string& comment = {}) {
    std::filesystem::create_directories(dir);
    const std::string opening = comment.empty() ? "" : "# " + comment + "\n";
    std::ostringstream manifest;
    manifest << opening << kStoreHeader << '\n';
    for (const auto& variable : data.variables()) {
        std::ostringstream body;
        body << opening;
        write_series_csv(body, data.series_of(variable));
        const auto text = body.str();
        const auto file = variable + ".csv";
        std::ofstream out(std::filesystem::path(dir) / file, std::ios::binary);
        if (!(out << text)) throw Error("cannot write '" + (std::filesystem::path(dir) / file).string() + "'");
        manifest << variable << ',' << to_string(data.frequency(variable)) << ',' << file << ','
                 << detail::sha256_hex(text) << '\n';
    }
    std::ofstream out(std::filesystem::path(dir) / kStoreManifest, std::ios::binary);
    if (!(out << manifest.str())) throw Error("cannot write store manifest in '" + dir + "'");
}

/// Loads a store written by write_store after verifying every checksum.
[[nodiscard]] inline PanelDataset load_store(const std::string& dir) {
    const auto manifest_path = (std::filesystem::path(dir) / kStoreManifest).string();
    std::ifstream in(manifest_path);
    if (!in) throw NotFoundError("no store manifest at '" + manifest_path + "'");
    PanelDataset data;
    std::string line;
    int line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto where = manifest_path + ":" + std::to_string(line_no) + ": ";
        if (!header) {
            if (text != kStoreHeader) throw ParseError(where + "expected header " + kStoreHeader);
            header = true;
            continue;
        }
        const auto f = detail::split(text, ',');
        if (f.size() != 4) throw ParseError(where + "expected 4 fields");
        const auto path = (std::filesystem::path(dir) / std::string(f[2])).string();
        const auto bytes = detail::read_file_bytes(path);
        if (detail::sha256_hex(bytes) != f[3]) throw ParseError(where + "checksum mismatch for '" + path + "'");
        std::istringstream body(bytes);
        Frequency freq{};
        try {
            freq = parse_frequency(f[1]);
        } catch (const ParseError& err) {
            throw ParseError(where + err.what());
        }
        for (auto& s : read_series_csv(body, freq, path)) data.add(std::string(f[0]), std::move(s));
    }
    if (!header) throw ParseError(manifest_path + ": empty manifest");
    return data;
}

}  // namespace nowcast
