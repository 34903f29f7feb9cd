#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "trendcast/series.hpp"
#include "trendcast/synth.hpp"

namespace trendcast {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// small formatting helpers
// ---------------------------------------------------------------------------

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw DataError("bad number '" + s + "' in " + context);
    return v;
}

inline long long parse_int(const std::string& s, const std::string& context) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError("bad integer '" + s + "' in " + context);
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

inline std::string file_sha256(const std::filesystem::path& path) {
    const std::string bytes = read_text_file(path);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
        throw DataError("sha256 failed for " + path.string());
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// series / counts CSV
// ---------------------------------------------------------------------------

inline std::string series_to_csv(const std::vector<TrendSeries>& series) {
    std::ostringstream out;
    out << "group_id,element_id,t,value,valid\n";
    for (const TrendSeries& s : series)
        for (std::size_t t = 0; t < s.length(); ++t) {
            out << s.group_id << ',' << s.element_id << ',' << t << ',';
            if (s.valid[t]) out << format_double(s.values[t]);
            out << ',' << (s.valid[t] ? 1 : 0) << '\n';
        }
    return out.str();
}

inline std::vector<TrendSeries> series_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("series csv: empty file");
    std::map<std::pair<std::string, std::string>, std::map<std::size_t, std::pair<double, bool>>>
        rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        const std::string ctx = "series csv line " + std::to_string(lineno);
        if (f.size() != 5) throw DataError(ctx + ": expected 5 fields");
        const long long t = parse_int(f[2], ctx);
        if (t < 0) throw DataError(ctx + ": negative step");
        const bool valid = parse_int(f[4], ctx) != 0;
        const double v = valid ? parse_double(f[3], ctx) : 0.0;
        rows[{f[0], f[1]}][static_cast<std::size_t>(t)] = {v, valid};
    }
    std::vector<TrendSeries> out;
    for (const auto& [key, steps] : rows) {
        TrendSeries s;
        s.group_id = key.first;
        s.element_id = key.second;
        const std::size_t len = steps.rbegin()->first + 1;
        s.values.assign(len, 0.0);
        s.valid.assign(len, false);
        for (const auto& [t, pv] : steps) {
            s.values[t] = pv.first;
            s.valid[t] = pv.second;
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// Alternative ingestion path: raw counts converted via compute_popularity.
inline std::vector<TrendSeries> series_from_counts_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("counts csv: empty file");
    std::map<std::pair<std::string, std::string>,
             std::map<std::size_t, std::pair<long long, long long>>>
        rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        const std::string ctx = "counts csv line " + std::to_string(lineno);
        if (f.size() != 5) throw DataError(ctx + ": expected 5 fields");
        const long long t = parse_int(f[2], ctx);
        if (t < 0) throw DataError(ctx + ": negative step");
        rows[{f[0], f[1]}][static_cast<std::size_t>(t)] = {parse_int(f[3], ctx),
                                                           parse_int(f[4], ctx)};
    }
    std::vector<TrendSeries> out;
    for (const auto& [key, steps] : rows) {
        const std::size_t len = steps.rbegin()->first + 1;
        std::vector<long long> elem(len, 0), total(len, 0);
        for (const auto& [t, counts] : steps) {
            elem[t] = counts.first;
            total[t] = counts.second;
        }
        TrendSeries s = compute_popularity(elem, total);
        s.group_id = key.first;
        s.element_id = key.second;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// taxonomy / groups JSON
// ---------------------------------------------------------------------------

inline json elements_to_json(const std::vector<FashionElement>& elements) {
    json arr = json::array();
    for (const auto& e : elements) {
        json item;
        item["id"] = e.id;
        item["kind"] = to_string(e.kind);
        item["parent_id"] = e.parent_id ? json(*e.parent_id) : json(nullptr);
        arr.push_back(std::move(item));
    }
    return arr;
}

inline std::vector<FashionElement> elements_from_json(const json& arr) {
    std::vector<FashionElement> out;
    for (const auto& item : arr) {
        FashionElement e;
        e.id = item.at("id").get<std::string>();
        e.kind = element_kind_from_string(item.at("kind").get<std::string>());
        if (item.contains("parent_id") && !item.at("parent_id").is_null())
            e.parent_id = item.at("parent_id").get<std::string>();
        e.validate();
        out.push_back(std::move(e));
    }
    return out;
}

inline json groups_to_json(const std::vector<UserGroup>& groups) {
    json arr = json::array();
    for (const auto& g : groups) {
        json item;
        item["id"] = g.id;
        item["city"] = g.city;
        item["gender"] = to_string(g.gender);
        item["age_band"] = g.age_band ? json(to_string(*g.age_band)) : json(nullptr);
        arr.push_back(std::move(item));
    }
    return arr;
}

inline std::vector<UserGroup> groups_from_json(const json& arr) {
    std::vector<UserGroup> out;
    for (const auto& item : arr) {
        UserGroup g;
        g.id = item.at("id").get<std::string>();
        g.city = item.at("city").get<std::string>();
        g.gender = gender_from_string(item.at("gender").get<std::string>());
        if (item.contains("age_band") && !item.at("age_band").is_null())
            g.age_band = age_band_from_string(item.at("age_band").get<std::string>());
        for (const auto& seen : out)
            if (seen.id == g.id) throw DataError("duplicate group id: " + g.id);
        out.push_back(std::move(g));
    }
    return out;
}

// ---------------------------------------------------------------------------
// dataset manifest + directory layout
// ---------------------------------------------------------------------------

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "series.csv", series_to_csv(ds.series));
    write_text_file(dir / "taxonomy.json", elements_to_json(ds.elements).dump(2) + "\n");
    write_text_file(dir / "groups.json", groups_to_json(ds.groups).dump(2) + "\n");
    json manifest;
    manifest["step_period"] = to_string(ds.step_period);
    manifest["steps_per_year"] = steps_per_year(ds.step_period);
    manifest["series_file"] = "series.csv";
    manifest["taxonomy_file"] = "taxonomy.json";
    manifest["groups_file"] = "groups.json";
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

/// Loads a dataset directory via its manifest. Series referenced by a
/// counts_file are converted to popularity fractions.
inline Dataset load_dataset(const std::filesystem::path& dir) {
    const json manifest = json::parse(read_text_file(dir / "manifest.json"));
    Dataset ds;
    ds.step_period = step_period_from_string(manifest.at("step_period").get<std::string>());
    if (manifest.contains("steps_per_year") &&
        manifest.at("steps_per_year").get<std::size_t>() != steps_per_year(ds.step_period))
        throw DataError("manifest steps_per_year contradicts step_period");
    ds.elements = elements_from_json(
        json::parse(read_text_file(dir / manifest.at("taxonomy_file").get<std::string>())));
    ds.groups = groups_from_json(
        json::parse(read_text_file(dir / manifest.at("groups_file").get<std::string>())));
    if (manifest.contains("counts_file")) {
        ds.series = series_from_counts_csv(
            read_text_file(dir / manifest.at("counts_file").get<std::string>()));
    } else {
        ds.series = series_from_csv(
            read_text_file(dir / manifest.at("series_file").get<std::string>()));
    }
    for (const TrendSeries& s : ds.series) {
        if (!ds.find_group(s.group_id)) throw DataError("series references unknown group " + s.group_id);
        if (!ds.find_element(s.element_id))
            throw DataError("series references unknown element " + s.element_id);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// synth config JSON
// ---------------------------------------------------------------------------

inline SynthConfig synth_config_from_json(const json& j) {
    SynthConfig cfg;
    if (j.contains("step_period"))
        cfg.step_period = step_period_from_string(j.at("step_period").get<std::string>());
    if (j.contains("num_steps")) cfg.num_steps = j.at("num_steps").get<std::size_t>();
    if (j.contains("cities")) cfg.cities = j.at("cities").get<std::vector<std::string>>();
    if (j.contains("genders")) {
        cfg.genders.clear();
        for (const auto& g : j.at("genders")) cfg.genders.push_back(gender_from_string(g));
    }
    if (j.contains("age_bands")) {
        cfg.age_bands.clear();
        for (const auto& a : j.at("age_bands")) cfg.age_bands.push_back(age_band_from_string(a));
    }
    if (j.contains("categories")) {
        cfg.categories.clear();
        for (const auto& c : j.at("categories")) {
            SynthConfig::Category cat;
            cat.id = c.at("id").get<std::string>();
            for (const auto& ch : c.at("children"))
                cat.children.push_back(
                    {ch.at("id").get<std::string>(), ch.at("share").get<double>()});
            cfg.categories.push_back(std::move(cat));
        }
    } else {
        cfg.categories = default_synth_config().categories;
    }
    auto range = [&](const char* key, double& lo, double& hi) {
        if (j.contains(key)) {
            lo = j.at(key).at(0).get<double>();
            hi = j.at(key).at(1).get<double>();
        }
    };
    range("level_range", cfg.level_lo, cfg.level_hi);
    range("trend_per_year_range", cfg.trend_per_year_lo, cfg.trend_per_year_hi);
    range("amplitude_range", cfg.amplitude_lo, cfg.amplitude_hi);
    if (j.contains("child_variation")) cfg.child_variation = j.at("child_variation").get<double>();
    if (j.contains("noise_leaf")) cfg.noise_leaf = j.at("noise_leaf").get<double>();
    if (j.contains("noise_parent")) cfg.noise_parent = j.at("noise_parent").get<double>();
    if (j.contains("noise_coarse")) cfg.noise_coarse = j.at("noise_coarse").get<double>();
    return cfg;
}

inline json synth_config_to_json(const SynthConfig& cfg) {
    json j;
    j["step_period"] = to_string(cfg.step_period);
    j["num_steps"] = cfg.num_steps;
    j["cities"] = cfg.cities;
    j["genders"] = json::array();
    for (Gender g : cfg.genders) j["genders"].push_back(to_string(g));
    j["age_bands"] = json::array();
    for (AgeBand a : cfg.age_bands) j["age_bands"].push_back(to_string(a));
    j["categories"] = json::array();
    for (const auto& c : cfg.categories) {
        json cat;
        cat["id"] = c.id;
        cat["children"] = json::array();
        for (const auto& ch : c.children)
            cat["children"].push_back({{"id", ch.id}, {"share", ch.share}});
        j["categories"].push_back(std::move(cat));
    }
    j["level_range"] = {cfg.level_lo, cfg.level_hi};
    j["trend_per_year_range"] = {cfg.trend_per_year_lo, cfg.trend_per_year_hi};
    j["amplitude_range"] = {cfg.amplitude_lo, cfg.amplitude_hi};
    j["child_variation"] = cfg.child_variation;
    j["noise_leaf"] = cfg.noise_leaf;
    j["noise_parent"] = cfg.noise_parent;
    j["noise_coarse"] = cfg.noise_coarse;
    return j;
}

// ---------------------------------------------------------------------------
// run manifest
// ---------------------------------------------------------------------------

/// Everything needed to reproduce a CLI run: the command, fully resolved
/// configuration, hashes of the inputs, and the seed.
inline json run_manifest(const std::string& command, const json& resolved_config,
                         const std::vector<std::filesystem::path>& input_files,
                         std::uint64_t seed) {
    json j;
    j["command"] = command;
    j["config"] = resolved_config;
    j["inputs"] = json::object();
    for (const auto& p : input_files) j["inputs"][p.string()] = file_sha256(p);
    j["seed"] = seed;
    j["version"] = kVersion;
    return j;
}

}  // namespace trendcast
