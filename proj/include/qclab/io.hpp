#pragma once

// Experiment I/O: CSV series at full double precision, atomic file writes
// (write-temp-then-rename, so partial results never appear), flat key=value
// configs with per-experiment schemas, and the JSON run manifest.

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qclab/common.hpp"

namespace qclab {

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (i) body_ += ',';
            body_ += columns_[i];
        }
        body_ += '\n';
    }

    void add_row(const std::vector<double>& values) {
        require(values.size() == columns_.size(), "CsvWriter: row width mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) body_ += ',';
            body_ += format_full(values[i]);
        }
        body_ += '\n';
        ++rows_;
    }

    const std::string& content() const { return body_; }
    int rows() const { return rows_; }

  private:
    std::vector<std::string> columns_;
    std::string body_;
    int rows_ = 0;
};

inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out.good()) throw io_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw io_error("rename failed: " + path.string() + " (" + ec.message() + ")");
}

// ---------------------------------------------------------------------------
// flat key = value configuration

class Config {
  public:
    // schema: allowed keys with their default values (as strings)
    explicit Config(std::map<std::string, std::string> defaults) : values_(std::move(defaults)) {}

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot read config file: " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            apply_line(line, path + ":" + std::to_string(lineno));
        }
    }

    // "key=value" override (the CLI's --set)
    void set(const std::string& assignment) { apply_line(assignment, "--set " + assignment); }

    double get_double(const std::string& key) const {
        const std::string& s = raw(key);
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw domain_error("config key '" + key + "': not a number: '" + s + "'");
        }
        if (pos != s.size()) throw domain_error("config key '" + key + "': trailing junk in '" + s + "'");
        return v;
    }

    int get_int(const std::string& key) const {
        const double v = get_double(key);
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw domain_error("config key '" + key + "': expected an integer, got '" + raw(key) + "'");
        return i;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(raw(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            try {
                out.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw domain_error("config key '" + key + "': bad list entry '" + item + "'");
            }
        }
        return out;
    }

    std::vector<int> get_int_list(const std::string& key) const {
        std::vector<int> out;
        for (double v : get_double_list(key)) out.push_back(static_cast<int>(v));
        return out;
    }

    const std::string& get_string(const std::string& key) const { return raw(key); }

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    const std::string& raw(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw domain_error("config key not in schema: '" + key + "'");
        return it->second;
    }

    void apply_line(const std::string& line, const std::string& where) {
        std::string s = line;
        if (auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
        auto trim = [](std::string& str) {
            const auto b = str.find_first_not_of(" \t\r\n");
            const auto e = str.find_last_not_of(" \t\r\n");
            str = (b == std::string::npos) ? "" : str.substr(b, e - b + 1);
        };
        trim(s);
        if (s.empty()) return;
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw domain_error("config: missing '=' at " + where);
        std::string key = s.substr(0, eq), value = s.substr(eq + 1);
        trim(key);
        trim(value);
        auto it = values_.find(key);
        if (it == values_.end()) throw domain_error("config: unknown key '" + key + "' at " + where);
        it->second = value;
    }

    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// run manifest

struct CheckRow {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct RunManifest {
    std::string experiment;
    std::string version;
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::pair<std::string, std::uintmax_t>> outputs;  // path, bytes
    std::vector<CheckRow> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["experiment"] = experiment;
        j["artifact_version"] = version;
        j["config"] = config;
        j["seed"] = seed;
        j["started_at"] = started_at;
        j["finished_at"] = finished_at;
        j["outputs"] = nlohmann::json::array();
        for (const auto& [path, bytes] : outputs)
            j["outputs"].push_back({{"path", path}, {"bytes", bytes}});
        j["checks"] = nlohmann::json::array();
        for (const auto& c : checks)
            j["checks"].push_back(
                {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
        j["all_passed"] = all_passed();
        return j;
    }
};

inline std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace qclab
