#pragma once

// Experiment report plumbing: key=value option maps with typed accessors,
// CSV/JSON emission, and a tiny worker pool.  The CSV body is a pure function
// of the resolved options so reruns reproduce it byte for byte; volatile data
// (timestamp, wall times) live in the JSON summary.

#include <gph/lattice.hpp> // format_double
#include <gph/rng.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

namespace gph {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Plain key=value configuration with '#' comments.  Later assignments win, so
// flag overrides are applied by assigning after the file is loaded.
class OptionMap {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument(it->second);
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("option " + key + ": cannot parse '" + it->second +
                                        "' as a number");
        }
    }

    long long get_int(const std::string& key, long long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            long long v = std::stoll(it->second, &pos, 0);
            if (pos != it->second.size()) throw std::invalid_argument(it->second);
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("option " + key + ": cannot parse '" + it->second +
                                        "' as an integer");
        }
    }

    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_seed(it->second);
    }

    std::vector<long long> get_int_list(const std::string& key,
                                        const std::vector<long long>& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<long long> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            out.push_back(std::stoll(item));
        }
        if (out.empty())
            throw std::invalid_argument("option " + key + ": empty list '" + it->second + "'");
        return out;
    }

    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            out.push_back(std::stod(item));
        }
        if (out.empty())
            throw std::invalid_argument("option " + key + ": empty list '" + it->second + "'");
        return out;
    }

    // Records the value actually used so the report echoes a complete,
    // re-runnable configuration (round-trip: parse(serialize) is identity).
    void note(const std::string& key, const std::string& value) {
        if (!has(key)) set(key, value);
    }
    void note_int(const std::string& key, long long v) { note(key, std::to_string(v)); }
    void note_double(const std::string& key, double v) { note(key, format_double(v)); }

    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string serialize() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

    static OptionMap parse(const std::string& text) {
        OptionMap m;
        std::stringstream ss(text);
        std::string line;
        int lineno = 0;
        while (std::getline(ss, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": expected key=value, got '" + line + "'");
            m.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return m;
    }

    static OptionMap load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

private:
    std::map<std::string, std::string> values_;
};

struct Report {
    std::string experiment;
    OptionMap config;                                    // resolved options, echoed verbatim
    std::vector<std::string> columns;                    // CSV header
    std::vector<std::vector<std::string>> rows;          // CSV body
    std::vector<std::pair<std::string, double>> metrics; // summary statistics (JSON)
    std::vector<std::string> notes;                      // human-readable assessment lines
    bool pass = true;

    void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
    void add_metric(const std::string& name, double value) { metrics.emplace_back(name, value); }
    void add_note(const std::string& text) { notes.push_back(text); }
};

// CSV dialect: comma separator, '.' decimal point (snprintf in the "C"
// locale), header row, LF line endings.
inline std::string report_csv(const Report& r) {
    std::string out;
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
        if (i) out += ',';
        out += r.columns[i];
    }
    out += '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

inline std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string report_json(const Report& r, const std::string& revision,
                               const std::string& timestamp) {
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    j["revision"] = revision;
    j["timestamp"] = timestamp;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.config.entries()) cfg[k] = v;
    j["config"] = cfg;
    nlohmann::ordered_json mets = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.metrics) mets[k] = v;
    j["summary"] = mets;
    j["notes"] = r.notes;
    j["pass"] = r.pass;
    j["rows"] = r.rows.size();
    return j.dump(2) + "\n";
}

// Default output directory: $GPH_OUTPUT_DIR if set, else the working directory.
inline std::string default_output_dir() {
    const char* env = std::getenv("GPH_OUTPUT_DIR");
    if (env && *env) return env;
    return ".";
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline void write_report_files(const Report& r, const std::string& dir,
                               const std::string& revision) {
    std::error_code ec; // best effort; the writes below report real failures
    std::filesystem::create_directories(dir, ec);
    write_text_file(dir + "/" + r.experiment + ".csv", report_csv(r));
    write_text_file(dir + "/" + r.experiment + ".json",
                    report_json(r, revision, utc_timestamp()));
}

// Chunked index-parallel loop.  Each worker owns a contiguous index range and
// writes only to its own slots, so results are deterministic for any thread
// count (including 1, the default on this machine).
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads < 1) threads = 1;
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n ? n : 1);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace gph
