#pragma once

#include "ciaf/ingest.hpp"
#include "ciaf/timeutil.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace ciaf::test {

inline std::filesystem::path data_path(const std::string& name) {
    return std::filesystem::path(CIAF_TEST_DATA) / name;
}

inline std::filesystem::path default_ontology_path() {
    return std::filesystem::path(CIAF_SOURCE_DIR) / "ontology" / "default.json";
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Instant at(const char* iso) {
    auto t = parse_instant(iso);
    if (!t)
        throw std::runtime_error(std::string("bad test timestamp ") + iso);
    return *t;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("ciaf-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline PerfRecord perf(const char* iso, std::string counter, double value,
                       std::optional<std::string> instance = std::nullopt) {
    PerfRecord r;
    r.timestamp = at(iso);
    r.computer = "vm01";
    r.object_name = "Memory";
    r.counter_name = std::move(counter);
    r.instance_name = std::move(instance);
    r.value = value;
    return r;
}

} // namespace ciaf::test
