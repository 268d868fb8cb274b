#pragma once

// Shared test utilities: grid builders, a tiny deterministic generator
// for property-style cases and temp-dir management for CLI runs.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sizemarkov/classifier.hpp"
#include "sizemarkov/panel.hpp"
#include "sizemarkov/simulator.hpp"

namespace testutil {

// Grid from explicit per-entity state trajectories.
inline sizemarkov::StateGrid grid_from_trajectories(
    const std::vector<std::vector<int>>& trajectories, int first_year, int n_states) {
    std::vector<std::string> entities;
    std::vector<int> states;
    for (std::size_t e = 0; e < trajectories.size(); ++e) {
        char id[16];
        std::snprintf(id, sizeof(id), "T%03zu", e);
        entities.emplace_back(id);
        states.insert(states.end(), trajectories[e].begin(), trajectories[e].end());
    }
    const int n_years = static_cast<int>(trajectories.front().size());
    return sizemarkov::StateGrid(std::move(entities),
                                 sizemarkov::YearRange{first_year, first_year + n_years - 1},
                                 n_states, std::move(states));
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out);
    out << content;
}

// Fresh directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("sizemarkov_test_" + tag + "_" + std::to_string(counter++) + "_" +
                 std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
