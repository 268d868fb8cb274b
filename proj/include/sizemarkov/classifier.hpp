#pragma once

// Size classification: maps sizes onto ordered states 0..N. State 0 is
// reserved for non-existence (size 0); states 1..N are half-open size bins
// [b_{k-1}, b_k) with the top bin unbounded above.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "sizemarkov/errors.hpp"
#include "sizemarkov/panel.hpp"

namespace sizemarkov {

class CategoryScheme {
public:
    explicit CategoryScheme(std::vector<double> boundaries) : boundaries_(std::move(boundaries)) {
        if (boundaries_.empty()) throw ValidationError("category scheme needs at least one boundary");
        if (boundaries_.front() != 0.0)
            throw ValidationError("first category boundary must be 0");
        for (std::size_t i = 1; i < boundaries_.size(); ++i) {
            if (!(boundaries_[i] > boundaries_[i - 1]))
                throw ValidationError("category boundaries must be strictly increasing");
            if (!std::isfinite(boundaries_[i]))
                throw ValidationError("category boundaries must be finite");
        }
    }

    const std::vector<double>& boundaries() const { return boundaries_; }
    int n_states() const { return static_cast<int>(boundaries_.size()) + 1; }
    int top_state() const { return n_states() - 1; }

    // Size interval of state k >= 1 as [lower, upper); the unbounded top
    // bin reports an upper of twice its lower bound (used for rendering).
    double lower(int state) const { return boundaries_[state - 1]; }
    double upper(int state) const {
        return state < top_state() ? boundaries_[state] : 2.0 * boundaries_.back();
    }

    bool operator==(const CategoryScheme&) const = default;

private:
    std::vector<double> boundaries_;  // strictly increasing, first is 0
};

// The 13-state scheme (states 0..12) used by the bundled reference results.
inline CategoryScheme default_scheme() {
    return CategoryScheme({0, 20, 50, 100, 250, 500, 1000, 2500, 5000, 10000, 25000, 50000});
}

// Total and deterministic over size >= 0; 0 iff size == 0.
inline int classify(double size, const CategoryScheme& scheme) {
    if (!(size >= 0.0) || !std::isfinite(size))
        throw ValidationError("cannot classify size " + std::to_string(size));
    if (size == 0.0) return 0;
    const auto& b = scheme.boundaries();
    auto it = std::upper_bound(b.begin(), b.end(), size);
    return static_cast<int>(it - b.begin());
}

// Classified panel: one state per (entity, year) cell.
class StateGrid {
public:
    StateGrid(std::vector<std::string> entities, YearRange years, int n_states,
              std::vector<int> states)
        : entities_(std::move(entities)), years_(years), n_states_(n_states),
          states_(std::move(states)) {
        if (n_states_ < 2) throw ValidationError("state grid needs at least 2 states");
        const std::size_t expected =
            entities_.size() * static_cast<std::size_t>(years_.count());
        if (states_.size() != expected || entities_.empty())
            throw ValidationError("state grid shape mismatch");
        for (int s : states_)
            if (s < 0 || s >= n_states_)
                throw ValidationError("state " + std::to_string(s) + " out of range");
    }

    const std::vector<std::string>& entities() const { return entities_; }
    YearRange years() const { return years_; }
    int n_states() const { return n_states_; }
    std::size_t n_entities() const { return entities_.size(); }

    int state(std::size_t entity_index, int year) const {
        return states_[entity_index * static_cast<std::size_t>(years_.count()) +
                       year_index(year)];
    }
    int state_at_index(std::size_t entity_index, int year_index) const {
        return states_[entity_index * static_cast<std::size_t>(years_.count()) + year_index];
    }
    int year_index(int year) const {
        if (!years_.contains(year))
            throw ValidationError("year " + std::to_string(year) + " outside grid range");
        return year - years_.first;
    }

    bool operator==(const StateGrid&) const = default;

private:
    std::vector<std::string> entities_;
    YearRange years_;
    int n_states_;
    std::vector<int> states_;  // row-major: entity x year
};

inline StateGrid classify_panel(const RectangularPanel& panel, const CategoryScheme& scheme) {
    std::vector<int> states;
    states.reserve(panel.cells().size());
    for (double v : panel.cells()) states.push_back(classify(v, scheme));
    return StateGrid(panel.entities(), panel.years(), scheme.n_states(), std::move(states));
}

// Scheme files hold a single `boundaries = [b0, b1, ...]` entry;
// `#` starts a comment.
inline CategoryScheme load_scheme(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        if (csv::trim(line.substr(0, eq)) != "boundaries") continue;

        std::string rhs = csv::trim(line.substr(eq + 1));
        if (rhs.size() < 2 || rhs.front() != '[' || rhs.back() != ']')
            throw InputError("boundaries value must be a bracketed list");
        rhs = rhs.substr(1, rhs.size() - 2);
        std::vector<double> boundaries;
        for (const auto& field : csv::split(rhs, ',')) {
            const auto v = csv::parse_double(csv::trim(field));
            if (!v) throw InputError("boundary '" + csv::trim(field) + "' is not numeric");
            boundaries.push_back(*v);
        }
        return CategoryScheme(std::move(boundaries));
    }
    throw InputError("scheme file has no 'boundaries' entry");
}

inline CategoryScheme load_scheme_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scheme file " + path.string());
    return load_scheme(in);
}

}  // namespace sizemarkov
