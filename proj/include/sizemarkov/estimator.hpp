#pragma once

// Relative-frequency estimation of transition matrices from a classified
// panel. Counts are exact integers; probabilities are counts divided by
// the origin-column total. Origin states with no occupants yield
// undefined columns, which are flagged rather than zero-filled.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "sizemarkov/classifier.hpp"
#include "sizemarkov/errors.hpp"
#include "sizemarkov/matrix.hpp"

namespace sizemarkov {

struct MarginalDistribution {
    int year = 0;
    std::vector<double> p;  // indexed by state, sums to 1

    bool operator==(const MarginalDistribution&) const = default;
};

struct TransitionMatrix {
    int n_states = 0;
    int origin_year = 0;
    int dest_year = 0;
    std::vector<std::int64_t> counts;  // dest-major (n x n); empty when unknown
    StochasticMatrix probs;
    std::vector<int> undefined_columns;  // origins with zero occupants, sorted
    std::int64_t included_entities = 0;  // total count mass; 0 when unknown

    int step() const { return dest_year - origin_year; }
    bool has_counts() const { return !counts.empty(); }

    std::int64_t count(int dest, int origin) const {
        return counts[static_cast<std::size_t>(dest) * n_states + origin];
    }
    double prob(int dest, int origin) const { return probs(dest, origin); }

    bool is_defined(int origin) const {
        return !std::binary_search(undefined_columns.begin(), undefined_columns.end(), origin);
    }
};

// Wraps a bare probability matrix (e.g. loaded from a file): undefined
// columns are those that are entirely zero.
inline TransitionMatrix transition_matrix_from_probabilities(StochasticMatrix probs,
                                                             int origin_year, int dest_year) {
    TransitionMatrix tm;
    tm.n_states = probs.n_states();
    tm.origin_year = origin_year;
    tm.dest_year = dest_year;
    for (int i = 0; i < tm.n_states; ++i)
        if (probs.column_is_zero(i)) tm.undefined_columns.push_back(i);
    tm.probs = std::move(probs);
    return tm;
}

namespace detail {

inline void check_transition_years(const StateGrid& grid, int origin_year, int dest_year) {
    if (dest_year <= origin_year)
        throw ValidationError("destination year " + std::to_string(dest_year) +
                              " must be after origin year " + std::to_string(origin_year));
    if (!grid.years().contains(origin_year) || !grid.years().contains(dest_year))
        throw ValidationError("transition years " + std::to_string(origin_year) + "->" +
                              std::to_string(dest_year) + " outside grid range " +
                              std::to_string(grid.years().first) + ":" +
                              std::to_string(grid.years().last));
}

}  // namespace detail

// Transition counts and probabilities between two years of the grid.
// An entity in state 0 at both endpoint years that is also absent in every
// intermediate year contributes nothing; with at least one intermediate
// presence it contributes a 0 -> 0 count (strongly balanced window
// semantics). For consecutive years this reduces to excluding entities
// absent in both years.
inline TransitionMatrix count_transitions(const StateGrid& grid, int origin_year, int dest_year) {
    detail::check_transition_years(grid, origin_year, dest_year);

    const int n = grid.n_states();
    TransitionMatrix tm;
    tm.n_states = n;
    tm.origin_year = origin_year;
    tm.dest_year = dest_year;
    tm.counts.assign(static_cast<std::size_t>(n) * n, 0);

    const int o = grid.year_index(origin_year);
    const int d = grid.year_index(dest_year);
    for (std::size_t e = 0; e < grid.n_entities(); ++e) {
        const int from = grid.state_at_index(e, o);
        const int to = grid.state_at_index(e, d);
        if (from == 0 && to == 0) {
            bool present_between = false;
            for (int t = o + 1; t < d && !present_between; ++t)
                present_between = grid.state_at_index(e, t) != 0;
            if (!present_between) continue;
        }
        ++tm.counts[static_cast<std::size_t>(to) * n + from];
        ++tm.included_entities;
    }

    tm.probs = StochasticMatrix(n);
    for (int i = 0; i < n; ++i) {
        std::int64_t total = 0;
        for (int j = 0; j < n; ++j) total += tm.counts[static_cast<std::size_t>(j) * n + i];
        if (total == 0) {
            tm.undefined_columns.push_back(i);
            continue;
        }
        for (int j = 0; j < n; ++j)
            tm.probs(j, i) = static_cast<double>(tm.counts[static_cast<std::size_t>(j) * n + i]) /
                             static_cast<double>(total);
    }
    return tm;
}

// Window estimate for robustness checks; requires at least one
// intermediate year so that the 0 -> 0 inclusion rule can apply.
inline TransitionMatrix count_transitions_window(const StateGrid& grid, int origin_year,
                                                 int dest_year) {
    detail::check_transition_years(grid, origin_year, dest_year);
    if (dest_year - origin_year < 2)
        throw ValidationError("window estimate needs a span of at least 2 steps, got " +
                              std::to_string(dest_year - origin_year));
    return count_transitions(grid, origin_year, dest_year);
}

// One matrix per consecutive year pair, chronological.
inline std::vector<TransitionMatrix> estimate_first_order_chain(const StateGrid& grid) {
    if (grid.years().count() < 2)
        throw ValidationError("first-order chain needs a grid spanning at least 2 years");
    std::vector<TransitionMatrix> chain;
    chain.reserve(grid.years().count() - 1);
    for (int y = grid.years().first; y < grid.years().last; ++y)
        chain.push_back(count_transitions(grid, y, y + 1));
    return chain;
}

// State shares at one year over all entities in the grid (state 0
// included in both numerator and denominator).
inline MarginalDistribution empirical_marginal(const StateGrid& grid, int year) {
    const int t = grid.year_index(year);
    std::vector<std::int64_t> counts(grid.n_states(), 0);
    for (std::size_t e = 0; e < grid.n_entities(); ++e) ++counts[grid.state_at_index(e, t)];
    MarginalDistribution m;
    m.year = year;
    m.p.resize(grid.n_states());
    for (int j = 0; j < grid.n_states(); ++j)
        m.p[j] = static_cast<double>(counts[j]) / static_cast<double>(grid.n_entities());
    return m;
}

}  // namespace sizemarkov
