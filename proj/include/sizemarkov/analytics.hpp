#pragma once

// Analytics over transition matrices: path propagation, homogeneous
// matrix powers, the upward/downward transition trend, per-column Shannon
// entropy (nats) and the two-step consistency check against the product
// of intervening one-step matrices.

#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sizemarkov/csv.hpp"
#include "sizemarkov/errors.hpp"
#include "sizemarkov/estimator.hpp"
#include "sizemarkov/matrix.hpp"

namespace sizemarkov {

// --------------------------------------------------------------------
// Transition path

// Applies the matrices left to right: P(d) = F(d-1,d) P(d-1). Returns one
// marginal per applied matrix. Positive mass on an undefined origin
// column is an error: the matrix carries no information about where that
// mass would go.
inline std::vector<MarginalDistribution> propagate_path(const MarginalDistribution& initial,
                                                        std::span<const TransitionMatrix> matrices) {
    if (matrices.empty()) throw ValidationError("no matrices to propagate through");
    if (initial.year != matrices.front().origin_year)
        throw ValidationError("initial marginal year " + std::to_string(initial.year) +
                              " does not match first matrix origin year " +
                              std::to_string(matrices.front().origin_year));

    std::vector<MarginalDistribution> path;
    path.reserve(matrices.size());
    std::vector<double> p = initial.p;
    int year = initial.year;
    for (const auto& tm : matrices) {
        if (tm.origin_year != year)
            throw ValidationError("matrix chain is not contiguous at year " + std::to_string(year));
        if (static_cast<int>(p.size()) != tm.n_states)
            throw ValidationError("marginal length does not match matrix states");
        for (int i : tm.undefined_columns)
            if (p[i] > 0.0)
                throw NumericError("mass " + csv::format_double(p[i]) +
                                   " on undefined origin state " + std::to_string(i) +
                                   " at year " + std::to_string(tm.origin_year));
        p = tm.probs.apply(p);
        year = tm.dest_year;
        path.push_back(MarginalDistribution{year, p});
    }
    return path;
}

// Homogeneous d-step matrix F^d. Requires a fully defined matrix.
inline StochasticMatrix matrix_power(const TransitionMatrix& matrix, int exponent) {
    if (exponent < 1) throw ValidationError("matrix power needs a positive exponent");
    if (!matrix.undefined_columns.empty())
        throw NumericError("matrix power is undefined: origin state " +
                           std::to_string(matrix.undefined_columns.front()) +
                           " has no occupants");
    StochasticMatrix result = matrix.probs;
    for (int k = 1; k < exponent; ++k) result = multiply(matrix.probs, result);
    return result;
}

// --------------------------------------------------------------------
// Transition trend

struct TrendPoint {
    int end_year = 0;
    double upward = 0.0;           // L: mass of moves to a higher category
    double downward = 0.0;         // R: mass of moves to a lower category
    std::optional<double> ratio;   // Q = L / R, defined iff R > 0
};

enum class TrendWeight {
    destination,  // weight f(j, i) by the destination-state share p_j at the end year
    origin,       // weight f(j, i) by the origin-state share p_i at the start year
};

struct TrendOptions {
    TrendWeight weight = TrendWeight::destination;
    bool exclude_entry_exit = false;  // mask row/column 0 (entries and exits)
};

// L sums f(j,i) for j > i, R for j < i, each weighted by the configured
// marginal. State 0 participates unless masked: entries (i = 0) count
// toward L, exits (j = 0) toward R.
inline TrendPoint transition_trend(const TransitionMatrix& matrix,
                                   const MarginalDistribution& marginal,
                                   TrendOptions options = {}) {
    const int expected_year = options.weight == TrendWeight::destination ? matrix.dest_year
                                                                         : matrix.origin_year;
    if (marginal.year != expected_year)
        throw ValidationError("trend marginal year " + std::to_string(marginal.year) +
                              " does not match required year " + std::to_string(expected_year));
    if (static_cast<int>(marginal.p.size()) != matrix.n_states)
        throw ValidationError("trend marginal length does not match matrix states");

    TrendPoint tp;
    tp.end_year = matrix.dest_year;
    for (int i = 0; i < matrix.n_states; ++i) {
        if (!matrix.is_defined(i)) continue;
        for (int j = 0; j < matrix.n_states; ++j) {
            if (j == i) continue;
            if (options.exclude_entry_exit && (i == 0 || j == 0)) continue;
            const double w =
                options.weight == TrendWeight::destination ? marginal.p[j] : marginal.p[i];
            const double mass = matrix.probs(j, i) * w;
            if (j > i)
                tp.upward += mass;
            else
                tp.downward += mass;
        }
    }
    if (tp.downward > 0.0) tp.ratio = tp.upward / tp.downward;
    return tp;
}

// --------------------------------------------------------------------
// Transition entropy

// Shannon entropy (nats) of one origin column; zero entries contribute
// nothing. Lies in [0, ln n_states] for a stochastic column.
inline double column_entropy(const TransitionMatrix& matrix, int origin_state) {
    if (origin_state < 0 || origin_state >= matrix.n_states)
        throw ValidationError("origin state " + std::to_string(origin_state) + " out of range");
    if (!matrix.is_defined(origin_state))
        throw NumericError("entropy undefined: origin state " + std::to_string(origin_state) +
                           " has no occupants");
    double h = 0.0;
    for (int j = 0; j < matrix.n_states; ++j) {
        const double f = matrix.probs(j, origin_state);
        if (f > 0.0) h -= f * std::log(f);
    }
    return h;
}

struct EntropyTable {
    int end_year = 0;
    std::vector<double> values;        // NaN for undefined states
    std::vector<int> undefined_states; // sorted

    bool is_defined(int state) const {
        return !std::binary_search(undefined_states.begin(), undefined_states.end(), state);
    }
};

inline EntropyTable entropy_table(const TransitionMatrix& matrix) {
    EntropyTable table;
    table.end_year = matrix.dest_year;
    table.undefined_states = matrix.undefined_columns;
    table.values.assign(matrix.n_states, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < matrix.n_states; ++i)
        if (matrix.is_defined(i)) table.values[i] = column_entropy(matrix, i);
    return table;
}

// --------------------------------------------------------------------
// Grouped entropy

struct StateGrouping {
    std::vector<int> small;
    std::vector<int> medium;
    std::vector<int> large;

    // Categories 1-3 / 4-6 / 7..top.
    static StateGrouping standard(int n_states) {
        if (n_states < 8) throw ValidationError("standard grouping needs at least 8 states");
        StateGrouping g;
        for (int s = 1; s <= 3; ++s) g.small.push_back(s);
        for (int s = 4; s <= 6; ++s) g.medium.push_back(s);
        for (int s = 7; s < n_states; ++s) g.large.push_back(s);
        return g;
    }
};

struct GroupEntropy {
    int end_year = 0;
    std::optional<double> small;
    std::optional<double> medium;
    std::optional<double> large;
};

// Unweighted mean of the per-state entropies over each group's defined
// states; a group whose states are all undefined yields no value. The
// grouping must cover states 1..N disjointly.
inline GroupEntropy group_entropy(const EntropyTable& table, const StateGrouping& grouping) {
    const int n = static_cast<int>(table.values.size());
    std::set<int> seen;
    for (const auto* group : {&grouping.small, &grouping.medium, &grouping.large})
        for (int s : *group) {
            if (s < 1 || s >= n)
                throw ValidationError("grouping state " + std::to_string(s) + " out of range");
            if (!seen.insert(s).second)
                throw ValidationError("grouping repeats state " + std::to_string(s));
        }
    if (static_cast<int>(seen.size()) != n - 1)
        throw ValidationError("grouping must cover all states 1.." + std::to_string(n - 1));

    auto mean_over = [&](const std::vector<int>& states) -> std::optional<double> {
        double sum = 0.0;
        int defined = 0;
        for (int s : states) {
            if (!table.is_defined(s)) continue;
            sum += table.values[s];
            ++defined;
        }
        if (defined == 0) return std::nullopt;
        return sum / defined;
    };

    GroupEntropy g;
    g.end_year = table.end_year;
    g.small = mean_over(grouping.small);
    g.medium = mean_over(grouping.medium);
    g.large = mean_over(grouping.large);
    return g;
}

// --------------------------------------------------------------------
// Two-step consistency check

struct CkReport {
    int origin_year = 0;
    int dest_year = 0;
    StochasticMatrix product;             // composition of the one-step matrices
    std::vector<double> abs_deviation;    // dest-major; 0 for excluded columns
    double max_abs_deviation = 0.0;
    int worst_dest = 0;
    int worst_origin = 0;
    std::vector<int> excluded_columns;    // undefined in any operand, sorted
    double tolerance = 0.0;
    bool pass = false;
};

// Compares a directly estimated multi-step matrix with the ordered
// product of the one-step matrices spanning the same years. Columns
// undefined in any operand are excluded from the comparison.
inline CkReport chapman_kolmogorov_check(std::span<const TransitionMatrix> steps,
                                         const TransitionMatrix& direct, double tolerance) {
    if (steps.size() < 2) throw ValidationError("consistency check needs at least two steps");
    if (tolerance <= 0.0) throw ValidationError("tolerance must be positive");
    const int n = direct.n_states;
    std::set<int> excluded(direct.undefined_columns.begin(), direct.undefined_columns.end());

    int year = steps.front().origin_year;
    StochasticMatrix product = StochasticMatrix::identity(n);
    for (const auto& step : steps) {
        if (step.n_states != n) throw ValidationError("state count mismatch in check operands");
        if (step.origin_year != year)
            throw ValidationError("step chain is not contiguous at year " + std::to_string(year));
        product = multiply(step.probs, product);
        excluded.insert(step.undefined_columns.begin(), step.undefined_columns.end());
        year = step.dest_year;
    }
    if (steps.front().origin_year != direct.origin_year || year != direct.dest_year)
        throw ValidationError("step chain years " + std::to_string(steps.front().origin_year) +
                              "->" + std::to_string(year) + " do not match direct matrix " +
                              std::to_string(direct.origin_year) + "->" +
                              std::to_string(direct.dest_year));

    CkReport report;
    report.origin_year = direct.origin_year;
    report.dest_year = direct.dest_year;
    report.product = std::move(product);
    report.excluded_columns.assign(excluded.begin(), excluded.end());
    report.tolerance = tolerance;
    report.abs_deviation.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (excluded.count(i)) continue;
        for (int j = 0; j < n; ++j) {
            const double dev = std::abs(report.product(j, i) - direct.probs(j, i));
            report.abs_deviation[static_cast<std::size_t>(j) * n + i] = dev;
            if (dev > report.max_abs_deviation) {
                report.max_abs_deviation = dev;
                report.worst_dest = j;
                report.worst_origin = i;
            }
        }
    }
    report.pass = report.max_abs_deviation <= tolerance;
    return report;
}

inline CkReport chapman_kolmogorov_check(const TransitionMatrix& first,
                                         const TransitionMatrix& second,
                                         const TransitionMatrix& direct, double tolerance) {
    const TransitionMatrix steps[] = {first, second};
    return chapman_kolmogorov_check(std::span<const TransitionMatrix>(steps, 2), direct, tolerance);
}

}  // namespace sizemarkov
