#pragma once

// Verification suite over the bundled reference fixtures: column
// stochasticity, entropy recomputation, the two-step product check,
// trend-table arithmetic and the enumerated diagonal-dominance columns.

#include <cmath>
#include <string>
#include <vector>

#include "sizemarkov/analytics.hpp"
#include "sizemarkov/fixtures.hpp"

namespace sizemarkov {

struct VerifyTolerances {
    // Columns of 4-decimal tables: 13 roundings of up to 5e-5 each.
    double stochasticity = 2e-3;
    // Entropy recomputed from 4-decimal inputs vs 4-decimal outputs.
    double entropy = 5e-4;
    // Two-step product vs the published product-form matrix.
    double ck_product = 2e-3;
    // Published product-form vs window-form two-step matrices.
    double ck_direct = 1.5e-3;
    // Trend self-consistency |Q*R - L|; measured in L units so rows with
    // a small R are not amplified past table precision.
    double trend = 5e-4;
};

struct CheckResult {
    std::string check;
    std::string location;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    std::vector<std::string> warnings;
    int failed = 0;
    bool all_pass() const { return failed == 0; }
};

namespace detail {

inline void add_check(VerificationReport& report, std::string check, std::string location,
                      double deviation, double tolerance) {
    CheckResult r;
    r.check = std::move(check);
    r.location = std::move(location);
    r.deviation = deviation;
    r.tolerance = tolerance;
    r.pass = deviation <= tolerance;
    if (!r.pass) ++report.failed;
    report.checks.push_back(std::move(r));
}

}  // namespace detail

inline VerificationReport run_verification(const FixtureSet& fixtures,
                                           const VerifyTolerances& tol = {}) {
    VerificationReport report;
    report.warnings = fixtures.warnings;

    // Column stochasticity of every transcribed matrix (defined columns).
    auto check_stochastic = [&](const FixtureMatrix& fm) {
        double worst = 0.0;
        int worst_col = -1;
        for (int i = 0; i < fm.matrix.n_states; ++i) {
            if (!fm.matrix.is_defined(i)) continue;
            const double dev = std::abs(fm.matrix.probs.column_sum(i) - 1.0);
            if (dev > worst) {
                worst = dev;
                worst_col = i;
            }
        }
        detail::add_check(report, "stochasticity",
                          fm.file + " column " + std::to_string(worst_col), worst,
                          tol.stochasticity);
    };
    for (const auto& fm : fixtures.first_order) check_stochastic(fm);
    check_stochastic(fixtures.second_order_product);
    check_stochastic(fixtures.second_order_window);

    // Entropy recomputation vs the published table, skipping end years the
    // manifest flags as unreliable.
    for (const auto& fm : fixtures.first_order) {
        const int end_year = fm.matrix.dest_year;
        if (!fixtures.entropy.reliable(end_year)) continue;
        double worst = 0.0;
        int worst_cat = -1;
        for (int i = 0; i < fm.matrix.n_states; ++i) {
            if (!fm.matrix.is_defined(i)) continue;
            const double dev =
                std::abs(column_entropy(fm.matrix, i) - fixtures.entropy.value(i, end_year));
            if (dev > worst) {
                worst = dev;
                worst_cat = i;
            }
        }
        detail::add_check(report, "entropy",
                          "end year " + std::to_string(end_year) + " category " +
                              std::to_string(worst_cat),
                          worst, tol.entropy);
    }

    // Two-step consistency around 1998-2000.
    {
        const auto& first = fixtures.first_order_from(1998).matrix;
        const auto& second = fixtures.first_order_from(1999).matrix;
        const auto product_check = chapman_kolmogorov_check(
            first, second, fixtures.second_order_product.matrix, tol.ck_product);
        detail::add_check(report, "ck_product",
                          "product vs " + fixtures.second_order_product.file + " entry (" +
                              std::to_string(product_check.worst_dest) + "," +
                              std::to_string(product_check.worst_origin) + ")",
                          product_check.max_abs_deviation, tol.ck_product);

        const double direct_dev = max_abs_difference(fixtures.second_order_product.matrix.probs,
                                                     fixtures.second_order_window.matrix.probs);
        detail::add_check(report, "ck_direct",
                          fixtures.second_order_product.file + " vs " +
                              fixtures.second_order_window.file,
                          direct_dev, tol.ck_direct);
    }

    // Trend rows: the published (L, R, Q) triple must satisfy Q = L/R at
    // table precision.
    {
        double worst = 0.0;
        int worst_year = -1;
        for (const auto& row : fixtures.trend) {
            const double dev = std::abs(row.ratio * row.downward - row.upward);
            if (dev > worst) {
                worst = dev;
                worst_year = row.end_year;
            }
        }
        detail::add_check(report, "trend_arithmetic", "end year " + std::to_string(worst_year),
                          worst, tol.trend);
    }

    // Diagonal dominance on the columns enumerated in the manifest.
    for (const auto& fm : fixtures.first_order) {
        double worst = 0.0;
        std::string location = fm.file;
        for (int i : fm.diagonally_dominant_columns) {
            for (int j = 0; j < fm.matrix.n_states; ++j) {
                if (j == i) continue;
                const double gap = fm.matrix.probs(j, i) - fm.matrix.probs(i, i);
                if (gap > worst) {
                    worst = gap;
                    location = fm.file + " column " + std::to_string(i) + " row " +
                               std::to_string(j);
                }
            }
        }
        detail::add_check(report, "diagonal_dominance", location, worst, 0.0);
    }

    return report;
}

}  // namespace sizemarkov
