#pragma once

// Dense square probability matrix in the column-stochastic convention:
// entry (dest, origin) is the probability of moving origin -> dest, so
// every origin column of a fully defined matrix sums to 1.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sizemarkov/errors.hpp"

namespace sizemarkov {

class StochasticMatrix {
public:
    StochasticMatrix() = default;
    explicit StochasticMatrix(int n_states)
        : n_(n_states), p_(static_cast<std::size_t>(n_states) * n_states, 0.0) {
        if (n_states < 1) throw ValidationError("matrix needs at least one state");
    }

    static StochasticMatrix identity(int n_states) {
        StochasticMatrix m(n_states);
        for (int i = 0; i < n_states; ++i) m(i, i) = 1.0;
        return m;
    }

    int n_states() const { return n_; }

    double operator()(int dest, int origin) const {
        return p_[static_cast<std::size_t>(dest) * n_ + origin];
    }
    double& operator()(int dest, int origin) {
        return p_[static_cast<std::size_t>(dest) * n_ + origin];
    }

    double column_sum(int origin) const {
        double s = 0.0;
        for (int j = 0; j < n_; ++j) s += (*this)(j, origin);
        return s;
    }

    bool column_is_zero(int origin) const {
        for (int j = 0; j < n_; ++j)
            if ((*this)(j, origin) != 0.0) return false;
        return true;
    }

    // Applies the matrix to a marginal: out[j] = sum_i m(j, i) p[i].
    std::vector<double> apply(std::span<const double> p) const {
        if (static_cast<int>(p.size()) != n_)
            throw ValidationError("marginal length does not match matrix size");
        std::vector<double> out(n_, 0.0);
        for (int j = 0; j < n_; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n_; ++i) acc += (*this)(j, i) * p[i];
            out[j] = acc;
        }
        return out;
    }

    const std::vector<double>& values() const { return p_; }

    bool operator==(const StochasticMatrix&) const = default;

private:
    int n_ = 0;
    std::vector<double> p_;  // row-major, row = destination
};

// Ordered composition: applying `inner` first and `outer` second, i.e.
// (outer * inner)(j, i) = sum_k outer(j, k) inner(k, i).
inline StochasticMatrix multiply(const StochasticMatrix& outer, const StochasticMatrix& inner) {
    if (outer.n_states() != inner.n_states())
        throw ValidationError("matrix size mismatch in multiplication");
    const int n = outer.n_states();
    StochasticMatrix out(n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            const double w = outer(j, k);
            if (w == 0.0) continue;
            for (int i = 0; i < n; ++i) out(j, i) += w * inner(k, i);
        }
    return out;
}

inline double max_abs_difference(const StochasticMatrix& a, const StochasticMatrix& b) {
    if (a.n_states() != b.n_states())
        throw ValidationError("matrix size mismatch in comparison");
    double worst = 0.0;
    for (int j = 0; j < a.n_states(); ++j)
        for (int i = 0; i < a.n_states(); ++i)
            worst = std::max(worst, std::abs(a(j, i) - b(j, i)));
    return worst;
}

}  // namespace sizemarkov
