#pragma once

// Synthetic panel generation from a known ground-truth chain, used as the
// consistency oracle for the estimator and analytics.
//
// Randomness is fully pinned so that a seed identifies one panel on every
// platform: per-entity streams are xoshiro256** generators whose state is
// expanded with splitmix64 from a seed derived as
//   splitmix64(chain_seed + 0x9E3779B97F4A7C15 * (entity_index + 1)).
// Uniform doubles take the top 53 bits of the 64-bit output.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "sizemarkov/classifier.hpp"
#include "sizemarkov/errors.hpp"
#include "sizemarkov/estimator.hpp"
#include "sizemarkov/matrix.hpp"
#include "sizemarkov/panel.hpp"

namespace sizemarkov {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

class Xoshiro256ss {
public:
    explicit Xoshiro256ss(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : s_) word = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

inline std::uint64_t derive_entity_seed(std::uint64_t chain_seed, std::uint64_t entity_index) {
    return SplitMix64(chain_seed + 0x9E3779B97F4A7C15ULL * (entity_index + 1)).next();
}

// Ground-truth chain over states 0..N (0 = non-existing). A single step
// matrix means the chain is homogeneous; otherwise one matrix per step.
struct GroundTruthChain {
    std::vector<StochasticMatrix> steps;
    std::vector<double> initial;  // marginal over states, sums to 1
    std::uint64_t seed = 0;

    int n_states() const { return steps.empty() ? 0 : steps.front().n_states(); }
    bool homogeneous() const { return steps.size() == 1; }
    const StochasticMatrix& step_matrix(std::size_t step) const {
        return homogeneous() ? steps.front() : steps.at(step);
    }
};

inline void validate_chain(const GroundTruthChain& chain) {
    if (chain.steps.empty()) throw ValidationError("chain has no step matrices");
    const int n = chain.steps.front().n_states();
    for (const auto& m : chain.steps) {
        if (m.n_states() != n) throw ValidationError("chain step matrices differ in size");
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j)
                if (m(j, i) < 0.0) throw ValidationError("chain matrix has a negative entry");
            if (std::abs(m.column_sum(i) - 1.0) > 1e-12)
                throw ValidationError("chain matrix column " + std::to_string(i) +
                                      " sums to " + csv::format_double(m.column_sum(i)));
        }
    }
    if (static_cast<int>(chain.initial.size()) != n)
        throw ValidationError("initial marginal length does not match chain states");
    double total = 0.0;
    for (double p : chain.initial) {
        if (p < 0.0) throw ValidationError("initial marginal has a negative entry");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ValidationError("initial marginal sums to " + csv::format_double(total));
}

inline GroundTruthChain make_homogeneous_chain(StochasticMatrix step, std::vector<double> initial,
                                               std::uint64_t seed) {
    GroundTruthChain chain;
    chain.steps.push_back(std::move(step));
    chain.initial = std::move(initial);
    chain.seed = seed;
    validate_chain(chain);
    return chain;
}

namespace detail {

inline int sample_categorical(const std::vector<double>& probs, double u) {
    double cum = 0.0;
    int last_positive = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        cum += probs[k];
        last_positive = static_cast<int>(k);
        if (u < cum) return last_positive;
    }
    return last_positive;
}

inline int sample_column(const StochasticMatrix& m, int origin, double u) {
    double cum = 0.0;
    int last_positive = 0;
    for (int j = 0; j < m.n_states(); ++j) {
        const double f = m(j, origin);
        if (f <= 0.0) continue;
        cum += f;
        last_positive = j;
        if (u < cum) return last_positive;
    }
    return last_positive;
}

}  // namespace detail

// State sequence of length n_years, deterministic in (chain.seed,
// entity_index).
inline std::vector<int> sample_trajectory(const GroundTruthChain& chain, int n_years,
                                          std::uint64_t entity_index = 0) {
    validate_chain(chain);
    if (n_years < 1) throw ValidationError("trajectory needs at least one year");
    if (!chain.homogeneous() && chain.steps.size() < static_cast<std::size_t>(n_years) - 1)
        throw ValidationError("chain has fewer step matrices than requested transitions");

    Xoshiro256ss rng(derive_entity_seed(chain.seed, entity_index));
    std::vector<int> states;
    states.reserve(n_years);
    states.push_back(detail::sample_categorical(chain.initial, rng.next_unit()));
    for (int t = 1; t < n_years; ++t)
        states.push_back(detail::sample_column(chain.step_matrix(t - 1), states.back(),
                                               rng.next_unit()));
    return states;
}

struct SimulatedPanel {
    RectangularPanel panel;
    StateGrid truth;  // classify_panel(panel, scheme) recovers this exactly
};

// Independent trajectories rendered as a panel: state k > 0 becomes a size
// drawn uniformly from category k's interval (top category: twice its
// lower bound wide); state 0 becomes absence. Entities that never exist
// within the range are dropped entirely.
inline SimulatedPanel simulate_panel(const GroundTruthChain& chain, std::int64_t n_entities,
                                     YearRange years, const CategoryScheme& scheme) {
    validate_chain(chain);
    if (n_entities < 1) throw ValidationError("panel needs at least one entity");
    if (years.last < years.first) throw ValidationError("empty simulation year range");
    if (scheme.n_states() != chain.n_states())
        throw ValidationError("scheme has " + std::to_string(scheme.n_states()) +
                              " states but chain has " + std::to_string(chain.n_states()));

    const int n_years = years.count();
    int id_width = 1;
    for (std::int64_t v = n_entities - 1; v >= 10; v /= 10) ++id_width;
    id_width = std::clamp(id_width, 6, 19);

    std::vector<std::string> entities;
    std::vector<double> cells;
    std::vector<int> states;
    for (std::int64_t e = 0; e < n_entities; ++e) {
        Xoshiro256ss rng(derive_entity_seed(chain.seed, static_cast<std::uint64_t>(e)));
        std::vector<int> traj(n_years);
        traj[0] = detail::sample_categorical(chain.initial, rng.next_unit());
        for (int t = 1; t < n_years; ++t)
            traj[t] = detail::sample_column(chain.step_matrix(t - 1), traj[t - 1],
                                            rng.next_unit());

        bool any_present = false;
        std::vector<double> sizes(n_years, 0.0);
        for (int t = 0; t < n_years; ++t) {
            if (traj[t] == 0) continue;
            any_present = true;
            const int k = traj[t];
            const double lo = scheme.lower(k);
            const double hi = scheme.upper(k);
            double size = lo + rng.next_unit() * (hi - lo);
            // Guard the half-open bin against the edges: the draw must stay
            // strictly positive and, below the top bin, strictly under hi.
            if (size <= 0.0) size = 0.5 * hi;
            if (k < scheme.top_state() && size >= hi) size = lo + 0.5 * (hi - lo);
            sizes[t] = size;
        }
        if (!any_present) continue;

        char id[32];
        std::snprintf(id, sizeof(id), "E%0*lld", id_width, static_cast<long long>(e));
        entities.emplace_back(id);
        cells.insert(cells.end(), sizes.begin(), sizes.end());
        states.insert(states.end(), traj.begin(), traj.end());
    }
    if (entities.empty())
        throw NumericError("simulation produced no existing entities; check the chain");

    RectangularPanel panel(entities, years, std::move(cells));
    StateGrid truth(std::move(entities), years, chain.n_states(), std::move(states));
    return SimulatedPanel{std::move(panel), std::move(truth)};
}

inline SimulatedPanel simulate_panel(const GroundTruthChain& chain, std::int64_t n_entities,
                                     YearRange years) {
    return simulate_panel(chain, n_entities, years, default_scheme());
}

}  // namespace sizemarkov
