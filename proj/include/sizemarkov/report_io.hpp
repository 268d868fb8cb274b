#pragma once

// Plot-ready series writers. Values are written with 4 decimals; cells
// without a defined value stay empty.

#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sizemarkov/analytics.hpp"
#include "sizemarkov/csv.hpp"

namespace sizemarkov {

inline void write_trend_csv(std::ostream& out, std::span<const TrendPoint> trend) {
    out << "end_year,L,R,Q\n";
    for (const auto& tp : trend) {
        out << tp.end_year << ',' << csv::format_fixed4(tp.upward) << ','
            << csv::format_fixed4(tp.downward) << ',';
        if (tp.ratio) out << csv::format_fixed4(*tp.ratio);
        out << '\n';
    }
}

// Wide layout: one row per category, one column per end year.
inline void write_entropy_csv(std::ostream& out, std::span<const EntropyTable> tables) {
    out << "category";
    for (const auto& t : tables) out << ',' << t.end_year;
    out << '\n';
    const int n = tables.empty() ? 0 : static_cast<int>(tables.front().values.size());
    for (int state = 0; state < n; ++state) {
        out << state;
        for (const auto& t : tables) {
            out << ',';
            if (t.is_defined(state)) out << csv::format_fixed4(t.values[state]);
        }
        out << '\n';
    }
}

// Long layout for plotting; undefined cells are omitted.
inline void write_entropy_long_csv(std::ostream& out, std::span<const EntropyTable> tables) {
    out << "end_year,category,entropy\n";
    for (const auto& t : tables)
        for (int state = 0; state < static_cast<int>(t.values.size()); ++state)
            if (t.is_defined(state))
                out << t.end_year << ',' << state << ',' << csv::format_fixed4(t.values[state])
                    << '\n';
}

inline void write_group_entropy_csv(std::ostream& out, std::span<const GroupEntropy> groups) {
    out << "end_year,small,medium,large\n";
    for (const auto& g : groups) {
        out << g.end_year << ',';
        if (g.small) out << csv::format_fixed4(*g.small);
        out << ',';
        if (g.medium) out << csv::format_fixed4(*g.medium);
        out << ',';
        if (g.large) out << csv::format_fixed4(*g.large);
        out << '\n';
    }
}

// Panel records; sizes use the shortest exact decimal form.
inline void write_panel_csv(std::ostream& out, const RectangularPanel& panel) {
    out << "entity_id,year,size\n";
    for (std::size_t e = 0; e < panel.n_entities(); ++e)
        for (int year = panel.years().first; year <= panel.years().last; ++year) {
            const double size = panel.size_at(e, year);
            if (size <= 0.0) continue;
            out << panel.entities()[e] << ',' << year << ',' << csv::format_double(size) << '\n';
        }
}

}  // namespace sizemarkov
