#pragma once

// Panel observations and their preparation: ingesting raw entity-year-size
// records, rectangularizing unbalanced panels (absent years filled with
// size 0, the reserved "non-existing" value) and descriptive statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sizemarkov/csv.hpp"
#include "sizemarkov/errors.hpp"

namespace sizemarkov {

struct PanelRecord {
    std::string entity_id;
    int year = 0;
    double size = 0.0;  // strictly positive in raw data; 0 is the fill value
};

// Inclusive contiguous year range.
struct YearRange {
    int first = 0;
    int last = 0;

    int count() const { return last - first + 1; }
    bool contains(int year) const { return year >= first && year <= last; }

    bool operator==(const YearRange&) const = default;
};

inline YearRange validated_year_range(int first, int last) {
    if (last < first)
        throw ValidationError("year range " + std::to_string(first) + ":" + std::to_string(last) +
                              " is empty");
    return YearRange{first, last};
}

struct ColumnMapping {
    std::string entity = "entity_id";
    std::string year = "year";
    std::string size = "size";
};

// Strongly balanced panel: one size cell for every (entity, year), 0 where
// the entity is absent. Immutable after construction.
class RectangularPanel {
public:
    RectangularPanel(std::vector<std::string> entities, YearRange years, std::vector<double> cells)
        : entities_(std::move(entities)), years_(years), cells_(std::move(cells)) {
        if (entities_.empty()) throw ValidationError("panel has no entities");
        const std::size_t expected =
            entities_.size() * static_cast<std::size_t>(years_.count());
        if (cells_.size() != expected)
            throw ValidationError("panel cell count " + std::to_string(cells_.size()) +
                                  " does not match entities x years = " + std::to_string(expected));
        for (std::size_t e = 0; e < entities_.size(); ++e) {
            bool any_positive = false;
            for (int t = 0; t < years_.count(); ++t) {
                double v = cells_[e * years_.count() + t];
                if (v < 0.0 || !std::isfinite(v))
                    throw ValidationError("entity " + entities_[e] + " has invalid size cell");
                if (v > 0.0) any_positive = true;
            }
            if (!any_positive)
                throw ValidationError("entity " + entities_[e] +
                                      " has no positive size in the year range");
        }
    }

    const std::vector<std::string>& entities() const { return entities_; }
    YearRange years() const { return years_; }
    std::size_t n_entities() const { return entities_.size(); }
    int n_years() const { return years_.count(); }

    double cell(std::size_t entity_index, int year_index) const {
        return cells_[entity_index * static_cast<std::size_t>(years_.count()) + year_index];
    }
    double size_at(std::size_t entity_index, int year) const {
        return cell(entity_index, year_index(year));
    }
    int year_index(int year) const {
        if (!years_.contains(year))
            throw ValidationError("year " + std::to_string(year) + " outside panel range");
        return year - years_.first;
    }
    const std::vector<double>& cells() const { return cells_; }

    bool operator==(const RectangularPanel&) const = default;

private:
    std::vector<std::string> entities_;  // sorted, unique
    YearRange years_;
    std::vector<double> cells_;  // row-major: entity x year
};

struct PanelSummary {
    std::int64_t observations = 0;  // positive cells only
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double std_dev = 0.0;
};

// Reads delimited records with a header row. Rejects rows violating the
// PanelRecord invariants; size 0 is reserved for the synthetic fill value
// and must not appear in raw input.
inline std::vector<PanelRecord> ingest_panel(std::istream& in, const ColumnMapping& mapping = {},
                                             char delimiter = ',') {
    std::string line;
    if (!std::getline(in, line)) throw InputError("panel source is empty");

    const auto header = csv::split(line, delimiter);
    auto find_column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (csv::trim(header[i]) == name) return i;
        throw InputError("panel header is missing column '" + name + "'");
    };
    const std::size_t entity_col = find_column(mapping.entity);
    const std::size_t year_col = find_column(mapping.year);
    const std::size_t size_col = find_column(mapping.size);

    std::vector<PanelRecord> records;
    std::set<std::pair<std::string, int>> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line, delimiter);
        if (fields.size() <= std::max({entity_col, year_col, size_col}))
            throw ValidationError("line " + std::to_string(line_no) + ": expected at least " +
                                  std::to_string(std::max({entity_col, year_col, size_col}) + 1) +
                                  " fields, got " + std::to_string(fields.size()));

        PanelRecord rec;
        rec.entity_id = csv::trim(fields[entity_col]);
        if (rec.entity_id.empty())
            throw ValidationError("line " + std::to_string(line_no) + ": empty entity id");

        const auto year = csv::parse_int(csv::trim(fields[year_col]));
        if (!year)
            throw ValidationError("line " + std::to_string(line_no) + ": year '" +
                                  csv::trim(fields[year_col]) + "' is not an integer");
        rec.year = static_cast<int>(*year);

        const auto size = csv::parse_double(csv::trim(fields[size_col]));
        if (!size || !std::isfinite(*size))
            throw ValidationError("line " + std::to_string(line_no) + ": size '" +
                                  csv::trim(fields[size_col]) + "' is not numeric");
        if (*size < 0.0)
            throw ValidationError("line " + std::to_string(line_no) + ": negative size " +
                                  csv::trim(fields[size_col]));
        if (*size == 0.0)
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": size 0 is reserved for non-existing entities and must not "
                                  "appear in raw input");
        rec.size = *size;

        if (!seen.emplace(rec.entity_id, rec.year).second)
            throw ValidationError("duplicate observation for (" + rec.entity_id + ", " +
                                  std::to_string(rec.year) + ")");
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<PanelRecord> ingest_panel_file(const std::filesystem::path& path,
                                                  const ColumnMapping& mapping = {},
                                                  char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open panel file " + path.string());
    return ingest_panel(in, mapping, delimiter);
}

// Balances the records over the year range; absent (entity, year) cells are
// filled with 0. Every entity appearing in the records gets a full row.
inline RectangularPanel rectangularize(const std::vector<PanelRecord>& records, YearRange range) {
    if (records.empty()) throw ValidationError("cannot rectangularize an empty record list");
    if (range.last < range.first)
        throw ValidationError("year range " + std::to_string(range.first) + ":" +
                              std::to_string(range.last) + " is empty");

    std::vector<std::string> entities;
    entities.reserve(records.size());
    for (const auto& rec : records) {
        if (!range.contains(rec.year))
            throw ValidationError("record (" + rec.entity_id + ", " + std::to_string(rec.year) +
                                  ") lies outside the year range " + std::to_string(range.first) +
                                  ":" + std::to_string(range.last));
        entities.push_back(rec.entity_id);
    }
    std::sort(entities.begin(), entities.end());
    entities.erase(std::unique(entities.begin(), entities.end()), entities.end());

    std::map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < entities.size(); ++i) index.emplace(entities[i], i);

    const int n_years = range.count();
    std::vector<double> cells(entities.size() * static_cast<std::size_t>(n_years), 0.0);
    std::vector<bool> filled(cells.size(), false);
    for (const auto& rec : records) {
        const std::size_t e = index.at(rec.entity_id);
        const std::size_t at = e * n_years + (rec.year - range.first);
        if (filled[at])
            throw ValidationError("duplicate observation for (" + rec.entity_id + ", " +
                                  std::to_string(rec.year) + ")");
        if (rec.size <= 0.0 || !std::isfinite(rec.size))
            throw ValidationError("record (" + rec.entity_id + ", " + std::to_string(rec.year) +
                                  ") has non-positive size");
        cells[at] = rec.size;
        filled[at] = true;
    }
    return RectangularPanel(std::move(entities), range, std::move(cells));
}

// Year range defaults to [min year, max year] of the input.
inline RectangularPanel rectangularize(const std::vector<PanelRecord>& records) {
    if (records.empty()) throw ValidationError("cannot rectangularize an empty record list");
    int lo = records.front().year, hi = records.front().year;
    for (const auto& rec : records) {
        lo = std::min(lo, rec.year);
        hi = std::max(hi, rec.year);
    }
    return rectangularize(records, YearRange{lo, hi});
}

// Statistics over positive cells only; zero cells are synthetic
// non-existence, not observations. std_dev is the sample standard
// deviation (0 for a single observation).
inline PanelSummary summarize(const RectangularPanel& panel) {
    PanelSummary s;
    double sum = 0.0;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    for (double v : panel.cells()) {
        if (v <= 0.0) continue;
        ++s.observations;
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    if (s.observations == 0) throw ValidationError("panel has no positive observations");
    s.mean = sum / static_cast<double>(s.observations);
    double ss = 0.0;
    for (double v : panel.cells()) {
        if (v <= 0.0) continue;
        ss += (v - s.mean) * (v - s.mean);
    }
    s.std_dev = s.observations > 1
                    ? std::sqrt(ss / static_cast<double>(s.observations - 1))
                    : 0.0;
    return s;
}

}  // namespace sizemarkov
