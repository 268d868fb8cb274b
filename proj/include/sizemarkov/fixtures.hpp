#pragma once

// Bundled reference results: 15 consecutive-year matrices (1998-2013),
// the two-step 1998-2000 matrices (product form and window form), the
// trend series and the per-category entropy table. A manifest carries
// FNV-1a digests so accidental edits of the transcribed values surface
// as warnings.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sizemarkov/csv.hpp"
#include "sizemarkov/errors.hpp"
#include "sizemarkov/estimator.hpp"
#include "sizemarkov/matrix_io.hpp"

namespace sizemarkov {

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view data) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    return std::string(buf);
}

struct FixtureMatrix {
    std::string file;
    std::string kind;  // first_order | second_order_product | second_order_window
    TransitionMatrix matrix;
    std::vector<int> diagonally_dominant_columns;  // enumerated in the manifest
    bool digest_ok = true;
};

struct FixtureTrendRow {
    int end_year = 0;
    double upward = 0.0;    // L
    double downward = 0.0;  // R
    double ratio = 0.0;     // Q as published
};

struct FixtureEntropyTable {
    std::vector<int> end_years;
    std::vector<std::vector<double>> values;  // [category][year index]
    std::vector<double> avg;                  // published per-category average
    std::vector<int> unreliable_end_years;    // excluded from verification

    double value(int category, int end_year) const {
        for (std::size_t i = 0; i < end_years.size(); ++i)
            if (end_years[i] == end_year) return values[category][i];
        throw ValidationError("entropy table has no year " + std::to_string(end_year));
    }
    bool reliable(int end_year) const {
        for (int y : unreliable_end_years)
            if (y == end_year) return false;
        return true;
    }
};

struct FixtureSet {
    std::vector<FixtureMatrix> first_order;  // chronological
    FixtureMatrix second_order_product;
    FixtureMatrix second_order_window;
    std::vector<FixtureTrendRow> trend;
    FixtureEntropyTable entropy;
    std::vector<std::string> warnings;  // digest mismatches

    const FixtureMatrix& first_order_from(int origin_year) const {
        for (const auto& f : first_order)
            if (f.matrix.origin_year == origin_year) return f;
        throw ValidationError("no first-order fixture with origin year " +
                              std::to_string(origin_year));
    }
};

namespace detail {

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open fixture file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace detail

inline FixtureSet load_fixture_set(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    nlohmann::json manifest;
    {
        std::ifstream in(manifest_path);
        if (!in) throw InputError("cannot open fixture manifest " + manifest_path.string());
        try {
            in >> manifest;
        } catch (const nlohmann::json::exception& e) {
            throw InputError("fixture manifest is not valid JSON: " + std::string(e.what()));
        }
    }

    FixtureSet set;
    bool have_product = false, have_window = false;
    for (const auto& entry : manifest.at("files")) {
        const std::string file = entry.at("file").get<std::string>();
        const std::string kind = entry.at("kind").get<std::string>();
        const std::string bytes = detail::read_file_bytes(dir / file);
        const bool digest_ok = fnv1a64_hex(bytes) == entry.at("fnv1a64").get<std::string>();
        if (!digest_ok)
            set.warnings.push_back("fixture " + file + " does not match its manifest digest");

        if (kind == "first_order" || kind == "second_order_product" ||
            kind == "second_order_window") {
            std::istringstream in(bytes);
            FixtureMatrix fm;
            fm.file = file;
            fm.kind = kind;
            fm.digest_ok = digest_ok;
            fm.matrix = transition_matrix_from_probabilities(
                read_matrix_csv(in, file), entry.at("origin_year").get<int>(),
                entry.at("dest_year").get<int>());
            if (entry.contains("diagonally_dominant_columns"))
                fm.diagonally_dominant_columns =
                    entry.at("diagonally_dominant_columns").get<std::vector<int>>();
            if (kind == "first_order") {
                set.first_order.push_back(std::move(fm));
            } else if (kind == "second_order_product") {
                set.second_order_product = std::move(fm);
                have_product = true;
            } else {
                set.second_order_window = std::move(fm);
                have_window = true;
            }
        } else if (kind == "trend") {
            std::istringstream in(bytes);
            std::string line;
            if (!std::getline(in, line) || line != "end_year,L,R,Q")
                throw InputError("fixture " + file + " has an unexpected header");
            while (std::getline(in, line)) {
                if (csv::trim(line).empty()) continue;
                const auto fields = csv::split(line, ',');
                if (fields.size() != 4)
                    throw InputError("fixture " + file + " has a malformed row: " + line);
                const auto year = csv::parse_int(fields[0]);
                const auto l = csv::parse_double(fields[1]);
                const auto r = csv::parse_double(fields[2]);
                const auto q = csv::parse_double(fields[3]);
                if (!year || !l || !r || !q)
                    throw InputError("fixture " + file + " has a non-numeric row: " + line);
                set.trend.push_back(
                    FixtureTrendRow{static_cast<int>(*year), *l, *r, *q});
            }
        } else if (kind == "entropy") {
            std::istringstream in(bytes);
            std::string line;
            if (!std::getline(in, line)) throw InputError("fixture " + file + " is empty");
            auto header = csv::split(line, ',');
            if (header.size() < 3 || header.front() != "category" || header.back() != "avg")
                throw InputError("fixture " + file + " has an unexpected header");
            for (std::size_t i = 1; i + 1 < header.size(); ++i) {
                const auto year = csv::parse_int(header[i]);
                if (!year) throw InputError("fixture " + file + " has a non-year column");
                set.entropy.end_years.push_back(static_cast<int>(*year));
            }
            while (std::getline(in, line)) {
                if (csv::trim(line).empty()) continue;
                const auto fields = csv::split(line, ',');
                if (fields.size() != header.size())
                    throw InputError("fixture " + file + " has a malformed row: " + line);
                std::vector<double> row;
                for (std::size_t i = 1; i + 1 < fields.size(); ++i) {
                    const auto v = csv::parse_double(fields[i]);
                    if (!v) throw InputError("fixture " + file + " has a non-numeric cell");
                    row.push_back(*v);
                }
                const auto avg = csv::parse_double(fields.back());
                if (!avg) throw InputError("fixture " + file + " has a non-numeric avg");
                set.entropy.values.push_back(std::move(row));
                set.entropy.avg.push_back(*avg);
            }
            if (entry.contains("unreliable_end_years"))
                set.entropy.unreliable_end_years =
                    entry.at("unreliable_end_years").get<std::vector<int>>();
        } else {
            throw InputError("fixture manifest lists unknown kind '" + kind + "'");
        }
    }

    if (set.first_order.empty()) throw InputError("fixture set has no first-order matrices");
    if (!have_product || !have_window)
        throw InputError("fixture set is missing the two-step matrices");
    if (set.trend.empty()) throw InputError("fixture set has no trend rows");
    if (set.entropy.values.empty()) throw InputError("fixture set has no entropy table");
    std::sort(set.first_order.begin(), set.first_order.end(),
              [](const FixtureMatrix& a, const FixtureMatrix& b) {
                  return a.matrix.origin_year < b.matrix.origin_year;
              });
    return set;
}

}  // namespace sizemarkov
