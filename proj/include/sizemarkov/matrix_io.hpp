#pragma once

// Matrix CSV layout: header "Size,0,1,...,N", then one row per
// destination state. Probabilities are written with 4 decimals, matching
// the bundled reference tables; emitted files parse back through
// read_matrix_csv (4-decimal quantization is part of the format).

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sizemarkov/csv.hpp"
#include "sizemarkov/errors.hpp"
#include "sizemarkov/estimator.hpp"
#include "sizemarkov/matrix.hpp"

namespace sizemarkov {

inline void write_matrix_csv(std::ostream& out, const StochasticMatrix& m) {
    const int n = m.n_states();
    out << "Size";
    for (int i = 0; i < n; ++i) out << ',' << i;
    out << '\n';
    for (int j = 0; j < n; ++j) {
        out << j;
        for (int i = 0; i < n; ++i) out << ',' << csv::format_fixed4(m(j, i));
        out << '\n';
    }
}

inline std::string matrix_csv_string(const StochasticMatrix& m) {
    std::ostringstream out;
    write_matrix_csv(out, m);
    return out.str();
}

inline StochasticMatrix read_matrix_csv(std::istream& in, const std::string& what = "matrix") {
    std::string line;
    if (!std::getline(in, line)) throw InputError(what + ": empty matrix file");
    auto header = csv::split(line, ',');
    if (header.empty() || csv::trim(header[0]) != "Size")
        throw InputError(what + ": matrix header must start with 'Size'");
    const int n = static_cast<int>(header.size()) - 1;
    if (n < 1) throw InputError(what + ": matrix header has no state columns");
    for (int i = 0; i < n; ++i)
        if (csv::trim(header[i + 1]) != std::to_string(i))
            throw InputError(what + ": matrix header column " + std::to_string(i + 1) +
                             " should be state " + std::to_string(i));

    StochasticMatrix m(n);
    for (int j = 0; j < n; ++j) {
        if (!std::getline(in, line))
            throw InputError(what + ": matrix is missing row " + std::to_string(j));
        const auto fields = csv::split(line, ',');
        if (static_cast<int>(fields.size()) != n + 1)
            throw InputError(what + ": row " + std::to_string(j) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(n + 1));
        if (csv::trim(fields[0]) != std::to_string(j))
            throw InputError(what + ": row label '" + csv::trim(fields[0]) +
                             "' should be state " + std::to_string(j));
        for (int i = 0; i < n; ++i) {
            const auto v = csv::parse_double(csv::trim(fields[i + 1]));
            if (!v || *v < 0.0 || *v > 1.0)
                throw InputError(what + ": entry (" + std::to_string(j) + "," +
                                 std::to_string(i) + ") is not a probability: '" +
                                 csv::trim(fields[i + 1]) + "'");
            m(j, i) = *v;
        }
    }
    return m;
}

inline StochasticMatrix read_matrix_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open matrix file " + path.string());
    return read_matrix_csv(in, path.filename().string());
}

}  // namespace sizemarkov
