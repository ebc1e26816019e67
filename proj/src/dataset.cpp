#include "demboost/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "demboost/errors.hpp"
#include "demboost/rng.hpp"
#include "demboost/textio.hpp"

namespace demboost {

const std::array<std::string, kNumFeatures>& feature_names() {
    static const std::array<std::string, kNumFeatures> names = {
        "elevation", "urban",      "slope",    "aspect", "roughness", "tpi",
        "tri",       "tst",        "vrm",      "forest_pct", "bare_pct"};
    return names;
}

FeatureTable assemble(const std::array<const Grid*, kNumFeatures>& feature_grids,
                      const Grid& error_grid) {
    for (const Grid* g : feature_grids) {
        if (!g->header().aligned_with(error_grid.header())) {
            throw AlignmentError("assemble requires all layers on one grid");
        }
    }
    FeatureTable table;
    for (int r = 0; r < error_grid.nrows(); ++r) {
        for (int c = 0; c < error_grid.ncols(); ++c) {
            if (!error_grid.is_valid(r, c)) continue;
            bool ok = true;
            FeatureRow row;
            for (std::size_t f = 0; f < kNumFeatures; ++f) {
                if (!feature_grids[f]->is_valid(r, c)) {
                    ok = false;
                    break;
                }
                row.features[f] = feature_grids[f]->at(r, c);
            }
            if (!ok) continue;
            const double urban = row.features[1];
            if (urban != 0.0 && urban != 1.0) {
                throw Error("urban layer must be a 0/1 mask, found " + std::to_string(urban));
            }
            for (std::size_t f : {std::size_t{9}, std::size_t{10}}) {
                if (row.features[f] < -1e-9 || row.features[f] > 100.0 + 1e-9) {
                    throw Error("cover percentage out of [0, 100] in layer " + feature_names()[f]);
                }
            }
            row.col = c;
            row.row = r;
            row.target = error_grid.at(r, c);
            table.rows.push_back(row);
        }
    }
    if (table.empty()) {
        throw EmptyDatasetError("no cell is valid in all layers");
    }
    return table;
}

SplitResult split(const FeatureTable& table, const SplitSpec& spec) {
    if (table.empty()) throw EmptyDatasetError("cannot split an empty table");
    if (spec.test_fraction < 0.0 || spec.test_fraction >= 1.0 ||
        spec.val_fraction_of_train < 0.0 || spec.val_fraction_of_train >= 1.0) {
        throw std::invalid_argument("split fractions must lie in [0, 1)");
    }
    const double derived_val = (1.0 - spec.test_fraction) * spec.val_fraction_of_train;
    if (spec.test_fraction + derived_val >= 1.0) {
        throw std::invalid_argument("test + derived validation fraction must stay below 1");
    }

    const std::size_t n = table.size();
    const auto n_test = static_cast<std::size_t>(std::llround(n * spec.test_fraction));
    const auto n_val = static_cast<std::size_t>(std::llround((n - n_test) * spec.val_fraction_of_train));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(spec.seed);
    // Hand-rolled Fisher-Yates: std::shuffle's draw pattern is
    // implementation-defined, and the partition must be portable.
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i + 1));
        std::swap(order[i], order[j]);
    }

    SplitResult out;
    out.test.rows.reserve(n_test);
    out.val.rows.reserve(n_val);
    out.train.rows.reserve(n - n_test - n_val);
    for (std::size_t i = 0; i < n; ++i) {
        const FeatureRow& row = table.rows[order[i]];
        if (i < n_test) {
            out.test.rows.push_back(row);
        } else if (i < n_test + n_val) {
            out.val.rows.push_back(row);
        } else {
            out.train.rows.push_back(row);
        }
    }
    return out;
}

void export_csv(const FeatureTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open csv for writing: " + path.string());
    const auto& names = feature_names();
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        out << names[f] << ',';
    }
    out << "target,col,row\n";
    for (const FeatureRow& row : table.rows) {
        for (double v : row.features) out << format_double(v) << ',';
        out << format_double(row.target) << ',' << row.col << ',' << row.row << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

FeatureTable import_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open csv: " + path.string());

    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw ParseError("csv has no header row", 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    // Columns may arrive in any order; map them back by name.
    const auto& names = feature_names();
    const std::size_t n_cols = kNumFeatures + 3;
    std::vector<int> slot_of_column;  // 0..10 features, 11 target, 12 col, 13 row
    for (const std::string& column : split_csv_line(line)) {
        int slot = -1;
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            if (column == names[f]) slot = static_cast<int>(f);
        }
        if (column == "target") slot = 11;
        if (column == "col") slot = 12;
        if (column == "row") slot = 13;
        if (slot < 0) throw ParseError("unknown column '" + column + "'", line_no);
        slot_of_column.push_back(slot);
    }
    if (slot_of_column.size() != n_cols) {
        throw ParseError("expected " + std::to_string(n_cols) + " columns, got " +
                             std::to_string(slot_of_column.size()),
                         line_no);
    }
    std::vector<bool> present(14, false);
    for (int s : slot_of_column) {
        if (present[s]) throw ParseError("duplicate column", line_no);
        present[s] = true;
    }

    FeatureTable table;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != n_cols) {
            throw ParseError("expected " + std::to_string(n_cols) + " values, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        FeatureRow row;
        for (std::size_t i = 0; i < n_cols; ++i) {
            if (fields[i].empty()) throw ParseError("missing value", line_no);
            const int slot = slot_of_column[i];
            if (slot == 12) {
                row.col = static_cast<std::int32_t>(parse_int(fields[i], line_no));
            } else if (slot == 13) {
                row.row = static_cast<std::int32_t>(parse_int(fields[i], line_no));
            } else {
                const double v = parse_double(fields[i], line_no);
                if (!std::isfinite(v)) throw ParseError("non-finite value", line_no);
                if (slot == 11) {
                    row.target = v;
                } else {
                    row.features[static_cast<std::size_t>(slot)] = v;
                }
            }
        }
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace demboost
