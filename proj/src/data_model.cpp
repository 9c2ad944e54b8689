/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "hunod/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

#include "hunod/error.hpp"

namespace hunod {

std::size_t FeatureSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw_data("unknown feature '" + name + "'");
}

FeatureSchema FeatureSchema::numeric(std::vector<std::string> names) {
    FeatureSchema schema;
    schema.kinds.assign(names.size(), FeatureKind::Numeric);
    schema.names = std::move(names);
    return schema;
}

Dataset::Dataset(FeatureSchema schema, std::vector<std::string> ids, std::vector<double> values)
    : schema_(std::move(schema)), ids_(std::move(ids)), values_(std::move(values)) {
    const std::size_t d = schema_.dim();
    if (values_.size() != ids_.size() * d)
        throw_data("dataset shape mismatch: " + std::to_string(ids_.size()) + " ids x " +
                   std::to_string(d) + " features vs " + std::to_string(values_.size()) + " cells");
    {
        std::set<std::string> unique_names(schema_.names.begin(), schema_.names.end());
        if (unique_names.size() != schema_.names.size())
            throw_data("feature names are not unique");
        std::set<std::string> unique_ids(ids_.begin(), ids_.end());
        if (unique_ids.size() != ids_.size()) throw_data("instance ids are not unique");
    }
    for (std::size_t r = 0; r < ids_.size(); ++r)
        for (std::size_t c = 0; c < d; ++c)
            if (!std::isfinite(values_[r * d + c]))
                throw_data("non-finite value at id '" + ids_[r] + "', column '" +
                           schema_.names[c] + "'");
}

ScaledDataset::ScaledDataset(const Dataset& base)
    : schema_(base.schema()), ids_(base.ids()), values_(base.values()) {
    const std::size_t n = base.size(), d = base.dim();
    mins_.assign(d, 0.0);
    maxs_.assign(d, 0.0);
    if (n == 0) return;
    for (std::size_t c = 0; c < d; ++c) {
        double lo = base.at(0, c), hi = base.at(0, c);
        for (std::size_t r = 1; r < n; ++r) {
            lo = std::min(lo, base.at(r, c));
            hi = std::max(hi, base.at(r, c));
        }
        mins_[c] = lo;
        maxs_[c] = hi;
        const double span = hi - lo;
        for (std::size_t r = 0; r < n; ++r) {
            double& v = values_[r * d + c];
            v = span > 0.0 ? (v - lo) / span : 0.0;  // constant columns become inert
        }
    }
}

Dataset ScaledDataset::as_dataset() const { return Dataset(schema_, ids_, values_); }

Dataset one_hot_encode(const RawTable& raw) {
    if (raw.ids.empty()) throw_data("one_hot_encode: empty table");
    for (const auto& col : raw.columns) {
        const std::size_t len = col.categorical ? col.categories.size() : col.numeric.size();
        if (len != raw.ids.size())
            throw_data("column '" + col.name + "' length mismatch");
    }

    FeatureSchema schema;
    std::vector<std::vector<double>> out_columns;
    for (const auto& col : raw.columns) {
        if (!col.categorical) {
            schema.names.push_back(col.name);
            schema.kinds.push_back(FeatureKind::Numeric);
            out_columns.push_back(col.numeric);
            continue;
        }
        std::set<std::string> domain(col.categories.begin(), col.categories.end());
        for (const auto& value : domain) {
            schema.names.push_back(col.name + "_" + value);
            schema.kinds.push_back(FeatureKind::OneHotDerived);
            std::vector<double> indicator(raw.ids.size(), 0.0);
            for (std::size_t r = 0; r < raw.ids.size(); ++r)
                if (col.categories[r] == value) indicator[r] = 1.0;
            out_columns.push_back(std::move(indicator));
        }
    }

    const std::size_t n = raw.ids.size(), d = schema.dim();
    std::vector<double> values(n * d);
    for (std::size_t c = 0; c < d; ++c)
        for (std::size_t r = 0; r < n; ++r) values[r * d + c] = out_columns[c][r];
    return Dataset(std::move(schema), raw.ids, std::move(values));
}

ScaledDataset scale_to_unit(const Dataset& data) { return ScaledDataset(data); }

Dataset dataset_from_csv(const csv::Table& table, const std::string& id_column) {
    if (table.header.empty() || table.header[0] != id_column)
        throw_data("feature csv must start with column '" + id_column + "'");
    FeatureSchema schema =
        FeatureSchema::numeric({table.header.begin() + 1, table.header.end()});
    std::vector<std::string> ids;
    std::vector<double> values;
    ids.reserve(table.rows.size());
    values.reserve(table.rows.size() * schema.dim());
    for (const auto& row : table.rows) {
        ids.push_back(row[0]);
        for (std::size_t c = 1; c < row.size(); ++c)
            values.push_back(csv::parse_double(row[c], "row '" + row[0] + "', column '" +
                                                            table.header[c] + "'"));
    }
    return Dataset(std::move(schema), std::move(ids), std::move(values));
}

csv::Table dataset_to_csv(const Dataset& data, const std::string& id_column) {
    csv::Table table;
    table.header.push_back(id_column);
    for (const auto& name : data.schema().names) table.header.push_back(name);
    for (std::size_t r = 0; r < data.size(); ++r) {
        std::vector<std::string> row;
        row.reserve(data.dim() + 1);
        row.push_back(data.ids()[r]);
        for (std::size_t c = 0; c < data.dim(); ++c)
            row.push_back(csv::format_double(data.at(r, c)));
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace hunod
