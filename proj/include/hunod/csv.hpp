/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <string>
#include <vector>

namespace hunod::csv {

// Minimal comma-separated reader/writer. Fields may not contain commas or
// newlines; every file schema this project emits respects that (documented
// in docs/formats.md). Numeric formatting is locale-independent.

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const;  // throws Data error if absent
};

Table read_file(const std::string& path);
Table read_string(const std::string& text);

void write_file(const std::string& path, const Table& table);
std::string to_string(const Table& table);

// Round-trip-exact double formatting ("%.17g" trimmed via shortest form).
std::string format_double(double v);
double parse_double(const std::string& field, const std::string& context);
long parse_long(const std::string& field, const std::string& context);

}  // namespace hunod::csv
