#pragma once

#include <string>
#include <vector>

namespace tornadocast {

/// A parsed CSV file: header row plus string cells, original order kept.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return header.size(); }

    /// Index of a header name, or -1.
    int column_index(const std::string& name) const;
};

/// Splits one CSV record. Handles double-quoted fields with "" escapes;
/// embedded newlines are not supported.
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads a comma-separated UTF-8 file whose first row is the header.
/// Rows whose field count differs from the header are reported with their
/// 1-based data row number. Throws FileError.
CsvTable read_csv(const std::string& path);

/// Writes header + rows. Fields containing commas or quotes are quoted.
void write_csv(const std::string& path, const CsvTable& table);

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace tornadocast
