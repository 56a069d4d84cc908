#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lvt/tensor.hpp"

namespace lvt::io {

/// Binary tensor codec, format "DTF1": 4 magic bytes `DTF1`, little-endian
/// u32 order m, m little-endian u64 extents, then all values as little-endian
/// f64 in row-major order. Readers reject wrong magic, zero extents, size
/// mismatches, and non-finite values; errors carry the offending byte offset.
DenseTensor read_dtf1(const std::string& path);
void write_dtf1(const DenseTensor& t, const std::string& path);

/// Renders with up to 17 significant digits, enough for f64 parse roundtrip.
std::string format_double(double v);

/// One CSV table: a header row plus pre-rendered cells. Every row must match
/// the column count. Files end each line with '\n'.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(const CsvTable& table, const std::string& path);
std::string render_csv(const CsvTable& table);

/// Flat `key = value` config text, one pair per line; `#` starts a comment
/// and blank lines are skipped. Duplicate keys keep the last value.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    long long get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    /// Comma-separated numeric list, e.g. `d = 20,40,60`.
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::size_t> get_size_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace lvt::io
