#include "lvt/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lvt/errors.hpp"

namespace lvt::io {

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) buf.push_back(static_cast<char>((v >> shift) & 0xFF));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int shift = 0; shift < 64; shift += 8) buf.push_back(static_cast<char>((v >> shift) & 0xFF));
}

std::uint32_t get_u32(const std::string& buf, std::size_t at) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + b])) << (8 * b);
    return v;
}

std::uint64_t get_u64(const std::string& buf, std::size_t at) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[at + b])) << (8 * b);
    return v;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

DenseTensor read_dtf1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading", 0);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path + "'", buf.size());

    if (buf.size() < 4 || buf.compare(0, 4, "DTF1") != 0) {
        throw IoError("'" + path + "': bad magic, expected DTF1", 0);
    }
    if (buf.size() < 8) throw IoError("'" + path + "': truncated before order field", 4);
    const std::uint32_t order = get_u32(buf, 4);
    if (order == 0) throw IoError("'" + path + "': order must be at least 1", 4);

    std::vector<std::size_t> dims(order);
    std::uint64_t total = 1;
    for (std::uint32_t k = 0; k < order; ++k) {
        const std::size_t at = 8 + 8 * static_cast<std::size_t>(k);
        if (buf.size() < at + 8) throw IoError("'" + path + "': truncated in extent list", at);
        const std::uint64_t extent = get_u64(buf, at);
        if (extent == 0) throw IoError("'" + path + "': extent " + std::to_string(k + 1) + " is zero", at);
        if (total > std::numeric_limits<std::uint64_t>::max() / extent) {
            throw IoError("'" + path + "': extent product overflows", at);
        }
        total *= extent;
        dims[k] = static_cast<std::size_t>(extent);
    }

    const std::size_t payload_at = 8 + 8 * static_cast<std::size_t>(order);
    if (total > (std::numeric_limits<std::size_t>::max() - payload_at) / 8) {
        throw IoError("'" + path + "': payload size overflows", payload_at);
    }
    const std::size_t expected = payload_at + 8 * static_cast<std::size_t>(total);
    if (buf.size() < expected) throw IoError("'" + path + "': truncated payload", buf.size());
    if (buf.size() > expected) throw IoError("'" + path + "': trailing bytes after payload", expected);

    std::vector<double> values(static_cast<std::size_t>(total));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t at = payload_at + 8 * i;
        values[i] = std::bit_cast<double>(get_u64(buf, at));
        if (!std::isfinite(values[i])) {
            throw IoError("'" + path + "': non-finite value at entry " + std::to_string(i), at);
        }
    }
    return DenseTensor(std::move(dims), std::move(values));
}

void write_dtf1(const DenseTensor& t, const std::string& path) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i])) {
            throw IoError("refusing to write non-finite value at entry " + std::to_string(i) +
                              " to '" + path + "'",
                          0);
        }
    }
    std::string buf;
    buf.reserve(8 + 8 * t.order() + 8 * t.size());
    buf.append("DTF1");
    put_u32(buf, static_cast<std::uint32_t>(t.order()));
    for (std::size_t d : t.dims()) put_u64(buf, static_cast<std::uint64_t>(d));
    for (std::size_t i = 0; i < t.size(); ++i) put_u64(buf, std::bit_cast<std::uint64_t>(t[i]));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing", 0);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) throw IoError("write failure on '" + path + "'", 0);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string render_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        if (j) out.push_back(',');
        out += table.columns[j];
    }
    out.push_back('\n');
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != table.columns.size()) {
            throw std::invalid_argument("csv row " + std::to_string(i) + " has " +
                                        std::to_string(row.size()) + " cells, schema has " +
                                        std::to_string(table.columns.size()));
        }
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out.push_back(',');
            out += row[j];
        }
        out.push_back('\n');
    }
    return out;
}

void write_csv(const CsvTable& table, const std::string& path) {
    const std::string text = render_csv(table);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing", 0);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("write failure on '" + path + "'", 0);
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        " is not of the form key = value: '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + " has an empty key");
        }
        cfg.entries_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'", 0);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_string(text);
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string KeyValueConfig::get_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw std::invalid_argument("config key '" + key + "' is missing");
    return it->second;
}

long long KeyValueConfig::get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(raw, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "' is not an integer: '" + raw + "'");
    }
    if (used != raw.size()) {
        throw std::invalid_argument("config key '" + key + "' is not an integer: '" + raw + "'");
    }
    return v;
}

double KeyValueConfig::get_double(const std::string& key) const {
    const std::string raw = get_string(key);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(raw, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "' is not a number: '" + raw + "'");
    }
    if (used != raw.size()) {
        throw std::invalid_argument("config key '" + key + "' is not a number: '" + raw + "'");
    }
    return v;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) const {
    const std::string raw = get_string(key);
    if (!raw.empty() && raw.back() == ',') {
        throw std::invalid_argument("config key '" + key + "' has an empty list element");
    }
    std::vector<double> out;
    std::istringstream in(raw);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string cell = trim(item);
        if (cell.empty()) {
            throw std::invalid_argument("config key '" + key + "' has an empty list element");
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "' has a non-numeric element: '" +
                                        cell + "'");
        }
        if (used != cell.size()) {
            throw std::invalid_argument("config key '" + key + "' has a non-numeric element: '" +
                                        cell + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("config key '" + key + "' is an empty list");
    return out;
}

std::vector<std::size_t> KeyValueConfig::get_size_list(const std::string& key) const {
    std::vector<std::size_t> out;
    for (double v : get_double_list(key)) {
        if (v < 1 || v != std::floor(v)) {
            throw std::invalid_argument("config key '" + key + "' needs positive integers");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace lvt::io
