#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvt/errors.hpp"
#include "lvt/io.hpp"
#include "lvt/rng.hpp"
#include "lvt/tensor.hpp"

using lvt::DenseTensor;
using lvt::IoError;
using lvt::SplitMix64;
namespace io = lvt::io;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("lvt_io_test_") + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct FileGuard {
    std::string path;
    ~FileGuard() { std::remove(path.c_str()); }
};

// Minimal parser for our own comma-separated output; the writer never quotes.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.empty() || line.back() == ',') cells.push_back("");
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("tensor files roundtrip bit-exactly") {
    const std::string path = temp_path("roundtrip.dtf1");
    FileGuard guard{path};
    DenseTensor t({3, 4, 5});
    SplitMix64 rng(77);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_gaussian() * 1e3;
    t[0] = -0.0;
    t[1] = 1e-308;
    io::write_dtf1(t, path);
    const DenseTensor back = io::read_dtf1(path);
    REQUIRE(back.dims() == t.dims());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double got = back[i], want = t[i];
        CHECK(std::memcmp(&got, &want, sizeof(double)) == 0);
    }
    io::write_dtf1(back, path + ".again");
    FileGuard guard2{path + ".again"};
    CHECK(slurp(path) == slurp(path + ".again"));
}

TEST_CASE("reader rejects a wrong magic string at offset zero") {
    const std::string path = temp_path("magic.dtf1");
    FileGuard guard{path};
    DenseTensor t({2, 2});
    io::write_dtf1(t, path);
    std::string bytes = slurp(path);
    bytes[3] = '0';
    spit(path, bytes);
    try {
        io::read_dtf1(path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.byte_offset() == 0);
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }
}

TEST_CASE("reader rejects zero extents and reports where") {
    const std::string path = temp_path("extent.dtf1");
    FileGuard guard{path};
    DenseTensor t({2, 3});
    io::write_dtf1(t, path);
    std::string bytes = slurp(path);
    for (int b = 0; b < 8; ++b) bytes[16 + b] = '\0';
    spit(path, bytes);
    try {
        io::read_dtf1(path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.byte_offset() == 16);
    }
}

TEST_CASE("reader rejects truncated payloads") {
    const std::string path = temp_path("trunc.dtf1");
    FileGuard guard{path};
    DenseTensor t({2, 2, 2});
    io::write_dtf1(t, path);
    std::string bytes = slurp(path);
    bytes.resize(bytes.size() - 5);
    spit(path, bytes);
    CHECK_THROWS_AS(io::read_dtf1(path), IoError);
}

TEST_CASE("reader rejects trailing garbage") {
    const std::string path = temp_path("trail.dtf1");
    FileGuard guard{path};
    DenseTensor t({2, 2});
    io::write_dtf1(t, path);
    std::string bytes = slurp(path) + "xx";
    spit(path, bytes);
    CHECK_THROWS_AS(io::read_dtf1(path), IoError);
}

TEST_CASE("non-finite values are refused on both sides") {
    const std::string path = temp_path("nan.dtf1");
    FileGuard guard{path};
    DenseTensor t({2, 2});
    t[3] = std::nan("");
    CHECK_THROWS_AS(io::write_dtf1(t, path), IoError);

    DenseTensor clean({2, 2});
    io::write_dtf1(clean, path);
    std::string bytes = slurp(path);
    // Patch the final value with the bit pattern of +inf.
    const std::uint64_t inf_bits = 0x7FF0000000000000ull;
    for (int b = 0; b < 8; ++b)
        bytes[bytes.size() - 8 + b] = static_cast<char>((inf_bits >> (8 * b)) & 0xFF);
    spit(path, bytes);
    CHECK_THROWS_AS(io::read_dtf1(path), IoError);
}

TEST_CASE("missing file raises an I/O error") {
    CHECK_THROWS_AS(io::read_dtf1("definitely_not_here.dtf1"), IoError);
}

TEST_CASE("csv writer emits header plus rows with trailing newline") {
    const std::string path = temp_path("table.csv");
    FileGuard guard{path};
    io::CsvTable table;
    table.columns = {"model", "d", "value"};
    table.rows.push_back({"model1", "20", io::format_double(0.5)});
    table.rows.push_back({"model2", "40", io::format_double(1.0 / 3.0)});
    io::write_csv(table, path);
    const std::string text = slurp(path);
    CHECK(text.back() == '\n');
    const auto rows = parse_csv(text);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"model", "d", "value"});
    CHECK(rows[1][0] == "model1");
    CHECK(std::stod(rows[2][2]) == 1.0 / 3.0);
}

TEST_CASE("csv writer with no rows produces a header-only file") {
    const std::string path = temp_path("empty.csv");
    FileGuard guard{path};
    io::CsvTable table;
    table.columns = {"k", "wcss"};
    io::write_csv(table, path);
    CHECK(slurp(path) == "k,wcss\n");
}

TEST_CASE("csv rows must match the schema width") {
    io::CsvTable table;
    table.columns = {"a", "b"};
    table.rows.push_back({"1"});
    CHECK_THROWS_AS(io::render_csv(table), std::invalid_argument);
}

TEST_CASE("doubles rendered for csv parse back bit-identically") {
    SplitMix64 rng(55);
    for (int i = 0; i < 200; ++i) {
        const double v = (rng.next_double() - 0.5) * std::pow(10.0, (i % 41) - 20);
        const double back = std::stod(io::format_double(v));
        CHECK(std::memcmp(&back, &v, sizeof(double)) == 0);
    }
    CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("config text parses keys, comments, and lists") {
    const io::KeyValueConfig cfg = io::KeyValueConfig::parse_string(
        "# experiment setup\n"
        "model = model1\n"
        "d = 20,40,60   # the dimension grid\n"
        "s = 2\n"
        "gamma = 0.5\n"
        "\n"
        "seed = 7\n");
    CHECK(cfg.get_string("model") == "model1");
    CHECK(cfg.get_size_list("d") == std::vector<std::size_t>{20, 40, 60});
    CHECK(cfg.get_int("s") == 2);
    CHECK(cfg.get_double("gamma") == 0.5);
    CHECK(cfg.get_int("seed") == 7);
    CHECK(cfg.has("gamma"));
    CHECK(!cfg.has("missing"));
}

TEST_CASE("config rejects malformed lines and bad lookups") {
    CHECK_THROWS_AS(io::KeyValueConfig::parse_string("just a line\n"), std::invalid_argument);
    CHECK_THROWS_AS(io::KeyValueConfig::parse_string("= value\n"), std::invalid_argument);
    const io::KeyValueConfig cfg = io::KeyValueConfig::parse_string("x = abc\nd = 1,2,\n");
    CHECK_THROWS_AS(cfg.get_string("missing"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.get_int("x"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.get_double("x"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.get_double_list("d"), std::invalid_argument);
    CHECK_THROWS_AS(io::KeyValueConfig::parse_file("no_such_config.cfg"), IoError);
}

TEST_CASE("duplicate config keys keep the last value") {
    const io::KeyValueConfig cfg = io::KeyValueConfig::parse_string("a = 1\na = 2\n");
    CHECK(cfg.get_int("a") == 2);
}
