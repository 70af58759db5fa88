#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "roml/csv.hpp"

using namespace roml;

TEST_CASE("round trip with quoting") {
    CsvTable t;
    t.header = {"name", "value", "note"};
    t.rows = {{"a", "1", "plain"}, {"b,c", "2.5", "say \"hi\""}, {"multi", "-3", "line\nbreak"}, {"", "", ""}};
    const std::string text = to_csv(t);
    CHECK(text.substr(0, 16) == "name,value,note\n");
    CHECK(text.find("\"b,c\"") != std::string::npos);
    CHECK(text.find("\"say \"\"hi\"\"\"") != std::string::npos);
    CHECK(parse_csv(text) == t);
    CHECK(t.number(1, "value") == 2.5);
    CHECK(t.column("note") == 2);
    CHECK_FALSE(t.has_column("missing"));
    CHECK_THROWS_WITH_AS(t.column("missing"), "missing column 'missing'", CsvError);
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(parse_csv(""), CsvError);
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), CsvError);
    CHECK_THROWS_AS(parse_csv("a\n\"open\n"), CsvError);
    CHECK_THROWS_AS(parse_csv("a\nx\"y\n"), CsvError);
    CHECK(parse_csv("a,b\r\n1,2\r\n").rows.at(0).at(1) == "2");
    CHECK(parse_csv("a,b\n1,2").rows.size() == 1);
    CsvTable bad;
    bad.header = {"a"};
    bad.rows = {{"1", "2"}};
    CHECK_THROWS_AS(to_csv(bad), CsvError);
}

TEST_CASE("numbers format to the shortest exact text") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) CHECK(parse_number(format_number(v)) == v);
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(std::isnan(parse_number("nan")));
    CHECK_THROWS_AS(parse_number("1.5x"), CsvError);
    CHECK_THROWS_AS(parse_number(""), CsvError);
}

TEST_CASE("atomic writes create parents and replace content") {
    const auto dir = std::filesystem::temp_directory_path() / "roml_csv_test";
    std::filesystem::remove_all(dir);
    const auto path = dir / "sub" / "f.txt";
    write_file_atomic(path, "one");
    write_file_atomic(path, "two");
    CHECK(read_file(path) == "two");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(path.parent_path())) ++files;
    CHECK(files == 1);
    CHECK_THROWS(read_file(dir / "absent"));
    std::filesystem::remove_all(dir);
}
