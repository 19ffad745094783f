#include <catch_amalgamated.hpp>

#include <cmath>

#include "pbrdr/csv.hpp"
#include "pbrdr/error.hpp"
#include "support.hpp"

using namespace pbrdr;

namespace {

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

std::string small_csv(const std::string& extra_row = "") {
    std::string s = "y,a,x1,x2\n";
    for (int i = 0; i < 12; ++i) {
        s += std::to_string(i) + ".5," + std::to_string(i % 2) + "," + std::to_string(i * 0.25) +
             "," + std::to_string(-i) + "\n";
    }
    return s + extra_row;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, -1e-300, 1.0 / 3.0, 6.02214076e23, 210.0}) {
        CHECK(*parse_number(format_double(v), 1, "c") == v);
    }
    CHECK(format_double(std::nan("")) == "NA");
    CHECK_FALSE(parse_number("NA", 1, "c").has_value());
    CHECK_FALSE(parse_number("", 1, "c").has_value());
    CHECK(error_text([] { parse_number("1.2.3", 7, "x9"); }).find("line 7") != std::string::npos);
    CHECK(error_text([] { parse_number("inf", 7, "x9"); }).find("x9") != std::string::npos);
}

TEST_CASE("CSV records") {
    const CsvTable t = parse_csv("a,\"b,c\",d\r\n1,\"say \"\"hi\"\"\",3\r\n\r\n4,5,6\r\n");
    REQUIRE(t.header == std::vector<std::string>{"a", "b,c", "d"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "say \"hi\"");
    CHECK(t.line_numbers[1] == 4);
    CHECK(error_text([] { parse_csv("a,b\n1,2,3\n"); }).find("line 2") != std::string::npos);
    CHECK_THROWS_AS(parse_csv(""), Error);
    CHECK_THROWS_AS(parse_csv("a\n\"open\n"), Error);
}

TEST_CASE("dataset loading") {
    CsvSchema schema;
    schema.outcome_col = "y";
    schema.treatment_col = "a";

    const LoadedData all = dataset_from_csv(parse_csv(small_csv()), schema);
    CHECK(all.data.n() == 12);
    CHECK(all.covariate_names == std::vector<std::string>{"x1", "x2"});

    const LoadedData dropped = dataset_from_csv(parse_csv(small_csv("3,1,NA,2\n")), schema);
    CHECK(dropped.data.n() == 12);
    CHECK(dropped.dropped_rows == 1);

    CsvSchema strict = schema;
    strict.na_policy = NaPolicy::Error;
    CHECK(error_text([&] { dataset_from_csv(parse_csv(small_csv("3,1,NA,2\n")), strict); })
              .find("line 14") != std::string::npos);

    const std::string bad = error_text([&] { dataset_from_csv(parse_csv(small_csv("3,2,1,2\n")), schema); });
    CHECK(bad.find("'a'") != std::string::npos);
    CHECK(bad.find("line 14") != std::string::npos);

    CsvSchema subset = schema;
    subset.covariate_cols = {"x2"};
    CHECK(dataset_from_csv(parse_csv(small_csv()), subset).data.p() == 1);
    CsvSchema missing = schema;
    missing.covariate_cols = {"x7"};
    CHECK_THROWS_AS(dataset_from_csv(parse_csv(small_csv()), missing), Error);
    CsvSchema same = schema;
    same.treatment_col = "y";
    CHECK_THROWS_AS(dataset_from_csv(parse_csv(small_csv()), same), Error);

    CHECK(error_text([&] { dataset_from_csv(parse_csv("y,a\n1,0\n2,1\n"), schema); })
              .find("at least 10") != std::string::npos);
}

TEST_CASE("datasets survive a CSV round trip exactly") {
    const Dataset d = pbrdr::testing::random_dataset(40, 5, 3);
    CsvSchema schema;
    schema.outcome_col = "y";
    schema.treatment_col = "a";
    const Dataset back = dataset_from_csv(parse_csv(dataset_to_csv(d)), schema).data;
    CHECK(back.y == d.y);
    CHECK(back.a == d.a);
    CHECK(back.x == d.x);
}

TEST_CASE("file helpers report IO errors") {
    const auto dir = pbrdr::testing::scratch_dir("io");
    write_text_file(dir / "t.txt", "abc\n");
    CHECK(read_text_file(dir / "t.txt") == "abc\n");
    try {
        read_text_file(dir / "missing.txt");
        FAIL("expected IoError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::IoError);
    }
    CHECK_THROWS_AS(write_text_file(dir / "no" / "such" / "dir.txt", "x"), Error);
}
