#include <doctest.h>

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "spr/config.hpp"
#include "spr/error.hpp"
#include "spr/io.hpp"

using namespace spr;

namespace {

StudyAData parse_a(const std::string& text) {
    std::istringstream in(text);
    return io::parse_study_a(in, "fixture");
}

StudyBData parse_b(const std::string& text) {
    std::istringstream in(text);
    return io::parse_study_b(in, "fixture");
}

std::string error_of(const std::string& text) {
    try {
        parse_a(text);
    } catch (const SchemaError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("minimal Study A fixture") {
    const auto a = parse_a("group,s,y\n0,1.0,2.0\n1,1.5,3.0\n0,2.0,2.5\n1,0.5,1e-3\n");
    CHECK(a.arms[0].surrogates.size() == 2);
    CHECK(a.arms[1].surrogates.size() == 2);
    CHECK(a.arms[1].outcomes[1] == 1e-3);
    CHECK(a.arms[0].surrogates == std::vector<double>{1.0, 2.0});
}

TEST_CASE("column order, comments, BOM and CRLF") {
    const auto a = parse_a("\xEF\xBB\xBF# exported\r\ny,group,s\r\n2.0,0,1.0\r\n3.0,1,1.5\r\n");
    CHECK(a.arms[0].outcomes == std::vector<double>{2.0});
    CHECK(a.arms[1].surrogates == std::vector<double>{1.5});
    const auto b = parse_b("s,group\n0.25,1\n-1,0\n");
    CHECK(b.surrogates[0] == std::vector<double>{-1.0});
    CHECK(b.surrogates[1] == std::vector<double>{0.25});
}

TEST_CASE("schema errors") {
    CHECK_THROWS_AS(parse_b("group,s,y\n0,1,2\n1,1,2\n"), SchemaError);
    const auto na = error_of("group,s,y\n0,1,2\n1,NA,2\n");
    CHECK(na.find("row 3") != std::string::npos);
    CHECK(na.find("column 's'") != std::string::npos);
    CHECK(error_of("group,s,y\n0,1,nan\n1,1,2\n").find("column 'y'") != std::string::npos);
    CHECK(error_of("group,s,y\n0,1,inf\n1,1,2\n") != "");
    CHECK(error_of("group,s,y\n0,1,\n1,1,2\n") != "");
    CHECK(error_of("group,s,y\n2,1,1\n1,1,2\n").find("group") != std::string::npos);
    CHECK(error_of("group,s\n0,1\n1,1\n").find("missing") != std::string::npos);
    CHECK(error_of("group,s,y,w\n0,1,1,1\n1,1,2,1\n").find("unexpected column 'w'") != std::string::npos);
    CHECK(error_of("group,s,y\n0,1,1,4\n1,1,2\n") != "");
    CHECK(error_of("") != "");
    CHECK_THROWS_AS(parse_a("group,s,y\n0,1,2\n0,2,3\n"), EmptyArm);
    CHECK_THROWS_AS(parse_b("group,s\n1,2\n"), EmptyArm);
    CHECK_THROWS_AS(io::load_study_a("/nonexistent/study_a.csv"), SchemaError);
}

TEST_CASE("number formatting round-trips") {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 2000; ++i) {
        const double x = nd(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
        const auto text = io::format_number(x);
        double back = 0.0;
        std::from_chars(text.data(), text.data() + text.size(), back);
        CHECK(back == x);
    }
    CHECK(io::format_number(0.0) == "0");
    CHECK(io::format_number(0.5) == "0.5");
}

TEST_CASE("sha256") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("csv tables carry the manifest digest") {
    io::CsvTable t("d1", {"a", "b"});
    t.row().cell(1).cell(0.25);
    t.row().cell(std::string("x,y")).cell(-2.0);
    CHECK(t.str() == "# manifest_sha256=d1\na,b\n1,0.25\n\"x,y\",-2\n");
}

TEST_CASE("config parsing") {
    auto parse = [](const std::string& text) {
        return parse_config(nlohmann::json::parse(text));
    };
    const auto c = parse(R"({"seed": 5, "class": "polynomial", "sigma_diag": [1, 0.5], "draws": 300,
                            "grid_x_min": 0.1, "grid_x_max": 2, "grid_y_min": 0.1, "grid_y_max": 2})");
    CHECK(c.master_seed() == Seed(5));
    CHECK(c.class_spec.family == ClassFamily::Polynomial);
    CHECK(c.estimate.draws == 300);
    REQUIRE(c.grid.has_value());
    CHECK(c.grid->x.max == 2);
    CHECK_THROWS_AS(parse(R"({"seed": 1, "sigma": 2})"), ConfigError);
    CHECK_THROWS_AS(parse(R"({"seed": -1})"), ConfigError);
    CHECK_THROWS_AS(parse(R"({"draws": "many"})"), ConfigError);
    CHECK_THROWS_AS(parse(R"({"grid_x_min": 1})"), ConfigError);
    CHECK_THROWS_AS(parse("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse("{}").master_seed(), ConfigError);
    CHECK_THROWS_AS(validate(parse(R"({"alpha": 1.5})")), ConfigError);
    CHECK_THROWS_AS(validate(parse(R"({"class": "gp", "theta": 0})")), ConfigError);
    const auto echoed = echo(parse(R"({"seed": 3, "workers": 8, "output_dir": "x"})"));
    CHECK_FALSE(echoed.contains("workers"));
    CHECK_FALSE(echoed.contains("output_dir"));
    CHECK(echoed.at("seed") == 3);
}
