#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "condsql/cli.hpp"

using namespace condsql;

namespace {

const std::string kData = CONDSQL_TEST_DATA;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto p = std::filesystem::temp_directory_path() / ("condsql_test_" + name);
    std::ofstream(p) << content;
    return p;
}

}  // namespace

TEST_CASE("exec") {
    const std::string tables = kData + "/cases/tables.jsonl";
    auto r = cli({"exec", "--tables", tables, "--query", R"(SELECT COUNT("Driver") FROM "1-ralf")"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "7\n");

    r = cli({"exec", "--tables", tables, "--query", R"(SELECT "Grid" FROM "1-ralf" WHERE "Driver" = 'Ralf Schumacher')"});
    CHECK(r.out == "[3]\n");

    r = cli({"exec", "--tables", tables, "--query", R"(SELECT SUM("Driver") FROM "1-ralf")"});
    CHECK(r.code == kExitDataError);
    CHECK(r.err.find("violation") != std::string::npos);

    r = cli({"exec", "--tables", kData + "/wikisql/tables.jsonl", "--predictions", kData + "/wikisql/dev.jsonl"});
    CHECK(r.code == kExitOk);
    CHECK(count_lines(r.out) == 100);
}

TEST_CASE("explain") {
    const std::vector<std::string> base{"explain", "--tables", kData + "/cases/tables.jsonl", "--question",
                                        "Name the casualties for the Kabul area?", "--table", "1-kabul", "--column",
                                        "Location", "--samples", "300"};
    const auto a = cli(base);
    CHECK(a.code == kExitOk);
    CHECK(count_lines(a.out) == 6);
    CHECK(a.out == cli(base).out);

    auto with_json = base;
    with_json.insert(with_json.end(), {"--format", "json"});
    const auto j = nlohmann::json::parse(cli(with_json).out);
    CHECK(j.at("weights").size() == 6);

    auto with_spans = base;
    with_spans.insert(with_spans.end(), {"--spans", "5-6,5-7"});
    const auto s = cli(with_spans);
    CHECK(s.code == kExitOk);
    CHECK(s.out.find("kabul area\t2\t") != std::string::npos);

    auto bad_column = base;
    bad_column[8] = "Nope";
    CHECK(cli(bad_column).code != kExitOk);
}

TEST_CASE("refine") {
    const std::string tables = kData + "/cases/tables.jsonl";
    const std::string scorer = "mock:" + kData + "/cases/mock_fixture.jsonl";
    const auto r = cli({"refine", "--tables", tables, "--data", kData + "/cases/candidates.jsonl", "--scorer", scorer});
    CHECK(r.code == kExitOk);
    REQUIRE(count_lines(r.out) == 5);
    const auto first = nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
    CHECK(first.at("id") == "ralf");
    CHECK(first.at("sql").at("conds")[0][2] == "ralf schumacher");

    const auto empty = temp_file("empty.jsonl", "");
    const auto e = cli({"refine", "--tables", tables, "--data", empty.string(), "--scorer", scorer});
    CHECK(e.code == kExitOk);
    CHECK(e.out.empty());
}

TEST_CASE("eval") {
    const std::string d = kData + "/metric/";
    const auto r = cli({"eval", "--tables", d + "tables.jsonl", "--data", d + "gold.jsonl", "--predictions",
                        d + "pred.jsonl"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("60.0\t80.0") != std::string::npos);

    const auto missing = cli({"eval", "--tables", d + "tables.jsonl", "--data", d + "nope.jsonl", "--predictions",
                              d + "pred.jsonl"});
    CHECK(missing.code == kExitUsage);
    CHECK_FALSE(missing.err.empty());
}

TEST_CASE("usage errors") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"exec", "--tables"}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);
}
