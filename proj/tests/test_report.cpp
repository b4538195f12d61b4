#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "harmonic/report.hpp"

using namespace harmonic;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

nlohmann::json base_config(const std::string& group) {
    return nlohmann::json::parse(R"({"schema": "harmonic.config/1", "group": ")" + group + R"(",
        "grid": {"half_extent": [8.0], "counts": [256]}, "functions": {"kind": "gaussian"}})");
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

bool any_diagnostic(const VerificationReport& rep, std::string_view tag) {
    for (const auto& r : rep.records)
        for (const auto& d : r.diagnostics)
            if (d.starts_with(tag)) return true;
    return false;
}

}  // namespace

TEST_CASE("Gaussian config gives one passing record", "[report]") {
    auto j = base_config("rn");
    j["grid"]["counts"] = {1024};
    const auto rep = run_suite(parse_config(j));
    REQUIRE(rep.records.size() == 1);
    CHECK_THAT(rep.records[0].ratio, WithinAbs(1.0, 1e-3));
    CHECK(rep.records[0].pass);
    CHECK(rep.all_pass());
}

TEST_CASE("config errors are usage errors", "[report][config]") {
    auto j = base_config("rn");
    j["lattice"] = {{"a", {0.5}}};
    CHECK_THROWS_WITH(parse_config(j), ContainsSubstring("a must be >= 1"));
    j = base_config("rn");
    j["lattice"] = {{"b", {1.0, 0.9}}};
    CHECK_THROWS_AS(parse_config(j), UsageError);
    j = base_config("rn");
    j["grid"]["counts"] = {1000};
    CHECK_THROWS_WITH(parse_config(j), ContainsSubstring("powers of two"));
    j = base_config("rn");
    j["schema"] = "harmonic.config/0";
    CHECK_THROWS_AS(parse_config(j), UsageError);
    j = base_config("lie");
    CHECK_THROWS_AS(parse_config(j), UsageError);
    j = base_config("product");
    j["product"] = {{"k", "/nonexistent/group.json"}};
    CHECK_THROWS_WITH(parse_config(j), ContainsSubstring("not found"));
    j = base_config("nilpotent");
    j["grid"] = {{"half_extent", {3.0}}, {"counts", {32, 32, 32}}};
    j["nilpotent"] = {{"descriptor", "threadlike4"}};
    CHECK_THROWS_WITH(parse_config(j), ContainsSubstring("dimension"));
    j = base_config("motion");
    CHECK_THROWS_WITH(parse_config(j), ContainsSubstring("2-D"));
    j = base_config("rn");
    j.erase("grid");
    CHECK_THROWS_AS(parse_config(j), UsageError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), UsageError);
}

TEST_CASE("2 x 2 lattice over 5 functions gives 20 sorted rows", "[report]") {
    auto j = base_config("rn");
    j["grid"]["counts"] = {512};
    j["functions"] = {{"kind", "corpus"}, {"seed", 4}, {"count", 5}};
    j["lattice"] = {{"a", {2, 1}}, {"b", {1, 2}}};
    const auto rep = run_suite(parse_config(j));
    CHECK(rep.records.size() == 20);
    CHECK(line_count(cases_csv(rep)) == 21);
    CHECK(std::is_sorted(rep.records.begin(), rep.records.end(),
                         [](const CaseRecord& x, const CaseRecord& y) { return x.key() < y.key(); }));
    std::vector<std::string> keys;
    for (const auto& r : rep.records) keys.push_back(r.key());
    CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
    CHECK(rep.all_pass());
}

TEST_CASE("CSV is identical across runs and worker counts", "[report]") {
    auto j = base_config("product");
    j["functions"] = {{"kind", "corpus"}, {"seed", 11}, {"count", 4}};
    j["lattice"] = {{"a", {1, 2}}, {"b", {1, 2}}};
    j["product"] = {{"k", "S3"}};
    auto c = parse_config(j);
    const auto first = cases_csv(run_suite(c));
    c.workers = 3;
    CHECK(cases_csv(run_suite(c)) == first);
    c.seed = 12;
    CHECK(cases_csv(run_suite(c)) != first);

    auto a = report_json(run_suite(c)), b = report_json(run_suite(c));
    CHECK(a.contains("run_info"));
    a.erase("run_info");
    b.erase("run_info");
    CHECK(a == b);
}

TEST_CASE("CSV fields are quoted RFC style", "[report]") {
    VerificationReport rep;
    CaseRecord r;
    r.group = "rn";
    r.function_id = "odd,\"name\"";
    r.diagnostics = {"one", "two"};
    r.error = "line\nbreak";
    rep.records.push_back(r);
    const auto csv = cases_csv(rep);
    CHECK_THAT(csv, ContainsSubstring("\"odd,\"\"name\"\"\""));
    CHECK_THAT(csv, ContainsSubstring("\"line\nbreak\""));
    CHECK_THAT(csv, ContainsSubstring(",one; two,"));
}

TEST_CASE("per-case failures are records, not crashes", "[report]") {
    auto j = base_config("nilpotent");
    j["grid"] = {{"half_extent", {3.0}}, {"counts", {4, 4, 4}}};
    j["functions"] = {{"kind", "corpus"}, {"count", 2}};
    const auto rep = run_suite(parse_config(j));
    REQUIRE(rep.records.size() == 2);
    for (const auto& r : rep.records) {
        CHECK_FALSE(r.pass);
        CHECK_FALSE(r.error.empty());
        CHECK(std::isnan(r.ratio));
    }
    CHECK_FALSE(rep.all_pass());
}

TEST_CASE("each diagnostic appears verbatim in a case built to trigger it", "[report][diagnostics]") {
    SECTION("untrusted moment: Gaussian cut off by a small box") {
        auto j = base_config("rn");
        j["grid"] = {{"half_extent", {1.5}}, {"counts", {64}}};
        const auto rep = run_suite(parse_config(j));
        CHECK(any_diagnostic(rep, diag::untrusted_moment));
        CHECK_FALSE(rep.all_pass());
    }
    SECTION("lambda tail: dual disc far too small") {
        auto j = base_config("motion");
        j["grid"] = {{"half_extent", {4.0}}, {"counts", {4, 4}}};
        j["motion"] = {{"n_theta", 16}, {"truncation", 4}};
        const auto rep = run_suite(parse_config(j));
        CHECK(any_diagnostic(rep, diag::lambda_tail));
    }
    SECTION("lambda quadrature unstable: unreachable tolerance") {
        auto j = base_config("motion");
        j["grid"] = {{"half_extent", {4.0}}, {"counts", {64, 64}}};
        j["motion"] = {{"n_theta", 64}, {"truncation", 16}};
        j["functions"] = {{"kind", "corpus"}, {"count", 1}};
        j["tolerance"] = {{"lambda_quadrature", 1e-300}};
        const auto rep = run_suite(parse_config(j));
        CHECK(any_diagnostic(rep, diag::lambda_unstable));
    }
    SECTION("singular band: centred Gaussian on the Heisenberg group") {
        auto j = base_config("nilpotent");
        j["grid"] = {{"half_extent", {3.0}}, {"counts", {32, 32, 32}}};
        const auto rep = run_suite(parse_config(j));
        CHECK(any_diagnostic(rep, diag::singular_band));
        CHECK_FALSE(rep.all_pass());
    }
    SECTION("spectrum not decayed: coarse nilpotent grid") {
        auto j = base_config("nilpotent");
        j["grid"] = {{"half_extent", {3.0}}, {"counts", {8, 8, 8}}};
        const auto rep = run_suite(parse_config(j));
        CHECK(any_diagnostic(rep, diag::spectrum_not_decayed));
    }
}

TEST_CASE("refinement of the R^1 Gaussian stabilizes", "[report][refine]") {
    auto j = base_config("rn");
    j["grid"]["counts"] = {16};
    const auto rep = refine_study(parse_config(j), 4);
    REQUIRE(rep.series.size() == 1);
    const auto& v = rep.series[0].values;
    REQUIRE(v.size() == 4);
    for (std::size_t k = 1; k < v.size(); ++k) CHECK(std::abs(v[k] - 1.0) <= std::abs(v[k - 1] - 1.0) + 1e-15);
    CHECK(rep.all_pass());
    CHECK_THROWS_AS(refine_study(parse_config(j), 1), UsageError);
}

TEST_CASE("series assessment", "[report][refine]") {
    RefineSeries s;
    s.values = {0.5, 0.9, 0.99, 0.999};
    assess_series(s);
    CHECK(s.pass);
    s.values = {0.5, 0.9, 0.8};
    assess_series(s);
    CHECK_FALSE(s.monotone);
    s.values = {0.5, 0.6, 0.68};
    assess_series(s);
    CHECK_FALSE(s.contracting);
    s.values = {0.5, 0.9, 0.9 + 1e-14, 0.9 - 1e-14};
    assess_series(s);
    CHECK(s.pass);
}

TEST_CASE("cell cap refuses oversized runs before computing", "[report]") {
    auto j = base_config("rn");
    j["grid"]["counts"] = {1024};
    const auto c = parse_config(j);
    setenv(max_cells_env, "512", 1);
    CHECK_THROWS_WITH(run_suite(c), ContainsSubstring("cap"));
    CHECK_THROWS_AS(refine_study(c, 2), UsageError);
    setenv(max_cells_env, "abc", 1);
    CHECK_THROWS_AS(run_suite(c), UsageError);
    unsetenv(max_cells_env);
    CHECK_NOTHROW(run_suite(c));
}

TEST_CASE("report files are written", "[report]") {
    auto j = base_config("rn");
    j["lattice"] = {{"a", {1, 2}}, {"b", {1}}};
    const auto rep = run_suite(parse_config(j));
    const auto dir = std::filesystem::temp_directory_path() / "harmonic_report_test";
    std::filesystem::remove_all(dir);
    write_report(rep, dir);
    for (const char* f : {"report.json", "cases.csv", "ratio_vs_a.csv", "ratio_vs_b.csv"})
        CHECK(std::filesystem::exists(dir / f));
    std::ifstream in(dir / "report.json");
    const auto back = nlohmann::json::parse(in);
    CHECK(back.at("schema") == report_schema);
    CHECK(back.at("records").size() == 2);
    CHECK(back.at("summary").at("all_pass") == true);
    std::ifstream plot(dir / "ratio_vs_a.csv");
    std::stringstream ss;
    ss << plot.rdbuf();
    CHECK(line_count(ss.str()) == 3);
    std::filesystem::remove_all(dir);
}
