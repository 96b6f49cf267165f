#include "doctest.h"

#include "tailstab/csv.hpp"
#include "tailstab/errors.hpp"
#include "tailstab/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tailstab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("tailstab_test_" + name);
    fs::remove_all(p);
    return p;
}

RunReport sample_report() {
    RunReport r;
    r.version = "0.1.0";
    r.mode = "full";
    r.config = {{"seed", 3}, {"q", 2.0}};
    r.y = 12.5;
    r.y_source = "exact";
    r.theta = {ThetaRow{0, 1.0, 0.4, 0.01, 0.45, 20.0, 1000, false}, ThetaRow{1, 0.0, 0.0, 0.0, 0.0, 12.5, 990, true}};
    r.decay_fit = DecayFitRow{0.3, 0.97, 0.99, 1, 8, {1, 2, 3, 4}, {5}, 1.0, 0.2, true};
    r.theta_sum = {ThetaSumRow{2.0, 1.1, 1, 0.01, std::nullopt}};
    r.sufficiency = SufficiencyRow{"general", 3.0, 2.0, 0.01, 0.5, 1.9, std::nullopt, false};
    TailStatsSection ts;
    ts.source = "simulation";
    ts.tau = {TauRow{0, 1.0, 0.0, 1.0, 1.0, 1.0}, TauRow{1, 0.01, 0.02, -0.03, 0.05, std::nullopt}};
    ts.rho_hat = {0.1, 0.05};
    ts.psi_n = 3.3;
    r.tail_stats = ts;
    r.oracles = {OracleRow{"x", 2, 0.1, 0.11, 0.01, -0.01}, OracleRow{"y", std::nullopt, 1.0 / 3.0, 0.3, 0.0, 0.1 / 3.0}};
    r.checks = {CheckRow{"a", "PASS", ""}, CheckRow{"b", "SKIPPED", "why"}};
    r.wall_clock_seconds = 0.125;
    return r;
}

}  // namespace

TEST_CASE("csv number formatting is shortest round-trip with '.'") {
    CHECK(csv::format(0.1) == "0.1");
    CHECK(csv::format(1.0) == "1");
    CHECK(csv::format(1e-300) == "1e-300");
    CHECK(csv::format(std::size_t{42}) == "42");
    const double v = 1.0 / 3.0;
    CHECK(std::stod(csv::format(v)) == v);
}

TEST_CASE("csv tables use LF and comma") {
    csv::Table t{{"a", "b"}, {{"1", "2"}, {"3", "4"}}};
    CHECK(csv::to_string(t) == "a,b\n1,2\n3,4\n");
    const auto dir = scratch("csv");
    fs::create_directories(dir);
    csv::write(dir / "t.csv", t);
    CHECK(slurp(dir / "t.csv") == "a,b\n1,2\n3,4\n");
    CHECK_THROWS_AS(csv::write(dir / "missing" / "deeper" / "t.csv", t), Error);
}

TEST_CASE("read_column skips a header") {
    const auto dir = scratch("col");
    fs::create_directories(dir);
    std::ofstream(dir / "x.csv") << "value\n1.5\n-2\n3e2\n";
    CHECK(csv::read_column(dir / "x.csv") == std::vector<double>{1.5, -2.0, 300.0});
    std::ofstream(dir / "y.csv") << "1\n2\n";
    CHECK(csv::read_column(dir / "y.csv") == std::vector<double>{1.0, 2.0});
    std::ofstream(dir / "bad.csv") << "1\nabc\n";
    CHECK_THROWS_AS(csv::read_column(dir / "bad.csv"), Error);
    CHECK_THROWS_AS(csv::read_column(dir / "nope.csv"), Error);
}

TEST_CASE("report round-trips through JSON") {
    const auto r = sample_report();
    const auto text = report_to_string(r);
    CHECK(report_from_string(text) == r);
    CHECK(report_to_string(report_from_string(text)) == text);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["schema_version"] == 1);
    for (const char* key : {"version", "mode", "config", "y", "y_source", "theta", "decay_fit", "theta_sum",
                            "sufficiency", "tail_stats", "oracles", "checks", "wall_clock_seconds"}) {
        CHECK(j.contains(key));
    }
}

TEST_CASE("exit code reflects failed checks") {
    auto r = sample_report();
    CHECK(r.exit_code() == 0);
    r.checks.push_back(CheckRow{"c", "FAIL", ""});
    CHECK(r.exit_code() == 2);
}

TEST_CASE("tables are written with the documented headers") {
    const auto dir = scratch("tables");
    write_report(sample_report(), dir);
    const auto theta = slurp(dir / "theta.csv");
    CHECK(theta.rfind("lag,abs_coeff,theta_hat,upper_conf,n_exceed_at_y\n", 0) == 0);
    CHECK(theta.find("0,1,0.4,0.45,1000\n") != std::string::npos);
    CHECK(slurp(dir / "tailstats.csv").rfind("k,tau_hat,ci_lo,ci_hi\n", 0) == 0);
    CHECK(fs::exists(dir / "plotdata" / "decay_loglog.csv"));
    CHECK(fs::exists(dir / "report.json"));
    CHECK(theta.find('\r') == std::string::npos);
}

TEST_CASE("empty result set gives header-only files") {
    const auto dir = scratch("empty");
    RunReport r;
    r.mode = "tas";
    write_report(r, dir);
    CHECK(slurp(dir / "theta.csv") == "lag,abs_coeff,theta_hat,upper_conf,n_exceed_at_y\n");
    CHECK(slurp(dir / "tailstats.csv") == "k,tau_hat,ci_lo,ci_hi\n");
    CHECK(slurp(dir / "plotdata" / "decay_loglog.csv").find('\n') == slurp(dir / "plotdata" / "decay_loglog.csv").size() - 1);
}
