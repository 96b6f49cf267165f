#include "tailstab/report.hpp"

#include "tailstab/csv.hpp"
#include "tailstab/errors.hpp"

#include <cmath>
#include <fstream>

namespace tailstab {

int RunReport::exit_code() const {
    for (const auto& c : checks) {
        if (c.status == "FAIL") return 2;
    }
    return 0;
}

std::string report_to_string(const RunReport& report) {
    nlohmann::json j = report;
    return j.dump(2) + "\n";
}

RunReport report_from_string(const std::string& text) {
    try {
        return nlohmann::json::parse(text).get<RunReport>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, std::string("malformed report: ") + e.what());
    }
}

void write_tables(const RunReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "plotdata", ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + (dir / "plotdata").string() + ": " + ec.message());

    csv::Table theta{{"lag", "abs_coeff", "theta_hat", "upper_conf", "n_exceed_at_y"}, {}};
    csv::Table loglog{{"lag", "log_abs_coeff", "log_theta_hat"}, {}};
    for (const auto& r : report.theta) {
        theta.rows.push_back({csv::format(r.lag), csv::format(r.abs_coeff), csv::format(r.theta_hat),
                              csv::format(r.upper_conf), csv::format(r.n_exceed_at_y)});
        if (r.abs_coeff > 0.0 && r.theta_hat > 0.0) {
            loglog.rows.push_back(
                {csv::format(r.lag), csv::format(std::log(r.abs_coeff)), csv::format(std::log(r.theta_hat))});
        }
    }
    csv::write(dir / "theta.csv", theta);
    csv::write(dir / "plotdata" / "decay_loglog.csv", loglog);

    csv::Table tau{{"k", "tau_hat", "ci_lo", "ci_hi"}, {}};
    if (report.tail_stats) {
        for (const auto& t : report.tail_stats->tau) {
            tau.rows.push_back({csv::format(t.k), csv::format(t.tau), csv::format(t.ci_lo), csv::format(t.ci_hi)});
        }
    }
    csv::write(dir / "tailstats.csv", tau);
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
    write_tables(report, dir);
    const auto path = dir / "report.json";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    f << report_to_string(report);
    if (!f) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace tailstab
