#pragma once

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nlohmann {
template <class T>
struct adl_serializer<std::optional<T>> {
    static void to_json(json& j, const std::optional<T>& v) {
        if (v) {
            j = *v;
        } else {
            j = nullptr;
        }
    }
    static void from_json(const json& j, std::optional<T>& v) {
        if (j.is_null()) {
            v.reset();
        } else {
            v = j.get<T>();
        }
    }
};
}  // namespace nlohmann

namespace tailstab {

inline constexpr int kReportSchemaVersion = 1;

struct ThetaRow {
    std::size_t lag = 0;
    double abs_coeff = 0.0;
    double theta_hat = 0.0;
    double se = 0.0;
    double upper_conf = 0.0;
    double z_argmax = 0.0;
    std::size_t n_exceed_at_y = 0;
    bool exact = false;  // structural zero: x == x* in every replication
    bool operator==(const ThetaRow&) const = default;
};

struct DecayFitRow {
    double c_hat = 0.0;
    double eta_hat = 0.0;
    double r_squared = 0.0;
    std::size_t lag_lo = 0;
    std::size_t lag_hi = 0;
    std::vector<std::size_t> used_lags;
    std::vector<std::size_t> excluded_lags;
    double target = 1.0;
    double tolerance = 0.2;
    bool pass = false;
    bool operator==(const DecayFitRow&) const = default;
};

struct ThetaSumRow {
    double q = 1.0;
    double value = 0.0;
    std::size_t max_lag = 0;
    std::optional<double> remainder_bound;
    std::optional<double> ceiling;  // m + 1 for finite filters
    bool operator==(const ThetaSumRow&) const = default;
};

struct SufficiencyRow {
    std::string innovation_class;
    double nu = 0.0;
    double q = 0.0;
    double epsilon = 0.0;
    double exponent = 0.0;
    double partial_sum = 0.0;
    std::optional<double> remainder_bound;  // null when the tail sum diverges
    bool certified = false;
    bool operator==(const SufficiencyRow&) const = default;
};

struct TauRow {
    std::size_t k = 0;
    double tau = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::optional<double> oracle;
    bool operator==(const TauRow&) const = default;
};

struct TailStatsSection {
    std::string source;  // "simulation" or the data path
    std::size_t n = 0;
    double tail_quantile = 0.0;
    double threshold = 0.0;
    std::size_t n_exceed = 0;
    std::size_t block_length = 0;
    double critical_value = 0.0;
    std::vector<TauRow> tau;
    double t_hat = 0.0;
    std::optional<double> t_reference;
    std::optional<double> clt_stat;
    std::vector<double> rho_hat;
    double long_run_variance = 1.0;
    double qr_alpha = 0.0;
    double beta_hat = 0.0;
    std::optional<double> beta_true;
    std::optional<double> psi_n;
    std::optional<double> psi_error;
    bool operator==(const TailStatsSection&) const = default;
};

struct OracleRow {
    std::string name;
    std::optional<std::size_t> lag;
    double estimate = 0.0;
    double exact = 0.0;
    double se = 0.0;  // MC standard error of the estimate; 0 when exact
    double delta = 0.0;
    bool operator==(const OracleRow&) const = default;
};

struct CheckRow {
    std::string name;
    std::string status;  // PASS, FAIL or SKIPPED
    std::string detail;
    bool operator==(const CheckRow&) const = default;
};

struct RunReport {
    int schema_version = kReportSchemaVersion;
    std::string version;
    std::string mode;
    nlohmann::json config;
    std::optional<double> y;
    std::string y_source;
    std::vector<ThetaRow> theta;
    std::optional<DecayFitRow> decay_fit;
    std::vector<ThetaSumRow> theta_sum;
    std::optional<SufficiencyRow> sufficiency;
    std::optional<TailStatsSection> tail_stats;
    std::vector<OracleRow> oracles;
    std::vector<CheckRow> checks;
    double wall_clock_seconds = 0.0;
    bool operator==(const RunReport&) const = default;

    /// 0 when no check failed, 2 otherwise.
    int exit_code() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ThetaRow, lag, abs_coeff, theta_hat, se, upper_conf, z_argmax, n_exceed_at_y, exact)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DecayFitRow, c_hat, eta_hat, r_squared, lag_lo, lag_hi, used_lags, excluded_lags,
                                   target, tolerance, pass)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ThetaSumRow, q, value, max_lag, remainder_bound, ceiling)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SufficiencyRow, innovation_class, nu, q, epsilon, exponent, partial_sum,
                                   remainder_bound, certified)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TauRow, k, tau, se, ci_lo, ci_hi, oracle)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TailStatsSection, source, n, tail_quantile, threshold, n_exceed, block_length,
                                   critical_value, tau, t_hat, t_reference, clt_stat, rho_hat, long_run_variance,
                                   qr_alpha, beta_hat, beta_true, psi_n, psi_error)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(OracleRow, name, lag, estimate, exact, se, delta)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CheckRow, name, status, detail)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RunReport, schema_version, version, mode, config, y, y_source, theta, decay_fit,
                                   theta_sum, sufficiency, tail_stats, oracles, checks, wall_clock_seconds)

std::string report_to_string(const RunReport& report);
RunReport report_from_string(const std::string& text);

/// theta.csv, tailstats.csv, plotdata/decay_loglog.csv.
void write_tables(const RunReport& report, const std::filesystem::path& dir);
/// report.json plus write_tables.
void write_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace tailstab
