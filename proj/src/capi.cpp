#include "tailstab/tailstab.h"

#include "tailstab/errors.hpp"
#include "tailstab/experiment.hpp"
#include "tailstab/heavy_tails.hpp"
#include "tailstab/processes.hpp"
#include "tailstab/tailstats.hpp"
#include "tailstab/tas.hpp"
#include "tailstab/verify.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <string>

struct ts_law {
    tailstab::TailLaw law;
};
struct ts_process {
    tailstab::ProcessSpec spec;
};
struct ts_coupled {
    tailstab::CoupledDraws draws;
};
struct ts_theta {
    tailstab::ThetaEstimate est;
};

namespace {

thread_local std::string g_last_error;

ts_status status_of(tailstab::ErrorKind kind) {
    using tailstab::ErrorKind;
    switch (kind) {
        case ErrorKind::InvalidArgument: return TS_ERR_INVALID_ARGUMENT;
        case ErrorKind::InsufficientData: return TS_ERR_INSUFFICIENT_DATA;
        case ErrorKind::Unsupported: return TS_ERR_UNSUPPORTED;
        case ErrorKind::Io: return TS_ERR_IO;
        case ErrorKind::Config: return TS_ERR_CONFIG;
        case ErrorKind::Numerical: return TS_ERR_NUMERICAL;
    }
    return TS_ERR_INTERNAL;
}

template <class F>
ts_status guard(F&& f) {
    try {
        f();
        g_last_error.clear();
        return TS_OK;
    } catch (const tailstab::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const nlohmann::json::exception& e) {
        g_last_error = e.what();
        return TS_ERR_CONFIG;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return TS_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TS_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return TS_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (p == nullptr) tailstab::fail(tailstab::ErrorKind::InvalidArgument, std::string(what) + " is NULL");
}

}  // namespace

extern "C" {

const char* ts_version(void) { return tailstab::kVersion; }

const char* ts_last_error(void) { return g_last_error.c_str(); }

const char* ts_status_string(ts_status status) {
    switch (status) {
        case TS_OK: return "ok";
        case TS_ERR_INVALID_ARGUMENT: return "invalid argument";
        case TS_ERR_INSUFFICIENT_DATA: return "insufficient data";
        case TS_ERR_UNSUPPORTED: return "unsupported";
        case TS_ERR_IO: return "io error";
        case TS_ERR_CONFIG: return "config error";
        case TS_ERR_NUMERICAL: return "numerical error";
        case TS_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

ts_status ts_law_create(const char* family, double nu, double p, double scale, ts_law** out) {
    return guard([&] {
        need(family, "family");
        need(out, "out");
        *out = new ts_law{tailstab::make_law(tailstab::family_from_string(family), nu, p, scale)};
    });
}

void ts_law_destroy(ts_law* law) { delete law; }

ts_status ts_law_survival(const ts_law* law, double x, ts_side side, double* out) {
    return guard([&] {
        need(law, "law");
        need(out, "out");
        tailstab::Side s = tailstab::Side::Right;
        if (side == TS_SIDE_LEFT) s = tailstab::Side::Left;
        else if (side == TS_SIDE_ABS) s = tailstab::Side::Abs;
        else if (side != TS_SIDE_RIGHT) tailstab::fail(tailstab::ErrorKind::InvalidArgument, "unknown side");
        *out = tailstab::survival(law->law, x, s);
    });
}

ts_status ts_law_quantile(const ts_law* law, double u, double* out) {
    return guard([&] {
        need(law, "law");
        need(out, "out");
        *out = tailstab::quantile(law->law, u);
    });
}

ts_status ts_law_tail_constant(const ts_law* law, double* out) {
    return guard([&] {
        need(law, "law");
        need(out, "out");
        *out = tailstab::tail_constant(law->law);
    });
}

ts_status ts_law_truncated_moment(const ts_law* law, double beta, double z, double* out) {
    return guard([&] {
        need(law, "law");
        need(out, "out");
        *out = tailstab::truncated_moment(law->law, beta, z);
    });
}

ts_status ts_law_sample(const ts_law* law, size_t n, uint64_t seed, uint64_t stream_id, unsigned threads,
                        double* out) {
    return guard([&] {
        need(law, "law");
        need(out, "out");
        const auto v = tailstab::sample_iid(law->law, n, seed, stream_id, threads);
        std::copy(v.begin(), v.end(), out);
    });
}

ts_status ts_process_from_json(const char* json, ts_process** out) {
    return guard([&] {
        need(json, "json");
        need(out, "out");
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(json);
        } catch (const nlohmann::json::parse_error& e) {
            tailstab::fail(tailstab::ErrorKind::Config, std::string("process: invalid JSON: ") + e.what());
        }
        *out = new ts_process{tailstab::parse_process(doc)};
    });
}

void ts_process_destroy(ts_process* process) { delete process; }

ts_status ts_process_truncation(const ts_process* process, size_t* out) {
    return guard([&] {
        need(process, "process");
        need(out, "out");
        *out = process->spec.coeffs.truncation();
    });
}

ts_status ts_process_coefficients(const ts_process* process, double* out, size_t capacity, size_t* length) {
    return guard([&] {
        need(process, "process");
        need(length, "length");
        const auto& v = process->spec.coeffs.values;
        *length = v.size();
        if (out != nullptr) std::copy_n(v.begin(), std::min(capacity, v.size()), out);
    });
}

ts_status ts_simulate_path(const ts_process* process, size_t n, uint64_t seed, unsigned threads, double* out) {
    return guard([&] {
        need(process, "process");
        need(out, "out");
        const auto path = tailstab::simulate_path(process->spec, n, seed, threads);
        std::copy(path.values.begin(), path.values.end(), out);
    });
}

ts_status ts_simulate_coupled(const ts_process* process, const size_t* lags, size_t n_lags, size_t reps,
                              uint64_t seed, unsigned threads, ts_coupled** out) {
    return guard([&] {
        need(process, "process");
        need(lags, "lags");
        need(out, "out");
        std::vector<std::size_t> l(lags, lags + n_lags);
        *out = new ts_coupled{tailstab::simulate_coupled(process->spec, l, reps, seed, threads)};
    });
}

void ts_coupled_destroy(ts_coupled* draws) { delete draws; }

ts_status ts_coupled_reps(const ts_coupled* draws, size_t* out) {
    return guard([&] {
        need(draws, "draws");
        need(out, "out");
        *out = draws->draws.reps;
    });
}

ts_status ts_coupled_pairs(const ts_coupled* draws, size_t lag_index, double* x, double* x_star) {
    return guard([&] {
        need(draws, "draws");
        const auto& d = draws->draws;
        tailstab::require(lag_index < d.lags.size(), "lag index out of range");
        if (x != nullptr) std::copy(d.x[lag_index].begin(), d.x[lag_index].end(), x);
        if (x_star != nullptr) std::copy(d.x_star[lag_index].begin(), d.x_star[lag_index].end(), x_star);
    });
}

ts_status ts_theta_estimate(const ts_coupled* draws, double y, size_t grid_size, size_t min_exceed,
                            unsigned threads, ts_theta** out) {
    return guard([&] {
        need(draws, "draws");
        need(out, "out");
        tailstab::GridPolicy policy;
        if (grid_size > 0) policy.size = grid_size;
        if (min_exceed > 0) policy.min_exceed = min_exceed;
        *out = new ts_theta{tailstab::estimate_theta_curve(draws->draws, y, policy, threads)};
    });
}

void ts_theta_destroy(ts_theta* est) { delete est; }

ts_status ts_theta_count(const ts_theta* est, size_t* out) {
    return guard([&] {
        need(est, "est");
        need(out, "out");
        *out = est->est.rows.size();
    });
}

ts_status ts_theta_row(const ts_theta* est, size_t index, size_t* lag, double* theta_hat, double* upper_conf,
                       double* se, size_t* n_exceed_at_y) {
    return guard([&] {
        need(est, "est");
        tailstab::require(index < est->est.rows.size(), "row index out of range");
        const auto& r = est->est.rows[index];
        if (lag) *lag = r.lag;
        if (theta_hat) *theta_hat = r.theta_hat;
        if (upper_conf) *upper_conf = r.upper_conf;
        if (se) *se = r.se;
        if (n_exceed_at_y) *n_exceed_at_y = r.n_exceed_at_y;
    });
}

ts_status ts_theta_sum(const ts_theta* est, double q, double* out) {
    return guard([&] {
        need(est, "est");
        need(out, "out");
        *out = tailstab::aggregate_theta_sum(est->est, q).value;
    });
}

ts_status ts_sufficiency_exponent(double nu, double q, double eps, int symmetric_stable, double* out) {
    return guard([&] {
        need(out, "out");
        *out = tailstab::sufficiency_exponent(nu, q, eps,
                                              symmetric_stable ? tailstab::InnovationClass::SymmetricStable
                                                               : tailstab::InnovationClass::General);
    });
}

ts_status ts_hill_estimate(const double* sample, size_t n, size_t k, double* nu, double* se) {
    return guard([&] {
        need(sample, "sample");
        const auto h = tailstab::hill_estimate(std::span<const double>(sample, n), k);
        if (nu) *nu = h.nu;
        if (se) *se = h.se;
    });
}

ts_status ts_high_quantile(const double* responses, size_t n, const double* design, size_t p, double alpha,
                           double* beta_out) {
    return guard([&] {
        need(responses, "responses");
        need(beta_out, "beta_out");
        std::span<const double> u(responses, n);
        if (design == nullptr) {
            beta_out[0] = tailstab::high_quantile_fit(u, nullptr, alpha).beta(0);
            return;
        }
        tailstab::require(p >= 1, "design needs p >= 1 columns");
        Eigen::MatrixXd w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < p; ++j) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = design[i * p + j];
        }
        const auto fit = tailstab::high_quantile_fit(u, &w, alpha);
        for (size_t j = 0; j < p; ++j) beta_out[j] = fit.beta(static_cast<Eigen::Index>(j));
    });
}

ts_status ts_run_experiment(const char* config_path, const char* out_dir, const uint64_t* seed_override,
                            const char* mode, unsigned threads, int* exit_code) {
    return guard([&] {
        need(config_path, "config_path");
        need(exit_code, "exit_code");
        std::ifstream f(config_path);
        if (!f) tailstab::fail(tailstab::ErrorKind::Io, std::string("cannot open config ") + config_path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(f);
        } catch (const nlohmann::json::parse_error& e) {
            tailstab::fail(tailstab::ErrorKind::Config, std::string("config: invalid JSON: ") + e.what());
        }
        if (!doc.is_object()) tailstab::fail(tailstab::ErrorKind::Config, "config: top level must be an object");
        if (mode != nullptr) doc["mode"] = mode;
        if (seed_override != nullptr) doc["seed"] = *seed_override;
        if (out_dir != nullptr) doc["outputs"] = out_dir;
        const auto cfg = tailstab::parse_config(doc);
        const auto result = tailstab::run_experiment(cfg, threads);
        tailstab::write_outputs(result, cfg, cfg.outputs);
        *exit_code = result.report.exit_code();
    });
}

}  // extern "C"
