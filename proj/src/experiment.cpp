#include "tailstab/experiment.hpp"

#include "tailstab/csv.hpp"
#include "tailstab/errors.hpp"
#include "tailstab/parallel.hpp"
#include "tailstab/tailstats.hpp"
#include "tailstab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace tailstab {

using nlohmann::json;

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::TasCurve: return "tas";
        case Mode::TailStats: return "tailstats";
        case Mode::Verify: return "verify";
        case Mode::Full: return "full";
    }
    return "unknown";
}

Mode mode_from_string(std::string_view name) {
    if (name == "tas") return Mode::TasCurve;
    if (name == "tailstats") return Mode::TailStats;
    if (name == "verify") return Mode::Verify;
    if (name == "full") return Mode::Full;
    fail(ErrorKind::Config, "config.mode: unknown mode '" + std::string(name) + "' (tas, tailstats, verify, full)");
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
    fail(ErrorKind::Config, "config." + where + ": " + msg);
}

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

const json* find(const json& j, const std::string& key) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& j, const std::string& key, const std::string& where, std::optional<double> def = {}) {
    const json* v = find(j, key);
    if (v == nullptr) {
        if (def) return *def;
        bad(join(where, key), "required number is missing");
    }
    if (!v->is_number()) bad(join(where, key), "expected a number, got " + v->dump());
    return v->get<double>();
}

std::uint64_t count(const json& j, const std::string& key, const std::string& where,
                    std::optional<std::uint64_t> def = {}) {
    const json* v = find(j, key);
    if (v == nullptr) {
        if (def) return *def;
        bad(join(where, key), "required integer is missing");
    }
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<long long>() >= 0) return static_cast<std::uint64_t>(v->get<long long>());
    if (v->is_number_float()) {
        const double d = v->get<double>();
        if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    bad(join(where, key), "expected a non-negative integer, got " + v->dump());
}

std::string text(const json& j, const std::string& key, const std::string& where,
                 std::optional<std::string> def = {}) {
    const json* v = find(j, key);
    if (v == nullptr) {
        if (def) return *def;
        bad(join(where, key), "required string is missing");
    }
    if (!v->is_string()) bad(join(where, key), "expected a string, got " + v->dump());
    return v->get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& key, const std::string& where) {
    const json* v = find(j, key);
    if (v == nullptr || !v->is_array()) bad(join(where, key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) bad(join(where, key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back((*v)[i].get<double>());
    }
    return out;
}

const json& object(const json& j, const std::string& key, const std::string& where) {
    const json* v = find(j, key);
    if (v == nullptr) bad(join(where, key), "required object is missing");
    if (!v->is_object()) bad(join(where, key), "expected an object");
    return *v;
}

template <class F>
auto rewrap(const std::string& where, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        bad(where, e.what());
    }
}

}  // namespace

TailLaw parse_law(const json& j, const std::string& where) {
    if (!j.is_object()) bad(where, "expected a law object");
    const std::string fam = text(j, "family", where);
    Family family{};
    try {
        family = family_from_string(fam);
    } catch (const Error& e) {
        bad(join(where, "family"), e.what());
    }
    const double nu = number(j, "nu", where);
    const bool one_sided = family == Family::Pareto || family == Family::Frechet;
    const bool symmetric = family == Family::StudentT || family == Family::SymmetricStable;
    const double p = number(j, "p", where, one_sided ? 1.0 : (symmetric ? 0.5 : 0.5));
    const double scale = number(j, "scale", where, 1.0);
    const double location = number(j, "location", where, 0.0);
    return rewrap(where, [&] { return make_law(family, nu, p, scale, location); });
}

namespace {

VolatilityLaw parse_volatility(const json& j, const std::string& where) {
    if (!j.is_object()) bad(where, "expected a volatility object");
    if (text(j, "family", where) == "discrete") {
        auto values = numbers(j, "values", where);
        auto probs = numbers(j, "probs", where);
        return rewrap(where, [&] { return make_discrete_law(values, probs); });
    }
    return parse_law(j, where);
}

MonotoneTransform parse_transform(const json& j, const std::string& where) {
    if (!j.is_object()) bad(where, "expected a transform object");
    const std::string type = text(j, "type", where);
    if (type == "floor") return FloorTransform{};
    if (type == "affine") {
        const double a = number(j, "a", where);
        const double b = number(j, "b", where, 0.0);
        if (!(a > 0.0)) bad(join(where, "a"), "affine slope must be > 0");
        return rewrap(where, [&] { return make_affine(a, b); });
    }
    if (type == "table") {
        auto x = numbers(j, "x", where);
        auto y = numbers(j, "y", where);
        return rewrap(where, [&] { return make_table(x, y); });
    }
    bad(join(where, "type"), "unknown transform '" + type + "' (floor, affine, table)");
}

CoefficientSeq parse_coefficients(const json& j, const std::string& where, double nu) {
    if (!j.is_object()) bad(where, "expected a coefficient object");
    const std::string fam = text(j, "family", where);
    const double kappa = number(j, "kappa", where, std::min(1.0, nu));
    const double tol = number(j, "trunc_tol", where, 1e-6);
    const auto max_m = count(j, "max_truncation", where, 10'000'000);
    CoefficientFamily family;
    if (fam == "power_decay") {
        family = PowerDecay{number(j, "zeta", where), number(j, "c", where, 1.0)};
    } else if (fam == "geometric") {
        family = Geometric{number(j, "r", where), number(j, "c", where, 1.0)};
    } else if (fam == "explicit") {
        family = Explicit{numbers(j, "values", where)};
    } else {
        bad(join(where, "family"), "unknown coefficient family '" + fam + "' (power_decay, geometric, explicit)");
    }
    return rewrap(where, [&] { return make_coefficients(family, kappa, tol, max_m); });
}

}  // namespace

ProcessSpec parse_process(const json& j, const std::string& where) {
    if (!j.is_object()) bad(where, "expected a process object");
    ProcessSpec spec;
    const std::string kind = text(j, "kind", where);
    if (kind == "linear") {
        spec.kind = ProcessKind::Linear;
    } else if (kind == "stoch_vol") {
        spec.kind = ProcessKind::StochVol;
    } else if (kind == "max_linear") {
        spec.kind = ProcessKind::MaxLinear;
    } else {
        bad(join(where, "kind"), "unknown process kind '" + kind + "' (linear, stoch_vol, max_linear)");
    }
    spec.innovation = parse_law(object(j, "innovation", where), join(where, "innovation"));
    spec.coeffs = parse_coefficients(object(j, "coefficients", where), join(where, "coefficients"),
                                     spec.innovation.index);
    if (const json* v = find(j, "volatility")) spec.volatility = parse_volatility(*v, join(where, "volatility"));
    if (const json* t = find(j, "transform")) spec.transform = parse_transform(*t, join(where, "transform"));
    rewrap(where, [&] {
        validate(spec);
        return 0;
    });
    return spec;
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) fail(ErrorKind::Config, "config: top level must be a JSON object");
    ExperimentConfig c;
    c.mode = mode_from_string(text(doc, "mode", "", "tas"));
    c.process = parse_process(object(doc, "process", ""), "process");
    c.process_json = doc.at("process");
    c.process_json["truncation"] = c.process.coeffs.truncation();
    c.process_json["coefficients"]["kappa"] = c.process.coeffs.kappa;

    const bool needs_tas = c.mode != Mode::TailStats;
    c.reps = count(doc, "reps", "", needs_tas ? std::nullopt : std::optional<std::uint64_t>(1000));
    if (c.reps < 1000) bad("reps", "must be >= 1000, got " + std::to_string(c.reps));
    if (const json* l = find(doc, "lags")) {
        if (!l->is_array() || l->empty()) bad("lags", "expected a non-empty array of lags");
        for (std::size_t i = 0; i < l->size(); ++i) {
            const auto& e = (*l)[i];
            if (!e.is_number_integer() || e.get<long long>() < 0) {
                bad("lags[" + std::to_string(i) + "]", "expected a non-negative integer");
            }
            const auto lag = static_cast<std::size_t>(e.get<long long>());
            if (lag > c.process.coeffs.truncation()) {
                bad("lags[" + std::to_string(i) + "]", "lag " + std::to_string(lag) + " exceeds the truncation M=" +
                                                          std::to_string(c.process.coeffs.truncation()));
            }
            c.lags.push_back(lag);
        }
        std::set<std::size_t> uniq(c.lags.begin(), c.lags.end());
        if (uniq.size() != c.lags.size()) bad("lags", "duplicate lags");
    } else if (needs_tas) {
        bad("lags", "required array is missing");
    }
    c.y_quantile = number(doc, "y_quantile", "", 0.95);
    if (!(c.y_quantile > 0.0 && c.y_quantile < 1.0)) {
        bad("y_quantile", "must lie in (0,1), got " + json(c.y_quantile).dump());
    }
    c.q = number(doc, "q", "", 2.0);
    if (!(c.q > 0.0)) bad("q", "must be > 0");
    c.seed = count(doc, "seed", "", 0);
    c.epsilon = number(doc, "epsilon", "", 0.01);
    if (!(c.epsilon >= 0.0)) bad("epsilon", "must be >= 0");
    if (const json* e = find(doc, "eta")) {
        if (!e->is_number() || !(e->get<double>() > 0.0)) bad("eta", "must be a positive number");
        c.eta = e->get<double>();
    }
    c.decay_tolerance = number(doc, "decay_tolerance", "", 0.2);
    if (!(c.decay_tolerance >= 0.0)) bad("decay_tolerance", "must be >= 0");
    if (const json* g = find(doc, "grid")) {
        if (!g->is_object()) bad("grid", "expected an object");
        c.grid.size = count(*g, "size", "grid", 50);
        c.grid.min_exceed = count(*g, "min_exceed", "grid", 200);
        c.grid.alpha = number(*g, "alpha", "grid", 0.01);
        if (c.grid.size < 1) bad("grid.size", "must be >= 1");
        if (c.grid.min_exceed < 1) bad("grid.min_exceed", "must be >= 1");
        if (!(c.grid.alpha > 0.0 && c.grid.alpha < 1.0)) bad("grid.alpha", "must lie in (0,1)");
    }
    if (const json* t = find(doc, "tailstats")) {
        if (!t->is_object()) bad("tailstats", "expected an object");
        auto& s = c.tailstats;
        s.path_length = count(*t, "path_length", "tailstats", s.path_length);
        s.tail_quantile = number(*t, "tail_quantile", "tailstats", s.tail_quantile);
        s.k_max = count(*t, "k_max", "tailstats", s.k_max);
        s.bootstrap = count(*t, "bootstrap", "tailstats", s.bootstrap);
        s.block_length = count(*t, "block_length", "tailstats", 0);
        if (find(*t, "data_path")) s.data_path = text(*t, "data_path", "tailstats");
        if (!(s.tail_quantile > 0.0 && s.tail_quantile < 1.0)) bad("tailstats.tail_quantile", "must lie in (0,1)");
        if (s.path_length <= s.k_max) bad("tailstats.path_length", "must exceed k_max");
        if (s.bootstrap < 2) bad("tailstats.bootstrap", "must be >= 2");
    }
    if (const json* v = find(doc, "verify")) {
        if (!v->is_object()) bad("verify", "expected an object");
        auto& s = c.verify;
        s.path_length = count(*v, "path_length", "verify", s.path_length);
        s.tail_quantile = number(*v, "tail_quantile", "verify", s.tail_quantile);
        s.ks_samples = count(*v, "ks_samples", "verify", s.ks_samples);
        s.mc_reps = count(*v, "mc_reps", "verify", s.mc_reps);
        if (!(s.tail_quantile > 0.0 && s.tail_quantile < 1.0)) bad("verify.tail_quantile", "must lie in (0,1)");
        if (s.path_length < 1000) bad("verify.path_length", "must be >= 1000");
        if (s.ks_samples < 100) bad("verify.ks_samples", "must be >= 100");
    }
    c.outputs = text(doc, "outputs", "", "out");
    if (const json* e = find(doc, "export_draws")) {
        if (!e->is_boolean()) bad("export_draws", "expected true or false");
        c.export_draws = e->get<bool>();
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::Io, "cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Config, "config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json ExperimentConfig::to_json() const {
    json j;
    j["mode"] = std::string(tailstab::to_string(mode));
    j["process"] = process_json;
    j["reps"] = reps;
    j["lags"] = lags;
    j["y_quantile"] = y_quantile;
    j["q"] = q;
    j["seed"] = seed;
    j["epsilon"] = epsilon;
    j["eta"] = eta ? json(*eta) : json(nullptr);
    j["decay_tolerance"] = decay_tolerance;
    j["grid"] = {{"size", grid.size}, {"min_exceed", grid.min_exceed}, {"alpha", grid.alpha}};
    j["tailstats"] = {{"path_length", tailstats.path_length},
                      {"tail_quantile", tailstats.tail_quantile},
                      {"k_max", tailstats.k_max},
                      {"bootstrap", tailstats.bootstrap},
                      {"block_length", tailstats.block_length},
                      {"data_path", tailstats.data_path ? json(*tailstats.data_path) : json(nullptr)}};
    j["verify"] = {{"path_length", verify.path_length},
                   {"tail_quantile", verify.tail_quantile},
                   {"ks_samples", verify.ks_samples},
                   {"mc_reps", verify.mc_reps}};
    j["outputs"] = outputs;
    j["export_draws"] = export_draws;
    return j;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

/// Closed-form marginal of X_0 where one exists.
struct Marginal {
    std::function<double(double)> survival;
    std::function<double(double)> density;
    std::function<double(double)> upper_quantile;
    bool iid = false;
    std::vector<double> frechet_coeffs;  // scaled coefficients for max-linear Frechet oracles
};

std::optional<Marginal> closed_form_marginal(const ProcessSpec& spec) {
    if (spec.transform || spec.innovation.location != 0.0) return std::nullopt;
    const auto& a = spec.coeffs.values;
    const auto nonzero = std::count_if(a.begin(), a.end(), [](double v) { return v != 0.0; });
    const TailLaw law = spec.innovation;
    if (spec.kind == ProcessKind::MaxLinear && law.family == Family::Frechet) {
        Marginal m;
        for (double v : a) m.frechet_coeffs.push_back(v * law.scale);
        m.iid = nonzero == 1;
        const auto c = m.frechet_coeffs;
        const double nu = law.index;
        double s = 0.0;
        for (double v : c) s += std::pow(v, nu);
        m.survival = [s, nu](double x) { return x <= 0.0 ? 1.0 : -std::expm1(-s * std::pow(x, -nu)); };
        m.density = [s, nu](double x) {
            return x <= 0.0 ? 0.0 : std::exp(-s * std::pow(x, -nu)) * s * nu * std::pow(x, -nu - 1.0);
        };
        m.upper_quantile = [c, nu](double u) { return frechet_maxlinear_upper_quantile(c, nu, u); };
        return m;
    }
    if (spec.kind != ProcessKind::Linear) return std::nullopt;
    double scale = 0.0;
    if (nonzero == 1) {
        const double v = *std::find_if(a.begin(), a.end(), [](double x) { return x != 0.0; });
        if (v < 0.0) return std::nullopt;
        scale = v;
    } else if (law.family == Family::SymmetricStable) {
        scale = stable_marginal_scale(a, law.index);
    } else {
        return std::nullopt;
    }
    Marginal m;
    m.iid = nonzero == 1;
    m.survival = [law, scale](double x) { return survival(law, x / scale, Side::Right); };
    m.density = [law, scale](double x) { return density(law, x / scale) / scale; };
    m.upper_quantile = [law, scale](double u) { return scale * upper_quantile(law, u); };
    return m;
}

double empirical_quantile(std::vector<double> v, double level) {
    require(!v.empty(), "empirical quantile of an empty sample");
    auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(v.size()) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, v.size());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
    return v[k - 1];
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void add_check(RunReport& r, std::string name, bool pass, std::string detail) {
    r.checks.push_back(CheckRow{std::move(name), pass ? "PASS" : "FAIL", std::move(detail)});
}

void skip_check(RunReport& r, std::string name, std::string detail) {
    r.checks.push_back(CheckRow{std::move(name), "SKIPPED", std::move(detail)});
}

bool structural_zero(const ProcessSpec& spec, std::size_t lag) {
    return spec.coeffs.at(lag) == 0.0 && !(spec.kind == ProcessKind::StochVol && lag == 0);
}

}  // namespace

namespace {

struct Context {
    const ExperimentConfig& cfg;
    unsigned threads;
    std::optional<Marginal> marginal;
    RunReport report;
    std::optional<ThetaEstimate> theta;
    std::optional<CoupledDraws> draws;
};

std::vector<double> pooled(const CoupledDraws& d) {
    std::vector<double> out;
    out.reserve(d.reps * d.lags.size());
    for (const auto& x : d.x) out.insert(out.end(), x.begin(), x.end());
    return out;
}

void run_tas(Context& ctx, bool with_decay) {
    const auto& cfg = ctx.cfg;
    const auto& spec = cfg.process;
    auto& rep = ctx.report;
    ctx.draws = simulate_coupled(spec, cfg.lags, cfg.reps, cfg.seed, ctx.threads);
    if (ctx.marginal) {
        rep.y = ctx.marginal->upper_quantile(1.0 - cfg.y_quantile);
        rep.y_source = "exact";
    } else {
        rep.y = empirical_quantile(pooled(*ctx.draws), cfg.y_quantile);
        rep.y_source = "empirical";
    }
    ctx.theta = estimate_theta_curve(*ctx.draws, *rep.y, cfg.grid, ctx.threads);
    for (const auto& r : ctx.theta->rows) {
        rep.theta.push_back(ThetaRow{r.lag, std::abs(spec.coeffs.at(r.lag)), r.theta_hat, r.se, r.upper_conf,
                                     r.z_argmax, r.n_exceed_at_y, r.degenerate});
    }

    const double nu = spec.innovation.index;
    std::optional<DecayFit> fit;
    if (with_decay) {
        const double target = cfg.eta ? *cfg.eta : (nu > 1.0 ? 1.0 : nu / 2.0);
        try {
            fit = fit_decay_exponent(*ctx.theta, spec.coeffs, target, cfg.decay_tolerance);
            rep.decay_fit = DecayFitRow{fit->c_hat,   fit->eta_hat,       fit->r_squared, fit->lag_lo,
                                        fit->lag_hi,  fit->used_lags,     fit->excluded_lags,
                                        fit->target,  fit->tolerance,     fit->pass};
            add_check(rep, "decay_exponent", fit->pass,
                      "eta_hat=" + fmt(fit->eta_hat) + " target=" + fmt(target) + " tolerance=" +
                          fmt(cfg.decay_tolerance));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientData) throw;
            skip_check(rep, "decay_exponent", e.what());
        }
    }

    // Structural zeros: lags whose output does not depend on the time-0 element.
    std::vector<std::size_t> zero_lags;
    for (const auto& r : ctx.theta->rows) {
        if (structural_zero(spec, r.lag)) zero_lags.push_back(r.lag);
    }
    if (!zero_lags.empty()) {
        bool ok = true;
        std::string bad_lags;
        for (const auto& r : ctx.theta->rows) {
            if (structural_zero(spec, r.lag) && !(r.theta_hat == 0.0 && r.degenerate)) {
                ok = false;
                bad_lags += " " + std::to_string(r.lag);
            }
        }
        add_check(rep, "structural_zeros", ok,
                  ok ? std::to_string(zero_lags.size()) + " lags with a_i = 0 have theta_hat = 0 exactly"
                     : "nonzero theta_hat at lags" + bad_lags);
    }

    // Aggregate sums need lags 0..i_max.
    bool contiguous = true;
    for (std::size_t k = 0; k < cfg.lags.size(); ++k) contiguous = contiguous && cfg.lags[k] == k;
    std::optional<double> ceiling;
    if (std::holds_alternative<Explicit>(spec.coeffs.family)) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < spec.coeffs.values.size(); ++j) {
            if (spec.coeffs.values[j] != 0.0) m = j;
        }
        ceiling = static_cast<double>(m + 1);
    }
    if (contiguous) {
        std::set<double> qs{1.0, 2.0, 4.0, cfg.q};
        bool within = true;
        for (double q : qs) {
            const auto sum = aggregate_theta_sum(*ctx.theta, q, fit ? &*fit : nullptr, &spec.coeffs);
            std::optional<double> rb = sum.remainder_bound;
            if (rb && !std::isfinite(*rb)) rb.reset();
            rep.theta_sum.push_back(ThetaSumRow{q, sum.value, sum.max_lag, rb, ceiling});
            if (ceiling && sum.value > *ceiling) within = false;
        }
        if (ceiling) {
            std::string list;
            for (double q : qs) list += (list.empty() ? "" : ",") + fmt(q);
            add_check(rep, "theta_sum_ceiling", within,
                      "Theta_hat_{y,q} <= m+1 = " + fmt(*ceiling) + " for q in {" + list + "}");
        }
    } else if (ceiling) {
        skip_check(rep, "theta_sum_ceiling", "lags are not contiguous from 0");
    }

    if (spec.kind != ProcessKind::MaxLinear) {
        const auto cls = spec.innovation.family == Family::SymmetricStable ? InnovationClass::SymmetricStable
                                                                           : InnovationClass::General;
        const double exponent = sufficiency_exponent(nu, cfg.q, cfg.epsilon, cls);
        SufficiencyRow s;
        s.innovation_class = cls == InnovationClass::General ? "general" : "symmetric_stable";
        s.nu = nu;
        s.q = cfg.q;
        s.epsilon = cfg.epsilon;
        s.exponent = exponent;
        s.partial_sum = spec.coeffs.partial_power_sum(exponent);
        const double tail = spec.coeffs.tail_bound(exponent);
        if (std::isfinite(tail)) s.remainder_bound = tail;
        s.certified = std::isfinite(tail);
        rep.sufficiency = s;
    }
}

void verify_frechet(Context& ctx) {
    const auto& cfg = ctx.cfg;
    auto& rep = ctx.report;
    const auto& c = ctx.marginal->frechet_coeffs;
    const double nu = cfg.process.innovation.index;
    bool ok = true;
    for (const auto& row : ctx.theta->rows) {
        std::vector<double> grid;
        for (const auto& pt : row.per_z) grid.push_back(pt.z);
        const auto exact = frechet_theta_exact(c, nu, row.lag, grid);
        const double delta = row.theta_hat - exact.sup;
        const double se = row.se_sup;
        rep.oracles.push_back(OracleRow{"frechet_theta_sup", row.lag, row.theta_hat, exact.sup, se, delta});
        if (std::abs(delta) > 3.0 * se && !(row.degenerate && exact.sup == 0.0)) ok = false;
    }
    add_check(rep, "frechet_theta_oracle", ok, "|theta_hat - exact grid sup| <= 3 Bonferroni-Wilson SE at every lag");

    // Marginal CDF at 20 quantile levels.
    const auto& x = ctx.draws->x.front();
    const double n = static_cast<double>(x.size());
    bool marg_ok = true;
    for (int k = 0; k < 20; ++k) {
        const double level = 0.05 + 0.94 * k / 19.0;
        const double z = ctx.marginal->upper_quantile(1.0 - level);
        const double exact = frechet_maxlinear_cdf(c, nu, z);
        const double emp = static_cast<double>(std::count_if(x.begin(), x.end(), [z](double v) { return v <= z; })) / n;
        const double se = std::sqrt(exact * (1.0 - exact) / n);
        rep.oracles.push_back(OracleRow{"frechet_marginal_cdf", std::nullopt, emp, exact, se, emp - exact});
        if (std::abs(emp - exact) > 3.5 * se) marg_ok = false;
    }
    add_check(rep, "frechet_marginal", marg_ok, "empirical CDF of X_0 within 3.5 binomial SE at 20 levels");
}

void verify_tail_constant(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& spec = cfg.process;
    auto& rep = ctx.report;
    TailCase tc = TailCase::LinearOnly;
    if (spec.kind == ProcessKind::StochVol) {
        tc = TailCase::StochVolCaseI;
        if (const auto* law = std::get_if<TailLaw>(&*spec.volatility)) {
            if (law->index < spec.innovation.index) tc = TailCase::StochVolCaseII;
            if (law->index == spec.innovation.index) tc = TailCase::StochVolCaseIII;
        }
    }
    const auto path = simulate_path(spec, cfg.verify.path_length, cfg.seed, ctx.threads);
    std::vector<double> mags(path.values.size());
    std::transform(path.values.begin(), path.values.end(), mags.begin(), [](double v) { return std::abs(v); });
    const double nu_target = tc == TailCase::StochVolCaseII ? std::get<TailLaw>(*spec.volatility).index
                                                           : spec.innovation.index;
    const auto hill = hill_estimate(mags, default_hill_k(mags.size()));
    rep.oracles.push_back(OracleRow{"hill_index", std::nullopt, hill.nu, nu_target, hill.se, hill.nu - nu_target});

    if (tc == TailCase::StochVolCaseIII) {
        skip_check(rep, "tail_constant", "Case III: constant not computed (regular variation may fail)");
        const bool ok = std::abs(hill.nu - nu_target) <= 0.1 * nu_target + 3.0 * hill.se;
        add_check(rep, "hill_index_case_iii", ok, "nu_hat=" + fmt(hill.nu) + " target=" + fmt(nu_target));
        return;
    }
    const auto constants = tail_constants(spec, tc, cfg.verify.mc_reps, cfg.seed, ctx.threads);
    if (!(constants.constant > 0.0)) {
        skip_check(rep, "tail_constant", "right-tail constant is zero");
        return;
    }
    const double x = empirical_quantile(path.values, cfg.verify.tail_quantile);
    const auto above = static_cast<double>(std::count_if(path.values.begin(), path.values.end(),
                                                         [x](double v) { return v > x; }));
    // Reference tail P(|eps| > x) or P(|S| > x) from the known law; empirical only for discrete volatility.
    const double n = static_cast<double>(path.values.size());
    double ref_prob = 0.0;
    if (constants.reference == "volatility") {
        const auto& vol = *spec.volatility;
        if (const auto* law = std::get_if<TailLaw>(&vol)) {
            ref_prob = survival(*law, x, Side::Abs);
        } else {
            ref_prob = static_cast<double>(std::count_if(path.volatilities.begin(), path.volatilities.end(),
                                                         [x](double s) { return std::abs(s) > x; })) /
                       n;
        }
    } else {
        ref_prob = survival(spec.innovation, x, Side::Abs);
    }
    if (!(ref_prob > 0.0)) {
        skip_check(rep, "tail_constant", "reference tail probability is zero at x");
        return;
    }
    const double ratio = above / n / ref_prob;
    const double se = ratio / std::sqrt(std::max(above, 1.0));
    rep.oracles.push_back(OracleRow{"tail_constant_" + std::string(to_string(tc)), std::nullopt, ratio,
                                    constants.constant, se, ratio - constants.constant});
    const bool ok = std::abs(ratio / constants.constant - 1.0) <= 0.10;
    add_check(rep, "tail_constant", ok,
              "ratio=" + fmt(ratio) + " constant=" + fmt(constants.constant) +
                  (constants.monte_carlo ? " (moments by Monte Carlo)" : "") + " tolerance=10%");
}

void verify_stable_sum(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& spec = cfg.process;
    auto& rep = ctx.report;
    const std::vector<std::size_t> lag0{0};
    const auto d = simulate_coupled(spec, lag0, cfg.verify.ks_samples, cfg.seed, ctx.threads);
    const double scale = stable_marginal_scale(spec.coeffs.values, spec.innovation.index);
    auto ref = sample_iid(spec.innovation, cfg.verify.ks_samples, cfg.seed, 0x5ab1e, ctx.threads);
    for (double& v : ref) v *= scale;
    const auto ks = ks_two_sample(d.x.front(), ref);
    rep.oracles.push_back(OracleRow{"stable_sum_ks", std::nullopt, ks.statistic, 0.0, 0.0, ks.statistic});
    add_check(rep, "stable_sum", ks.p_value >= 0.01,
              "KS D=" + fmt(ks.statistic) + " p=" + fmt(ks.p_value) + " scale=" + fmt(scale));
}

void run_verify(Context& ctx) {
    const auto& spec = ctx.cfg.process;
    if (spec.transform) {
        skip_check(ctx.report, "oracles", "no closed-form oracle for transformed processes");
        return;
    }
    if (spec.kind == ProcessKind::MaxLinear) {
        if (ctx.marginal) {
            verify_frechet(ctx);
        } else {
            skip_check(ctx.report, "frechet_theta_oracle", "max-linear oracle needs Frechet innovations");
        }
        return;
    }
    if (spec.innovation.family == Family::SymmetricStable && spec.kind == ProcessKind::Linear) verify_stable_sum(ctx);
    verify_tail_constant(ctx);
}

void run_tailstats(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& spec = cfg.process;
    const auto& ts = cfg.tailstats;
    auto& rep = ctx.report;
    TailStatsSection sec;
    std::vector<double> path;
    const bool data_mode = ts.data_path.has_value();
    if (data_mode) {
        path = csv::read_column(*ts.data_path);
        sec.source = *ts.data_path;
        if (path.size() <= ts.k_max) {
            fail(ErrorKind::InsufficientData, "data file " + *ts.data_path + " has " + std::to_string(path.size()) +
                                                  " observations; need more than k_max");
        }
    } else {
        path = simulate_path(spec, ts.path_length, cfg.seed, ctx.threads).values;
        sec.source = "simulation";
    }
    const std::optional<Marginal> oracle = data_mode ? std::nullopt : ctx.marginal;
    const double alpha = 1.0 - ts.tail_quantile;
    sec.n = path.size();
    sec.tail_quantile = ts.tail_quantile;
    sec.threshold = oracle ? oracle->upper_quantile(alpha) : empirical_quantile(path, ts.tail_quantile);

    BootstrapPolicy bp;
    bp.resamples = ts.bootstrap;
    bp.block_length = ts.block_length;
    bp.seed = cfg.seed;
    const auto tau = sample_tail_autocorrelation(path, sec.threshold, ts.k_max, bp, ctx.threads);
    sec.n_exceed = tau.n_exceed;
    sec.block_length = tau.block_length;
    sec.critical_value = tau.critical_value;
    bool tau_ok = true;
    bool have_tau_oracle = false;
    for (const auto& p : tau.points) {
        TauRow row{p.k, p.tau, p.se, p.ci_lo, p.ci_hi, std::nullopt};
        if (oracle && p.k > 0) {
            if (oracle->iid) {
                row.oracle = 0.0;
            } else if (!oracle->frechet_coeffs.empty()) {
                const auto& c = oracle->frechet_coeffs;
                const double nu = spec.innovation.index;
                const double x = sec.threshold;
                const double f = frechet_maxlinear_cdf(c, nu, x);
                const double both = 1.0 - 2.0 * f + frechet_maxlinear_cdf2(c, nu, x, x, p.k);
                const double pe = 1.0 - f;
                row.oracle = (both / pe - pe) / (1.0 - pe);
            }
            if (row.oracle) {
                have_tau_oracle = true;
                if (*row.oracle < p.ci_lo || *row.oracle > p.ci_hi) tau_ok = false;
            }
        }
        sec.tau.push_back(row);
    }
    add_check(rep, "tau_zero_lag", tau.points.front().tau == 1.0, "tau_hat(0) = 1");
    if (have_tau_oracle) {
        add_check(rep, "tau_oracle", tau_ok, "population tau inside the simultaneous bootstrap CI at every k");
    }

    std::optional<double> reference;
    if (oracle) reference = oracle->survival(sec.threshold);
    const auto te = tail_empirical_clt(path, sec.threshold, reference);
    sec.t_hat = te.t_hat;
    sec.t_reference = te.reference;
    sec.clt_stat = te.clt_stat;
    sec.rho_hat = te.rho_hat;
    sec.long_run_variance = te.long_run_variance;
    if (te.clt_stat) {
        const double sd = std::sqrt(std::max(te.long_run_variance, 1e-12));
        add_check(rep, "tail_empirical_clt", std::abs(*te.clt_stat) <= 3.0 * sd,
                  "clt_stat=" + fmt(*te.clt_stat) + " long-run sd=" + fmt(sd));
    }

    sec.qr_alpha = alpha;
    const auto qfit = high_quantile_fit(path, nullptr, alpha);
    sec.beta_hat = qfit.beta(0);
    if (oracle) {
        sec.beta_true = sec.threshold;
        const double psi = std::sqrt(static_cast<double>(path.size()) * alpha) * oracle->density(sec.threshold) / alpha;
        sec.psi_n = psi;
        sec.psi_error = psi * (sec.beta_hat - sec.threshold);
    }
    rep.tail_stats = std::move(sec);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
    const auto start = std::chrono::steady_clock::now();
    Context ctx{config, resolve_threads(threads), closed_form_marginal(config.process), {}, {}, {}};
    ctx.report.version = kVersion;
    ctx.report.mode = std::string(to_string(config.mode));
    ctx.report.config = config.to_json();

    const bool tas = config.mode != Mode::TailStats;
    if (tas) run_tas(ctx, config.mode != Mode::Verify);
    if (config.mode == Mode::Verify || config.mode == Mode::Full) run_verify(ctx);
    if (config.mode == Mode::TailStats || config.mode == Mode::Full) run_tailstats(ctx);

    ctx.report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ExperimentResult out;
    out.report = std::move(ctx.report);
    out.theta = std::move(ctx.theta);
    if (config.export_draws) out.draws = std::move(ctx.draws);
    return out;
}

void write_coupled_draws(const CoupledDraws& draws, const json& process_json, const std::filesystem::path& csv_path,
                         const std::filesystem::path& sidecar_path) {
    csv::Table t{{"replication", "lag", "x", "x_star"}, {}};
    t.rows.reserve(draws.reps * draws.lags.size());
    for (std::size_t r = 0; r < draws.reps; ++r) {
        for (std::size_t li = 0; li < draws.lags.size(); ++li) {
            t.rows.push_back({csv::format(r), csv::format(draws.lags[li]), csv::format(draws.x[li][r]),
                              csv::format(draws.x_star[li][r])});
        }
    }
    csv::write(csv_path, t);
    json side{{"process", process_json}, {"seed", draws.seed}, {"reps", draws.reps}, {"lags", draws.lags},
              {"columns", {"replication", "lag", "x", "x_star"}}};
    std::ofstream f(sidecar_path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::Io, "cannot open " + sidecar_path.string() + " for writing");
    f << side.dump(2) << "\n";
}

void write_outputs(const ExperimentResult& result, const ExperimentConfig& config, const std::filesystem::path& dir) {
    write_report(result.report, dir);
    csv::Table grid{{"lag", "z", "n_exceed", "n_hit", "p_hat", "se"}, {}};
    if (result.theta) {
        for (const auto& row : result.theta->rows) {
            for (const auto& pt : row.per_z) {
                grid.rows.push_back({csv::format(row.lag), csv::format(pt.z), csv::format(pt.n_exceed),
                                     csv::format(pt.n_hit), csv::format(pt.p_hat), csv::format(pt.se)});
            }
        }
    }
    csv::write(dir / "plotdata" / "theta_grid.csv", grid);
    if (result.draws) {
        write_coupled_draws(*result.draws, config.process_json, dir / "draws.csv", dir / "draws.json");
    }
}

}  // namespace tailstab
