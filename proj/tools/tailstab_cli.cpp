// tailstab command-line runner. Exit codes: 0 all checks passed, 2 a check failed, 1 error.
#include "tailstab/tailstab.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

void add_common(CLI::App* sub, Options& opt) {
    sub->add_option("--config", opt.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (overrides config.outputs)");
    sub->add_option("--seed", opt.seed, "64-bit seed override");
    sub->add_option("--threads", opt.threads, "worker threads (default: TAILSTAB_THREADS or 1)")
        ->check(CLI::Range(0u, 1024u));
}

void print_summary(const std::filesystem::path& report_path) {
    std::ifstream in(report_path);
    if (!in) return;
    const auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.contains("checks")) return;
    for (const auto& c : doc["checks"]) {
        std::cout << c.value("status", "?") << "  " << c.value("name", "?");
        const auto detail = c.value("detail", std::string());
        if (!detail.empty()) std::cout << "  (" << detail << ")";
        std::cout << '\n';
    }
    std::cout << "report: " << report_path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tail adversarial stability experiments"};
    app.set_version_flag("--version", std::string(ts_version()));
    app.require_subcommand(1);

    Options opt;
    for (const char* mode : {"tas", "tailstats", "verify", "full"}) {
        add_common(app.add_subcommand(mode, std::string("run the ") + mode + " pipeline"), opt);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const std::string mode = app.get_subcommands().front()->get_name();
    const std::uint64_t seed_value = opt.seed.value_or(0);
    int exit_code = 1;
    const ts_status st = ts_run_experiment(opt.config.c_str(), opt.out.empty() ? nullptr : opt.out.c_str(),
                                           opt.seed ? &seed_value : nullptr, mode.c_str(), opt.threads, &exit_code);
    if (st != TS_OK) {
        std::cerr << "tailstab: " << ts_status_string(st) << ": " << ts_last_error() << '\n';
        return 1;
    }

    std::filesystem::path out_dir = opt.out;
    if (out_dir.empty()) {
        std::ifstream in(opt.config);
        const auto doc = nlohmann::json::parse(in, nullptr, false);
        if (!doc.is_discarded() && doc.contains("outputs") && doc["outputs"].is_string()) {
            out_dir = doc["outputs"].get<std::string>();
        }
        if (out_dir.empty()) out_dir = "out";
    }
    print_summary(out_dir / "report.json");
    return exit_code == 0 ? 0 : 2;
}
