#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "wire/config.hpp"
#include "wire/runner.hpp"

namespace {

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) return std::nullopt;
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::optional<wire::RunConfig> load(const std::string& path, bool quiet) {
    const auto text = read_file(path);
    if (!text) {
        std::cerr << "cannot read config " << path << "\n";
        return std::nullopt;
    }
    try {
        return wire::parse_config(*text);
    } catch (const wire::ConfigError& e) {
        std::cerr << path << ": " << e.errors().size() << " error(s)\n";
        for (const auto& m : e.errors()) std::cerr << "  " << m << "\n";
    } catch (const wire::Error& e) {
        std::cerr << path << ": " << e.what() << "\n";
    }
    (void)quiet;
    return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Elastic wire dynamics in a Riemannian manifold"};
    app.set_version_flag("--version", wire::kVersion);
    app.require_subcommand(1);

    std::string config;
    std::optional<std::string> out;
    bool quiet = false;

    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
        if (with_out) sub->add_option("--out", out, "Output directory, overrides output.dir");
        sub->add_flag("--quiet", quiet, "Print nothing on success");
    };
    CLI::App* run = app.add_subcommand("run", "Run the configured mode");
    add_common(run, true);
    CLI::App* check = app.add_subcommand("check", "Validate a configuration and exit");
    add_common(check, false);
    CLI::App* study = app.add_subcommand("study", "Convergence study at N, 2N, 4N");
    add_common(study, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wire::kExitValidation;
    }

    std::optional<wire::RunConfig> cfg = load(config, quiet);
    if (!cfg) return wire::kExitValidation;

    if (check->parsed()) {
        try {
            const wire::ManifoldPtr m = wire::make_manifold(cfg->manifold);
            wire::build_initial(*cfg, *m, cfg->n_points);
        } catch (const wire::Error& e) {
            std::cerr << config << ": initial data: " << e.what() << "\n";
            return wire::kExitValidation;
        }
        if (!quiet) std::cout << config << ": ok\n";
        return wire::kExitOk;
    }
    if (study->parsed()) cfg->mode = "convergence-study";
    return wire::run(*cfg, out, quiet);
}
