#include "svtv/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> diag_format;
    bool mu_sweep = false;
};

svtv::ExperimentConfig resolve(const Overrides& o)
{
    svtv::ExperimentConfig cfg = o.config.empty() ? svtv::ExperimentConfig{} : svtv::load_config(o.config);
    if (o.seed) cfg.noise.seed = *o.seed;
    if (o.out) cfg.out_dir = *o.out;
    if (o.diag_format) cfg.diag_format = svtv::detail::parse_diag_format(*o.diag_format);
    if (o.mu_sweep) cfg.sweep.enabled = true;
    return cfg;
}

void print_summary(const svtv::RestoreOutcome& out)
{
    for (const auto& r : out.rows)
        std::printf("%-14s %-11s iterations=%-4d termination=%-9s isnr=%s dB\n", r.variant.c_str(), r.mode.c_str(),
                    r.iterations, r.termination.c_str(), svtv::format_db(r.isnr_db).c_str());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Space-variant TV image restoration"};
    app.require_subcommand(1);
    Overrides o;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "INI configuration file");
        sub->add_option("--seed", o.seed, "noise seed (overrides the config)");
        sub->add_option("--out", o.out, "output directory (overrides the config)");
        sub->add_option("--diag-format", o.diag_format, "per-iteration diagnostics format")
            ->check(CLI::IsMember({"kv", "jsonl"}));
        sub->add_flag("--mu-sweep", o.mu_sweep, "select mu by maximum ISNR over a log grid");
    };
    CLI::App* degrade = app.add_subcommand("degrade", "blur and corrupt the input image");
    CLI::App* estimate = app.add_subcommand("estimate", "estimate the p and alpha maps from the observation");
    CLI::App* restore = app.add_subcommand("restore", "run the configured variants");
    CLI::App* evaluate = app.add_subcommand("evaluate", "write the BSNR/ISNR results table");
    CLI::App* all = app.add_subcommand("all", "degrade, estimate, restore and evaluate");
    for (CLI::App* sub : {degrade, estimate, restore, evaluate, all}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? svtv::kExitOk : svtv::kExitConfig;
    }

    try {
        const svtv::ExperimentConfig cfg = resolve(o);
        bool diverged = false;
        if (degrade->parsed()) {
            const auto rec = svtv::cmd_degrade(cfg);
            std::printf("degraded: kind=%s level=%.6g bsnr=%s dB\n", svtv::to_string(rec.kind).c_str(), rec.level,
                        svtv::format_db(rec.realized_bsnr).c_str());
        } else if (estimate->parsed()) {
            svtv::cmd_estimate(cfg);
            std::printf("estimated: %s, %s\n", svtv::artifact::p_map, svtv::artifact::alpha_map);
        } else if (restore->parsed()) {
            const auto out = svtv::cmd_restore(cfg);
            print_summary(out);
            diverged = out.diverged;
        } else if (evaluate->parsed()) {
            for (const auto& r : svtv::cmd_evaluate(cfg))
                std::printf("%s\t%s\t%s\t%s\n", r.image.c_str(), r.variant.c_str(), svtv::format_db(r.bsnr_db).c_str(),
                            svtv::format_db(r.isnr_db).c_str());
        } else if (all->parsed()) {
            svtv::cmd_degrade(cfg);
            svtv::cmd_estimate(cfg);
            const auto out = svtv::cmd_restore(cfg);
            print_summary(out);
            diverged = out.diverged;
            if (!diverged) svtv::cmd_evaluate(cfg);
        }
        if (diverged) {
            std::cerr << "error: solver diverged; diagnostics kept in " << cfg.out_dir << "\n";
            return svtv::kExitDivergence;
        }
        return svtv::kExitOk;
    } catch (const svtv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return svtv::kExitConfig;
    } catch (const svtv::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return svtv::kExitIo;
    } catch (const svtv::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return svtv::kExitDivergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return svtv::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
