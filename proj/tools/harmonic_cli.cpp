// harmonic_cli: verification runs from JSON configs.
//
// exit 0: every case passed; 1: some case failed; 2: usage or config error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "harmonic/report.hpp"

using namespace harmonic;

namespace {

constexpr int exit_fail = 1;
constexpr int exit_usage = 2;

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "run configuration (JSON, schema harmonic.config/1)")->required();
    app->add_option("--out", c.out, "output directory (overrides output.dir)");
    app->add_option("--seed", c.seed, "corpus seed (overrides functions.seed)");
    app->add_option("--workers", c.workers, "concurrent cases")->check(CLI::PositiveNumber);
}

RunConfig configure(const Common& c) {
    auto cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.out_dir = c.out;
    cfg.workers = c.workers;
    return cfg;
}

void print_case(const CaseRecord& r) {
    std::cout << (r.pass ? "pass " : "FAIL ") << r.key() << "  ratio " << format_number(r.ratio) << "  plancherel "
              << format_number(r.plancherel_ratio);
    if (!r.error.empty()) std::cout << "  error: " << r.error;
    for (const auto& d : r.diagnostics) std::cout << "\n     " << d;
    std::cout << "\n";
}

int cmd_verify(const Common& c) {
    const auto cfg = configure(c);
    const auto rep = run_suite(cfg);
    write_report(rep, cfg.out_dir);
    for (const auto& r : rep.records) print_case(r);
    std::size_t failed = 0;
    for (const auto& r : rep.records) failed += r.pass ? 0 : 1;
    std::cout << rep.records.size() << " cases, " << failed << " failed, min ratio " << format_number(rep.min_ratio)
              << "; report in " << cfg.out_dir << "\n";
    return rep.all_pass() ? 0 : exit_fail;
}

int cmd_refine(const Common& c, std::optional<std::size_t> levels) {
    const auto cfg = configure(c);
    const auto rep = refine_study(cfg, levels.value_or(cfg.refine_levels));
    write_refine(rep, cfg.out_dir);
    for (const auto& s : rep.series) {
        std::cout << (s.pass ? "pass " : "FAIL ") << s.key << "  " << rep.quantity << ":";
        for (double v : s.values) std::cout << " " << format_number(v);
        if (!s.monotone) std::cout << "  (not monotone)";
        if (!s.contracting) std::cout << "  (|delta| not halving)";
        if (!s.error.empty()) std::cout << "  error: " << s.error;
        std::cout << "\n";
    }
    std::cout << "report in " << cfg.out_dir << "\n";
    return rep.all_pass() ? 0 : exit_fail;
}

int cmd_validate_group(const std::string& target) {
    const bool file = std::filesystem::exists(target);
    const auto K = file ? load_group(target) : builtin_group(target);
    const auto v = validate_group(K);
    std::cout << K.name << ": order " << K.order << ", " << K.irreps.size() << " irreps\n";
    for (const auto& m : v.violations) std::cout << "  violation: " << m << "\n";
    std::cout << (v.ok() ? "valid" : "INVALID") << "\n";
    return v.ok() ? 0 : exit_fail;
}

int cmd_validate_descriptor(const std::string& target, std::size_t samples, std::uint64_t seed) {
    CrossSectionDescriptor d;
    if (std::filesystem::exists(target))
        d = load_descriptor(target);
    else if (target.rfind("threadlike", 0) == 0 && target.size() > 10)
        d = threadlike_descriptor(std::stoul(target.substr(10)));
    else
        throw UsageError("no descriptor file or built-in named '" + target + "'");
    const auto v = validate_descriptor(d, samples, seed);
    std::cout << d.name << ": n = " << d.n << ", W dimension " << d.w_count() << ", " << samples << " samples"
              << (d.lie ? "" : " (no brackets: algebra checks skipped)") << "\n";
    if (d.lie) std::cout << "  max |det M_S - pf^2| / max(1, pf^2) = " << format_number(v.max_pfaffian_defect) << "\n";
    for (const auto& m : v.violations) std::cout << "  violation: " << m << "\n";
    std::cout << (v.ok() ? "valid" : "INVALID") << "\n";
    return v.ok() ? 0 : exit_fail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uncertainty-inequality verification harness"};
    app.require_subcommand(1);

    Common verify_opts, refine_opts;
    auto* verify = app.add_subcommand("verify", "run every (function, a, b) case of a config");
    add_common(verify, verify_opts);

    auto* refine = app.add_subcommand("refine", "rerun a config at doubled grid/truncation per level");
    add_common(refine, refine_opts);
    std::optional<std::size_t> levels;
    refine->add_option("--levels", levels, "number of levels (>= 2; overrides refine.levels)");

    std::string group_target;
    auto* vgroup = app.add_subcommand("validate-group", "check a finite group file or built-in (Z4, S3)");
    vgroup->add_option("group", group_target, "group JSON file or built-in name")->required();

    std::string desc_target;
    std::size_t desc_samples = 64;
    std::uint64_t desc_seed = 1;
    auto* vdesc = app.add_subcommand("validate-descriptor", "check a cross-section descriptor file or built-in");
    vdesc->add_option("descriptor", desc_target, "descriptor JSON file or threadlike3|threadlike4|threadlike5")->required();
    vdesc->add_option("--samples", desc_samples, "W sample points")->check(CLI::PositiveNumber);
    vdesc->add_option("--seed", desc_seed, "sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        if (*verify) return cmd_verify(verify_opts);
        if (*refine) return cmd_refine(refine_opts, levels);
        if (*vgroup) return cmd_validate_group(group_target);
        if (*vdesc) return cmd_validate_descriptor(desc_target, desc_samples, desc_seed);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_fail;
    }
    return exit_usage;
}
