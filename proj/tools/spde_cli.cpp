// Command-line driver: simulate | verify | probe-at | regularity.
// Exit codes: 0 all checks pass, 1 check failure, 2 configuration/usage error.
#include "spde/analysis.hpp"
#include "spde/config.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

namespace fs = std::filesystem;
using namespace spde;

namespace {

const std::set<std::string> kKnownChecks = {"contraction", "holder",    "factorization",
                                            "maxreg",      "variational", "sobolev",
                                            "smoothing",   "singular"};

std::string default_tag() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", std::gmtime(&t));
    return buf;
}

struct CommonOpts {
    std::string config;
    std::string out = "out";
    std::string tag;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
};

fs::path run_dir(const CommonOpts& o, const std::string& scenario_name) {
    fs::path dir = fs::path(o.out) / scenario_name / (o.tag.empty() ? default_tag() : o.tag);
    fs::create_directories(dir);
    return dir;
}

Scenario load_with_overrides(const CommonOpts& o) {
    Scenario sc = load_scenario(o.config);
    if (o.seed_set) sc.seed = o.seed;
    if (o.workers >= 0) sc.workers = o.workers;
    return sc;
}

int run_checks(const Scenario& sc, const CommonOpts& o) {
    auto run = sc.build();
    std::vector<Path> solution;
    auto rep = run_ensemble(run, sc.write_paths ? &solution : nullptr);

    const fs::path dir = run_dir(o, sc.name);
    {
        std::ofstream f(dir / "report.json", std::ios::binary);
        f << rep.to_json();
    }
    if (sc.write_paths && !solution.empty()) {
        fs::create_directories(dir / "paths");
        const int n_write = std::min<int>(4, int(solution.size()));
        for (int m = 0; m < n_write; ++m) {
            char name[32];
            std::snprintf(name, sizeof name, "member%04d.csv", m);
            std::ofstream f(dir / "paths" / name);
            write_csv(f, solution[m]);
        }
    }

    for (const auto& [id, ok] : rep.flags)
        std::printf("%-16s %s\n", id.c_str(), ok ? "pass" : "FAIL");
    std::printf("report: %s\n", (dir / "report.json").string().c_str());
    return rep.all_pass() ? 0 : 1;
}

int cmd_simulate(const CommonOpts& o) {
    return run_checks(load_with_overrides(o), o);
}

int cmd_verify(const CommonOpts& o, const std::string& checks_csv) {
    Scenario sc = load_with_overrides(o);
    std::vector<std::string> ids;
    std::istringstream ss(checks_csv);
    std::string id;
    while (std::getline(ss, id, ',')) {
        if (!id.empty()) ids.push_back(id);
    }
    if (ids.empty()) {
        std::fprintf(stderr, "verify: empty check id list (usage error)\n");
        return 2;
    }
    for (const auto& i : ids) {
        if (!kKnownChecks.count(i)) {
            std::fprintf(stderr, "verify: unknown check id '%s' (usage error)\n", i.c_str());
            return 2;
        }
        if (i == "holder" && sc.M < 30) {
            std::fprintf(stderr,
                         "verify: check 'holder' requires ensemble M >= 30 (got M = %d); "
                         "the bootstrap CI is meaningless below that\n",
                         sc.M);
            return 2;
        }
    }
    sc.check_ids = ids;
    return run_checks(sc, o);
}

int cmd_probe_at(const CommonOpts& o, int refine) {
    Scenario sc = load_with_overrides(o);
    auto run = sc.build();  // validates hypotheses
    const auto& fam = run.ps.fam;
    const double T = run.ps.T;
    const std::vector<double> ts = {0.0, 0.25 * T, 0.5 * T, T};
    const std::vector<std::pair<double, double>> pairs = {
        {0.0, 0.5 * T}, {0.25 * T, 0.75 * T}, {0.5 * T, T}, {0.0, T}};
    const std::vector<double> moduli = {0.1, 1.0, 10.0, 100.0, 1000.0};

    const fs::path dir = run_dir(o, sc.name);
    fs::create_directories(dir / "probes");
    bool all_pass = true;
    for (int level = 0; level < std::max(2, refine); ++level) {
        const int n = sc.n_cells << level;
        auto g = SpaceGrid::make(n);
        auto r1 = at1_probe(fam, g, ts, moduli);
        auto r2 = at2_probe(fam, g, pairs, moduli);
        char n1[32], n2[32];
        std::snprintf(n1, sizeof n1, "at1_n%04d.json", n);
        std::snprintf(n2, sizeof n2, "at2_n%04d.json", n);
        std::ofstream(dir / "probes" / n1) << r1.to_json();
        std::ofstream(dir / "probes" / n2) << r2.to_json();
        std::printf("n=%d K_est=%.6g (stable=%s) L_est=%.6g (stable=%s)\n", n, r1.K_est,
                    r1.pass ? "yes" : "no", r2.L_est, r2.pass ? "yes" : "no");
        all_pass = all_pass && r1.pass && r2.pass;
    }
    return all_pass ? 0 : 1;
}

int cmd_regularity(const CommonOpts& o) {
    Scenario sc = load_with_overrides(o);
    sc.check_ids = {"holder", "sobolev", "smoothing", "singular"};
    return run_checks(sc, o);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification toolkit for semilinear parabolic SPDEs"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string checks_csv;
    int refine = 2;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "scenario configuration file")->required();
        sub->add_option("--out", o.out, "output root directory");
        sub->add_option("--tag", o.tag, "pin the run directory name (default: timestamp)");
        sub->add_option("--seed", o.seed, "override the scenario seed")
            ->each([&](const std::string&) { o.seed_set = true; });
        sub->add_option("--workers", o.workers, "worker threads (0 = machine parallelism)");
    };

    auto* sim = app.add_subcommand("simulate", "run the scenario and its configured checks");
    add_common(sim);
    auto* ver = app.add_subcommand("verify", "run a selected subset of checks");
    add_common(ver);
    ver->add_option("--checks", checks_csv, "comma-separated check ids")->required();
    auto* probe = app.add_subcommand("probe-at", "resolvent condition probes");
    add_common(probe);
    probe->add_option("--refine", refine, "number of refinement levels (>= 2)");
    auto* reg = app.add_subcommand("regularity", "pathwise regularity estimation");
    add_common(reg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage errors are configuration errors
    }

    try {
        if (sim->parsed()) return cmd_simulate(o);
        if (ver->parsed()) return cmd_verify(o, checks_csv);
        if (probe->parsed()) return cmd_probe_at(o, refine);
        if (reg->parsed()) return cmd_regularity(o);
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
