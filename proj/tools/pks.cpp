#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pks/scenarios.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, check_failed = 1, config_error = 2, numerical_failure = 3 };

#ifndef PKS_SCENARIO_DIR
#define PKS_SCENARIO_DIR "scenarios"
#endif

int exit_for(const pks::Error& e) {
    switch (e.code()) {
        case pks::ErrorCode::ConfigError: return config_error;
        case pks::ErrorCode::UseProfileModule:
        case pks::ErrorCode::DependencyMissing: return check_failed;
        default: return numerical_failure;
    }
}

// Higher is more severe: config errors win over numerical failures over check failures.
int severity(int code) {
    switch (code) {
        case config_error: return 3;
        case numerical_failure: return 2;
        case check_failed: return 1;
        default: return 0;
    }
}

struct Job {
    std::string path;
    std::string log;
    int code = ok;
};

void run_one(Job& job, const std::string& out_root, long seed) {
    std::ostringstream log;
    log << std::setprecision(6);
    try {
        auto s = pks::load_scenario(job.path);
        if (seed >= 0) s.seed = static_cast<std::uint64_t>(seed);
        const std::string dir = (fs::path(out_root) / s.name).string();
        const auto res = pks::run_scenario(s, dir);
        for (const auto& key : s.config.unused()) log << "warning: " << job.path << ": unused key '" << key << "'\n";
        for (const auto& c : res.checks)
            log << (c.pass ? "PASS " : "FAIL ") << s.name << " " << c.name << " measured=" << std::setprecision(10)
                << c.measured << " expected=" << c.expected << " tol=" << c.tolerance << "\n";
        log << s.name << ": " << (res.passed() ? "passed" : "FAILED") << " in " << std::setprecision(3) << res.seconds
            << " s, output in " << dir << "\n";
        job.code = res.passed() ? ok : check_failed;
    } catch (const pks::Error& e) {
        log << "error: " << job.path << ": " << e.what() << "\n";
        job.code = exit_for(e);
    } catch (const std::exception& e) {
        log << "error: " << job.path << ": " << e.what() << "\n";
        job.code = numerical_failure;
    }
    job.log = log.str();
}

int cmd_run(const std::vector<std::string>& cfgs, const std::string& out_root, long seed, unsigned parallel) {
    std::vector<Job> jobs(cfgs.size());
    for (std::size_t k = 0; k < cfgs.size(); ++k) jobs[k].path = cfgs[k];
    std::mutex io;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            run_one(jobs[k], out_root, seed);
            std::lock_guard<std::mutex> lock(io);
            std::cout << jobs[k].log << std::flush;
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(parallel, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    int code = ok;
    for (const auto& j : jobs)
        if (severity(j.code) > severity(code)) code = j.code;
    return code;
}

int cmd_list() {
    std::cout << "recipes:\n";
    for (const auto& r : pks::recipes()) {
        std::cout << "  " << r.name << ": " << r.summary << "\n    checks:";
        for (const auto& [name, rule] : r.checks) std::cout << " " << name;
        std::cout << "\n";
    }
    std::cout << "bundled scenarios (" << PKS_SCENARIO_DIR << "):\n";
    std::vector<std::pair<std::string, std::string>> found;
    if (fs::is_directory(PKS_SCENARIO_DIR))
        for (const auto& e : fs::directory_iterator(PKS_SCENARIO_DIR)) {
            if (e.path().extension() != ".cfg") continue;
            std::string recipe = "?";
            try {
                recipe = pks::load_scenario(e.path().string()).recipe;
            } catch (const pks::Error& err) {
                recipe = std::string("invalid: ") + err.what();
            }
            found.emplace_back(e.path().stem().string(), recipe);
        }
    std::sort(found.begin(), found.end());
    for (const auto& [name, recipe] : found) std::cout << "  " << name << " [" << recipe << "]\n";
    return ok;
}

int cmd_constants(int n, double mass, std::vector<double> b0, long seed, double samples, const std::string& out_root) {
    try {
        if (b0.size() == 1 && b0[0] == 0.0) b0.assign(static_cast<std::size_t>(n), 0.0);
        if (static_cast<int>(b0.size()) != n) throw pks::Error(pks::ErrorCode::ConfigError, "--b0 needs n components");
        std::optional<pks::WStarField> w;
        if (n == 3) w = pks::w_star(pks::make_radial_grid(3, 1024, 30.0));
        const auto j = pks::constants_json(n, mass, b0, w ? &*w : nullptr, static_cast<std::size_t>(samples),
                                           static_cast<std::uint64_t>(seed < 0 ? 1 : seed));
        std::cout << j.dump(2) << "\n";
        if (!out_root.empty()) {
            fs::create_directories(out_root);
            std::ofstream(fs::path(out_root) / ("constants_n" + std::to_string(n) + ".json")) << j.dump(2) << "\n";
        }
        return ok;
    } catch (const pks::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_for(e);
    }
}

int cmd_profile(double mass, std::size_t size, double extent, const std::string& out_root) {
    try {
        const auto p = pks::self_similar_profile_2d(mass, pks::make_radial_grid(2, size, extent));
        std::cout << pks::profile_json(p).dump(2) << "\n";
        if (!out_root.empty()) {
            fs::create_directories(out_root);
            std::ofstream os(fs::path(out_root) / ("profile_M" + pks::detail::mass_label(mass) + ".csv"), std::ios::binary);
            os << std::setprecision(pks::csv_digits);
            pks::write_snapshot(os, p.field, 1.0);
        }
        return p.converged ? ok : check_failed;
    } catch (const pks::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_for(e);
    }
}

// "4pi", "0.5 pi" and plain numbers
double parse_mass(const std::string& text) {
    std::istringstream in("m = " + text);
    return pks::Config::parse(in, "--mass").number("m");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patlak-Keller-Segel numerical laboratory"};
    app.require_subcommand(1);
    std::string out_root;  // run defaults to ./out, the others write only when asked
    long seed = -1;
    unsigned parallel = 1;
    app.add_option("--out", out_root, "output directory root");
    app.add_option("--seed", seed, "override the scenario seed");
    app.add_option("--parallel", parallel, "number of scenario workers")->check(CLI::Range(1u, 256u));

    auto* run = app.add_subcommand("run", "run scenario files");
    std::vector<std::string> cfgs;
    run->add_option("cfg", cfgs, "scenario files")->required();

    app.add_subcommand("list", "list recipes and bundled scenarios");

    auto* constants = app.add_subcommand("constants", "export c1 and c2 with oracle cross-checks");
    int n = 3;
    std::string mass_text = "1";
    std::vector<double> b0{0.0};
    double samples = 1e6;
    constants->add_option("--n", n, "dimension")->check(CLI::Range(2, 5));
    constants->add_option("--mass", mass_text, "total mass, '4pi' style accepted");
    constants->add_option("--b0", b0, "centre of mass, comma separated")->delimiter(',');
    constants->add_option("--mc-samples", samples, "Monte Carlo samples for the c1 oracle");

    auto* profile = app.add_subcommand("profile", "solve for the 2D self-similar profile");
    std::size_t size = 4096;
    double extent = 60.0;
    profile->add_option("--mass", mass_text, "total mass, '4pi' style accepted")->required();
    profile->add_option("--size", size, "radial nodes");
    profile->add_option("--extent", extent, "outer radius");

    for (auto* sub : {run, constants, profile}) {
        sub->add_option("--out", out_root, "output directory root");
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_option("--parallel", parallel, "number of scenario workers")->check(CLI::Range(1u, 256u));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    double mass = 1.0;
    try {
        mass = parse_mass(mass_text);
    } catch (const pks::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    }

    if (*run) return cmd_run(cfgs, out_root.empty() ? "out" : out_root, seed, parallel);
    if (app.got_subcommand("list")) return cmd_list();
    if (*constants) return cmd_constants(n, mass, b0, seed, samples, out_root);
    if (*profile) return cmd_profile(mass, size, extent, out_root);
    return config_error;
}
