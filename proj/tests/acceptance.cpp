// One line per acceptance criterion. Each criterion runs a bundled scenario and
// passes when every check of that scenario passes.

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pks/scenarios.hpp"

namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    const char* title;
    const char* scenario;
};

const std::vector<Criterion> criteria{
    {1, "virial identity", "virial_2d"},
    {2, "2D threshold behaviour", "blowup_sweep"},
    {3, "self-similar profile", "profile_gm"},
    {4, "higher-dimensional decay rate", "rate_n3"},
    {5, "first-order expansion", "heat_expansion"},
    {6, "constants oracle equivalence", "c2_constant"},
    {7, "W function", "wstar_moments"},
    {8, "Phi-density monotonicity", "phi_monotone"},
    {9, "potential bound", "potential_bound"},
    {10, "property suite", "properties"},
};

std::string brief(const pks::CheckResult& c) {
    std::ostringstream os;
    os << std::setprecision(4) << c.name << "=" << c.measured << (c.pass ? "" : " (FAIL, limit ");
    if (!c.pass) os << c.expected << ")";
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    // optional filter: acceptance 3 7 runs only those criteria
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::stoi(argv[i]));
    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        std::string line;
        bool pass = false;
        double seconds = 0.0;
        try {
            const auto s = pks::load_scenario((fs::path(PKS_SCENARIO_DIR) / (std::string(c.scenario) + ".cfg")).string());
            const auto res = pks::run_scenario(s, (fs::path(PKS_ACCEPTANCE_OUT) / s.name).string());
            pass = res.passed() && !res.checks.empty();
            seconds = res.seconds;
            for (const auto& r : res.checks) line += (line.empty() ? "" : "; ") + brief(r);
        } catch (const pks::Error& e) {
            line = e.what();
        } catch (const std::exception& e) {
            line = e.what();
        }
        if (!pass) ++failures;
        std::cout << "AC" << c.id << " " << c.title << " [" << c.scenario << "]: " << (pass ? "PASS" : "FAIL") << " ("
                  << std::fixed << std::setprecision(1) << seconds << " s) " << std::defaultfloat << line << std::endl;
    }
    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
