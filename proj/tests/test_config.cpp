#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "pks/scenarios.hpp"

using namespace pks;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text) {
    std::istringstream in(text);
    return Config::parse(in, "test.cfg");
}

ErrorCode code_of(const std::function<void()>& fn, std::string* message = nullptr) {
    try {
        fn();
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidData;
}

const std::string small_run = R"([scenario]
name = small
recipe = evolve
dim = 2
[initial]
type = gaussian
mass = 2pi
[grid]
kind = radial
size = 256
extent = 20
[solver]
t_start = 1
t_end = 2
[checks]
mass_conservation = 1e-7
virial_slope = 0.02
)";

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("pks_test_" + std::to_string(::getpid()) + "_" +
                                           ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return path / name;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

int cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(PKS_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, SectionsNumbersAndFlags) {
    const auto c = parse("# comment\n[a]\nx = 4pi\ny = 0.5 pi  # trailing\nz = off\nlist = 1, 2,3\n[b]\nname = hello world\n");
    EXPECT_DOUBLE_EQ(c.number("a.x"), 4 * pi);
    EXPECT_DOUBLE_EQ(c.number("a.y"), 0.5 * pi);
    EXPECT_FALSE(c.flag("a.z", true));
    EXPECT_EQ(c.numbers("a.list"), (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(c.string("b.name"), "hello world");
    EXPECT_EQ(c.section("a"), (std::vector<std::string>{"x", "y", "z", "list"}));
    EXPECT_EQ(c.unused(), std::vector<std::string>{});
}

TEST(Config, ErrorsNameTheKeyOrLine) {
    std::string msg;
    EXPECT_EQ(code_of([] { parse("[a]\nx = 1\nx = 2\n"); }, &msg), ErrorCode::ConfigError);
    EXPECT_NE(msg.find("a.x"), std::string::npos);
    EXPECT_EQ(code_of([] { parse("[a]\njust words\n"); }, &msg), ErrorCode::ConfigError);
    EXPECT_NE(msg.find(":2:"), std::string::npos);
    EXPECT_EQ(code_of([] { parse("[a]\nx = abc\n").number("a.x"); }, &msg), ErrorCode::ConfigError);
    EXPECT_NE(msg.find("a.x"), std::string::npos);
    EXPECT_EQ(code_of([] { parse("[a]\nx = 1.5\n").integer("a.x", 0); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { parse("[a]\nx = maybe\n").flag("a.x", true); }), ErrorCode::ConfigError);
}

TEST(Scenario, ValidatesInvariants) {
    EXPECT_NO_THROW(make_scenario(parse(small_run)));
    auto bad = [&](const std::string& from, const std::string& to, const std::string& key) {
        std::string text = small_run;
        text.replace(text.find(from), from.size(), to);
        std::string msg;
        EXPECT_EQ(code_of([&] { make_scenario(parse(text)); }, &msg), ErrorCode::ConfigError) << to;
        EXPECT_NE(msg.find(key), std::string::npos) << msg;
    };
    bad("mass_conservation = 1e-7", "mass_conservation = 0", "checks.mass_conservation");
    bad("virial_slope = 0.02", "no_such_check = 0.1", "checks.no_such_check");
    bad("dim = 2", "dim = 6", "scenario.dim");
    bad("type = gaussian", "type = file\nfile = missing.csv", "initial.file");
    bad("recipe = evolve", "recipe = nothing", "scenario.recipe");
    bad("t_end = 2", "t_end = 0.5", "solver.t_end");
    bad("kind = radial\nsize = 256", "kind = cartesian\nsize = 100", "grid.size");
}

TEST(Scenario, CheckRules) {
    EXPECT_TRUE(judge("a", CheckRule::relative, 1.009, 1.0, 0.01).pass);
    EXPECT_FALSE(judge("a", CheckRule::relative, 1.011, 1.0, 0.01).pass);
    EXPECT_TRUE(judge("a", CheckRule::absolute, -1.45, -1.5, 0.1).pass);
    EXPECT_TRUE(judge("a", CheckRule::not_below_neg, -0.4, 0, 0.5).pass);
    EXPECT_FALSE(judge("a", CheckRule::at_most_neg, 0.0, 0, 1e-6).pass);
    EXPECT_TRUE(judge("a", CheckRule::at_least_unity, 0.96, 0, 0.05).pass);
    EXPECT_FALSE(judge("a", CheckRule::at_most, std::nan(""), 0, 1.0).pass);
}

TEST(Scenario, RunWritesOutputs) {
    TempDir dir;
    const auto res = run_scenario(make_scenario(parse(small_run)), dir.path.string());
    EXPECT_TRUE(res.passed());
    for (const char* f : {"trajectory.csv", "diagnostics.csv", "manifest.json", "summary.json"})
        EXPECT_TRUE(fs::exists(dir.path / f)) << f;
    const auto summary = nlohmann::json::parse(slurp(dir.path / "summary.json"));
    EXPECT_EQ(summary["mass_conservation"]["status"], "pass");
    EXPECT_TRUE(summary["virial_slope"].contains("measured"));
    EXPECT_TRUE(summary["virial_slope"].contains("tolerance"));
}

TEST(Cli, ExitCodes) {
    TempDir dir;
    const auto log = dir.path / "log.txt";
    const auto good = dir.write("good.cfg", small_run);
    EXPECT_EQ(cli("run " + good.string() + " --out " + (dir.path / "a").string(), log), 0);

    std::string text = small_run;
    text.replace(text.find("size = 256"), 10, "size = many");
    const auto malformed = dir.write("malformed.cfg", text);
    EXPECT_EQ(cli("run " + malformed.string() + " --out " + (dir.path / "b").string(), log), 2);
    EXPECT_NE(slurp(log).find("grid.size"), std::string::npos);

    text = small_run;
    text.replace(text.find("virial_slope = 0.02"), 19, "virial_slope = 0");
    EXPECT_EQ(cli("run " + dir.write("zero.cfg", text).string() + " --out " + (dir.path / "c").string(), log), 2);

    text = small_run;
    text.replace(text.find("virial_slope = 0.02"), 19, "virial_slope = 1e-12");
    EXPECT_EQ(cli("run " + dir.write("tight.cfg", text).string() + " --out " + (dir.path / "d").string(), log), 1);

    EXPECT_EQ(cli("constants --n 2 --mass 1", log), 1);
    EXPECT_NE(slurp(log).find("UseProfileModule"), std::string::npos);

    EXPECT_EQ(cli("list", log), 0);
    const auto listing = slurp(log);
    for (const char* s : {"virial_2d", "profile_gm", "rate_n3", "c2_constant", "blowup_sweep", "phi_monotone", "wstar_moments"})
        EXPECT_NE(listing.find(s), std::string::npos) << s;
}

TEST(Cli, ConstantsN4CarriesOracle) {
    TempDir dir;
    const auto log = dir.path / "log.txt";
    ASSERT_EQ(cli("constants --n 4 --mass 1 --b0 0 --out " + dir.path.string(), log), 0);
    const auto j = nlohmann::json::parse(slurp(dir.path / "constants_n4.json"));
    EXPECT_LE(j["rel_disagreement"]["c2"].get<double>(), 1e-3);
    EXPECT_EQ(j["n"], 4);
}

TEST(Cli, ParallelRunsAreBitIdentical) {
    TempDir dir;
    const auto log = dir.path / "log.txt";
    std::string second = small_run;
    second.replace(second.find("name = small"), 12, "name = small_b");
    const auto a = dir.write("a.cfg", small_run), b = dir.write("b.cfg", second);
    ASSERT_EQ(cli("run " + a.string() + " --out " + (dir.path / "seq").string(), log), 0);
    ASSERT_EQ(cli("run " + a.string() + " " + b.string() + " --parallel 2 --out " + (dir.path / "par").string(), log), 0);
    const auto one = slurp(dir.path / "seq/small/trajectory.csv");
    EXPECT_FALSE(one.empty());
    EXPECT_EQ(one, slurp(dir.path / "par/small/trajectory.csv"));
    EXPECT_EQ(one, slurp(dir.path / "par/small_b/trajectory.csv"));
    EXPECT_EQ(one.find('\r'), std::string::npos);
    // 17 significant digits on the mass column of the first data row
    std::istringstream rows(one);
    std::string header, row;
    std::getline(rows, header);
    std::getline(rows, row);
    const auto mass = row.substr(row.find(',') + 1, row.find(',', row.find(',') + 1) - row.find(',') - 1);
    std::size_t digits = 0;
    bool leading = true;
    for (char ch : mass) {
        if (!std::isdigit(static_cast<unsigned char>(ch))) {
            if (ch == 'e' || ch == 'E') break;
            continue;
        }
        if (leading && ch == '0') continue;
        leading = false;
        ++digits;
    }
    EXPECT_GE(digits, 16u) << mass;
}
