#include "doctest.h"

#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace brake::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("brakeorb_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

struct Run {
    std::ostringstream report;
    std::ostringstream log_text;
    Logger log{&log_text};
    RunContext ctx;

    Run(const std::string& config, const fs::path& out) {
        std::istringstream is(config);
        ctx.config = Config::parse(is, "test.ini");
        ctx.out = out;
        ctx.log = &log;
        ctx.report = &report;
        apply_run_section(ctx, std::nullopt, 1);
    }
};

const std::string kRadial = R"([model]
name = radial_bump
n = 1
m = 3.6415926535897932
[pipeline]
kmax = 16
directions = 8
[run]
seed = 1
)";

}  // namespace

TEST_CASE("config parsing") {
    std::istringstream is("# comment\n[a]\nx = 1.5  # trailing\nlist = 1, 2,3\n[b]\nname = hi\n");
    const Config c = Config::parse(is, "t.ini");
    CHECK(c.number("a", "x", 0) == 1.5);
    CHECK(c.numbers("a", "list", {}) == std::vector<double>{1, 2, 3});
    CHECK(c.text("b", "name", "") == "hi");
    CHECK(c.number("a", "missing", 7) == 7);
    CHECK_THROWS_AS(c.require_keys("a", {"x"}), ConfigError);
    CHECK_THROWS_AS(c.require_sections({"a"}), ConfigError);

    auto fails_with = [](const std::string& text, const std::string& fragment) {
        std::istringstream in(text);
        try {
            Config::parse(in, "bad.ini");
        } catch (const ConfigError& e) {
            return std::string(e.what()).find(fragment) != std::string::npos;
        }
        return false;
    };
    CHECK(fails_with("[a]\nnovalue\n", "bad.ini:2: expected key = value"));
    CHECK(fails_with("x = 1\n", "bad.ini:1: key outside"));
    CHECK(fails_with("[a\n", "unterminated"));
    CHECK(fails_with("[a]\nx = 1\nx = 2\n", "bad.ini:3: duplicate key"));
    CHECK(fails_with("[a]\nx =\n", "empty value"));

    std::istringstream num("[p]\nk = 2.5\nz = abc\n");
    const Config d = Config::parse(num, "n.ini");
    CHECK_THROWS_WITH_AS(d.integer("p", "k", 0), "n.ini:2: [p] k: not an integer", ConfigError);
    CHECK_THROWS_WITH_AS(d.number("p", "z", 0), "n.ini:3: [p] z: not a number: 'abc'", ConfigError);
}

TEST_CASE("find-orbit writes a self-contained, verifiable, deterministic output") {
    const fs::path out = fresh_dir("find");
    Run a(kRadial, out);
    REQUIRE(cmd_find_orbit(a.ctx) == kExitOk);
    CHECK(a.log_text.str().find("INFO find-orbit: ") != std::string::npos);
    const std::string first = slurp(out / "orbit.csv");
    CHECK(first.rfind("t,x1,x2\n", 0) == 0);

    Run again(kRadial, out);
    REQUIRE(cmd_find_orbit(again.ctx) == kExitOk);
    CHECK(slurp(out / "orbit.csv") == first);

    // verify from the directory alone: empty config, metadata next to the CSV
    Run v("", out);
    CHECK(cmd_verify(v.ctx, out / "orbit.csv") == kExitOk);
    CHECK(v.report.str().find("status = verified") != std::string::npos);
}

TEST_CASE("find-orbit below the threshold and on bad configs") {
    const fs::path out = fresh_dir("below");
    std::string below = kRadial;
    below.replace(below.find("3.6415926535897932"), 18, "2.6415926535897932");
    Run r(below, out);
    CHECK(cmd_find_orbit(r.ctx) == kExitFailure);
    CHECK(r.log_text.str().find("ERROR find-orbit: ") != std::string::npos);

    Run unknown("[model]\nname = radial_bump\n[pipeline]\nkmaxx = 3\n", out);
    CHECK_THROWS_AS(cmd_find_orbit(unknown.ctx), ConfigError);
    Run model("[model]\nname = nosuch\n", out);
    CHECK_THROWS_AS(cmd_find_orbit(model.ctx), ConfigError);
}

TEST_CASE("verify flags a corrupted sample") {
    const fs::path out = fresh_dir("corrupt");
    Run a(kRadial, out);
    REQUIRE(cmd_find_orbit(a.ctx) == kExitOk);
    std::istringstream csv(slurp(out / "orbit.csv"));
    std::ostringstream bad;
    std::string line;
    for (int i = 0; std::getline(csv, line); ++i) {
        if (i == 10) {
            const auto comma = line.find(',');
            const auto next = line.find(',', comma + 1);
            const double v = std::stod(line.substr(comma + 1, next - comma - 1)) + 1e-2;
            line = line.substr(0, comma + 1) + brake::format_double(v) + line.substr(next);
        }
        bad << line << '\n';
    }
    std::ofstream(out / "bad.csv") << bad.str();
    fs::copy_file(out / "orbit.json", out / "bad.json");
    Run v("", out);
    CHECK(cmd_verify(v.ctx, out / "bad.csv") == kExitFailure);
    CHECK(v.report.str().find("ode residual") != std::string::npos);

    std::ofstream(out / "junk.csv") << "t,x1,x2\n0,1\n";
    Run j("", out);
    CHECK_THROWS_AS(cmd_verify(j.ctx, out / "junk.csv"), ConfigError);
}

TEST_CASE("sweep rows and empty eps list") {
    const fs::path out = fresh_dir("sweep");
    const std::string cfg = "[model]\nname = s_symmetric_radial\nn = 1\n[sweep]\nlevel = 1\neps_list = 0.2, 0.1\n"
                            "[run]\nseed = 1\n";
    Run s(cfg, out);
    REQUIRE(cmd_sweep(s.ctx) == kExitOk);
    const std::string table = slurp(out / "sweep.csv");
    CHECK(table.rfind("eps,lo,hi,found,lambda", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
    Run v("", out);
    CHECK(cmd_verify(v.ctx, out / "sweep_1.csv") == kExitOk);

    Run sym("[model]\nname = s_symmetric_radial\n[sweep]\nm = 3\nM = 0.5\neps_list = 0.2\n", fresh_dir("sweep3"));
    REQUIRE(cmd_sweep(sym.ctx) == kExitOk);
    CHECK(sym.report.str().find("s_symmetry") != std::string::npos);

    Run empty("[model]\nname = s_symmetric_radial\n[sweep]\nlevel = 1\n", out);
    CHECK_THROWS_AS(cmd_sweep(empty.ctx), ConfigError);
}

TEST_CASE("capacity records and report") {
    const fs::path out = fresh_dir("capacity");
    Run c("[capacity]\ndomain = ball\nr = 1\n[run]\nseed = 1\n", out);
    REQUIRE(cmd_capacity(c.ctx, false) == kExitOk);
    CHECK(c.report.str().find("bracket") != std::string::npos);
    Run again("[capacity]\ndomain = ball\nr = 1\n[run]\nseed = 1\n", out);
    REQUIRE(cmd_capacity(again.ctx, false) == kExitOk);
    Run rep("", out);
    REQUIRE(cmd_capacity(rep.ctx, true) == kExitOk);
    const std::string table = rep.report.str();
    CHECK(table.find("ball(1)") == table.rfind("ball(1)"));

    Run torus("[capacity]\ndomain = torus\n", out);
    CHECK_THROWS_AS(cmd_capacity(torus.ctx, false), ConfigError);
    Run missing("", fresh_dir("empty"));
    CHECK_THROWS_AS(cmd_capacity(missing.ctx, true), ConfigError);
}

TEST_CASE("embed-torus passes every audit") {
    const fs::path out = fresh_dir("torus");
    Run t("[torus]\na = 1\nn = 2\n", out);
    REQUIRE(cmd_embed_torus(t.ctx) == kExitOk);
    const std::string report = t.report.str();
    CHECK(report.find("pullback: PASS") != std::string::npos);
    CHECK(report.find("equivariance: PASS") != std::string::npos);
    CHECK(report.find("containment: PASS") != std::string::npos);
    CHECK(report.find("bound: PASS") != std::string::npos);
}
