#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "traplab/json_io.hpp"
#include "traplab/resonator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin() {
    const char* p = std::getenv("TRAPLAB_BIN");
    REQUIRE(p != nullptr);
    return p;
}

fs::path work_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "traplab_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = bin() + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("generate writes the documented layouts") {
    const auto dir = work_dir("generate");
    SECTION("point trap") {
        REQUIRE(run("generate point --out " + dir.string()) == 0);
        const auto layout = traplab::io::layout_from_json(
            traplab::io::read_json_file(dir / "layout.json"));
        CHECK(layout.electrodes.size() == 3);
    }
    SECTION("2x2 with 6 mm pitch") {
        REQUIRE(run("generate array2x2 --pitch 6e-3 --out " + dir.string()) == 0);
        const auto layout = traplab::io::layout_from_json(
            traplab::io::read_json_file(dir / "layout.json"));
        int addr = 0;
        for (const auto& e : layout.electrodes)
            if (e.role == traplab::geometry::Role::rf_addressable) ++addr;
        CHECK(addr == 4);
    }
    SECTION("folsom 4x4: 16 sites at 1.5 mm pitch") {
        REQUIRE(run("generate folsom4x4 --out " + dir.string()) == 0);
        const auto layout = traplab::io::layout_from_json(
            traplab::io::read_json_file(dir / "layout.json"));
        std::vector<Eigen::Vector2d> sites;
        for (const auto& e : layout.electrodes)
            if (e.role == traplab::geometry::Role::ground && e.holes.empty()) {
                Eigen::Vector2d c(0, 0);
                for (const auto& v : e.outer) c += v;
                sites.push_back(c / double(e.outer.size()));
            }
        REQUIRE(sites.size() == 16);
        double nearest = 1e9;
        for (std::size_t i = 1; i < sites.size(); ++i)
            nearest = std::min(nearest, (sites[i] - sites[0]).norm());
        CHECK_THAT(nearest, Catch::Matchers::WithinRel(1.5e-3, 1e-9));
    }
    SECTION("invalid parameters exit with the parameter code") {
        CHECK(run("generate array2x2 --pitch -1 --out " + dir.string()) == 3);
        CHECK(run("generate bogus-kind --out " + dir.string()) == 3);
    }
}

TEST_CASE("generate is byte-deterministic") {
    const auto d1 = work_dir("det1");
    const auto d2 = work_dir("det2");
    REQUIRE(run("generate array2x2 --seed 42 --out " + d1.string()) == 0);
    REQUIRE(run("generate array2x2 --seed 42 --out " + d2.string()) == 0);
    CHECK(slurp(d1 / "layout.json") == slurp(d2 / "layout.json"));
}

TEST_CASE("analyze finds the point-trap site and writes map slices") {
    const auto dir = work_dir("analyze");
    REQUIRE(run("generate point --out " + dir.string()) == 0);
    REQUIRE(run("analyze --layout " + (dir / "layout.json").string() +
                " --vnom 100 --freq 1e7 --resolution 15 --out " + dir.string()) == 0);
    const auto sites = traplab::io::read_json_file(dir / "sites.json");
    REQUIRE(sites.at("sites").size() == 1);
    CHECK(fs::exists(dir / "map_horizontal.csv"));
    CHECK(fs::exists(dir / "map_vertical.csv"));

    SECTION("zero drive reports no minima with the physics exit code") {
        CHECK(run("analyze --layout " + (dir / "layout.json").string() +
                  " --vnom 0 --freq 1e7 --resolution 11 --out " + dir.string()) == 4);
    }
}

TEST_CASE("table1 emits the gate-time table") {
    const auto dir = work_dir("table1");
    REQUIRE(run("table1 --out " + dir.string()) == 0);
    const auto body = slurp(dir / "gate_times.csv");
    CHECK(body.find("a_m,omega_rad_s,t_gate_s,t_gate_reduced_s") == 0);
    // 5 rows + header
    CHECK(std::count(body.begin(), body.end(), '\n') == 6);

    const auto d2 = work_dir("table1b");
    REQUIRE(run("table1 --out " + d2.string()) == 0);
    CHECK(slurp(dir / "gate_times.csv") == slurp(d2 / "gate_times.csv"));
}

TEST_CASE("resonator subcommands") {
    const auto dir = work_dir("resonator");
    const auto tank = traplab::resonator::TankResonator::paper_tank();
    traplab::io::write_json_file(dir / "paper.json", traplab::io::to_json(tank));

    SECTION("response writes the frequency sweep") {
        REQUIRE(run("resonator response " + (dir / "paper.json").string() + " --out " + dir.string()) == 0);
        const auto body = slurp(dir / "response.csv");
        CHECK(body.find("f_hz,gain_abs,gain_phase_rad,z_in_real,z_in_imag") == 0);
    }
    SECTION("lock achieves sub-degree residual for 0.2 pF") {
        traplab::resonator::PhaseLockLoop loop;
        loop.resonator = {22.434e-6, 84.0, 91.71e-12, 91.71e-12, 12.84e-12, 50.0, 9.7e6};
        loop.resonator.c_trap -= loop.varactor_chain(27.5e-12);
        loop.varactor_min = 5e-12;
        loop.varactor_max = 50e-12;
        traplab::io::write_json_file(dir / "loop.json", traplab::io::to_json(loop));
        CHECK(run("resonator lock " + (dir / "loop.json").string() + " --dc 0.2e-12 --out " +
                  dir.string()) == 0);
    }
    SECTION("empty circuit file is a parse error") {
        std::ofstream(dir / "empty.json").close();
        CHECK(run("resonator response " + (dir / "empty.json").string() + " --out " + dir.string()) == 2);
    }
    SECTION("missing circuit file is an io error") {
        CHECK(run("resonator response " + (dir / "nope.json").string() + " --out " + dir.string()) == 5);
    }
}

TEST_CASE("sweep on a single fraction matches analyze sites") {
    const auto dir = work_dir("sweep");
    REQUIRE(run("generate array2x2 --out " + dir.string()) == 0);
    REQUIRE(run("sweep --layout " + (dir / "layout.json").string() +
                " --group addr_h_1_0 --fractions 1.0,0.9 --out " + dir.string()) == 0);
    const auto morph = traplab::io::read_json_file(dir / "morph.json");
    REQUIRE(morph.at("sweep").size() == 2);
    const auto& rec = morph.at("sweep").at(0);
    CHECK(rec.at("fraction").get<double>() == 1.0);
    CHECK(rec.at("has_sites").get<bool>());
    // positions match the analyzed sites' spacing scale
    CHECK_THAT(rec.at("inter_site_distance").get<double>(),
               Catch::Matchers::WithinAbs(6e-3, 0.4e-3));
    CHECK(fs::exists(dir / "morph.csv"));

    SECTION("unknown group exits with the parameter code") {
        CHECK(run("sweep --layout " + (dir / "layout.json").string() +
                  " --group addr_h_9_9 --fractions 1.0,0.9 --out " + dir.string()) == 3);
    }
}

TEST_CASE("simulate runs a point-trap scenario file") {
    const auto dir = work_dir("simulate");
    REQUIRE(run("generate point --out " + dir.string()) == 0);

    traplab::dynamics::Scenario sc;
    sc.drive.v_nom = 60.0;
    sc.drive.omega = 2.0 * 3.14159265358979 * 1e7;
    sc.species = traplab::metrics::Species::ca40_ion();
    sc.duration = 3e-4;
    traplab::dynamics::SimState init;
    init.position = {5e-6, 0, 0.33e-3};
    traplab::io::write_json_file(dir / "scenario.json",
                                 traplab::io::to_json(sc, "layout.json", init));

    REQUIRE(run("simulate --scenario " + (dir / "scenario.json").string() + " --out " + dir.string()) == 0);
    const auto summary = traplab::io::read_json_file(dir / "summary.json");
    CHECK_FALSE(summary.at("escaped").get<bool>());
    CHECK(summary.contains("secular_peaks_rad_s"));
    CHECK(fs::exists(dir / "trajectory.csv"));

    SECTION("escaping particle exits with the physics code and truncates") {
        auto esc = sc;
        init.velocity = {80.0, 0, 0};
        traplab::io::write_json_file(dir / "escape.json",
                                     traplab::io::to_json(esc, "layout.json", init));
        CHECK(run("simulate --scenario " + (dir / "escape.json").string() + " --out " + dir.string()) == 4);
        const auto summary2 = traplab::io::read_json_file(dir / "summary.json");
        CHECK(summary2.at("escaped").get<bool>());
    }
}

TEST_CASE("config file values are overridden by flags") {
    const auto dir = work_dir("config");
    json cfg;
    cfg["generate"] = {{"pitch", 4e-3}};
    traplab::io::write_json_file(dir / "cfg.json", cfg);
    REQUIRE(run("--config " + (dir / "cfg.json").string() + " generate array2x2 --out " +
                dir.string()) == 0);
    auto layout = traplab::io::layout_from_json(traplab::io::read_json_file(dir / "layout.json"));
    // config pitch 4 mm applied
    double best = 1e9;
    std::vector<Eigen::Vector2d> sites;
    for (const auto& e : layout.electrodes)
        if (e.role == traplab::geometry::Role::ground && e.holes.empty()) {
            Eigen::Vector2d c(0, 0);
            for (const auto& v : e.outer) c += v;
            sites.push_back(c / double(e.outer.size()));
        }
    for (std::size_t i = 1; i < sites.size(); ++i)
        best = std::min(best, (sites[i] - sites[0]).norm());
    CHECK_THAT(best, Catch::Matchers::WithinRel(4e-3, 1e-9));

    // flag overrides the config value
    REQUIRE(run("--config " + (dir / "cfg.json").string() + " generate array2x2 --pitch 6e-3 --out " +
                dir.string()) == 0);
    layout = traplab::io::layout_from_json(traplab::io::read_json_file(dir / "layout.json"));
    sites.clear();
    for (const auto& e : layout.electrodes)
        if (e.role == traplab::geometry::Role::ground && e.holes.empty()) {
            Eigen::Vector2d c(0, 0);
            for (const auto& v : e.outer) c += v;
            sites.push_back(c / double(e.outer.size()));
        }
    best = 1e9;
    for (std::size_t i = 1; i < sites.size(); ++i)
        best = std::min(best, (sites[i] - sites[0]).norm());
    CHECK_THAT(best, Catch::Matchers::WithinRel(6e-3, 1e-9));
}

TEST_CASE("unknown flags exit with the parse code") {
    CHECK(run("generate point --bogus-flag 3") == 2);
    CHECK(run("nonsense-command") == 2);
}
