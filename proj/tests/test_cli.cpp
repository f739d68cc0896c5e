#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sympoc/metrics.hpp"
#include "sympoc/scenario_json.hpp"
#include "sympoc/trajectory_io.hpp"
#include "test_util.hpp"

using namespace sympoc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("sympoc_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

#ifdef SYMPOC_CLI_PATH
int run_cli(const std::string& args) {
    const std::string cmd = std::string(SYMPOC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}
#endif

}  // namespace

TEST_CASE("builtin scenarios") {
    SECTION("four-drones-capsules boundary states") {
        const Scenario s = load_scenario("four-drones-capsules");
        CHECK(s.agent_count == 4);
        CHECK(s.x0 == Vec{-2, -2, 2, -2, 2, 2, -2, 2});
        CHECK(s.xT == Vec{2, 2, -2, 2, -2, -2, 2, -2});
        CHECK(s.obstacles.size() == 2);
        CHECK(s.speed_cap == 25.0);
        CHECK(s.horizon == 1.0);
    }
    SECTION("room-32 uses the documented radii and mirrored targets") {
        const Scenario s = load_scenario("room-32");
        CHECK(s.agent_count == 32);
        CHECK(s.room_half_width == 5.0);
        CHECK(s.agent_radius == 0.3);
        for (std::size_t i = 0; i < s.x0.size(); ++i) CHECK(s.xT[i] == -s.x0[i]);
        // no initial collisions
        const Metrics m = compute_metrics(
            Trajectory{{0.0}, {s.x0}, {Vec(s.x0.size(), 0.0)}}, s);
        REQUIRE(m.min_normalized_distance.has_value());
        CHECK(*m.min_normalized_distance > 1.0);
    }
    SECTION("circle2d matches the single-vehicle setup") {
        const Scenario s = load_scenario("circle2d");
        CHECK(s.agent_count == 1);
        CHECK(s.x0 == Vec{0.0, 0.0});
        CHECK(s.xT == Vec{0.0, 1.0});
        REQUIRE(s.obstacles.size() == 1);
        const auto& ball = std::get<Ball>(s.obstacles[0]);
        CHECK(ball.center == Vec{0.0, 0.5});
        CHECK(ball.radius == 0.2);
    }
    SECTION("room-128-balls and swarm-3d are well formed") {
        CHECK_NOTHROW(load_scenario("room-128-balls").validate());
        const Scenario sw = load_scenario("swarm-3d");
        CHECK(sw.space_dim == 3);
        CHECK(sw.agent_count == 100);
        REQUIRE(sw.obstacles.size() == 2);
        const auto& b1 = std::get<Box3d>(sw.obstacles[0]);
        CHECK(b1.lo == std::array<double, 3>{-1.8, -0.3, 0.2});
        CHECK(b1.hi == std::array<double, 3>{1.8, 0.3, 6.8});
        const auto& b2 = std::get<Box3d>(sw.obstacles[1]);
        CHECK(b2.lo == std::array<double, 3>{2.2, -0.8, 0.2});
        CHECK(b2.hi == std::array<double, 3>{3.8, 0.8, 3.8});
    }
}

TEST_CASE("scenario JSON parsing and validation errors name the field") {
    const auto dir = temp_dir("scenario");
    SECTION("round trip through JSON") {
        const Scenario s = load_scenario("four-drones-capsules");
        const auto path = dir / "scene.json";
        std::ofstream(path) << scenario_to_json(s).dump(2);
        const Scenario back = load_scenario(path.string());
        CHECK(back.x0 == s.x0);
        CHECK(back.xT == s.xT);
        CHECK(back.obstacles.size() == s.obstacles.size());
        CHECK(back.loss_kind == s.loss_kind);
    }
    SECTION("malformed obstacle names the entry") {
        json j = scenario_to_json(load_scenario("circle2d"));
        j["obstacles"][0] = {{"type", "hexagon"}, {"q", 1}};
        const auto path = dir / "bad.json";
        std::ofstream(path) << j.dump();
        try {
            load_scenario(path.string());
            FAIL("expected a schema error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("obstacles[0]") != std::string::npos);
        }
    }
    SECTION("missing boundary field is reported") {
        json j = scenario_to_json(load_scenario("circle2d"));
        j.erase("x0");
        const auto path = dir / "nox0.json";
        std::ofstream(path) << j.dump();
        try {
            load_scenario(path.string());
            FAIL("expected a schema error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("x0") != std::string::npos);
        }
    }
    SECTION("xT_mirror shorthand") {
        json j = scenario_to_json(load_scenario("circle2d"));
        j.erase("xT");
        j["xT_mirror"] = true;
        j["x0"] = Vec{1.0, -2.0};
        const auto path = dir / "mirror.json";
        std::ofstream(path) << j.dump();
        const Scenario s = load_scenario(path.string());
        CHECK(s.xT == Vec{-1.0, 2.0});
    }
    fs::remove_all(dir);
}

TEST_CASE("metric worked examples") {
    SECTION("two stationary agents one apart") {
        Scenario s;
        s.agent_count = 2;
        s.space_dim = 2;
        s.agent_radius = 0.3;
        s.constraint_radius = 0.3;
        s.x0 = {0, 0, 1, 0};
        s.xT = {0, 0, 1, 0};
        Trajectory traj;
        traj.times = {0.0, 1.0};
        traj.states = {s.x0, s.x0};
        traj.velocities = {Vec(4, 0.0), Vec(4, 0.0)};
        const Metrics m = compute_metrics(traj, s);
        REQUIRE(m.min_normalized_distance.has_value());
        CHECK(*m.min_normalized_distance == Catch::Approx(1.0 / 0.6));
        CHECK(m.cost == 0.0);
    }
    SECTION("straight line cost is 16 and touching agents give D = 1") {
        Scenario s;
        s.agent_count = 2;
        s.space_dim = 2;
        s.agent_radius = 0.3;
        s.constraint_radius = 0.3;
        s.x0 = {-2, -2, -2, -2.6};
        s.xT = {2, 2, 2, 1.4};
        Trajectory traj;
        const int n = 100;
        traj.times = linspace(0.0, 1.0, n + 1);
        for (double t : traj.times) {
            Vec x(4), v(4);
            for (int i = 0; i < 4; ++i) {
                x[static_cast<std::size_t>(i)] =
                    s.x0[static_cast<std::size_t>(i)] +
                    t * (s.xT[static_cast<std::size_t>(i)] - s.x0[static_cast<std::size_t>(i)]);
                v[static_cast<std::size_t>(i)] =
                    s.xT[static_cast<std::size_t>(i)] - s.x0[static_cast<std::size_t>(i)];
            }
            traj.states.push_back(std::move(x));
            traj.velocities.push_back(std::move(v));
        }
        const Metrics m = compute_metrics(traj, s);
        CHECK(m.cost == Catch::Approx(32.0));  // two agents, 16 each
        CHECK(m.scaled_cost == Catch::Approx(16.0));
        // constant separation 0.6 = 2 C_d
        CHECK(*m.min_normalized_distance == Catch::Approx(1.0));
    }
}

TEST_CASE("trajectory CSV round trip") {
    Rng rng(3);
    Trajectory traj;
    traj.times = linspace(0.0, 1.0, 8);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        traj.states.push_back(testutil::random_vec(6, rng));
        traj.velocities.push_back(testutil::random_vec(6, rng));
    }
    const auto dir = temp_dir("csv");
    const auto path = (dir / "traj.csv").string();
    export_trajectory(traj, 3, 2, path);

    SECTION("row count and exact re-parse") {
        std::ifstream f(path);
        std::string line;
        int rows = -1;  // header
        while (std::getline(f, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 8 * 3);

        const auto back = import_trajectory(path);
        CHECK(back.agent_count == 3);
        CHECK(back.space_dim == 2);
        REQUIRE(back.trajectory.times == traj.times);  // bitwise
        for (std::size_t k = 0; k < traj.states.size(); ++k) {
            REQUIRE(back.trajectory.states[k] == traj.states[k]);
            REQUIRE(back.trajectory.velocities[k] == traj.velocities[k]);
        }
    }
    SECTION("malformed rows are reported with a line number") {
        const auto bad = (dir / "bad.csv").string();
        std::ofstream(bad) << "t,agent,x1,x2,v1,v2\n0,1,1,2,3,notanumber\n";
        try {
            import_trajectory(bad);
            FAIL("expected a parse error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    fs::remove_all(dir);
}

#ifdef SYMPOC_CLI_PATH

TEST_CASE("command line pipeline", "[cli]") {
    const auto dir = temp_dir("pipeline");
    const std::string out = (dir / "run").string();

    SECTION("train writes artifacts and eval is idempotent") {
        // tiny free-space problem so this stays fast
        json j;
        j["name"] = "tiny";
        j["agents"] = {{"count", 1}, {"space_dim", 2}, {"radius", 0.0}};
        j["x0"] = Vec{-2, -2};
        j["xT"] = Vec{2, 2};
        j["net"] = {{"layers", 4}, {"width", 12}};
        j["loss"] = {{"kind", "aug"}, {"samples", 16}};
        const auto scene = (dir / "tiny.json").string();
        std::ofstream(scene) << j.dump();

        REQUIRE(run_cli("train " + scene + " --iters 800 --seed 1 --out " + out) == 0);
        REQUIRE(fs::exists(out + "/trajectory.csv"));
        REQUIRE(fs::exists(out + "/checkpoint.json"));
        REQUIRE(fs::exists(out + "/state.json"));
        REQUIRE(fs::exists(out + "/metrics.json"));

        json m1, m2;
        std::ifstream(out + "/metrics.json") >> m1;
        CHECK(m1.contains("min_constraint"));
        CHECK(m1.contains("cost"));

        const std::string eval_out = (dir / "eval").string();
        REQUIRE(run_cli("eval " + scene + " --traj " + out + "/trajectory.csv --out " + eval_out) == 0);
        REQUIRE(run_cli("eval " + scene + " --traj " + out + "/trajectory.csv --out " + eval_out) == 0);
        std::ifstream(eval_out + "/metrics.json") >> m2;
        json m3;
        {
            // second run must produce identical bytes
            std::ifstream f(eval_out + "/metrics.json");
            f >> m3;
        }
        CHECK(m2 == m3);
        CHECK(m2["cost"].get<double>() == Catch::Approx(m1["cost"].get<double>()).epsilon(1e-12));

        const std::string plot_out = (dir / "plotrun").string();
        REQUIRE(run_cli("export-plot " + scene + " --traj " + out + "/trajectory.csv --out " +
                        plot_out) == 0);
        REQUIRE(fs::exists(plot_out + "/plot/snapshot_0.csv"));
        REQUIRE(fs::exists(plot_out + "/plot/obstacles.json"));
    }
    SECTION("missing inputs exit nonzero") {
        CHECK(run_cli("eval circle2d --traj /nonexistent.csv --out " + out) != 0);
        CHECK(run_cli("train no-such-builtin --out " + out) != 0);
    }
    fs::remove_all(dir);
}

#endif
