// sympoc: plan collision-free minimum-energy trajectories for multiple agents
// by training a symplectic change of coordinates with straight latent dynamics,
// then optionally refining with a pseudospectral pass.
//
//   sympoc train|refine|eval|export-plot <scenario.json|builtin> [options]
//
// SYMPOC_THREADS caps the number of concurrent repeat workers.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sympoc/sympoc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sympoc;

namespace {

struct CommonArgs {
    std::string scenario;
    std::string out_dir = "sympoc-out";
    std::optional<std::string> loss_kind;
    std::optional<int> iters;
    std::optional<std::uint64_t> seed;
    std::optional<int> repeats;
    std::string traj_path;
    bool linear_init = false;
    std::optional<int> order;
    int inner_steps = 500;
    int output_grid = 100;
};

Scenario load_with_overrides(const CommonArgs& args) {
    Scenario s = load_scenario(args.scenario);
    if (args.loss_kind) s.loss_kind = detail::loss_kind_from_string(*args.loss_kind);
    if (args.seed) s.seed = *args.seed;
    if (args.repeats) s.repeats = *args.repeats;
    if (args.order) s.collocation_order = *args.order;
    s.validate();
    return s;
}

int worker_cap() {
    if (const char* env = std::getenv("SYMPOC_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

json metrics_to_json(const Metrics& m) {
    json j;
    j["min_constraint"] = m.min_constraint;
    j["cost"] = m.cost;
    j["scaled_cost"] = m.scaled_cost;
    if (m.min_normalized_distance)
        j["min_normalized_distance"] = *m.min_normalized_distance;
    else
        j["min_normalized_distance"] = nullptr;
    j["runtime_seconds"] = m.runtime_seconds;
    j["iterations"] = m.iterations;
    if (m.converged) j["converged"] = *m.converged;
    return j;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream f(path);
    require(f.good(), "cannot write '" + path.string() + "'");
    f << j.dump(2) << "\n";
}

struct RepeatOutcome {
    Metrics metrics;
};

RepeatOutcome run_one_repeat(const Scenario& scenario, const CommonArgs& args,
                             std::uint64_t seed, const fs::path& dir) {
    fs::create_directories(dir);
    TrainConfig cfg;
    cfg.iterations = args.iters.value_or(20000);
    cfg.inner_steps = args.inner_steps;
    cfg.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult result = train_sympocnet(scenario, cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const Trajectory traj = extract_trajectory(result.net, result.line, args.output_grid,
                                               scenario.horizon, scenario.state_dim());
    export_trajectory(traj, scenario.agent_count, scenario.space_dim,
                      (dir / "trajectory.csv").string());
    save_checkpoint(result.net, (dir / "checkpoint.json").string());
    save_train_state({result.line}, result.multipliers, (dir / "state.json").string());

    Metrics m = compute_metrics(traj, scenario);
    m.runtime_seconds = secs;
    m.iterations = cfg.iterations;
    write_json(metrics_to_json(m), dir / "metrics.json");
    return {m};
}

int cmd_train(const CommonArgs& args) {
    const Scenario scenario = load_with_overrides(args);
    const int repeats = scenario.repeats;
    const fs::path out(args.out_dir);
    fs::create_directories(out);

    if (repeats == 1) {
        const auto r = run_one_repeat(scenario, args, scenario.seed, out);
        std::cout << "trained '" << scenario.name << "': cost " << r.metrics.cost
                  << ", min constraint " << r.metrics.min_constraint << "\n";
        return 0;
    }

    std::vector<Metrics> all(static_cast<std::size_t>(repeats));
    std::atomic<int> next{0};
    std::mutex io_mutex;
    const int workers = std::min(worker_cap(), repeats);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::atomic<bool> failed{false};
    std::string failure;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int r = next.fetch_add(1); r < repeats; r = next.fetch_add(1)) {
                try {
                    const auto dir = out / ("repeat-" + std::to_string(r));
                    const auto res =
                        run_one_repeat(scenario, args, scenario.seed + static_cast<std::uint64_t>(r), dir);
                    all[static_cast<std::size_t>(r)] = res.metrics;
                    std::lock_guard<std::mutex> lock(io_mutex);
                    std::cout << "repeat " << r << ": cost " << res.metrics.cost << "\n";
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(io_mutex);
                    failed = true;
                    failure = e.what();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed) {
        std::cerr << "error: " << failure << "\n";
        return 1;
    }

    const RepeatStats st = aggregate_metrics(all);
    json j;
    auto runs = json::array();
    for (const Metrics& m : all) runs.push_back(metrics_to_json(m));
    j["repeats"] = runs;
    j["stats"] = {{"repeats", st.repeats},
                  {"min_normalized_distance_mean", st.distance_mean},
                  {"min_normalized_distance_std", st.distance_std},
                  {"cost_mean", st.cost_mean},
                  {"cost_std", st.cost_std},
                  {"scaled_cost_mean", st.scaled_cost_mean},
                  {"scaled_cost_std", st.scaled_cost_std}};
    write_json(j, out / "metrics.json");
    std::cout << "repeats " << repeats << ": E(D) " << st.distance_mean << ", std(D) "
              << st.distance_std << ", scaled cost " << st.scaled_cost_mean << "\n";
    return 0;
}

int cmd_refine(const CommonArgs& args) {
    const Scenario scenario = load_with_overrides(args);
    const fs::path out(args.out_dir);
    fs::create_directories(out);

    Trajectory init;
    if (args.linear_init) {
        init = linear_init_trajectory(scenario.x0, scenario.xT, scenario.horizon);
    } else {
        const std::string path =
            args.traj_path.empty() ? (out / "trajectory.csv").string() : args.traj_path;
        init = import_trajectory(path).trajectory;
    }

    const auto cs = scenario.build_constraints();
    auto nlp = transcribe(cs, scenario.x0, scenario.xT, scenario.speed_cap, scenario.space_dim,
                          init, cgl_grid(scenario.collocation_order, scenario.horizon));
    RefineOptions opt;
    opt.output_grid = args.output_grid;

    const auto t0 = std::chrono::steady_clock::now();
    const RefineOutcome outcome = solve_refine(nlp, opt);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    export_trajectory(outcome.trajectory, scenario.agent_count, scenario.space_dim,
                      (out / "refined_trajectory.csv").string());
    Metrics m = compute_metrics(outcome.trajectory, scenario);
    // the contract holds at the collocation nodes; report that value
    m.min_constraint = outcome.stats.min_constraint;
    m.cost = outcome.stats.cost;
    m.scaled_cost = m.cost / scenario.agent_count;
    m.runtime_seconds = secs;
    m.iterations = outcome.stats.iterations;
    m.converged = outcome.stats.converged;
    write_json(metrics_to_json(m), out / "metrics.json");
    std::cout << "refined '" << scenario.name << "': converged "
              << (outcome.stats.converged ? "true" : "false") << ", min constraint "
              << outcome.stats.min_constraint << ", cost " << outcome.stats.cost << "\n";
    return outcome.stats.converged ? 0 : 2;
}

int cmd_eval(const CommonArgs& args) {
    const Scenario scenario = load_with_overrides(args);
    require(!args.traj_path.empty(), "eval: --traj PATH is required");
    const auto imported = import_trajectory(args.traj_path);
    const Metrics m = compute_metrics(imported.trajectory, scenario);
    const fs::path out(args.out_dir);
    fs::create_directories(out);
    write_json(metrics_to_json(m), out / "metrics.json");
    std::cout << "cost " << m.cost << ", min constraint " << m.min_constraint << "\n";
    return 0;
}

int cmd_export_plot(const CommonArgs& args) {
    const Scenario scenario = load_with_overrides(args);
    require(!args.traj_path.empty(), "export-plot: --traj PATH is required");
    const auto imported = import_trajectory(args.traj_path);
    const Trajectory& traj = imported.trajectory;
    const fs::path out = fs::path(args.out_dir) / "plot";
    fs::create_directories(out);

    const std::vector<double> snapshot_times{0.0, scenario.horizon / 3.0,
                                             2.0 * scenario.horizon / 3.0, scenario.horizon};
    for (std::size_t si = 0; si < snapshot_times.size(); ++si) {
        // nearest stored sample
        std::size_t best = 0;
        for (std::size_t k = 1; k < traj.times.size(); ++k)
            if (std::abs(traj.times[k] - snapshot_times[si]) <
                std::abs(traj.times[best] - snapshot_times[si]))
                best = k;
        std::ofstream f(out / ("snapshot_" + std::to_string(si) + ".csv"));
        f << "t,agent";
        for (int c = 1; c <= scenario.space_dim; ++c) f << ",x" << c;
        f << "\n";
        for (int a = 0; a < scenario.agent_count; ++a) {
            f << traj.times[best] << "," << (a + 1);
            for (int c = 0; c < scenario.space_dim; ++c)
                f << "," << traj.states[best][static_cast<std::size_t>(a * scenario.space_dim + c)];
            f << "\n";
        }
    }
    json geo;
    geo["agent_radius"] = scenario.agent_radius;
    geo["obstacles"] = scenario_to_json(scenario)["obstacles"];
    if (scenario.room_half_width) geo["room_half_width"] = *scenario.room_half_width;
    write_json(geo, out / "obstacles.json");
    std::cout << "wrote " << snapshot_times.size() << " snapshots to " << out.string() << "\n";
    return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_train_flags, bool with_traj) {
    cmd->add_option("scenario", args.scenario, "builtin name or path to scenario JSON")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "base random seed");
    if (with_train_flags) {
        cmd->add_option("--loss", args.loss_kind, "loss kind: base|log|quad|aug")
            ->check(CLI::IsMember({"base", "log", "quad", "aug"}));
        cmd->add_option("--iters", args.iters, "training iterations");
        cmd->add_option("--repeats", args.repeats, "independent repeat count");
        cmd->add_option("--inner", args.inner_steps, "optimizer steps per multiplier update");
    }
    if (with_traj) cmd->add_option("--traj", args.traj_path, "input trajectory CSV");
    cmd->add_option("--grid", args.output_grid, "output grid size");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-agent trajectory planner"};
    app.require_subcommand(1);

    CommonArgs train_args, refine_args, eval_args, plot_args;
    auto* train = app.add_subcommand("train", "train a planner and export its trajectory");
    add_common(train, train_args, true, false);

    auto* refine = app.add_subcommand("refine", "pseudospectral refinement of a trajectory");
    add_common(refine, refine_args, false, true);
    refine->add_flag("--linear-init", refine_args.linear_init,
                     "start from the straight-line interpolant");
    refine->add_option("--order", refine_args.order, "collocation order");

    auto* eval = app.add_subcommand("eval", "recompute metrics for a trajectory");
    add_common(eval, eval_args, false, true);

    auto* plot = app.add_subcommand("export-plot", "write snapshot data for external plotting");
    add_common(plot, plot_args, false, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_args);
        if (refine->parsed()) return cmd_refine(refine_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (plot->parsed()) return cmd_export_plot(plot_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
