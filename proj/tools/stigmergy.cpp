// Command-line entry point: kernel tabulation and the two experiments,
// with seeded, reproducible runs and per-run manifests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stigmergy/config.hpp"
#include "stigmergy/metrics.hpp"
#include "stigmergy/pattern_learning.hpp"
#include "stigmergy/run_output.hpp"
#include "stigmergy/task_allocation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_dir;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path,
                    "Path to a JSON config, or 'default' for the shipped defaults");
    cmd->add_option("--seed", opts.seed, "Root seed (overridden by STIGMERGY_SEED)");
    cmd->add_option("--out-dir", opts.out_dir, "Run output directory");
}

std::uint64_t resolve_seed(std::uint64_t cli_seed) {
    if (const char* env = std::getenv("STIGMERGY_SEED")) {
        char* end = nullptr;
        const unsigned long long value = std::strtoull(env, &end, 10);
        if (!end || *end != '\0' || *env == '\0') {
            throw stigmergy::config_error("STIGMERGY_SEED must be an unsigned integer");
        }
        return static_cast<std::uint64_t>(value);
    }
    return cli_seed;
}

stigmergy::LoadedConfig resolve_config(const std::string& path) {
    if (path.empty() || path == "default") return stigmergy::default_config();
    return stigmergy::load_config_file(path);
}

fs::path resolve_out_dir(const CommonOptions& opts, const std::string& config_directory,
                         const std::string& subcommand, std::uint64_t seed) {
    if (!opts.out_dir.empty()) return opts.out_dir;
    return fs::path(config_directory) / (subcommand + "-seed" + std::to_string(seed));
}

// Runs `body`, records status and outputs, and always writes the manifest.
int run_with_manifest(const fs::path& dir, std::uint64_t seed, const std::string& subcommand,
                      const std::function<void(stigmergy::RunManifest&)>& body) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::cerr << "error: cannot create '" << dir.string() << "': " << ec.message() << "\n";
        return 2;
    }

    stigmergy::RunManifest manifest;
    manifest.seed = seed;
    manifest.subcommand = subcommand;
    manifest.started = stigmergy::iso8601_utc(stigmergy::run_clock());

    int exit_code = 0;
    try {
        body(manifest);
        manifest.status = "success";
    } catch (const stigmergy::config_error& e) {
        manifest.status = "config-error";
        manifest.error = e.what();
        exit_code = 1;
    } catch (const std::exception& e) {
        manifest.status = "runtime-error";
        manifest.error = e.what();
        exit_code = 2;
    }
    manifest.finished = stigmergy::iso8601_utc(stigmergy::run_clock());

    try {
        stigmergy::write_manifest(dir, manifest);
    } catch (const std::exception& e) {
        std::cerr << "error: failed to write manifest: " << e.what() << "\n";
        return 2;
    }
    if (exit_code != 0) {
        std::cerr << "error (" << manifest.status << "): " << manifest.error << "\n";
    }
    return exit_code;
}

void emit_effective_config(const fs::path& dir, const stigmergy::LoadedConfig& loaded,
                           stigmergy::RunManifest& manifest) {
    const json j = stigmergy::config_to_json(loaded.config, loaded.sources);
    stigmergy::write_text_file(dir / "effective_config.json", j.dump(2) + "\n");
    manifest.outputs.push_back("effective_config.json");
}

std::string kernel_csv(const stigmergy::KernelTable& table) {
    std::string csv = "distance,value\n";
    for (std::size_t i = 0; i < table.distances().size(); ++i) {
        csv += stigmergy::format_double(table.distances()[i]);
        csv += ',';
        csv += stigmergy::format_double(table.values()[i]);
        csv += '\n';
    }
    return csv;
}

std::string turns_csv(const stigmergy::TurnLog& log) {
    std::string csv = "turn,utility,reward,cost,s\n";
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& turn = log[i];
        csv += std::to_string(i + 1) + ',' + stigmergy::format_double(turn.utility) + ',' +
               stigmergy::format_double(turn.reward_sum) + ',' + stigmergy::format_double(turn.cost) +
               ',' + stigmergy::format_double(turn.emergency) + '\n';
    }
    return csv;
}

std::string agents_csv(const std::vector<stigmergy::AgentProfile>& profile) {
    std::string csv = "agent_id,theta,reward,ability,avg_distance\n";
    for (const auto& agent : profile) {
        csv += std::to_string(agent.id) + ',' + stigmergy::format_double(agent.theta) + ',' +
               stigmergy::format_double(agent.reward) + ',' + std::to_string(agent.ability) + ',' +
               stigmergy::format_double(agent.avg_distance) + '\n';
    }
    return csv;
}

double eval_mean_utility_first(const stigmergy::TurnLog& log, std::size_t turns) {
    if (log.empty()) return 0.0;
    const std::size_t count = std::min(turns, log.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) sum += log[i].utility;
    return sum / static_cast<double>(count);
}

// Everything written for one task-allocation run; reused by sweeps.
struct TaskAllocOutcome {
    stigmergy::LearningResult result;
    double spearman = std::numeric_limits<double>::quiet_NaN();
};

TaskAllocOutcome write_task_alloc_run(const fs::path& dir, const stigmergy::LoadedConfig& loaded,
                                      const stigmergy::KernelTable& kernel, std::uint64_t seed,
                                      stigmergy::RunManifest& manifest) {
    TaskAllocOutcome outcome;
    outcome.result = stigmergy::run_learning(loaded.config.experiment1, kernel, seed);
    const auto& result = outcome.result;

    stigmergy::write_text_file(dir / "turns.csv", turns_csv(result.last_completed_log));
    manifest.outputs.push_back("turns.csv");
    stigmergy::write_text_file(dir / "agents.csv", agents_csv(result.profile));
    manifest.outputs.push_back("agents.csv");

    std::vector<double> thetas, distances;
    for (const auto& agent : result.profile) {
        thetas.push_back(agent.theta);
        distances.push_back(agent.avg_distance);
    }
    try {
        outcome.spearman = stigmergy::spearman_rank(thetas, distances);
    } catch (const std::domain_error&) {
        // constant profile; leave NaN
    }

    json summary{
        {"seed", seed},
        {"config_digest", stigmergy::config_digest(loaded.config, loaded.sources)},
        {"termination_status", result.status},
        {"episodes_completed", result.episodes_completed},
        {"episodes_attempted", result.episodes.size()},
        {"last_completed_episode", result.last_completed_episode},
        {"last_completed_turns", result.last_completed_log.size()},
        {"evaluation_turns", result.evaluation_log.size()},
        {"evaluation_completed", result.evaluation_completed},
        {"evaluation_mean_utility_first_10", eval_mean_utility_first(result.evaluation_log, 10)},
        {"spearman_theta_avg_distance",
         std::isnan(outcome.spearman) ? json(nullptr) : json(outcome.spearman)},
    };
    stigmergy::write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    manifest.outputs.push_back("summary.json");
    return outcome;
}

int cmd_kernel(const CommonOptions& opts) {
    const std::uint64_t seed = resolve_seed(opts.seed);
    stigmergy::LoadedConfig probe;
    std::string base_dir = probe.config.output.directory;
    try {
        probe = resolve_config(opts.config_path);
        base_dir = probe.config.output.directory;
    } catch (...) {
        // fall through; the manifest body reloads and records the error
    }
    const fs::path dir = resolve_out_dir(opts, base_dir, "kernel", seed);

    return run_with_manifest(dir, seed, "kernel", [&](stigmergy::RunManifest& manifest) {
        const auto loaded = resolve_config(opts.config_path);
        manifest.config_digest = stigmergy::config_digest(loaded.config, loaded.sources);

        const auto diffusion = stigmergy::build_kernel(loaded.config.kernel, stigmergy::KernelChoice::diffusion);
        const auto gaussian = stigmergy::build_kernel(loaded.config.kernel, stigmergy::KernelChoice::gaussian);
        stigmergy::write_text_file(dir / "kernel_diffusion.csv", kernel_csv(diffusion));
        manifest.outputs.push_back("kernel_diffusion.csv");
        stigmergy::write_text_file(dir / "kernel_gaussian.csv", kernel_csv(gaussian));
        manifest.outputs.push_back("kernel_gaussian.csv");
        emit_effective_config(dir, loaded, manifest);
    });
}

int cmd_task_alloc(const CommonOptions& opts, bool baseline, unsigned seeds) {
    const std::uint64_t seed = resolve_seed(opts.seed);
    stigmergy::LoadedConfig probe;
    std::string base_dir = probe.config.output.directory;
    try {
        probe = resolve_config(opts.config_path);
        base_dir = probe.config.output.directory;
    } catch (...) {
    }
    const fs::path dir = resolve_out_dir(opts, base_dir, "task-alloc", seed);

    return run_with_manifest(dir, seed, "task-alloc", [&](stigmergy::RunManifest& manifest) {
        auto loaded = resolve_config(opts.config_path);
        if (baseline) loaded.config.experiment1.distance_adjust = false;
        loaded.config.validate();
        manifest.config_digest = stigmergy::config_digest(loaded.config, loaded.sources);

        const auto kernel = stigmergy::build_kernel(loaded.config.kernel, loaded.config.experiment1.kernel);

        if (seeds <= 1) {
            write_task_alloc_run(dir, loaded, kernel, seed, manifest);
            emit_effective_config(dir, loaded, manifest);
            return;
        }

        // Seed sweep: isolated concurrent runs, aggregated afterward.
        struct SweepRun {
            std::uint64_t seed;
            fs::path dir;
            int exit_code = 0;
            TaskAllocOutcome outcome;
        };
        std::vector<SweepRun> runs(seeds);
        for (unsigned i = 0; i < seeds; ++i) {
            runs[i].seed = seed + i;
            runs[i].dir = dir / ("seed_" + std::to_string(runs[i].seed));
        }

        const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
        for (unsigned start = 0; start < seeds; start += workers) {
            const unsigned stop = std::min(seeds, start + workers);
            std::vector<std::future<void>> block;
            for (unsigned i = start; i < stop; ++i) {
                block.push_back(std::async(std::launch::async, [&loaded, &kernel, &runs, i] {
                    SweepRun& run = runs[i];
                    run.exit_code = run_with_manifest(
                        run.dir, run.seed, "task-alloc", [&](stigmergy::RunManifest& sub) {
                            sub.config_digest =
                                stigmergy::config_digest(loaded.config, loaded.sources);
                            run.outcome = write_task_alloc_run(run.dir, loaded, kernel, run.seed, sub);
                        });
                }));
            }
            for (auto& f : block) f.get();
        }

        stigmergy::SweepSummary sweep;
        for (const auto& run : runs) {
            if (run.exit_code != 0) {
                throw stigmergy::numeric_error("sweep run for seed " + std::to_string(run.seed) +
                                               " failed; see its manifest");
            }
            stigmergy::SweepSummary::Record record;
            record.seed = run.seed;
            record.values["episodes_completed"] =
                static_cast<double>(run.outcome.result.episodes_completed);
            record.values["evaluation_turns"] =
                static_cast<double>(run.outcome.result.evaluation_log.size());
            record.values["evaluation_mean_utility_first_10"] =
                eval_mean_utility_first(run.outcome.result.evaluation_log, 10);
            record.values["spearman_theta_avg_distance"] = run.outcome.spearman;
            sweep.add(std::move(record));
        }

        json records = json::array();
        for (const auto& record : sweep.records()) {
            json values;
            for (const auto& [key, value] : record.values) {
                values[key] = std::isnan(value) ? json(nullptr) : json(value);
            }
            records.push_back({{"seed", record.seed}, {"values", values}});
        }
        json summary{
            {"base_seed", seed},
            {"seeds", seeds},
            {"records", records},
            {"aggregates",
             {{"median_evaluation_turns", sweep.median("evaluation_turns")},
              {"mean_evaluation_utility_first_10", sweep.mean("evaluation_mean_utility_first_10")},
              {"fraction_spearman_above_0.5",
               sweep.fraction_at_least("spearman_theta_avg_distance", 0.5)}}},
        };
        stigmergy::write_text_file(dir / "sweep_summary.json", summary.dump(2) + "\n");
        manifest.outputs.push_back("sweep_summary.json");
        for (const auto& run : runs) {
            const std::string prefix = run.dir.filename().string() + "/";
            manifest.outputs.push_back(prefix + "manifest.json");
            manifest.outputs.push_back(prefix + "turns.csv");
            manifest.outputs.push_back(prefix + "agents.csv");
            manifest.outputs.push_back(prefix + "summary.json");
        }
        emit_effective_config(dir, loaded, manifest);
    });
}

int cmd_pattern(const CommonOptions& opts, long snapshot_every) {
    const std::uint64_t seed = resolve_seed(opts.seed);
    stigmergy::LoadedConfig probe;
    std::string base_dir = probe.config.output.directory;
    try {
        probe = resolve_config(opts.config_path);
        base_dir = probe.config.output.directory;
    } catch (...) {
    }
    const fs::path dir = resolve_out_dir(opts, base_dir, "pattern", seed);

    return run_with_manifest(dir, seed, "pattern", [&](stigmergy::RunManifest& manifest) {
        auto loaded = resolve_config(opts.config_path);
        if (snapshot_every > 0) {
            loaded.config.experiment2.snapshot_every = static_cast<std::size_t>(snapshot_every);
        }
        loaded.config.validate();
        manifest.config_digest = stigmergy::config_digest(loaded.config, loaded.sources);

        const auto kernel = stigmergy::build_kernel(loaded.config.kernel, loaded.config.experiment2.kernel);
        const auto run = stigmergy::run_pattern(loaded.config.experiment2, kernel, seed);

        std::string csv = "iteration,similarity,d_bar,feedback\n";
        for (const auto& row : run.trace) {
            csv += std::to_string(row.iteration) + ',' + stigmergy::format_double(row.similarity) +
                   ',' + stigmergy::format_double(row.d_bar) + ',' + std::to_string(row.feedback) +
                   '\n';
        }
        stigmergy::write_text_file(dir / "pattern_trace.csv", csv);
        manifest.outputs.push_back("pattern_trace.csv");

        if (loaded.config.output.frames) {
            for (const auto& frame : run.frames) {
                char name[32];
                std::snprintf(name, sizeof name, "frame_%06zu.pgm", frame.iteration);
                stigmergy::write_text_file(dir / name, stigmergy::frame_to_pgm(frame.states));
                manifest.outputs.push_back(name);
            }
        }
        emit_effective_config(dir, loaded, manifest);
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stigmergy learning simulator: diffusion-derived interaction kernel, "
                 "task allocation and pattern convergence experiments"};
    app.require_subcommand(1);

    CommonOptions kernel_opts, task_opts, pattern_opts;
    bool baseline = false;
    unsigned seeds = 1;
    long snapshot_every = 0;

    auto* kernel_cmd =
        app.add_subcommand("kernel", "Tabulate the diffusion and Gaussian kernels as CSV");
    add_common_options(kernel_cmd, kernel_opts);

    auto* task_cmd = app.add_subcommand("task-alloc", "Run the task-allocation experiment");
    add_common_options(task_cmd, task_opts);
    task_cmd->add_flag("--baseline", baseline, "Disable distance regulation");
    task_cmd->add_option("--seeds", seeds, "Sweep this many consecutive seeds");

    auto* pattern_cmd = app.add_subcommand("pattern", "Run the pattern-convergence experiment");
    add_common_options(pattern_cmd, pattern_opts);
    pattern_cmd->add_option("--snapshot-every", snapshot_every, "Frame snapshot interval override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (kernel_cmd->parsed()) return cmd_kernel(kernel_opts);
        if (task_cmd->parsed()) return cmd_task_alloc(task_opts, baseline, seeds);
        if (pattern_cmd->parsed()) return cmd_pattern(pattern_opts, snapshot_every);
    } catch (const stigmergy::config_error& e) {
        std::cerr << "error (config): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
