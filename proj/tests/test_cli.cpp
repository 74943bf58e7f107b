#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = STIGMERGY_CLI_PATH;

int run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("stigmergy_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json read_json(const fs::path& path) { return json::parse(slurp(path)); }

// Small configuration so CLI runs stay fast.
fs::path write_quick_config(const std::string& name) {
    const fs::path path = fs::temp_directory_path() / ("stigmergy_cfg_" + name + ".json");
    const json doc{
        {"experiment1", {{"agent_count", 10}, {"requirement", 150.0}, {"episodes", 4}}},
        {"experiment2",
         {{"iterations", 60}, {"switch_iteration", 30}, {"snapshot_every", 30}, {"group_size", 60}}},
    };
    std::ofstream out(path);
    out << doc.dump(2);
    return path;
}

} // namespace

TEST_CASE("cli: kernel subcommand emits both tables with D(0) = 1") {
    const auto dir = fresh_dir("kernel");
    REQUIRE(run_cli("kernel --seed 1 --out-dir " + dir.string()) == 0);

    for (const char* name : {"kernel_diffusion.csv", "kernel_gaussian.csv"}) {
        const std::string csv = slurp(dir / name);
        CHECK(csv.rfind("distance,value\n0,1\n", 0) == 0);
    }
    const json manifest = read_json(dir / "manifest.json");
    CHECK(manifest["status"] == "success");
    CHECK(manifest["subcommand"] == "kernel");
    CHECK(manifest["seed"] == 1);

    // the manifest lists exactly the files present next to it
    std::vector<std::string> listed = manifest["outputs"];
    listed.push_back("manifest.json");
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        ++files;
        const std::string name = entry.path().filename().string();
        CHECK(std::find(listed.begin(), listed.end(), name) != listed.end());
    }
    CHECK(files == listed.size());
    fs::remove_all(dir);
}

TEST_CASE("cli: missing config gives exit 1 and only a manifest") {
    const auto dir = fresh_dir("missing_config");
    CHECK(run_cli("kernel --config /nonexistent.json --out-dir " + dir.string()) == 1);
    const json manifest = read_json(dir / "manifest.json");
    CHECK(manifest["status"] == "config-error");
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        (void)entry;
        ++files;
    }
    CHECK(files == 1);
    fs::remove_all(dir);
}

TEST_CASE("cli: unknown config keys give exit 1") {
    const auto dir = fresh_dir("bad_key");
    const fs::path cfg = fs::temp_directory_path() / "stigmergy_bad_key.json";
    {
        std::ofstream out(cfg);
        out << R"({"experiment1": {"agents": 5}})";
    }
    CHECK(run_cli("kernel --config " + cfg.string() + " --out-dir " + dir.string()) == 1);
    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("cli: task-alloc produces turn, agent and summary outputs") {
    const auto dir = fresh_dir("task");
    const auto cfg = write_quick_config("task");
    REQUIRE(run_cli("task-alloc --seed 5 --config " + cfg.string() + " --out-dir " + dir.string()) ==
            0);

    const std::string turns = slurp(dir / "turns.csv");
    CHECK(turns.rfind("turn,utility,reward,cost,s\n", 0) == 0);
    const std::string agents = slurp(dir / "agents.csv");
    CHECK(agents.rfind("agent_id,theta,reward,ability,avg_distance\n", 0) == 0);
    CHECK(std::count(agents.begin(), agents.end(), '\n') == 11); // header + 10 agents

    const json summary = read_json(dir / "summary.json");
    CHECK(summary["seed"] == 5);
    CHECK(summary["episodes_completed"] == 4);
    CHECK(summary["termination_status"] == "completed");
    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("cli: task-alloc seed sweep fans out per-seed run directories") {
    const auto dir = fresh_dir("sweep");
    const auto cfg = write_quick_config("sweep");
    REQUIRE(run_cli("task-alloc --seed 10 --seeds 3 --config " + cfg.string() + " --out-dir " +
                    dir.string()) == 0);

    const json sweep = read_json(dir / "sweep_summary.json");
    CHECK(sweep["seeds"] == 3);
    CHECK(sweep["records"].size() == 3);
    for (std::uint64_t seed : {10, 11, 12}) {
        const fs::path sub = dir / ("seed_" + std::to_string(seed));
        CHECK(fs::exists(sub / "turns.csv"));
        CHECK(fs::exists(sub / "summary.json"));
        const json manifest = read_json(sub / "manifest.json");
        CHECK(manifest["seed"] == seed);
        CHECK(manifest["status"] == "success");
    }
    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("cli: pattern emits the trace and snapshot frames") {
    const auto dir = fresh_dir("pattern");
    const auto cfg = write_quick_config("pattern");
    REQUIRE(run_cli("pattern --seed 2 --config " + cfg.string() + " --out-dir " + dir.string()) == 0);

    const std::string trace = slurp(dir / "pattern_trace.csv");
    CHECK(trace.rfind("iteration,similarity,d_bar,feedback\n", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 61); // header + 60 iterations
    CHECK(fs::exists(dir / "frame_000000.pgm"));
    CHECK(fs::exists(dir / "frame_000030.pgm"));
    CHECK(fs::exists(dir / "frame_000059.pgm"));
    const std::string pgm = slurp(dir / "frame_000000.pgm");
    CHECK(pgm.rfind("P2\n28 28\n255\n", 0) == 0);
    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("cli: --snapshot-every overrides the config cadence") {
    const auto dir = fresh_dir("snap");
    const auto cfg = write_quick_config("snap");
    REQUIRE(run_cli("pattern --seed 2 --snapshot-every 20 --config " + cfg.string() +
                    " --out-dir " + dir.string()) == 0);
    CHECK(fs::exists(dir / "frame_000020.pgm"));
    CHECK(fs::exists(dir / "frame_000040.pgm"));
    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("cli: STIGMERGY_SEED overrides --seed") {
    const auto dir_env = fresh_dir("seed_env");
    const auto dir_flag = fresh_dir("seed_flag");
    const auto cfg = write_quick_config("seed");
    REQUIRE(run_cli("task-alloc --seed 999 --config " + cfg.string() + " --out-dir " +
                        dir_env.string(),
                    "STIGMERGY_SEED=33") == 0);
    REQUIRE(run_cli("task-alloc --seed 33 --config " + cfg.string() + " --out-dir " +
                    dir_flag.string()) == 0);

    CHECK(read_json(dir_env / "summary.json")["seed"] == 33);
    CHECK(slurp(dir_env / "turns.csv") == slurp(dir_flag / "turns.csv"));
    CHECK(slurp(dir_env / "agents.csv") == slurp(dir_flag / "agents.csv"));

    SUBCASE("invalid env seed is a config error") {
        CHECK(run_cli("task-alloc --out-dir " + dir_env.string(), "STIGMERGY_SEED=abc") == 1);
    }
    fs::remove(cfg);
    fs::remove_all(dir_env);
    fs::remove_all(dir_flag);
}

TEST_CASE("cli: usage errors exit with code 1") {
    CHECK(run_cli("unknown-subcommand") == 1);
    CHECK(run_cli("") == 1);
}

TEST_CASE("cli: the literal config name 'default' selects the shipped defaults") {
    const auto dir = fresh_dir("default_token");
    REQUIRE(run_cli("kernel --config default --out-dir " + dir.string()) == 0);
    CHECK(slurp(dir / "kernel_diffusion.csv").rfind("distance,value\n0,1\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("cli: re-running the emitted effective config reproduces the outputs") {
    const auto dir_a = fresh_dir("roundtrip_a");
    const auto dir_b = fresh_dir("roundtrip_b");
    const auto cfg = write_quick_config("roundtrip");
    REQUIRE(run_cli("task-alloc --seed 21 --config " + cfg.string() + " --out-dir " +
                    dir_a.string()) == 0);
    REQUIRE(run_cli("task-alloc --seed 21 --config " + (dir_a / "effective_config.json").string() +
                    " --out-dir " + dir_b.string()) == 0);
    for (const char* name : {"turns.csv", "agents.csv", "effective_config.json"}) {
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }
    fs::remove(cfg);
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}
