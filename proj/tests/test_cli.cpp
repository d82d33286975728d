#include <doctest.h>

#include "cli.hpp"

#include "deeepc/experiment.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace deeepc;

namespace {

struct Outcome {
    int code = -1;
    std::string out, err;
};

Outcome invoke(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    Outcome o;
    o.code = cli::run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("deeepc_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const fs::path& p)
{
    const std::string s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// A small lti-3 experiment so train and compare finish in seconds.
fs::path small_config(const fs::path& dir)
{
    const fs::path p = dir / "small.json";
    std::ofstream(p) << R"({
        "plant": "lti-3",
        "collect": {"steps": 400, "hankel_rows": 200, "seed": 3},
        "train": {"hidden": [8], "epochs": 3, "n_z": 3, "n_v": 2, "batch_size": 32},
        "compare": {"seeds": [1, 2], "steps": 15}
    })";
    return p;
}

} // namespace

TEST_CASE("usage errors exit with 2 and help exits with 0")
{
    CHECK(invoke({}).code == cli::kExitUsage);
    CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
    CHECK(invoke({"collect", "--no-such-flag"}).code == cli::kExitUsage);
    const auto help = invoke({"--help"});
    CHECK(help.code == cli::kExitOk);
    CHECK(help.out.find("collect") != std::string::npos);
    CHECK(help.out.find("verify") != std::string::npos);
}

TEST_CASE("collect: zero steps is an invalid configuration")
{
    const auto dir = scratch("zero");
    const auto r = invoke({"collect", "--plant", "lti-3", "--steps", "0", "--out", dir.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("InvalidConfig") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "dataset.csv"));
}

TEST_CASE("collect: default econ-cstr recipe writes 4500 rows and a provenance record")
{
    const auto dir = scratch("default");
    REQUIRE(invoke({"collect", "--out", dir.string()}).code == cli::kExitOk);
    CHECK(count_lines(dir / "dataset.csv") == 4501); // header + rows
    const auto prov = nlohmann::json::parse(slurp(dir / "provenance.json"));
    CHECK(prov["plant"] == "econ-cstr");
    CHECK(prov["seed"] == 1);
    CHECK(prov["steps"] == 4500);
    CHECK(prov.contains("schedule"));
    CHECK(prov["excitation"]["exciting"] == true);
}

TEST_CASE("collect: the same seed gives byte-identical output, another seed does not")
{
    const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
    for (const auto& d : {a, b})
        REQUIRE(invoke({"collect", "--plant", "two-tank", "--steps", "300", "--seed", "7", "--out", d.string()}).code == 0);
    REQUIRE(invoke({"collect", "--plant", "two-tank", "--steps", "300", "--seed", "8", "--out", c.string()}).code == 0);
    CHECK(slurp(a / "dataset.csv") == slurp(b / "dataset.csv"));
    CHECK(slurp(a / "provenance.json") == slurp(b / "provenance.json"));
    CHECK(slurp(a / "dataset.csv") != slurp(c / "dataset.csv"));
}

TEST_CASE("config files: missing path, plant conflict and the shipped configs")
{
    const auto dir = scratch("configs");
    CHECK(invoke({"collect", "--config", (dir / "absent.json").string(), "--out", dir.string()}).code == cli::kExitUsage);
    const auto cfg = small_config(dir);
    CHECK(invoke({"collect", "--config", cfg.string(), "--plant", "econ-cstr", "--out", dir.string()}).code ==
          cli::kExitUsage);

    std::ofstream(dir / "bad.json") << R"({"plant": "lti-3", "controller": {"t_ini": 0}})";
    CHECK(invoke({"collect", "--config", (dir / "bad.json").string(), "--out", dir.string()}).code == cli::kExitUsage);

    // The shipped configs spell out the builtin experiments.
    for (const std::string name : {"econ-cstr", "two-tank", "lti-3"}) {
        const fs::path p = fs::path(DEEEPC_SOURCE_DIR) / "configs" / (name + ".json");
        REQUIRE(fs::exists(p));
        CHECK(load_experiment(p).to_json() == default_experiment(name).to_json());
    }
}

TEST_CASE("train: missing dataset is a usage error")
{
    const auto dir = scratch("train_missing");
    const auto r = invoke({"train", "--plant", "lti-3", "--out", dir.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("dataset") != std::string::npos);
    CHECK(invoke({"train", "--plant", "lti-3", "--data", (dir / "nope.csv").string(), "--out", dir.string()}).code ==
          cli::kExitUsage);
}

TEST_CASE("train: malformed dataset is a runtime failure")
{
    const auto dir = scratch("train_bad");
    std::ofstream(dir / "dataset.csv") << "u0,y0,y1,c\n1,2,oops,4\n";
    const auto r = invoke({"train", "--plant", "lti-3", "--out", dir.string()});
    CHECK(r.code == cli::kExitRuntime);
    CHECK(r.err.find("NonNumericCell") != std::string::npos);
}

TEST_CASE("train: fixed seed reproduces the bundles and writes the reports")
{
    const auto a = scratch("train_a"), b = scratch("train_b");
    const auto cfg = small_config(a);
    for (const auto& d : {a, b}) {
        REQUIRE(invoke({"collect", "--config", cfg.string(), "--out", d.string()}).code == 0);
        const auto r = invoke({"train", "--config", cfg.string(), "--out", d.string()});
        REQUIRE(r.code == cli::kExitOk);
        CHECK(r.out.find("holdout R2") != std::string::npos);
    }
    for (const char* f : {"model.bin", "surrogate.bin", "train_report.csv", "surrogate_report.csv", "train_summary.json"}) {
        INFO(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(count_lines(a / "train_report.csv") == 1 + 4); // header, initial model, 3 epochs
}

TEST_CASE("run and compare on a trained small experiment")
{
    const auto dir = scratch("run");
    const auto cfg = small_config(dir);
    REQUIRE(invoke({"collect", "--config", cfg.string(), "--out", dir.string()}).code == 0);
    REQUIRE(invoke({"train", "--config", cfg.string(), "--out", dir.string()}).code == 0);

    SUBCASE("unknown controller lists the valid names")
    {
        const auto r = invoke({"run", "--config", cfg.string(), "--out", dir.string(), "--controller", "mpc"});
        CHECK(r.code == cli::kExitUsage);
        for (const char* name : {"deeepc", "tracking", "convex"}) CHECK(r.err.find(name) != std::string::npos);
    }
    SUBCASE("a single run writes one summary")
    {
        const auto r = invoke({"run", "--config", cfg.string(), "--out", dir.string(), "--controller", "tracking",
                            "--steps", "12", "--dump-hankel"});
        REQUIRE(r.code == cli::kExitOk);
        std::size_t summaries = 0;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().filename().string().rfind("summary_", 0) == 0) ++summaries;
        CHECK(summaries == 1);
        const auto s = nlohmann::json::parse(slurp(dir / "summary_tracking.json"));
        CHECK(s["steps"] == 12);
        for (const char* k : {"avg_cost", "violation_rate", "fallbacks"}) CHECK(s.contains(k));
        CHECK(count_lines(dir / "trace_tracking.csv") == 13);
        CHECK(fs::exists(dir / "hankel_full_tracking.csv"));
        CHECK(fs::exists(dir / "hankel_active_tracking.csv"));
    }
    SUBCASE("the lifted controller needs its model bundle")
    {
        fs::remove(dir / "model.bin");
        CHECK(invoke({"run", "--config", cfg.string(), "--out", dir.string()}).code == cli::kExitUsage);
    }
    SUBCASE("compare tabulates all three controllers")
    {
        const auto r = invoke({"compare", "--config", cfg.string(), "--out", dir.string()});
        REQUIRE(r.code == cli::kExitOk);
        const auto j = nlohmann::json::parse(slurp(dir / "comparison.json"));
        CHECK(j["seeds"].size() == 2);
        CHECK(j["steps"] == 15);
        for (const char* name : {"deeepc", "tracking", "convex"}) {
            INFO(name);
            REQUIRE(j["controllers"].contains(name));
            const auto& row = j["controllers"][name];
            for (const char* k : {"avg_cost", "violation_rate", "mean_solve_ms", "p99_solve_ms"}) CHECK(row.contains(k));
            CHECK(row["runs"].size() == 2);
        }
        CHECK(count_lines(dir / "comparison.csv") == 1 + 3 * 2);
    }
}

TEST_CASE("pipeline skips stages whose inputs did not change")
{
    const auto dir = scratch("pipeline");
    const auto cfg = small_config(dir);
    const auto first = invoke({"pipeline", "--config", cfg.string(), "--out", dir.string()});
    REQUIRE(first.code == cli::kExitOk);
    CHECK(first.out.find("collect: done") != std::string::npos);
    CHECK(first.out.find("compare: done") != std::string::npos);
    const std::string table = slurp(dir / "comparison.json");

    const auto second = invoke({"pipeline", "--config", cfg.string(), "--out", dir.string()});
    REQUIRE(second.code == cli::kExitOk);
    CHECK(second.out.find("collect: up to date") != std::string::npos);
    CHECK(second.out.find("train: up to date") != std::string::npos);
    CHECK(second.out.find("compare: up to date") != std::string::npos);

    // A new closed-loop length only reruns the comparison.
    const auto third = invoke({"pipeline", "--config", cfg.string(), "--out", dir.string(), "--steps", "10"});
    REQUIRE(third.code == cli::kExitOk);
    CHECK(third.out.find("train: up to date") != std::string::npos);
    CHECK(third.out.find("compare: done") != std::string::npos);
    CHECK(slurp(dir / "comparison.json") != table);
}

TEST_CASE("verify passes on defaults and fails on a coarse quadrature")
{
    const auto dir = scratch("verify");
    REQUIRE(invoke({"verify", "--out", dir.string()}).code == cli::kExitOk);
    const auto j = nlohmann::json::parse(slurp(dir / "verify.json"));
    CHECK(j["pass"] == true);
    CHECK(j["lemma"]["pass"] == true);
    CHECK(j["theory"]["checks"].size() == 5);

    const auto again = scratch("verify_again");
    REQUIRE(invoke({"verify", "--out", again.string()}).code == cli::kExitOk);
    CHECK(slurp(dir / "verify.json") == slurp(again / "verify.json"));

    const auto coarse = scratch("verify_coarse");
    const auto r = invoke({"verify-theory", "--quad-nodes", "4", "--out", coarse.string()});
    CHECK(r.code == cli::kExitVerifyFailed);
    CHECK(r.out.find("FAIL") != std::string::npos);
    CHECK(invoke({"verify-lemma", "--out", coarse.string()}).code == cli::kExitOk);
}
