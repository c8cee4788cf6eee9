#include "isgd/bench.hpp"
#include "isgd/error.hpp"
#include "isgd/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace isgd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json blobs_config(const fs::path& out) {
    json doc = json::parse(R"({
        "dataset": {"kind": "blobs", "classes": 3, "per_class": 60, "dims": 5, "spread": 0.7, "seed": 2},
        "network": {"hidden": [12], "activation": "tanh"},
        "train": {"presample_size": 48, "batch_size": 12, "tau_th": "auto", "learning_rate": 0.05,
                  "momentum": 0.9, "max_iterations": 40, "seed": 3, "eval_every": 10},
        "arms": ["uniform", "upper-bound"],
        "probe": {"presample_size": 96, "batch_size": 16, "resamples": 10, "checkpoints": [0, 20],
                  "arms": ["loss", "upper-bound", "gradient-norm"]},
        "correlate": {"checkpoints": [0, 20], "samples": 100}
    })");
    doc["output"] = out.string();
    return doc;
}

std::vector<json> read_jsonl(const fs::path& p) {
    std::ifstream in(p);
    std::vector<json> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(json::parse(line));
    return lines;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = parse_experiment(blobs_config("out"));
    CHECK(c.arms.size() == 2);
    CHECK(c.auto_tau_th);
    CHECK(arm_config(c, ScoreKind::upper_bound).tau_th == doctest::Approx((48.0 + 36.0) / 36.0));
    CHECK(arm_config(c, ScoreKind::uniform).seed == 3);
    CHECK(arm_config(c, ScoreKind::upper_bound).seed != arm_config(c, ScoreKind::loss).seed);
    CHECK(arm_label(ScoreKind::upper_bound, 64, true) == "upper-bound-B64");

    auto bad = blobs_config("out");
    bad["train"]["learning_rat"] = 0.1;
    CHECK_THROWS_AS(parse_experiment(bad), FormatError);
    bad = blobs_config("out");
    bad["arms"] = json::array();
    CHECK_THROWS_AS(parse_experiment(bad), FormatError);
    bad = blobs_config("out");
    bad["train"]["batch_size"] = 100;
    CHECK_THROWS_AS(parse_experiment(bad), ArgumentError);
    bad = blobs_config("out");
    bad["train"]["tau_th"] = "inf";
    CHECK(std::isinf(parse_experiment(bad).train.tau_th));
}

TEST_CASE("config paths resolve against the config file") {
    const auto c = parse_experiment(json::parse(R"({"dataset": {"kind": "idx", "images": "a", "labels": "b"},
                                                      "output": "runs/x"})"),
                                    "/base");
    CHECK(c.dataset.images == fs::path("/base/a"));
    CHECK(c.output == fs::path("/base/runs/x"));
}

TEST_CASE("train writes one metrics file per arm and a summary") {
    const auto dir = fresh_dir("isgd_bench_train");
    const auto config = parse_experiment(blobs_config(dir));
    std::ostringstream log;
    const json summary = run_train(config, log);
    REQUIRE(summary["arms"].size() == 2);
    for (const std::string arm : {"uniform", "upper-bound"}) {
        const auto lines = read_jsonl(dir / (arm + ".jsonl"));
        CHECK(lines.size() == 40);
        for (const auto& l : lines) {
            CHECK(l.contains("iteration"));
            CHECK(l.contains("mode"));
            CHECK(l.contains("forward_count"));
        }
    }
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(summary["arms"][0]["final_eval_loss"].is_number());

    // A second run reproduces everything but the clock.
    const auto dir2 = fresh_dir("isgd_bench_train2");
    auto doc = blobs_config(dir2);
    run_train(parse_experiment(doc), log);
    const auto a = read_jsonl(dir / "upper-bound.jsonl");
    auto b = read_jsonl(dir2 / "upper-bound.jsonl");
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto x = a[i], y = b[i];
        x.erase("wall_clock_seconds");
        y.erase("wall_clock_seconds");
        CHECK(x == y);
    }
}

TEST_CASE("presample sweep adds labelled arms") {
    const auto dir = fresh_dir("isgd_bench_sweep");
    auto doc = blobs_config(dir);
    doc["presample_sweep"] = {24, 96};
    doc["train"]["max_iterations"] = 5;
    std::ostringstream log;
    const auto summary = run_train(parse_experiment(doc), log);
    CHECK(summary["arms"].size() == 4);
    CHECK(fs::exists(dir / "upper-bound-B24.jsonl"));
    CHECK(fs::exists(dir / "upper-bound-B96.jsonl"));
}

TEST_CASE("variance probe") {
    const auto dir = fresh_dir("isgd_bench_probe");
    std::ostringstream log;
    const json lines = run_variance_probe(parse_experiment(blobs_config(dir)), log);
    CHECK(read_jsonl(dir / "variance_probe.jsonl").size() == 8);
    for (const auto& l : lines) {
        if (l["arm"] == "uniform") CHECK(l["normalized"].get<double>() == 1.0);
        if (l["arm"] == "gradient-norm") CHECK(l["normalized"].get<double>() <= 1.1);
        CHECK(l["distances"].size() == 10);
    }
}

TEST_CASE("correlate") {
    const auto dir = fresh_dir("isgd_bench_corr");
    std::ostringstream log;
    const json summary = run_correlate(parse_experiment(blobs_config(dir)), log);
    REQUIRE(summary.size() == 2);
    const auto triples = read_jsonl(dir / "correlate-20.jsonl");
    CHECK(triples.size() == 100);
    double total = 0.0;
    for (const auto& t : triples) total += t["gradient_norm"].get<double>();
    CHECK(total == doctest::Approx(1.0));
    CHECK(fs::exists(dir / "correlate_summary.json"));
}

TEST_CASE("comparison statistics") {
    const std::vector<double> a{0.1, 0.2, 0.7};
    CHECK(sum_squared_error(a, a) == 0.0);
    CHECK(pearson_correlation(a, a) == doctest::Approx(1.0));
    const std::vector<double> b{0.7, 0.2, 0.1};
    CHECK(pearson_correlation(a, b) < 0.0);
    CHECK(sum_squared_error(a, b) == doctest::Approx(0.72));
}

TEST_CASE("validate prints every property") {
    std::ostringstream out;
    CHECK(run_validate(1, out));
    std::istringstream in(out.str());
    int lines = 0;
    for (std::string line; std::getline(in, line); ++lines) CHECK(line.rfind("PASS ", 0) == 0);
    CHECK(lines == 6);
}
