#include <doctest.h>

#include <fstream>
#include <sstream>

#include "curveflow/checkpoint.hpp"
#include "curveflow/cli.hpp"
#include "curveflow/io.hpp"
#include "test_util.hpp"

using namespace curveflow;
namespace fs = std::filesystem;

namespace {

// A few dozen steps on a small model so the command tests stay fast.
nlohmann::json tiny_config(const fs::path& out) {
    return {{"format_version", 1},
            {"output_dir", out.string()},
            {"dataset", {{"kind", "gaussians8"}, {"count", 64}, {"seed", 1}}},
            {"schedule", {{"hidden", 8}}},
            {"model", {{"hidden", 16}, {"hidden_layers", 2}, {"time_features", 4}}},
            {"train", {{"epochs", 2}, {"batch_size", 16}, {"grid_m", 16}, {"warmup_steps", 2}, {"seed", 4}}},
            {"solver", {{"method", "heun"}, {"steps", 8}}},
            {"metrics", {{"projections", 16}}},
            {"compare", {{"lambdas", {0.0, 0.001, 0.01, 0.1, 1.0}}}}};
}

fs::path write_config(const fs::path& dir, const nlohmann::json& doc) {
    const fs::path p = dir / "config.json";
    write_text_file(p, doc.dump(2));
    return p;
}

struct Run {
    int code;
    std::string out, err;
};

template <class Args, class Fn>
Run invoke(Fn fn, const Args& args) {
    std::ostringstream out, err;
    const int code = fn(args, out, err);
    return {code, out.str(), err.str()};
}

Run run_argv(std::vector<std::string> argv) {
    argv.insert(argv.begin(), "curveflow");
    std::vector<const char*> ptrs;
    for (const auto& a : argv) ptrs.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(ptrs.size()), ptrs.data(), out, err);
    return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("train writes its outputs and is deterministic") {
    const fs::path dir = testutil::scratch_dir("train");
    const auto cfg = write_config(dir, tiny_config(dir / "run"));
    const Run r = invoke(cli::cmd_train, cli::TrainArgs{cfg, {}, {}});
    CHECK(r.code == 0);
    for (const char* f : {"checkpoint.json", "history.csv", "manifest.json"}) CHECK(fs::exists(dir / "run" / f));
    const std::string history = read_text_file(dir / "run" / "history.csv");
    CHECK(history.rfind("step,fm_loss,curvature_loss,total,lr\n", 0) == 0);
    CHECK(count_lines(history) == 1 + 8);

    const Run again = invoke(cli::cmd_train, cli::TrainArgs{cfg, {}, dir / "again"});
    CHECK(again.code == 0);
    CHECK(read_text_file(dir / "again" / "history.csv") == history);

    const auto manifest = nlohmann::json::parse(read_text_file(dir / "run" / "manifest.json"));
    CHECK(manifest.at("seed") == 4);
    CHECK(manifest.contains("timestamp"));
    CHECK(manifest.at("config").at("train").at("lambda") == 0.001);
}

TEST_CASE("train rejects invalid configs with the field name") {
    const fs::path dir = testutil::scratch_dir("train_invalid");
    auto doc = tiny_config(dir / "run");
    doc["train"]["lambda"] = -0.5;
    const Run r = invoke(cli::cmd_train, cli::TrainArgs{write_config(dir, doc), {}, {}});
    CHECK(r.code == 2);
    CHECK(r.err.find("train.lambda") != std::string::npos);

    doc = tiny_config(dir / "run");
    doc["train"]["learning_rate"] = 0.1;
    const Run unknown = invoke(cli::cmd_train, cli::TrainArgs{write_config(dir, doc), {}, {}});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("train.learning_rate") != std::string::npos);

    const Run missing = invoke(cli::cmd_train, cli::TrainArgs{dir / "nope.json", {}, {}});
    CHECK(missing.code == 2);
}

TEST_CASE("train divergence exits 3 and keeps a checkpoint") {
    const fs::path dir = testutil::scratch_dir("train_diverge");
    auto doc = tiny_config(dir / "run");
    doc["train"]["base_lr"] = 1e305;
    const Run r = invoke(cli::cmd_train, cli::TrainArgs{write_config(dir, doc), {}, {}});
    CHECK(r.code == 3);
    CHECK(r.err.find("step") != std::string::npos);
    REQUIRE(fs::exists(dir / "run" / "checkpoint.json"));
    CHECK_NOTHROW(load_checkpoint(dir / "run" / "checkpoint.json"));
}

TEST_CASE("sample command") {
    const fs::path dir = testutil::scratch_dir("sample");
    REQUIRE(invoke(cli::cmd_train, cli::TrainArgs{write_config(dir, tiny_config(dir / "run")), {}, {}}).code == 0);
    const fs::path ckpt = dir / "run" / "checkpoint.json";

    cli::SampleArgs args;
    args.checkpoint = ckpt;
    args.count = 1000;
    args.seed = 3;
    const Run r = invoke(cli::cmd_sample, args);
    CHECK(r.code == 0);
    const std::string csv = read_text_file(dir / "run" / "samples.csv");
    CHECK(count_lines(csv) == 1001);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "x,y");
    std::getline(lines, line);
    CHECK(std::count(line.begin(), line.end(), ',') == 1);
    CHECK(fs::exists(dir / "run" / "samples.svg"));

    args.out = dir / "second";
    CHECK(invoke(cli::cmd_sample, args).code == 0);
    CHECK(read_text_file(dir / "second" / "samples.csv") == csv);

    args.method = "rk9";
    const Run bad = invoke(cli::cmd_sample, args);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("rk9") != std::string::npos);

    auto doc = nlohmann::json::parse(read_text_file(ckpt));
    doc["format_version"] = 2;
    write_text_file(dir / "v2.json", doc.dump());
    cli::SampleArgs v2;
    v2.checkpoint = dir / "v2.json";
    const Run mismatch = invoke(cli::cmd_sample, v2);
    CHECK(mismatch.code == 2);
    CHECK(mismatch.err.find("format_version") != std::string::npos);
}

TEST_CASE("analyze command") {
    const fs::path dir = testutil::scratch_dir("analyze");
    cli::AnalyzeArgs args;
    args.schedule = "linear";
    args.out = dir / "linear";
    Run r = invoke(cli::cmd_analyze, args);
    CHECK(r.code == 0);
    CHECK(r.out == "determinant_integral 0\n");
    const std::string profile = read_text_file(dir / "linear" / "curvature_profile.csv");
    CHECK(profile.rfind("t,mean_kappa,det\n", 0) == 0);
    CHECK(count_lines(profile) == 1 + 999);
    CHECK(fs::exists(dir / "linear" / "curvature_profile.svg"));

    args.schedule = "trigonometric";
    args.out = dir / "trig";
    r = invoke(cli::cmd_analyze, args);
    CHECK(r.code == 0);
    const double value = std::stod(r.out.substr(r.out.find(' ') + 1));
    CHECK(std::abs(value - 15.0223) / 15.0223 < 0.01);

    args.schedule = "spline";
    CHECK(invoke(cli::cmd_analyze, args).code == 2);
    args.checkpoint = dir / "x.json";
    CHECK(invoke(cli::cmd_analyze, args).code == 2);
}

TEST_CASE("analyze orders trained checkpoints by lambda") {
    const fs::path dir = testutil::scratch_dir("analyze_lambda");
    auto doc = tiny_config(dir / "l0");
    doc["train"]["epochs"] = 8;
    doc["train"]["base_lr"] = 5e-3;
    doc["train"]["lambda"] = 0.0;
    REQUIRE(invoke(cli::cmd_train, cli::TrainArgs{write_config(dir, doc), {}, {}}).code == 0);
    doc["output_dir"] = (dir / "l1").string();
    doc["train"]["lambda"] = 1.0;
    REQUIRE(invoke(cli::cmd_train, cli::TrainArgs{write_config(dir, doc), {}, {}}).code == 0);
    auto integral = [&](const char* run) {
        cli::AnalyzeArgs a;
        a.checkpoint = dir / run / "checkpoint.json";
        const Run r = invoke(cli::cmd_analyze, a);
        REQUIRE(r.code == 0);
        return std::stod(r.out.substr(r.out.find(' ') + 1));
    };
    CHECK(integral("l1") < integral("l0"));
}

TEST_CASE("compare command") {
    const fs::path dir = testutil::scratch_dir("compare");
    const auto cfg = write_config(dir, tiny_config(dir / "cmp"));
    const Run r = invoke(cli::cmd_compare, cli::CompareArgs{cfg, {}, {}});
    CHECK(r.code == 0);
    const std::string csv = read_text_file(dir / "cmp" / "results.csv");
    CHECK(count_lines(csv) == 1 + 7);
    CHECK(csv.rfind("variant,schedule,timestep_sampler,lambda,energy_distance,sliced_wasserstein,"
                    "determinant_integral,final_fm_loss\n",
                    0) == 0);
    CHECK(csv.find("rf_uniform,linear,uniform") != std::string::npos);
    CHECK(csv.find("rf_logit_normal,linear,logit_normal") != std::string::npos);

    REQUIRE(invoke(cli::cmd_compare, cli::CompareArgs{cfg, {}, dir / "cmp2"}).code == 0);
    CHECK(read_text_file(dir / "cmp2" / "results.csv") == csv);

    auto empty = tiny_config(dir / "empty");
    empty["compare"]["lambdas"] = nlohmann::json::array();
    CHECK(invoke(cli::cmd_compare, cli::CompareArgs{write_config(dir, empty), {}, {}}).code == 2);
}

TEST_CASE("gradcheck command") {
    Run r = invoke(cli::cmd_gradcheck, cli::GradcheckArgs{0, false});
    CHECK(r.code == 0);
    const auto pos = r.out.rfind("max relative error ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.out.substr(pos + 19)) >= 0.0);
    r = invoke(cli::cmd_gradcheck, cli::GradcheckArgs{0, true});
    CHECK(r.code == 1);
    CHECK(r.err.find("worst offender") != std::string::npos);
}

TEST_CASE("argument parsing") {
    CHECK(run_argv({}).code == 2);
    CHECK(run_argv({"fly"}).code == 2);
    CHECK(run_argv({"train"}).code == 2);
    CHECK(run_argv({"--help"}).code == 0);
    CHECK(run_argv({"gradcheck", "--seed", "2"}).code == 0);
    CHECK(run_argv({"gradcheck", "--corrupt-gradient"}).code == 1);
    CHECK(run_argv({"sample", "--checkpoint", "/nonexistent/checkpoint.json"}).code == 2);
    const fs::path dir = testutil::scratch_dir("argv");
    const Run r = run_argv({"analyze", "--schedule", "linear", "--grid", "8", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(count_lines(read_text_file(dir / "curvature_profile.csv")) == 1 + 7);
    CHECK(run_argv({"analyze", "--schedule", "linear", "--grid", "2", "--out", dir.string()}).code == 2);
}

TEST_CASE("checkpoint round trip, corruption and versioning") {
    const fs::path dir = testutil::scratch_dir("checkpoint");
    REQUIRE(invoke(cli::cmd_train, cli::TrainArgs{write_config(dir, tiny_config(dir / "run")), {}, {}}).code == 0);
    const fs::path path = dir / "run" / "checkpoint.json";
    const Checkpoint ck = load_checkpoint(path);
    CHECK(ck.step == 8);
    CHECK(ck.optimizer.step == 8);

    save_checkpoint(dir / "copy.json", ck);
    const Checkpoint back = load_checkpoint(dir / "copy.json");
    CHECK(back.parameters == ck.parameters);
    CHECK(back.config == ck.config);
    CHECK(back.optimizer.first_moment == ck.optimizer.first_moment);
    CHECK(read_text_file(dir / "copy.json") == read_text_file(path));
    CounterRng rng(1);
    const Matrix z = testutil::random_matrix(10, 2, rng);
    CHECK(model_from(back).forward(z, 0.3) == model_from(ck).forward(z, 0.3));
    CHECK(schedule_from(back).a(0.37) == schedule_from(ck).a(0.37));

    const std::string text = read_text_file(path);
    write_text_file(dir / "truncated.json", text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(dir / "truncated.json"), CheckpointError);

    auto doc = nlohmann::json::parse(text);
    doc["format_version"] = 2;
    try {
        checkpoint_from_json(doc);
        FAIL("expected VersionMismatchError");
    } catch (const VersionMismatchError& e) {
        CHECK(e.field() == "format_version");
    }
    doc = nlohmann::json::parse(text);
    doc["parameters"].erase("theta.l0.bias");
    try {
        checkpoint_from_json(doc);
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        CHECK_FALSE(e.field().empty());
    }
}

TEST_CASE("config round trip is a fixed point") {
    ExperimentConfig c;
    c.dataset.kind = DatasetKind::spiral;
    c.train.lambda = 0.1;
    c.train.timestep_sampler = TimestepSampler::logit_normal;
    c.solver.method = SolverMethod::euler;
    c.schedule.kind = ScheduleKind::polynomial;
    c.compare.lambdas = {0.0, 0.5};
    const auto once = config_from_json(config_to_json(c));
    CHECK(once == c);
    CHECK(config_to_json(once) == config_to_json(c));
    CHECK(config_from_json(nlohmann::json::parse(dump_config(c))) == c);
    CHECK(config_from_json(nlohmann::json::object()) == ExperimentConfig{});

    auto doc = config_to_json(c);
    doc["format_version"] = 7;
    CHECK_THROWS_AS(config_from_json(doc), ConfigError);
    doc = config_to_json(c);
    doc["solver"]["steps"] = "many";
    try {
        config_from_json(doc);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "solver.steps");
    }
    doc = config_to_json(c);
    doc["extra"] = 1;
    CHECK_THROWS_AS(config_from_json(doc), ConfigError);
}

TEST_CASE("format_double round-trips") {
    CounterRng rng(7);
    for (int k = 0; k < 1000; ++k) {
        const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(40)) - 20.0);
        CHECK(std::stod(format_double(v)) == v);
    }
}
