#include "curveflow/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "curveflow/checkpoint.hpp"
#include "curveflow/config.hpp"
#include "curveflow/experiment.hpp"
#include "curveflow/gradcheck.hpp"
#include "curveflow/io.hpp"
#include "curveflow/metrics.hpp"
#include "curveflow/svg.hpp"

namespace curveflow::cli {

namespace fs = std::filesystem;

namespace {

std::string history_csv(const std::vector<LossReport>& history) {
    std::ostringstream out;
    out << "step,fm_loss,curvature_loss,total,lr\n";
    for (const auto& r : history) {
        out << r.step << ',' << format_double(r.fm_loss) << ',' << format_double(r.curvature_loss) << ','
            << format_double(r.total) << ',' << format_double(r.lr) << '\n';
    }
    return out.str();
}

std::string points_csv(const Matrix& points) {
    std::ostringstream out;
    write_points_csv(out, points);
    return out.str();
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void report_config_error(const ConfigError& e, std::ostream& err) {
    err << "error: invalid config";
    if (!e.field().empty()) {
        err << " (field '" << e.field() << "')";
    }
    err << ": " << e.what() << '\n';
}

ExperimentConfig load_with_overrides(const fs::path& path, const std::optional<std::uint64_t>& seed,
                                     const std::optional<fs::path>& out) {
    ExperimentConfig config = load_config(path);
    if (seed) {
        config.train.seed = *seed;
    }
    if (out) {
        config.output_dir = out->string();
    }
    return config;
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
    ExperimentConfig config;
    try {
        config = load_with_overrides(args.config, args.seed, args.out);
    } catch (const ConfigError& e) {
        report_config_error(e, err);
        return kInvalidInput;
    }
    const fs::path dir = config.output_dir;
    const DatasetSplit data = generate_split(config.dataset);
    VariantOutcome trained = train_variant(config, data.train);

    save_checkpoint(dir / "checkpoint.json", make_checkpoint(config, trained.result));
    write_text_file(dir / "history.csv", history_csv(trained.result.history));
    nlohmann::json manifest = {{"config", config_to_json(config)},
                               {"seed", config.train.seed},
                               {"steps", trained.result.step},
                               {"diverged", trained.diverged},
                               {"files", {"checkpoint.json", "history.csv"}},
                               {"timestamp", utc_timestamp()}};
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

    if (trained.diverged) {
        err << "error: " << trained.message << " (last valid checkpoint at step " << trained.result.step
            << " written to " << (dir / "checkpoint.json").string() << ")\n";
        return kDiverged;
    }
    const LossReport& last = trained.result.history.back();
    out << "trained " << trained.result.step << " steps; final fm_loss " << format_double(last.fm_loss)
        << ", curvature_loss " << format_double(last.curvature_loss) << "\n";
    out << "wrote " << (dir / "checkpoint.json").string() << "\n";
    return kSuccess;
}

int cmd_sample(const SampleArgs& args, std::ostream& out, std::ostream& err) {
    Checkpoint ckpt;
    SolverConfig solver;
    try {
        ckpt = load_checkpoint(args.checkpoint);
        solver = ckpt.config.solver;
        if (args.steps) solver.steps = *args.steps;
        if (args.method) solver.method = parse_solver_method(*args.method);
        solver.validate();
        if (args.count == 0) {
            throw ConfigError("count must be >= 1", "count");
        }
    } catch (const CheckpointError& e) {
        err << "error: cannot load checkpoint (field '" << e.field() << "'): " << e.what() << '\n';
        return kInvalidInput;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    }
    const fs::path dir = args.out ? *args.out : args.checkpoint.parent_path();
    const std::uint64_t seed = args.seed.value_or(ckpt.config.train.seed);
    const VelocityField model = model_from(ckpt);
    Matrix samples;
    try {
        samples = sample_batch(model, args.count, seed, solver);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kDiverged;
    }
    write_text_file(dir / "samples.csv", points_csv(samples));
    const DatasetSplit data = generate_split(ckpt.config.dataset);
    write_text_file(dir / "samples.svg",
                    svg::scatter({{&data.held_out, "#1f77b4", "held-out data"}, {&samples, "#d62728", "generated"}},
                                 "generated samples vs held-out data"));
    out << "wrote " << samples.rows() << " samples to " << (dir / "samples.csv").string() << "\n";
    return kSuccess;
}

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
    if (args.checkpoint.has_value() == args.schedule.has_value()) {
        err << "error: pass exactly one of --checkpoint or --schedule\n";
        return kInvalidInput;
    }
    std::optional<CoefficientSchedule> schedule;
    DatasetSpec dataset;
    std::size_t grid_m = 1000;
    fs::path dir = "analysis";
    try {
        if (args.checkpoint) {
            const Checkpoint ckpt = load_checkpoint(*args.checkpoint);
            schedule = schedule_from(ckpt);
            dataset = ckpt.config.dataset;
            grid_m = ckpt.config.train.grid_m;
            dir = args.checkpoint->parent_path();
        } else {
            const ScheduleKind kind = parse_schedule_kind(*args.schedule);
            ScheduleOptions options;
            options.kind = kind;
            schedule = CoefficientSchedule::create(options, args.seed);
        }
        if (args.grid_m) grid_m = *args.grid_m;
        if (args.out) dir = *args.out;
        if (args.pairs == 0) {
            throw ConfigError("pairs must be >= 1", "pairs");
        }
    } catch (const CheckpointError& e) {
        err << "error: cannot load checkpoint (field '" << e.field() << "'): " << e.what() << '\n';
        return kInvalidInput;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    }

    ScheduleDiagnostics diag;
    try {
        const GridSpec grid(grid_m);
        DatasetSpec pair_spec = dataset;
        pair_spec.count = args.pairs;
        pair_spec.seed = dataset.seed;
        const Matrix x0 = generate_split(pair_spec).held_out;
        const Matrix eps = sample_noise(args.pairs, x0.cols(), args.seed);
        diag = schedule_diagnostics(*schedule, grid, x0, eps);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const DegenerateTrajectoryError& e) {
        err << "error: degenerate diagnostics: " << e.what() << '\n';
        return kDiverged;
    }

    std::ostringstream csv;
    csv << "t,mean_kappa,det\n";
    for (std::size_t i = 0; i < diag.t.size(); ++i) {
        csv << format_double(diag.t[i]) << ',' << format_double(diag.mean_kappa[i]) << ','
            << format_double(diag.determinant[i]) << '\n';
    }
    write_text_file(dir / "curvature_profile.csv", csv.str());
    write_text_file(dir / "curvature_profile.svg",
                    svg::lines(diag.t,
                               {{diag.mean_kappa, "#1f77b4", "mean curvature"},
                                {diag.determinant, "#d62728", "determinant a'b'' - b'a''"}},
                               "curvature profile"));
    out << "determinant_integral " << format_double(diag.determinant_integral) << "\n";
    return kSuccess;
}

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
    ExperimentConfig config;
    try {
        config = load_with_overrides(args.config, args.seed, args.out);
        if (config.compare.lambdas.empty()) {
            throw ConfigError("compare.lambdas must not be empty", "compare.lambdas");
        }
    } catch (const ConfigError& e) {
        report_config_error(e, err);
        return kInvalidInput;
    }

    const fs::path dir = config.output_dir;
    const DatasetSplit data = generate_split(config.dataset);
    std::string rows = comparison_csv_header();
    int status = kSuccess;
    for (const auto& v : comparison_variants(config)) {
        const VariantOutcome trained = train_variant(v.config, data.train);
        write_text_file(dir / v.name / "history.csv", history_csv(trained.result.history));
        if (trained.diverged) {
            err << "error: variant " << v.name << ": " << trained.message << '\n';
            status = kDiverged;
            continue;
        }
        ComparisonRow row;
        try {
            row = evaluate_variant(v, trained.result, data.held_out);
        } catch (const DivergenceError& e) {
            err << "error: variant " << v.name << ": " << e.what() << '\n';
            status = kDiverged;
            continue;
        }
        rows += comparison_csv_row(row);
        write_text_file(dir / "results.csv", rows);
        out << v.name << ": energy_distance " << format_double(row.energy_distance) << ", sliced_wasserstein "
            << format_double(row.sliced_wasserstein) << ", determinant_integral "
            << format_double(row.determinant_integral) << "\n";
    }
    write_text_file(dir / "results.csv", rows);
    return status;
}

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err) {
    const GradcheckReport report = run_gradient_check(args.seed, args.corrupt_gradient);
    for (const auto& e : report.entries) {
        out << e.name << ": max relative error " << format_double(e.comparison.max_relative_error) << " ("
            << e.comparison.worst_parameter << ")\n";
    }
    out << "max relative error " << format_double(report.max_relative_error) << "\n";
    if (!report.passed()) {
        err << "gradient check failed: worst offender " << report.worst_parameter << "\n";
        return kCheckFailed;
    }
    return kSuccess;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Curvature-guided flow matching on 2D toy densities", "curveflow"};
    app.require_subcommand(1);

    TrainArgs train_args;
    std::uint64_t train_seed = 0;
    std::string train_out;
    auto* train_cmd = app.add_subcommand("train", "Train a model from a JSON config");
    train_cmd->add_option("--config", train_args.config, "Experiment config (JSON)")->required();
    auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Override train.seed");
    auto* train_out_opt = train_cmd->add_option("--out", train_out, "Override output_dir");

    SampleArgs sample_args;
    std::size_t sample_steps = 0;
    std::string sample_method, sample_out;
    std::uint64_t sample_seed = 0;
    auto* sample_cmd = app.add_subcommand("sample", "Generate samples from a checkpoint");
    sample_cmd->add_option("--checkpoint", sample_args.checkpoint, "checkpoint.json")->required();
    sample_cmd->add_option("--count", sample_args.count, "Number of samples");
    auto* steps_opt = sample_cmd->add_option("--steps", sample_steps, "Solver steps");
    auto* method_opt = sample_cmd->add_option("--method", sample_method, "euler | heun");
    auto* sample_seed_opt = sample_cmd->add_option("--seed", sample_seed, "Noise seed");
    auto* sample_out_opt = sample_cmd->add_option("--out", sample_out, "Output directory");

    AnalyzeArgs analyze_args;
    std::string analyze_ckpt, analyze_kind, analyze_out;
    std::size_t analyze_grid = 0;
    auto* analyze_cmd = app.add_subcommand("analyze", "Curvature diagnostics of a schedule");
    auto* ckpt_opt = analyze_cmd->add_option("--checkpoint", analyze_ckpt, "checkpoint.json");
    auto* kind_opt = analyze_cmd->add_option("--schedule", analyze_kind, "linear | trigonometric | polynomial | neural");
    auto* grid_opt = analyze_cmd->add_option("--grid", analyze_grid, "Grid intervals M");
    analyze_cmd->add_option("--pairs", analyze_args.pairs, "Number of (x0, eps) pairs");
    analyze_cmd->add_option("--seed", analyze_args.seed, "Seed for noise pairs");
    auto* analyze_out_opt = analyze_cmd->add_option("--out", analyze_out, "Output directory");

    CompareArgs compare_args;
    std::uint64_t compare_seed = 0;
    std::string compare_out;
    auto* compare_cmd = app.add_subcommand("compare", "Train baselines and a lambda grid, write results.csv");
    compare_cmd->add_option("--config", compare_args.config, "Experiment config (JSON)")->required();
    auto* compare_seed_opt = compare_cmd->add_option("--seed", compare_seed, "Override train.seed");
    auto* compare_out_opt = compare_cmd->add_option("--out", compare_out, "Override output_dir");

    GradcheckArgs grad_args;
    auto* grad_cmd = app.add_subcommand("gradcheck", "Reverse-mode vs finite-difference gradient check");
    grad_cmd->add_option("--seed", grad_args.seed, "Seed for the random instances");
    grad_cmd->add_flag("--corrupt-gradient", grad_args.corrupt_gradient, "Test hook: corrupt one gradient entry");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidInput;
    }

    if (train_cmd->parsed()) {
        if (train_seed_opt->count() > 0) train_args.seed = train_seed;
        if (train_out_opt->count() > 0) train_args.out = train_out;
        return cmd_train(train_args, out, err);
    }
    if (sample_cmd->parsed()) {
        if (steps_opt->count() > 0) sample_args.steps = sample_steps;
        if (method_opt->count() > 0) sample_args.method = sample_method;
        if (sample_seed_opt->count() > 0) sample_args.seed = sample_seed;
        if (sample_out_opt->count() > 0) sample_args.out = sample_out;
        return cmd_sample(sample_args, out, err);
    }
    if (analyze_cmd->parsed()) {
        if (ckpt_opt->count() > 0) analyze_args.checkpoint = analyze_ckpt;
        if (kind_opt->count() > 0) analyze_args.schedule = analyze_kind;
        if (grid_opt->count() > 0) analyze_args.grid_m = analyze_grid;
        if (analyze_out_opt->count() > 0) analyze_args.out = analyze_out;
        return cmd_analyze(analyze_args, out, err);
    }
    if (compare_cmd->parsed()) {
        if (compare_seed_opt->count() > 0) compare_args.seed = compare_seed;
        if (compare_out_opt->count() > 0) compare_args.out = compare_out;
        return cmd_compare(compare_args, out, err);
    }
    return cmd_gradcheck(grad_args, out, err);
}

}  // namespace curveflow::cli
