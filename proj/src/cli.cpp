#include "jenn/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "jenn/benchmarks.hpp"
#include "jenn/experiments.hpp"
#include "jenn/io.hpp"
#include "jenn/propagation.hpp"
#include "jenn/sbo.hpp"
#include "jenn/training.hpp"

namespace jenn::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, std::string_view flag) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": cannot parse '" + text + "'");
        }
    }
    if (values.empty()) throw UsageError(std::string(flag) + ": empty value");
    return values;
}

bool looks_numeric(const std::string& s) {
    return !s.empty() && s.find_first_not_of("0123456789.,+-eE ") == std::string::npos;
}

fs::path default_output_dir() {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "jenn_output";
}

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw IoError("no such file '" + path + "'");
}

struct TrainOptions {
    std::string data;
    std::string arch = "";
    std::string model_out;
    std::string report_out;
    std::string init_model;
    std::string gamma = "1";
    std::string beta = "1";
    std::string optimizer = "adam";
    TrainingConfig cfg;
    Index batch_size = 0;
    bool polish = false;
    PolishConfig polish_cfg;
};

// Applies --gamma: scalar multiplier, one value per output, or a weight/mask CSV file.
void apply_gamma(const std::string& spec, Dataset& data, TrainingConfig& cfg) {
    if (!looks_numeric(spec)) {
        require_file(spec);
        cfg.gamma_weights =
            read_gamma_csv(spec, data.outputs(), data.inputs(), data.examples());
        return;
    }
    const auto values = parse_list(spec, "--gamma");
    if (values.size() == 1) {
        if (values[0] < 0.0) throw UsageError("--gamma must be >= 0");
        cfg.gamma_scale = values[0];
        return;
    }
    if (static_cast<Index>(values.size()) != data.outputs()) {
        throw UsageError("--gamma: expected 1 or " + std::to_string(data.outputs()) + " values");
    }
    for (Index j = 0; j < data.inputs(); ++j) {
        for (Index k = 0; k < data.outputs(); ++k) {
            if (values[static_cast<std::size_t>(k)] < 0.0) throw UsageError("--gamma must be >= 0");
            data.gamma.slice(j).row(k) *= values[static_cast<std::size_t>(k)];
        }
    }
}

// Applies --beta: scalar, one value per output, or a CSV with y{k} columns (1 or m rows).
void apply_beta(const std::string& spec, Dataset& data) {
    if (!looks_numeric(spec)) {
        require_file(spec);
        const Dataset w = read_dataset_csv(spec);  // reuses the x/y column grammar
        if (w.outputs() != data.outputs() || (w.examples() != 1 && w.examples() != data.examples())) {
            throw FormatError("beta file '" + spec + "' must have y columns for every output and 1 or " +
                              std::to_string(data.examples()) + " rows");
        }
        for (Index t = 0; t < data.examples(); ++t) {
            data.beta.col(t) = w.Y.col(w.examples() == 1 ? 0 : t);
        }
        return;
    }
    const auto values = parse_list(spec, "--beta");
    if (values.size() != 1 && static_cast<Index>(values.size()) != data.outputs()) {
        throw UsageError("--beta: expected 1 or " + std::to_string(data.outputs()) + " values");
    }
    for (Index k = 0; k < data.outputs(); ++k) {
        const double v = values.size() == 1 ? values[0] : values[static_cast<std::size_t>(k)];
        if (v < 0.0) throw UsageError("--beta must be >= 0");
        data.beta.row(k).setConstant(v);
    }
}

int cmd_train(TrainOptions& o, std::ostream& out) {
    require_file(o.data);
    Dataset data = read_dataset_csv(o.data);

    std::optional<Model> init;
    if (!o.init_model.empty()) {
        require_file(o.init_model);
        init = load_model(o.init_model);
    }
    Architecture arch;
    if (!o.arch.empty()) {
        try {
            arch = parse_architecture(o.arch);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--arch: ") + e.what());
        }
    } else if (init) {
        arch = init->architecture();
    } else {
        throw UsageError("train: --arch is required unless --init-model is given");
    }

    TrainingConfig cfg = o.cfg;
    if (o.optimizer == "adam") {
        cfg.optimizer = OptimizerKind::Adam;
    } else if (o.optimizer == "gd") {
        cfg.optimizer = OptimizerKind::GradientDescent;
    } else {
        throw UsageError("--optimizer must be 'adam' or 'gd'");
    }
    if (o.batch_size > 0) cfg.batch_size = o.batch_size;

    apply_beta(o.beta, data);
    apply_gamma(o.gamma, data, cfg);
    if (o.polish) {
        if (!init) throw UsageError("train: --polish requires --init-model");
        if (!data.jacobian) throw UsageError("train: --polish requires Jacobian columns");
        JacobianTensor w = polish_weights(*data.jacobian, o.polish_cfg);
        if (cfg.gamma_weights) {
            for (Index j = 0; j < w.inputs(); ++j) {
                w.slice(j) = w.slice(j).cwiseProduct(cfg.gamma_weights->slice(j));
            }
        }
        cfg.gamma_weights = std::move(w);
    }

    const TrainingResult result = train(data, arch, cfg, init ? &*init : nullptr);
    save_model(o.model_out, result.model);
    if (!o.report_out.empty()) write_cost_history_csv(o.report_out, result.report.cost_history);

    const auto& h = result.report.cost_history;
    out << "trained ";
    for (std::size_t i = 0; i < arch.layer_sizes.size(); ++i) out << (i ? "," : "") << arch.layer_sizes[i];
    out << " on " << data.examples() << " examples for "
        << result.report.epochs_run << " epochs\n";
    if (!h.empty()) out << "cost: first " << h.front() << ", final " << h.back() << '\n';
    out << "model written to " << o.model_out << '\n';
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& input, const std::string& output,
                std::ostream& out) {
    require_file(model_path);
    require_file(input);
    const Model model = load_model(model_path);
    const Matrix X = read_inputs_csv(input, model.architecture().inputs());
    RawPrediction p;
    if (X.cols() > 0) {
        p = predict(model, X);
    } else {
        p.Y = Matrix(model.architecture().outputs(), 0);
        p.J = JacobianTensor(model.architecture().outputs(), model.architecture().inputs(), 0);
    }
    write_predictions_csv(output, X, p);
    out << "wrote " << X.cols() << " predictions to " << output << '\n';
    return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& output, std::ostream& out) {
    require_file(model_path);
    require_file(data_path);
    const Model model = load_model(model_path);
    const Dataset data = read_dataset_csv(data_path);
    if (data.inputs() != model.architecture().inputs() ||
        data.outputs() != model.architecture().outputs()) {
        throw FormatError("dataset dimensions do not match the model");
    }
    const RawPrediction p = predict(model, data.X);

    std::ostringstream csv;
    csv << "quantity,r_squared,error_std\n";
    out << std::left << std::setw(14) << "quantity" << std::setw(14) << "R^2" << "error std\n";
    auto report = [&](const std::string& name, const Vector& truth, const Vector& pred) {
        const Metrics m = compute_metrics({truth.data(), static_cast<std::size_t>(truth.size())},
                                          {pred.data(), static_cast<std::size_t>(pred.size())});
        out << std::setw(14) << name << std::setw(14) << m.r_squared << m.error_std << '\n';
        csv << name << ',' << format_double(m.r_squared) << ',' << format_double(m.error_std) << '\n';
    };
    for (Index k = 0; k < data.outputs(); ++k) {
        report("y" + std::to_string(k + 1), data.Y.row(k).transpose(), p.Y.row(k).transpose());
    }
    if (data.jacobian) {
        for (Index k = 0; k < data.outputs(); ++k) {
            for (Index j = 0; j < data.inputs(); ++j) {
                if (data.gamma.slice(j).row(k).isZero()) continue;  // column absent from the file
                report("dy" + std::to_string(k + 1) + "_dx" + std::to_string(j + 1),
                       data.jacobian->slice(j).row(k).transpose(), p.J.slice(j).row(k).transpose());
            }
        }
    }
    if (!output.empty()) {
        std::ofstream f(output);
        if (!(f << csv.str())) throw IoError("cannot write '" + output + "'");
    }
    return kExitOk;
}

struct SboOptions {
    std::string model;
    std::string function;
    std::string x0;
    std::string lower;
    std::string upper;
    std::string output;
    OptSettings settings;
};

int cmd_sbo(const SboOptions& o, std::ostream& out) {
    ScalarFunction objective;
    std::optional<Bounds> box;
    if (!o.model.empty() == !o.function.empty()) {
        throw UsageError("sbo: give exactly one of --model or --function");
    }
    Index dims = 0;
    if (!o.model.empty()) {
        require_file(o.model);
        const Model model = load_model(o.model);
        objective = surrogate_objective(model);
        dims = model.architecture().inputs();
    } else {
        const TestFunction f = [&] {
            try {
                return parse_test_function(o.function);
            } catch (const std::invalid_argument& e) {
                throw UsageError(std::string("--function: ") + e.what());
            }
        }();
        objective = [f](const Vector& x) { return f(x); };
        box = f.domain();
        dims = f.inputs();
    }
    auto to_vector = [&](const std::string& s, std::string_view flag) {
        const auto v = parse_list(s, flag);
        if (static_cast<Index>(v.size()) != dims) {
            throw UsageError(std::string(flag) + ": expected " + std::to_string(dims) + " values");
        }
        return Vector(Eigen::Map<const Vector>(v.data(), dims));
    };
    if (!o.lower.empty() || !o.upper.empty()) {
        if (o.lower.empty() || o.upper.empty()) throw UsageError("sbo: give both --lower and --upper");
        box = Bounds{to_vector(o.lower, "--lower"), to_vector(o.upper, "--upper")};
    }
    if (!box) throw UsageError("sbo: --lower/--upper are required with --model");
    const OptTrace trace = minimize({objective, *box, to_vector(o.x0, "--x0")}, o.settings);
    write_trace_csv(o.output, trace);
    const Vector& x = trace.final_point();
    out << "termination: " << to_string(trace.termination_reason) << " after "
        << trace.iterates.size() - 1 << " iterations\nfinal point:";
    for (Index d = 0; d < x.size(); ++d) out << ' ' << x(d);
    out << "\nfinal value: " << trace.values.back() << "\ntrace written to " << o.output << '\n';
    return kExitOk;
}

struct BenchOptions {
    std::string experiment;
    std::string output_dir;
    bool quick = false;
};

void quicken(TrainingConfig& c) { c.epochs = std::min<Index>(c.epochs, 300); }

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
    const fs::path dir = o.output_dir.empty() ? default_output_dir() : fs::path(o.output_dir);
    out << std::fixed << std::setprecision(4);
    if (o.experiment == "validation") {
        ValidationConfig cfg = default_validation_config();
        if (o.quick) for (auto& c : cfg.cases) quicken(c.training);
        const ValidationReport r = run_validation_suite(cfg);
        write_validation_csv(dir / "validation.csv", r);
        for (const auto& c : r.curves) write_curve_csv(dir / ("curve_" + c.experiment + ".csv"), c);
        out << std::left << std::setw(12) << "function" << std::setw(10) << "samples"
            << std::setw(12) << "JENN R^2" << "NN R^2\n";
        for (const auto& c : r.curves) {
            const auto& j = r.find(c.experiment, "jenn");
            const auto& n = r.find(c.experiment, "nn");
            out << std::setw(12) << c.experiment << std::setw(10) << j.samples << std::setw(12)
                << j.r_squared << n.r_squared << '\n';
        }
    } else if (o.experiment == "noise") {
        NoiseStudyConfig cfg = default_noise_config();
        if (o.quick) {
            quicken(cfg.training);
            cfg.steps = {0.0, 1e-2, 1e-1};
        }
        const NoiseStudyReport r = run_noisy_partials_study(cfg);
        write_noise_csv(dir / "noise.csv", r);
        out << std::left << std::setw(12) << "step" << std::setw(14) << "FD error %"
            << std::setw(12) << "JENN R^2" << "NN R^2\n";
        for (const auto& p : r.points) {
            out << std::setw(12) << p.step << std::setw(14) << p.mean_error_percent << std::setw(12)
                << p.jenn_r_squared << r.nn_r_squared << '\n';
        }
        out << "crossover at mean FD error: " << r.crossover_percent << " %\n";
    } else if (o.experiment == "runtime") {
        RuntimeConfig cfg = default_runtime_config();
        if (o.quick) {
            cfg.sample_sizes = {50, 100, 200};
            cfg.epochs = 3;
            cfg.repeats = 1;
        }
        const RuntimeReport r = run_runtime_scaling(cfg);
        write_runtime_csv(dir / "runtime.csv", r);
        out << std::left << std::setw(10) << "samples" << "seconds/epoch\n";
        for (std::size_t i = 0; i < r.sample_sizes.size(); ++i) {
            out << std::setw(10) << r.sample_sizes[i] << std::setprecision(6) << r.seconds_per_epoch[i]
                << std::setprecision(4) << '\n';
        }
        out << "linear fit R^2: " << r.fit_r_squared << '\n';
    } else if (o.experiment == "rosenbrock") {
        RosenbrockStudyConfig cfg = default_rosenbrock_config();
        if (o.quick) {
            quicken(cfg.training);
            cfg.polish_epochs = std::min<Index>(cfg.polish_epochs, 100);
            cfg.random_starts = 2;
        }
        const RosenbrockStudyReport r = run_rosenbrock_study(cfg);
        write_rosenbrock_summary_csv(dir / "rosenbrock_summary.csv", r);
        out << std::left << std::setw(16) << "model" << std::setw(10) << "iters" << std::setw(24)
            << "final point" << "distance to (1,1)\n";
        for (const auto& run : r.runs) {
            write_trace_csv(dir / ("trace_" + run.name + ".csv"), run.trace);
            const Vector& x = run.trace.final_point();
            std::ostringstream pt;
            pt << std::fixed << std::setprecision(4) << '(' << x(0) << ", " << x(1) << ')';
            out << std::setw(16) << run.name << std::setw(10) << run.trace.iterates.size() - 1
                << std::setw(24) << pt.str() << run.final_distance << '\n';
        }
    } else {
        err << "unknown experiment '" << o.experiment
            << "' (valid: validation, noise, runtime, rosenbrock)\n";
        return kExitUsage;
    }
    out << "results written to " << dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gradient-enhanced neural network surrogates"};
    app.require_subcommand(1);

    TrainOptions train_opts;
    auto* train_cmd = app.add_subcommand("train", "Train a model on a CSV dataset");
    train_cmd->add_option("--data", train_opts.data, "Dataset CSV")->required();
    train_cmd->add_option("--arch", train_opts.arch, "Layer sizes, e.g. 2,16,16,1");
    train_cmd->add_option("--model", train_opts.model_out, "Output model file")->required();
    train_cmd->add_option("--report", train_opts.report_out, "Output cost history CSV");
    train_cmd->add_option("--init-model", train_opts.init_model, "Resume from an existing model");
    train_cmd->add_option("--alpha", train_opts.cfg.alpha, "Learning rate")->capture_default_str();
    train_cmd->add_option("--lambda", train_opts.cfg.lambda, "Regularization")->capture_default_str();
    train_cmd->add_option("--epochs", train_opts.cfg.epochs, "Epochs")->capture_default_str();
    train_cmd->add_option("--batch-size", train_opts.batch_size, "Mini-batch size (0 = full)");
    train_cmd->add_option("--optimizer", train_opts.optimizer, "adam or gd")->capture_default_str();
    train_cmd->add_option("--beta1", train_opts.cfg.adam_beta1)->capture_default_str();
    train_cmd->add_option("--beta2", train_opts.cfg.adam_beta2)->capture_default_str();
    train_cmd->add_option("--eps", train_opts.cfg.adam_eps)->capture_default_str();
    train_cmd->add_option("--seed", train_opts.cfg.seed)->capture_default_str();
    train_cmd->add_option("--gamma", train_opts.gamma,
                          "Partial weights: scalar, per-output list, or mask CSV");
    train_cmd->add_option("--beta", train_opts.beta,
                          "Value weights: scalar, per-output list, or CSV with y columns");
    train_cmd->add_flag("--polish", train_opts.polish, "Reweight gamma toward flat regions");
    train_cmd->add_option("--eta", train_opts.polish_cfg.eta, "Polish amplification")
        ->capture_default_str();
    train_cmd->add_option("--epsilon", train_opts.polish_cfg.epsilon, "Polish inverse width")
        ->capture_default_str();

    std::string model_path, input_path, output_path;
    auto* predict_cmd = app.add_subcommand("predict", "Predict values and Jacobians");
    predict_cmd->add_option("--model", model_path)->required();
    predict_cmd->add_option("--input", input_path, "CSV with x columns")->required();
    predict_cmd->add_option("--output", output_path, "Predictions CSV")->required();

    std::string eval_model, eval_data, eval_out;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a model against a dataset");
    eval_cmd->add_option("--model", eval_model)->required();
    eval_cmd->add_option("--data", eval_data)->required();
    eval_cmd->add_option("--output", eval_out, "Metrics CSV");

    BenchOptions bench_opts;
    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark experiment");
    bench_cmd->add_option("experiment", bench_opts.experiment,
                          "validation, noise, runtime or rosenbrock")
        ->required();
    bench_cmd->add_option("--output-dir", bench_opts.output_dir);
    bench_cmd->add_flag("--quick", bench_opts.quick, "Reduced epochs for smoke testing");

    SboOptions sbo_opts;
    auto* sbo_cmd = app.add_subcommand("sbo", "Minimize a surrogate within a box");
    sbo_cmd->add_option("--model", sbo_opts.model);
    sbo_cmd->add_option("--function", sbo_opts.function, "Use a built-in test function instead");
    sbo_cmd->add_option("--x0", sbo_opts.x0)->required();
    sbo_cmd->add_option("--lower", sbo_opts.lower);
    sbo_cmd->add_option("--upper", sbo_opts.upper);
    sbo_cmd->add_option("--output", sbo_opts.output, "Trace CSV")->required();
    sbo_cmd->add_option("--gtol", sbo_opts.settings.gtol)->capture_default_str();
    sbo_cmd->add_option("--xtol", sbo_opts.settings.xtol)->capture_default_str();
    sbo_cmd->add_option("--max-iter", sbo_opts.settings.max_iter)->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train_cmd) return cmd_train(train_opts, out);
        if (*predict_cmd) return cmd_predict(model_path, input_path, output_path, out);
        if (*eval_cmd) return cmd_evaluate(eval_model, eval_data, eval_out, out);
        if (*bench_cmd) return cmd_bench(bench_opts, out, err);
        if (*sbo_cmd) return cmd_sbo(sbo_opts, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace jenn::cli
