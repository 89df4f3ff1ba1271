#include "jenn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <vector>

#include "jenn/propagation.hpp"
#include "jenn/training.hpp"

namespace jenn {

namespace {

using Clock = std::chrono::steady_clock;

std::string arch_string(const Architecture& arch) {
    std::ostringstream os;
    for (std::size_t i = 0; i < arch.layer_sizes.size(); ++i) {
        if (i) os << ',';
        os << arch.layer_sizes[i];
    }
    return os.str();
}

Matrix training_points(const TestFunction& f, Index n, SamplingPlan plan, std::uint64_t seed) {
    const Bounds box = f.domain();
    if (plan == SamplingPlan::Lhs || f.inputs() != 1) return lhs_sample(n, box, seed);
    Matrix pts(1, n);
    if (plan == SamplingPlan::Even) {
        if (n < 2) throw std::invalid_argument("even sampling needs at least two points");
        for (Index i = 0; i < n; ++i) {
            pts(0, i) = box.lower(0) + (box.upper(0) - box.lower(0)) * static_cast<double>(i) /
                                           static_cast<double>(n - 1);
        }
        return pts;
    }
    const double width = (box.upper(0) - box.lower(0)) / static_cast<double>(n);
    for (Index i = 0; i < n; ++i) pts(0, i) = box.lower(0) + (static_cast<double>(i) + 0.5) * width;
    return pts;
}

struct TestSet {
    Matrix X;
    Vector y;
    Matrix grad;  // inputs x points
};

// Dense grid over the domain, minus any grid point that coincides with a training point.
TestSet make_test_set(const TestFunction& f, Index levels, const Matrix& train) {
    TestSet s;
    const Matrix grid = grid_sample(levels, f.domain());
    std::vector<Index> keep;
    for (Index t = 0; t < grid.cols(); ++t) {
        bool taken = false;
        for (Index i = 0; i < train.cols() && !taken; ++i) {
            taken = (grid.col(t) - train.col(i)).cwiseAbs().maxCoeff() <= 1e-12;
        }
        if (!taken) keep.push_back(t);
    }
    s.X = grid(Eigen::all, keep);
    s.y.resize(s.X.cols());
    s.grad.resize(f.inputs(), s.X.cols());
    for (Index t = 0; t < s.X.cols(); ++t) {
        const Evaluation e = f(s.X.col(t));
        s.y(t) = e.value;
        s.grad.col(t) = e.gradient;
    }
    return s;
}

Metrics score_values(const TestSet& s, const RawPrediction& p) {
    const Vector pred = p.Y.row(0).transpose();
    return compute_metrics({s.y.data(), static_cast<std::size_t>(s.y.size())},
                           {pred.data(), static_cast<std::size_t>(pred.size())});
}

std::vector<double> score_partials(const TestSet& s, const RawPrediction& p) {
    std::vector<double> out;
    for (Index j = 0; j < s.grad.rows(); ++j) {
        const Vector truth = s.grad.row(j).transpose();
        const Vector pred = p.J.slice(j).row(0).transpose();
        out.push_back(compute_metrics({truth.data(), static_cast<std::size_t>(truth.size())},
                                      {pred.data(), static_cast<std::size_t>(pred.size())})
                          .r_squared);
    }
    return out;
}

double linear_fit(const std::vector<double>& x, const std::vector<double>& y, double& slope,
                  double& intercept) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    slope = sxy / sxx;
    intercept = my - slope * mx;
    std::vector<double> fitted(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) fitted[i] = slope * x[i] + intercept;
    return compute_metrics(y, fitted).r_squared;
}

}  // namespace

const ExperimentResult& ValidationReport::find(std::string_view experiment,
                                               std::string_view model) const {
    for (const auto& r : results) {
        if (r.experiment == experiment && r.model == model) return r;
    }
    throw std::out_of_range("no result for " + std::string(experiment) + "/" + std::string(model));
}

ValidationConfig default_validation_config() {
    ValidationConfig cfg;

    ValidationCase sin;
    sin.function = TestFunctionKind::Sin;
    sin.samples = 3;
    sin.plan = SamplingPlan::Centered;
    sin.architecture = parse_architecture("1,6,6,1");
    sin.training.alpha = 0.01;
    sin.training.lambda = 0.01;
    sin.training.epochs = 10000;
    sin.test_levels = 200;
    cfg.cases.push_back(sin);

    ValidationCase xsinx = sin;
    xsinx.function = TestFunctionKind::XSinX;
    xsinx.samples = 4;
    xsinx.plan = SamplingPlan::Even;
    cfg.cases.push_back(xsinx);

    ValidationCase rastrigin;
    rastrigin.function = TestFunctionKind::Rastrigin2D;
    rastrigin.samples = 100;
    rastrigin.plan = SamplingPlan::Lhs;
    rastrigin.sample_seed = 0;
    rastrigin.architecture = parse_architecture("2,64,1");
    rastrigin.training.alpha = 0.01;
    rastrigin.training.lambda = 0.3;
    rastrigin.training.epochs = 10000;
    rastrigin.test_levels = 50;
    cfg.cases.push_back(rastrigin);
    return cfg;
}

ExperimentResult run_validation_case(const ValidationCase& c, double gamma_scale, CurveData* curve) {
    const TestFunction f(c.function);
    const Matrix pts = training_points(f, c.samples, c.plan, c.sample_seed);
    const Dataset data = sample_dataset(f, pts);

    TrainingConfig cfg = c.training;
    cfg.gamma_scale = gamma_scale;
    const auto start = Clock::now();
    const TrainingResult fit = train(data, c.architecture, cfg);
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();

    const TestSet test = make_test_set(f, c.test_levels, pts);
    const RawPrediction pred = predict(fit.model, test.X);
    const Metrics m = score_values(test, pred);

    if (curve) {
        curve->experiment = std::string(f.name());
        curve->points = test.X;
        curve->truth = test.y;
        curve->train_points = pts;
        (gamma_scale > 0.0 ? curve->jenn : curve->nn) = pred.Y.row(0).transpose();
    }

    ExperimentResult r;
    r.experiment = std::string(f.name());
    r.model = gamma_scale > 0.0 ? "jenn" : "nn";
    r.samples = c.samples;
    r.r_squared = m.r_squared;
    r.error_std = m.error_std;
    r.partial_r_squared = score_partials(test, pred);
    r.runtime_seconds = seconds;
    r.final_cost = fit.report.final_cost;
    r.architecture = arch_string(c.architecture);
    return r;
}

ValidationReport run_validation_suite(const ValidationConfig& config) {
    ValidationReport report;
    for (const auto& c : config.cases) {
        CurveData curve;
        report.results.push_back(run_validation_case(c, 1.0, &curve));
        report.results.push_back(run_validation_case(c, 0.0, &curve));
        report.curves.push_back(std::move(curve));
    }
    return report;
}

NoiseStudyConfig default_noise_config() {
    NoiseStudyConfig cfg;
    cfg.samples = 200;
    cfg.architecture = parse_architecture("2,64,1");
    cfg.training.alpha = 0.01;
    cfg.training.lambda = 0.01;
    cfg.training.epochs = 5000;
    cfg.scheme = DifferenceScheme::Forward;
    cfg.steps = {0.0, 1e-3, 3e-3, 1e-2, 2e-2, 3e-2, 5e-2, 8e-2, 1.2e-1, 2e-1};
    return cfg;
}

double mean_fd_error_percent(const JacobianTensor& approx, const JacobianTensor& exact) {
    if (!approx.same_shape(exact)) throw std::invalid_argument("fd error: shape mismatch");
    double err = 0.0, mag = 0.0;
    for (Index j = 0; j < exact.inputs(); ++j) {
        err += (approx.slice(j) - exact.slice(j)).cwiseAbs().sum();
        mag += exact.slice(j).cwiseAbs().sum();
    }
    if (mag == 0.0) throw std::invalid_argument("fd error: exact partials are all zero");
    return 100.0 * err / mag;
}

NoiseStudyReport run_noisy_partials_study(const NoiseStudyConfig& config) {
    const TestFunction f(TestFunctionKind::Rastrigin2D);
    const Matrix pts = lhs_sample(config.samples, f.domain(), config.sample_seed);
    const Dataset exact = sample_dataset(f, pts);
    const TestSet test = make_test_set(f, config.test_levels, pts);
    auto score = [&](const Dataset& d, double gamma_scale) {
        TrainingConfig cfg = config.training;
        cfg.gamma_scale = gamma_scale;
        const Model model = train(d, config.architecture, cfg).model;
        return score_values(test, predict(model, test.X)).r_squared;
    };

    NoiseStudyReport report;
    report.nn_r_squared = score(exact, 0.0);
    const ScalarFunction fn = [&f](const Vector& x) { return f(x); };
    for (double h : config.steps) {
        Dataset noisy = exact;
        if (h > 0.0) noisy.jacobian = finite_difference_partials(fn, pts, h, config.scheme);
        NoisePoint p;
        p.step = h;
        p.mean_error_percent = mean_fd_error_percent(*noisy.jacobian, *exact.jacobian);
        p.jenn_r_squared = score(noisy, 1.0);
        report.points.push_back(p);
    }

    std::vector<NoisePoint> sorted = report.points;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.mean_error_percent < b.mean_error_percent;
    });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double gap = sorted[i].jenn_r_squared - report.nn_r_squared;
        if (gap > 0.0) continue;
        if (i == 0) {
            report.crossover_percent = sorted[0].mean_error_percent;
        } else {
            const double g0 = sorted[i - 1].jenn_r_squared - report.nn_r_squared;
            const double e0 = sorted[i - 1].mean_error_percent;
            const double e1 = sorted[i].mean_error_percent;
            report.crossover_percent = e0 + (e1 - e0) * g0 / (g0 - gap);
        }
        break;
    }
    return report;
}

RuntimeConfig default_runtime_config() {
    RuntimeConfig cfg;
    cfg.sample_sizes = {250, 500, 1000, 2000, 4000};
    cfg.architecture = parse_architecture("2,16,16,1");
    cfg.epochs = 20;
    cfg.repeats = 3;
    return cfg;
}

RuntimeReport run_runtime_scaling(const RuntimeConfig& config) {
    const TestFunction f(TestFunctionKind::Rastrigin2D);
    RuntimeReport report;
    std::vector<double> xs;
    for (Index m : config.sample_sizes) {
        const Dataset data = sample_dataset(f, lhs_sample(m, f.domain(), config.seed));
        TrainingConfig cfg;
        cfg.epochs = config.epochs;
        cfg.seed = config.seed;
        std::vector<double> times;
        for (int r = 0; r < std::max(1, config.repeats); ++r) {
            const auto start = Clock::now();
            train(data, config.architecture, cfg);
            times.push_back(std::chrono::duration<double>(Clock::now() - start).count());
        }
        std::sort(times.begin(), times.end());
        report.sample_sizes.push_back(m);
        report.seconds_per_epoch.push_back(times[times.size() / 2] /
                                           static_cast<double>(std::max<Index>(1, config.epochs)));
        xs.push_back(static_cast<double>(m));
    }
    if (xs.size() >= 2) {
        report.fit_r_squared =
            linear_fit(xs, report.seconds_per_epoch, report.slope, report.intercept);
    }
    return report;
}

}  // namespace jenn
