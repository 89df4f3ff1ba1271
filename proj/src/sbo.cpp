#include "jenn/sbo.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "jenn/propagation.hpp"

namespace jenn {

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::GradientTolerance: return "gtol";
        case Termination::StepTolerance: return "xtol";
        case Termination::MaxIterations: return "max_iter";
        case Termination::LineSearchFailed: return "line_search";
    }
    return "unknown";
}

Vector project(const Vector& x, const Bounds& bounds) {
    return x.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
}

namespace {

Evaluation checked_eval(const ScalarFunction& f, const Vector& x) {
    Evaluation e = f(x);
    if (e.gradient.size() != x.size()) {
        throw std::invalid_argument("minimize: objective gradient has wrong dimension");
    }
    return e;
}

bool finite(const Evaluation& e) { return std::isfinite(e.value) && e.gradient.allFinite(); }

}  // namespace

OptTrace minimize(const OptProblem& problem, const OptSettings& settings) {
    problem.bounds.validate();
    if (problem.x0.size() != problem.bounds.dims() || !problem.bounds.contains(problem.x0)) {
        throw std::invalid_argument("minimize: start point must lie within the bounds");
    }

    Vector x = problem.x0;
    Evaluation cur = checked_eval(problem.objective, x);
    if (!finite(cur)) throw std::runtime_error("minimize: objective is not finite at x0");

    OptTrace trace;
    trace.iterates.push_back(x);
    trace.values.push_back(cur.value);

    // First trial step moves at most one unit along the steepest coordinate.
    double trial = 1.0 / std::max(1.0, cur.gradient.lpNorm<Eigen::Infinity>());
    trace.termination_reason = Termination::MaxIterations;

    for (Index iter = 0; iter < settings.max_iter; ++iter) {
        const Vector pg = project(x - cur.gradient, problem.bounds) - x;
        if (pg.norm() < settings.gtol) {
            trace.termination_reason = Termination::GradientTolerance;
            break;
        }

        double step = trial;
        Vector candidate;
        Evaluation next;
        bool accepted = false;
        for (int k = 0; k < settings.max_backtracks; ++k) {
            candidate = project(x - step * cur.gradient, problem.bounds);
            next = checked_eval(problem.objective, candidate);
            const double decrease = cur.gradient.dot(candidate - x);
            if (finite(next) && next.value <= cur.value + settings.armijo * decrease) {
                accepted = true;
                break;
            }
            step *= settings.shrink;
        }
        if (!accepted) {
            trace.termination_reason = Termination::LineSearchFailed;
            break;
        }

        const Vector s = candidate - x;
        const Vector y = next.gradient - cur.gradient;
        x = candidate;
        cur = std::move(next);
        trace.iterates.push_back(x);
        trace.values.push_back(cur.value);

        if (s.norm() < settings.xtol) {
            trace.termination_reason = Termination::StepTolerance;
            break;
        }
        // Barzilai-Borwein step for the next trial; fall back to a unit-length move.
        const double sy = s.dot(y);
        trial = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12)
                         : 1.0 / std::max(1.0, cur.gradient.lpNorm<Eigen::Infinity>());
    }
    trace.converged = trace.termination_reason == Termination::GradientTolerance ||
                      trace.termination_reason == Termination::StepTolerance;
    return trace;
}

ScalarFunction surrogate_objective(const Model& model) {
    if (model.architecture().outputs() != 1) {
        throw std::invalid_argument("surrogate objective requires a single-output model, got " +
                                    std::to_string(model.architecture().outputs()));
    }
    auto shared = std::make_shared<const Model>(model);
    return [shared](const Vector& x) {
        const RawPrediction p = predict(*shared, x);
        Evaluation e;
        e.value = p.Y(0, 0);
        e.gradient.resize(x.size());
        for (Index j = 0; j < x.size(); ++j) e.gradient(j) = p.J(0, j, 0);
        return e;
    };
}

const StudyRun& RosenbrockStudyReport::run(std::string_view name) const {
    for (const auto& r : runs) {
        if (r.name == name) return r;
    }
    throw std::out_of_range("no study run named '" + std::string(name) + "'");
}

RosenbrockStudyConfig default_rosenbrock_config() {
    RosenbrockStudyConfig c;
    c.architecture = parse_architecture("2,16,16,1");
    c.training.alpha = 0.01;
    c.training.epochs = 10000;
    c.training.lambda = 0.01;
    c.training.seed = 3;
    c.polish_alpha = 0.001;
    c.polish_epochs = 10000;
    return c;
}

RosenbrockStudyReport run_rosenbrock_study(const RosenbrockStudyConfig& config) {
    const TestFunction rosenbrock(TestFunctionKind::Rosenbrock2D);
    const Bounds box = rosenbrock.domain();

    const Matrix grid = grid_sample(config.grid_levels, box);
    const Matrix lhs = lhs_sample(config.lhs_points, box, config.lhs_seed);
    Matrix points(2, grid.cols() + lhs.cols());
    points << grid, lhs;
    const Dataset data = sample_dataset(rosenbrock, points);

    TrainingConfig nn_cfg = config.training;
    nn_cfg.gamma_scale = 0.0;
    const Model nn = train(data, config.architecture, nn_cfg).model;
    const Model jenn = train(data, config.architecture, config.training).model;

    TrainingConfig polish_cfg = config.training;
    polish_cfg.epochs = config.polish_epochs;
    polish_cfg.alpha = config.polish_alpha;
    polish_cfg.gamma_weights = polish_weights(*data.jacobian, config.polish);
    const Model polished = train(data, config.architecture, polish_cfg, &jenn).model;

    RosenbrockStudyReport report;
    std::mt19937_64 rng(config.start_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index i = 0; i < config.random_starts; ++i) {
        Vector s(2);
        for (Index d = 0; d < 2; ++d) s(d) = box.lower(d) + unit(rng) * (box.upper(d) - box.lower(d));
        report.random_starts.push_back(s);
    }

    const Vector optimum = Vector::Ones(2);
    const std::vector<std::pair<std::string, ScalarFunction>> objectives = {
        {"true", [rosenbrock](const Vector& x) { return rosenbrock(x); }},
        {"nn", surrogate_objective(nn)},
        {"jenn", surrogate_objective(jenn)},
        {"jenn_polished", surrogate_objective(polished)},
    };
    for (const auto& [name, objective] : objectives) {
        StudyRun run;
        run.name = name;
        run.trace = minimize({objective, box, config.x0}, config.settings);
        run.final_distance = (run.trace.final_point() - optimum).norm();
        double sum = 0.0;
        for (const Vector& s : report.random_starts) {
            const double d = (minimize({objective, box, s}, config.settings).final_point() - optimum).norm();
            sum += d;
            run.start_dispersion_max = std::max(run.start_dispersion_max, d);
        }
        if (!report.random_starts.empty()) {
            run.start_dispersion_mean = sum / static_cast<double>(report.random_starts.size());
        }
        report.runs.push_back(std::move(run));
    }
    return report;
}

}  // namespace jenn
