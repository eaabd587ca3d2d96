#include "crisp/gradcheck.hpp"

#include "crisp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crisp {

namespace {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    }
    return m;
}

LossResult evaluate(Objective objective, const PairedBatch& batch, Temperature t, LossWeight w) {
    switch (objective) {
        case Objective::kManyToOne: return many_to_one_crisp_loss(batch, t);
        case Objective::kParameterized: return parameterized_crisp_loss(batch, t, w);
        default: return standard_crisp_loss(batch, t);
    }
}

}  // namespace

GradcheckInstance random_gradcheck_instance(Objective objective, Rng& rng, const GradcheckOptions& options) {
    const int n_gl = std::uniform_int_distribution<int>(options.min_n, options.max_n)(rng);
    const int dim = std::uniform_int_distribution<int>(options.min_dim, options.max_dim)(rng);
    const int n_a = objective == Objective::kManyToOne
                        ? std::uniform_int_distribution<int>(std::max(1, n_gl / 2), n_gl)(rng)
                        : n_gl;

    std::vector<std::size_t> pairing(static_cast<std::size_t>(n_gl));
    std::iota(pairing.begin(), pairing.begin() + n_a, std::size_t{0});
    for (int i = n_a; i < n_gl; ++i) {
        pairing[static_cast<std::size_t>(i)] = std::uniform_int_distribution<std::size_t>(0, static_cast<std::size_t>(n_a - 1))(rng);
    }
    std::shuffle(pairing.begin(), pairing.end(), rng);

    GradcheckInstance inst{PairedBatch{EmbeddingBatch(normal_matrix(n_gl, dim, rng)),
                                       EmbeddingBatch(normal_matrix(n_a, dim, rng)), std::move(pairing), std::nullopt},
                           LossWeight{}};
    if (objective == Objective::kManyToOne) {
        // 0.01 degrees is about 1.1 km north-south and 0.9 km east-west here.
        std::uniform_real_distribution<double> offset(0.0, 0.01);
        std::vector<GeoPoint> coords;
        for (int k = 0; k < n_a; ++k) coords.push_back({36.0 + offset(rng), -120.0 + offset(rng)});
        inst.batch.coords = std::move(coords);
    }
    if (objective == Objective::kParameterized) inst.weight.w = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
    return inst;
}

double max_relative_error(const Matrix& analytic, const Matrix& numeric) {
    if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
        throw ShapeMismatchError("gradient shapes differ");
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double n = numeric.data()[i];
        worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), kRelativeErrorFloor}));
    }
    return worst;
}

Matrix numeric_gradient(const Matrix& x, const std::function<double(const Matrix&)>& f, double step) {
    Matrix grad(x.rows(), x.cols());
    Matrix probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double saved = probe.data()[i];
        probe.data()[i] = saved + step;
        const double up = f(probe);
        probe.data()[i] = saved - step;
        const double down = f(probe);
        probe.data()[i] = saved;
        grad.data()[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

std::vector<GradcheckResult> run_gradcheck(const std::vector<Objective>& objectives, const GradcheckOptions& options) {
    if (options.instances < 1) throw ConfigError("gradcheck needs at least one instance");
    if (!(options.step > 0.0)) throw ConfigError("finite-difference step must be positive");
    if (!(options.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (options.min_n < 1 || options.max_n < options.min_n) throw ConfigError("invalid batch size range");
    if (options.min_dim < 1 || options.max_dim < options.min_dim) throw ConfigError("invalid dimension range");
    const Temperature t = Temperature::from_log_inverse(options.log_inverse_temperature);

    std::vector<GradcheckResult> results;
    for (Objective objective : objectives) {
        Rng rng(options.seed);
        GradcheckResult r;
        r.objective = objective;
        r.instances = options.instances;
        for (std::size_t n = 0; n < options.instances; ++n) {
            const GradcheckInstance inst = random_gradcheck_instance(objective, rng, options);
            const PairedBatch& b = inst.batch;
            LossResult analytic = evaluate(objective, b, t, inst.weight);
            if (options.corrupt_gradient) analytic.grad_gl(0, 0) += 1e-3 * std::max(1.0, std::abs(analytic.grad_gl(0, 0)));

            const Matrix num_gl = numeric_gradient(
                b.gl.vectors(),
                [&](const Matrix& x) {
                    return evaluate(objective, PairedBatch{EmbeddingBatch(x), b.a, b.pair_index, b.coords}, t,
                                    inst.weight)
                        .loss;
                },
                options.step);
            const Matrix num_a = numeric_gradient(
                b.a.vectors(),
                [&](const Matrix& x) {
                    return evaluate(objective, PairedBatch{b.gl, EmbeddingBatch(x), b.pair_index, b.coords}, t,
                                    inst.weight)
                        .loss;
                },
                options.step);
            r.max_rel_error = std::max({r.max_rel_error, max_relative_error(analytic.grad_gl, num_gl),
                                        max_relative_error(analytic.grad_a, num_a)});
            if (objective == Objective::kParameterized) {
                Matrix w(1, 1);
                w(0, 0) = inst.weight.w;
                const Matrix num_w = numeric_gradient(
                    w, [&](const Matrix& x) { return evaluate(objective, b, t, LossWeight{x(0, 0)}).loss; },
                    options.step);
                Matrix ana_w(1, 1);
                ana_w(0, 0) = analytic.grad_w.value_or(0.0);
                r.max_rel_error = std::max(r.max_rel_error, max_relative_error(ana_w, num_w));
            }
        }
        r.passed = r.max_rel_error < options.tolerance;
        results.push_back(r);
    }
    return results;
}

}  // namespace crisp
