#include "rbcert/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "rbcert/parallel.hpp"

namespace rbcert {

namespace {

std::string real(Scalar v) {
    return fmt::format("{:.17g}", v);
}

// Lowest index wins ties.
std::size_t argmax(const std::vector<Scalar>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

void validate_config(const TruthProblem& problem, const GreedyConfig& config) {
    if (config.training_set.empty()) {
        throw InvalidInput("greedy training set is empty");
    }
    if (config.max_basis_size < 1) {
        throw InvalidInput("max_basis_size must be >= 1");
    }
    if (!(config.target_error > 0.0)) {
        throw InvalidInput("target_error must be positive");
    }
    if (config.pod_modes_per_iter < 1) {
        throw InvalidInput("pod_modes_per_iter must be >= 1");
    }
    for (const auto& mu : config.training_set) {
        problem.domain().check(mu);
    }
    for (const auto& mu : config.validation_set) {
        problem.domain().check(mu);
    }
    if (config.seed_parameter) {
        problem.domain().check(*config.seed_parameter);
    }
}

// X-orthogonal projection defect v − V Vᵀ X v.
Vector projection_defect(const ReducedBasis& basis, const SparseMatrix& x, const Vector& v) {
    if (basis.size() == 0) {
        return v;
    }
    return v - basis.matrix * (basis.matrix.transpose() * (x * v));
}

}  // namespace

const char* to_string(StopReason reason) noexcept {
    switch (reason) {
        case StopReason::TargetReached: return "target_reached";
        case StopReason::MaxBasisSize: return "max_basis_size";
        case StopReason::ExtensionRejected: return "extension_rejected";
    }
    return "unknown";
}

std::optional<ReducedBasis> orthonormalize_extend(const ReducedBasis& basis, const Vector& v,
                                                  const SparseMatrix& x, std::optional<Parameter> origin) {
    if (v.size() != basis.truth_size() || v.size() != x.rows()) {
        throw InvalidInput("extension vector does not match truth dimension");
    }
    const Scalar v_norm = x_norm(x, v);
    if (!(v_norm > 0.0)) {
        return std::nullopt;
    }
    Vector w = v;
    for (int pass = 0; pass < 2 && basis.size() > 0; ++pass) {
        w -= basis.matrix * (basis.matrix.transpose() * (x * w));
    }
    const Scalar w_norm = x_norm(x, w);
    if (!(w_norm >= 1e-10 * v_norm)) {
        return std::nullopt;
    }
    ReducedBasis out;
    out.matrix.resize(basis.truth_size(), basis.size() + 1);
    out.matrix.leftCols(basis.size()) = basis.matrix;
    out.matrix.col(basis.size()) = w / w_norm;
    out.snapshot_parameters = basis.snapshot_parameters;
    if (origin) {
        out.snapshot_parameters.push_back(std::move(*origin));
    }
    return out;
}

PODResult pod(std::span<const Vector> snapshots, const SparseMatrix& x, std::size_t m) {
    if (m < 1) {
        throw InvalidInput("POD needs m >= 1");
    }
    if (snapshots.empty()) {
        throw InvalidInput("POD needs at least one snapshot");
    }
    const auto count = static_cast<Eigen::Index>(snapshots.size());
    const Eigen::Index n = snapshots.front().size();
    Matrix s(n, count);
    for (Eigen::Index j = 0; j < count; ++j) {
        if (snapshots[static_cast<std::size_t>(j)].size() != n) {
            throw InvalidInput("POD snapshots differ in length");
        }
        s.col(j) = snapshots[static_cast<std::size_t>(j)];
    }
    // X-orthogonal QR by two Gram–Schmidt passes, then the SVD of the small
    // factor: singular values stay accurate to eps·σ_1, unlike Gram eigenvalues.
    Matrix q(n, count);
    Matrix r = Matrix::Zero(count, count);
    Eigen::Index rank_q = 0;
    for (Eigen::Index j = 0; j < count; ++j) {
        Vector w = s.col(j);
        const Scalar s_norm = x_norm(x, w);
        for (int pass = 0; pass < 2 && rank_q > 0; ++pass) {
            const Vector c = q.leftCols(rank_q).transpose() * (x * w);
            w -= q.leftCols(rank_q) * c;
            r.col(j).head(rank_q) += c;
        }
        const Scalar w_norm = x_norm(x, w);
        // Dependent columns leave eps-level noise; dropping it perturbs σ by ≤ 1e-13·‖s_j‖.
        if (w_norm > 1e-13 * s_norm) {
            q.col(rank_q) = w / w_norm;
            r(rank_q, j) = w_norm;
            ++rank_q;
        }
    }
    PODResult out;
    out.singular_values.assign(static_cast<std::size_t>(count), 0.0);
    if (rank_q == 0) {
        out.modes = Matrix::Zero(n, 0);
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(r.topRows(rank_q), Eigen::ComputeThinU);
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
        out.singular_values[static_cast<std::size_t>(k)] = svd.singularValues()[k];
    }
    const Scalar sigma1 = out.singular_values.front();
    std::size_t rank = 0;
    if (sigma1 > 0.0) {
        while (rank < out.singular_values.size() && out.singular_values[rank] > 1e-12 * sigma1) {
            ++rank;
        }
    }
    const std::size_t keep = std::min(m, rank);
    ReducedBasis acc = ReducedBasis::empty(n);
    for (std::size_t k = 0; k < keep; ++k) {
        const Vector mode = q.leftCols(rank_q) * svd.matrixU().col(static_cast<Eigen::Index>(k));
        auto next = orthonormalize_extend(acc, mode, x);
        if (!next) {
            break;
        }
        acc = std::move(*next);
    }
    out.modes = std::move(acc.matrix);
    return out;
}

GreedyResult run_greedy(const TruthProblem& problem, const GreedyConfig& config) {
    validate_config(problem, config);
    const SparseMatrix& x = problem.inner_product();
    const TruthPrecomputation pre = prepare_offline(problem);

    std::vector<Vector> validation_truth;
    for (const auto& mu : config.validation_set) {
        validation_truth.push_back(solve_truth(problem, mu).coefficients);
    }

    GreedyResult result{ReducedBasis::empty(problem.size()), {}, {}};
    auto& trace = result.trace;
    std::size_t iteration = 0;
    while (true) {
        result.model = project(problem, result.basis, pre);
        const ReducedModel& model = result.model;

        GreedyIteration record;
        record.basis_size_before = static_cast<std::size_t>(result.basis.size());
        record.basis_size_after = record.basis_size_before;
        record.estimated_errors.assign(config.training_set.size(), 0.0);
        try {
            parallel_for(config.training_set.size(), config.threads, [&](std::size_t i) {
                const auto& mu = config.training_set[i];
                record.estimated_errors[i] = certify(model, mu, solve_reduced(model, mu)).error_bound;
            });
        } catch (const std::exception& e) {
            throw GreedyAborted(std::string("estimator failure: ") + e.what(), trace, result.basis);
        }
        const std::size_t best = argmax(record.estimated_errors);
        record.max_estimated_error = record.estimated_errors[best];

        if (!validation_truth.empty()) {
            Scalar worst = 0.0;
            for (std::size_t i = 0; i < validation_truth.size(); ++i) {
                const auto sol = solve_reduced(model, config.validation_set[i]);
                worst = std::max(worst, x_norm(x, validation_truth[i] - lift(result.basis, sol)));
            }
            record.max_true_error = worst;
        }

        const bool target = record.max_estimated_error <= config.target_error;
        const bool full = record.basis_size_before >= config.max_basis_size;
        if (target || full) {
            trace.stop_reason = target ? StopReason::TargetReached : StopReason::MaxBasisSize;
            trace.iterations.push_back(std::move(record));
            break;
        }

        Parameter selected = config.training_set[best];
        record.selected_index = best;
        if (iteration == 0 && config.seed_parameter) {
            selected = *config.seed_parameter;
            record.selected_index.reset();
            record.seeded = true;
        }
        record.selected_mu = selected;

        Vector snapshot;
        try {
            snapshot = solve_truth(problem, selected).coefficients;
        } catch (const std::exception& e) {
            throw GreedyAborted(std::string("truth solve failure: ") + e.what(), trace, result.basis);
        }
        auto extended = orthonormalize_extend(result.basis, snapshot, x, selected);
        if (!extended) {
            trace.stop_reason = StopReason::ExtensionRejected;
            record.selected_mu.reset();
            record.selected_index.reset();
            trace.iterations.push_back(std::move(record));
            break;
        }
        result.basis = std::move(*extended);
        record.basis_size_after = static_cast<std::size_t>(result.basis.size());
        trace.iterations.push_back(std::move(record));
        ++iteration;
    }
    return result;
}

GreedyResult run_pod_greedy(const TruthProblem& problem, const GreedyConfig& config, Scalar dt,
                            Scalar t_final, const Vector& initial) {
    validate_config(problem, config);
    [[maybe_unused]] const int steps = time_steps(dt, t_final);
    if (!problem.mesh().mass) {
        throw InvalidInput("POD-Greedy needs a problem with a mass matrix");
    }
    if (initial.size() != problem.size()) {
        throw InvalidInput("initial condition length does not match problem size");
    }
    const SparseMatrix& x = problem.inner_product();
    const TruthPrecomputation pre = prepare_offline(problem);

    std::vector<Trajectory> validation_truth;
    for (const auto& mu : config.validation_set) {
        validation_truth.push_back(solve_parabolic(problem, mu, dt, t_final, initial));
    }

    GreedyResult result{ReducedBasis::empty(problem.size()), {}, {}};
    auto& trace = result.trace;
    std::size_t iteration = 0;
    while (true) {
        result.model = project(problem, result.basis, pre, &initial);
        const ReducedModel& model = result.model;

        GreedyIteration record;
        record.basis_size_before = static_cast<std::size_t>(result.basis.size());
        record.basis_size_after = record.basis_size_before;
        record.estimated_errors.assign(config.training_set.size(), 0.0);
        try {
            parallel_for(config.training_set.size(), config.threads, [&](std::size_t i) {
                record.estimated_errors[i] =
                    solve_reduced_parabolic(model, config.training_set[i], dt, t_final).surrogate;
            });
        } catch (const std::exception& e) {
            throw GreedyAborted(std::string("estimator failure: ") + e.what(), trace, result.basis);
        }
        const std::size_t best = argmax(record.estimated_errors);
        record.max_estimated_error = record.estimated_errors[best];

        if (!validation_truth.empty()) {
            Scalar worst = 0.0;
            for (std::size_t i = 0; i < validation_truth.size(); ++i) {
                const auto red = solve_reduced_parabolic(model, config.validation_set[i], dt, t_final);
                const auto& states = validation_truth[i].states;
                for (std::size_t k = 0; k < states.size(); ++k) {
                    const Vector approx = result.basis.size() > 0
                                              ? Vector(result.basis.matrix * red.coordinates[k])
                                              : Vector::Zero(problem.size());
                    worst = std::max(worst, x_norm(x, states[k] - approx));
                }
            }
            record.max_true_error = worst;
        }

        const bool target = record.max_estimated_error <= config.target_error;
        const bool full = record.basis_size_before >= config.max_basis_size;
        if (target || full) {
            trace.stop_reason = target ? StopReason::TargetReached : StopReason::MaxBasisSize;
            trace.iterations.push_back(std::move(record));
            break;
        }

        Parameter selected = config.training_set[best];
        record.selected_index = best;
        if (iteration == 0 && config.seed_parameter) {
            selected = *config.seed_parameter;
            record.selected_index.reset();
            record.seeded = true;
        }
        record.selected_mu = selected;

        std::vector<Vector> defects;
        try {
            const Trajectory traj = solve_parabolic(problem, selected, dt, t_final, initial);
            defects.reserve(traj.states.size());
            for (const auto& u : traj.states) {
                defects.push_back(projection_defect(result.basis, x, u));
            }
        } catch (const std::exception& e) {
            throw GreedyAborted(std::string("truth solve failure: ") + e.what(), trace, result.basis);
        }
        const std::size_t room = config.max_basis_size - record.basis_size_before;
        const PODResult modes = pod(defects, x, std::min(config.pod_modes_per_iter, room));
        for (Eigen::Index k = 0; k < modes.modes.cols(); ++k) {
            auto extended = orthonormalize_extend(result.basis, modes.modes.col(k), x, selected);
            if (!extended) {
                break;
            }
            result.basis = std::move(*extended);
        }
        record.basis_size_after = static_cast<std::size_t>(result.basis.size());
        if (record.basis_size_after == record.basis_size_before) {
            trace.stop_reason = StopReason::ExtensionRejected;
            record.selected_mu.reset();
            record.selected_index.reset();
            trace.iterations.push_back(std::move(record));
            break;
        }
        trace.iterations.push_back(std::move(record));
        ++iteration;
    }
    return result;
}

Scalar weak_greedy_gamma(const ReducedModel& model, std::span<const Parameter> parameters) {
    Scalar gamma = 1.0;
    bool any = false;
    for (const auto& mu : parameters) {
        const Scalar ratio = continuity_upper_bound(model, mu) / coercivity_lower_bound(model, mu);
        const Scalar g = 1.0 / (ratio * ratio);
        gamma = any ? std::min(gamma, g) : g;
        any = true;
    }
    if (!any) {
        throw InvalidInput("weak greedy gamma needs at least one parameter");
    }
    return gamma;
}

void write_trace_csv(std::ostream& os, const GreedyTrace& trace, std::size_t parameter_dim) {
    const bool with_true = std::any_of(trace.iterations.begin(), trace.iterations.end(),
                                       [](const GreedyIteration& it) { return it.max_true_error.has_value(); });
    os << "iteration";
    for (std::size_t d = 0; d < parameter_dim; ++d) {
        os << ",mu_" << d;
    }
    os << ",max_estimated_error,basis_size,modes_added";
    if (with_true) {
        os << ",max_true_error";
    }
    os << '\n';
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        const auto& it = trace.iterations[i];
        os << i;
        for (std::size_t d = 0; d < parameter_dim; ++d) {
            os << ',';
            if (it.selected_mu) {
                os << real((*it.selected_mu)[d]);
            }
        }
        os << ',' << real(it.max_estimated_error) << ',' << it.basis_size_after << ',' << it.modes_added();
        if (with_true) {
            os << ',';
            if (it.max_true_error) {
                os << real(*it.max_true_error);
            }
        }
        os << '\n';
    }
}

void write_error_table_csv(std::ostream& os, const GreedyTrace& trace, std::span<const Parameter> training_set) {
    const std::size_t dim = training_set.empty() ? 0 : training_set.front().size();
    os << "iteration,basis_size,training_index";
    for (std::size_t d = 0; d < dim; ++d) {
        os << ",mu_" << d;
    }
    os << ",estimated_error\n";
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        const auto& it = trace.iterations[i];
        for (std::size_t j = 0; j < it.estimated_errors.size(); ++j) {
            os << i << ',' << it.basis_size_before << ',' << j;
            for (std::size_t d = 0; d < dim; ++d) {
                os << ',' << real(training_set[j][d]);
            }
            os << ',' << real(it.estimated_errors[j]) << '\n';
        }
    }
}

}  // namespace rbcert
