#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rbcert/affine.hpp"
#include "rbcert/errors.hpp"
#include "rbcert/reduced.hpp"
#include "rbcert/truth.hpp"

namespace rbcert {

struct GreedyConfig {
    std::vector<Parameter> training_set;
    std::size_t max_basis_size = 1;
    Scalar target_error = 1e-6;
    std::size_t pod_modes_per_iter = 1;
    std::optional<Parameter> seed_parameter;
    /// Optional held-out set for true-error logging (costs one truth solve each).
    std::vector<Parameter> validation_set;
    unsigned threads = 1;
};

struct GreedyIteration {
    /// Empty on the terminal record, which only reports the final error.
    std::optional<Parameter> selected_mu;
    std::optional<std::size_t> selected_index;
    bool seeded = false;
    Scalar max_estimated_error = 0.0;
    std::size_t basis_size_before = 0;
    std::size_t basis_size_after = 0;
    std::optional<Scalar> max_true_error;
    /// Estimated error of every training parameter with the basis of size
    /// basis_size_before.
    std::vector<Scalar> estimated_errors;

    [[nodiscard]] std::size_t modes_added() const noexcept { return basis_size_after - basis_size_before; }
};

enum class StopReason { TargetReached, MaxBasisSize, ExtensionRejected };

[[nodiscard]] const char* to_string(StopReason reason) noexcept;

struct GreedyTrace {
    std::vector<GreedyIteration> iterations;
    StopReason stop_reason = StopReason::TargetReached;

    [[nodiscard]] Scalar final_max_error() const noexcept {
        return iterations.empty() ? 0.0 : iterations.back().max_estimated_error;
    }
};

struct GreedyResult {
    ReducedBasis basis;
    ReducedModel model;
    GreedyTrace trace;
};

/// Raised when the estimator or a truth solve fails mid-run; carries the
/// iterations completed so far.
class GreedyAborted : public NumericalFailure {
public:
    GreedyAborted(const std::string& what, GreedyTrace partial, ReducedBasis basis)
        : NumericalFailure(what), partial_(std::move(partial)), basis_(std::move(basis)) {}

    [[nodiscard]] const GreedyTrace& partial_trace() const noexcept { return partial_; }
    [[nodiscard]] const ReducedBasis& partial_basis() const noexcept { return basis_; }

private:
    GreedyTrace partial_;
    ReducedBasis basis_;
};

struct PODResult {
    Matrix modes;                // n_h × m, X-orthonormal
    std::vector<Scalar> singular_values;  // full spectrum, non-increasing
};

/// Gram–Schmidt in the X inner product with one re-orthogonalization pass.
/// Returns nullopt when the defect is below 1e-10·‖v‖_X.
[[nodiscard]] std::optional<ReducedBasis> orthonormalize_extend(const ReducedBasis& basis, const Vector& v,
                                                                const SparseMatrix& x,
                                                                std::optional<Parameter> origin = std::nullopt);

/// POD in the X inner product via an X-orthogonal QR of the snapshots. Returns at most m modes,
/// truncated at the numerical rank σ_k ≤ 1e-12·σ_1; singular_values always
/// holds the full spectrum.
[[nodiscard]] PODResult pod(std::span<const Vector> snapshots, const SparseMatrix& x, std::size_t m);

/// Weak greedy with the certified error bound as surrogate.
[[nodiscard]] GreedyResult run_greedy(const TruthProblem& problem, const GreedyConfig& config);

/// POD-Greedy for M u′ + A(μ)u = f with implicit Euler.
[[nodiscard]] GreedyResult run_pod_greedy(const TruthProblem& problem, const GreedyConfig& config, Scalar dt,
                                          Scalar t_final, const Vector& initial);

/// min over the parameters of (continuity UB / coercivity LB)⁻².
[[nodiscard]] Scalar weak_greedy_gamma(const ReducedModel& model, std::span<const Parameter> parameters);

/// iteration, mu_0..mu_{P-1}, max_estimated_error, basis_size, modes_added[, max_true_error]
void write_trace_csv(std::ostream& os, const GreedyTrace& trace, std::size_t parameter_dim);

/// iteration, basis_size, training_index, mu_0..mu_{P-1}, estimated_error
void write_error_table_csv(std::ostream& os, const GreedyTrace& trace,
                           std::span<const Parameter> training_set);

}  // namespace rbcert
