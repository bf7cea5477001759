#pragma once

#include <optional>
#include <vector>

#include "rbcert/affine.hpp"
#include "rbcert/linalg.hpp"
#include "rbcert/truth.hpp"

namespace rbcert {

/// Reduced space V_N, stored as X-orthonormal columns.
struct ReducedBasis {
    Matrix matrix;
    std::vector<Parameter> snapshot_parameters;

    [[nodiscard]] Eigen::Index size() const noexcept { return matrix.cols(); }
    [[nodiscard]] Eigen::Index truth_size() const noexcept { return matrix.rows(); }

    static ReducedBasis empty(Eigen::Index truth_size) { return {Matrix(truth_size, 0), {}}; }
};

/// Inner products, in the dual X⁻¹ metric, of the Riesz representers of f and
/// of A_q·v_n for every term q and basis column n.
struct ResidualGram {
    Scalar c_ff = 0.0;
    std::vector<Vector> c_fA;               // [q] -> N
    std::vector<std::vector<Matrix>> c_AA;  // [q][q'] -> N × N
};

struct CoercivitySpec {
    Parameter mu_bar;
    Scalar c_ref = 1.0;
    std::vector<bool> positive;  // per term, θ_q > 0 on the whole domain
};

/// Extra reduced data for implicit Euler on M u′ + A(μ)u = f.
struct ParabolicData {
    Matrix reduced_mass;               // Vᵀ M V
    Vector initial_coordinates;        // Vᵀ X u⁰
    Scalar initial_defect_mass = 0.0;  // ‖u⁰ − V Vᵀ X u⁰‖_M
};

/// Everything the online stage needs; no field depends on the truth dimension.
struct ReducedModel {
    ParameterDomain domain;
    std::vector<CoefficientFunction> coefficients;
    std::vector<Matrix> reduced_terms;  // [q] -> Vᵀ A_q V
    Vector reduced_load;                // Vᵀ f
    Matrix reduced_outputs;             // S × N
    ResidualGram residual_gram;
    /// Upper-trapezoidal R with R c = (Householder Q)ᵀ W c, where the columns of W
    /// are the half-solved operands [f | A_1 V | … | A_Q V | (M V)]. For any
    /// coefficient vector c, ‖R c‖₂ equals the dual norm of the corresponding
    /// residual, without the cancellation of the expanded Gram form. R is built
    /// in extended precision and stored as the double pair hi + lo.
    Matrix residual_factor;
    Matrix residual_factor_low;
    Vector output_dual_norms;  // ‖s_i‖_{X′}
    CoercivitySpec coercivity;
    std::vector<Scalar> continuity;  // γ_q = ‖A_q‖ in the X-induced norm
    std::optional<ParabolicData> parabolic;

    [[nodiscard]] Eigen::Index basis_size() const noexcept { return reduced_load.size(); }
    [[nodiscard]] std::size_t num_terms() const noexcept { return reduced_terms.size(); }
    [[nodiscard]] Eigen::Index num_outputs() const noexcept { return reduced_outputs.rows(); }
};

struct ReducedSolution {
    Vector coordinates;
    Parameter parameter;
};

struct Certificate {
    Scalar error_bound = 0.0;
    Vector output_bound;
    Scalar coercivity_lb = 0.0;
    Scalar residual_dual_norm = 0.0;
};

/// Truth-dimension quantities that only depend on the problem: the X
/// factorization, per-term continuity constants and output dual norms.
/// Computed once and reused by every projection of the same problem.
struct TruthPrecomputation {
    InnerProductFactor factor;
    std::vector<Scalar> continuity;
    Vector output_dual_norms;
};

[[nodiscard]] TruthPrecomputation prepare_offline(const TruthProblem& problem);

/// Largest eigenvalue of the pencil (A, X) for symmetric PSD A. Dense for
/// small systems, power iteration in the X inner product otherwise.
[[nodiscard]] Scalar largest_generalized_eigenvalue(const SparseMatrix& a, const SparseMatrix& x,
                                                    const InnerProductFactor& x_factor);

/// Galerkin projection plus residual precomputation. Rejects bases that are
/// not X-orthonormal to 1e-8. Passing an initial condition also builds the
/// parabolic reduced data and adds the mass operand to the residual factor.
[[nodiscard]] ReducedModel project(const TruthProblem& problem, const ReducedBasis& basis);
[[nodiscard]] ReducedModel project(const TruthProblem& problem, const ReducedBasis& basis,
                                   const TruthPrecomputation& pre,
                                   const Vector* initial_condition = nullptr);

/// Dense N × N solve of Σ θ_q(μ) A_q^N u_N = f^N.
[[nodiscard]] ReducedSolution solve_reduced(const ReducedModel& model, const Parameter& mu);

/// s^N u_N
[[nodiscard]] Vector evaluate_outputs(const ReducedModel& model, const ReducedSolution& sol);

/// ‖f − A(μ) V u_N‖_{X′}, evaluated from the residual factor in O(Q²N²).
[[nodiscard]] Scalar residual_dual_norm(const ReducedModel& model, const Parameter& mu, const Vector& u_n);

/// Raw expanded Gram quadratic form c_ff − 2Σθ uᵀc_fA + ΣΣ θθ uᵀc_AA u; may
/// come out slightly negative through cancellation.
[[nodiscard]] Scalar residual_gram_square(const ReducedModel& model, const Parameter& mu, const Vector& u_n);

/// sqrt(max(0, residual_gram_square)).
[[nodiscard]] Scalar residual_dual_norm_gram(const ReducedModel& model, const Parameter& mu, const Vector& u_n);

/// Min-theta bound c_ref · min_q θ_q(μ)/θ_q(μ̄).
[[nodiscard]] Scalar coercivity_lower_bound(const ReducedModel& model, const Parameter& mu);

/// Σ_q |θ_q(μ)| γ_q
[[nodiscard]] Scalar continuity_upper_bound(const ReducedModel& model, const Parameter& mu);

[[nodiscard]] Certificate certify(const ReducedModel& model, const Parameter& mu, const ReducedSolution& sol);

/// V u_N
[[nodiscard]] Vector lift(const ReducedBasis& basis, const ReducedSolution& sol);

struct ReducedTrajectory {
    std::vector<Vector> coordinates;     // K + 1
    std::vector<Scalar> indicators;      // η_k = ‖r^k‖_{X′} / coercivity lb, k = 1..K
    Scalar coercivity_lb = 0.0;
    Scalar surrogate = 0.0;              // sqrt(‖e⁰‖²_M / lb + Σ dt η_k²)
};

/// Implicit Euler in the reduced space with the residual-based l²(dt) error
/// surrogate. Bounds sqrt(Σ_k dt ‖e^k‖²_X) from above.
[[nodiscard]] ReducedTrajectory solve_reduced_parabolic(const ReducedModel& model, const Parameter& mu,
                                                        Scalar dt, Scalar t_final);

}  // namespace rbcert
