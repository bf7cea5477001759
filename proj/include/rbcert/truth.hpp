#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rbcert/affine.hpp"
#include "rbcert/linalg.hpp"

namespace rbcert {

/// Structured-mesh descriptor of a truth discretization.
struct MeshInfo {
    int spatial_dim = 2;
    int cells_per_axis = 0;
    int blocks_x = 1;
    int blocks_y = 1;
    Scalar h = 0.0;
    /// P1 consistent mass matrix; needed only for time-dependent solves.
    std::optional<SparseMatrix> mass;
};

/// Reference point for the min-theta coercivity bound:
/// C(μ) ≥ c_ref · min_q θ_q(μ)/θ_q(μ̄).
struct CoercivityReference {
    Parameter mu_bar;
    Scalar c_ref = 1.0;
};

/// High-fidelity linear coercive problem a_μ(u, v) = f(v) with affine a_μ.
class TruthProblem {
public:
    TruthProblem(AffineOperator op, Vector load, Matrix outputs, SparseMatrix inner_product,
                 ParameterDomain domain, MeshInfo mesh, CoercivityReference coercivity);

    [[nodiscard]] const AffineOperator& op() const noexcept { return op_; }
    [[nodiscard]] const Vector& load() const noexcept { return load_; }
    /// S × n_h, one row per output functional.
    [[nodiscard]] const Matrix& outputs() const noexcept { return outputs_; }
    [[nodiscard]] const SparseMatrix& inner_product() const noexcept { return inner_product_; }
    [[nodiscard]] const ParameterDomain& domain() const noexcept { return domain_; }
    [[nodiscard]] const MeshInfo& mesh() const noexcept { return mesh_; }
    [[nodiscard]] const CoercivityReference& coercivity() const noexcept { return coercivity_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return load_.size(); }

    /// Same problem with a different load vector (used for zero-source runs).
    [[nodiscard]] TruthProblem with_load(Vector load) const;

private:
    AffineOperator op_;
    Vector load_;
    Matrix outputs_;
    SparseMatrix inner_product_;
    ParameterDomain domain_;
    MeshInfo mesh_;
    CoercivityReference coercivity_;
};

struct TruthSolution {
    Vector coefficients;
    Parameter parameter;
};

struct Trajectory {
    std::vector<Vector> states;  // K + 1 states, states[0] = initial condition
    Scalar dt = 0.0;
    Scalar t_final = 0.0;

    [[nodiscard]] std::size_t steps() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

/// Unit-square thermal block: P1 triangles on a structured mesh, homogeneous
/// Dirichlet boundary, unit source, one diffusivity parameter per block.
/// Blocks are numbered row-major from the lower-left corner. X = A(1, …, 1)
/// and the single output is the domain mean of the solution.
[[nodiscard]] TruthProblem build_thermal_block(int blocks_x, int blocks_y, int cells_per_axis,
                                               Scalar mu_min, Scalar mu_max);

/// −(μ u′)′ = 1 on (0, 1) with zero boundary values, P1 on a uniform mesh.
[[nodiscard]] TruthProblem build_poisson_1d(int cells, Scalar mu_min = 0.1, Scalar mu_max = 10.0);

/// Cholesky solve of A(μ)u = f.  Throws NumericalFailure on loss of coercivity.
[[nodiscard]] TruthSolution solve_truth(const TruthProblem& problem, const Parameter& mu);

/// Implicit Euler for M u′ + A(μ) u = f, factorizing M + dt·A(μ) once.
[[nodiscard]] Trajectory solve_parabolic(const TruthProblem& problem, const Parameter& mu,
                                         Scalar dt, Scalar t_final, const Vector& initial);

/// Number of implicit Euler steps, rejecting t_final that is not a multiple of dt.
[[nodiscard]] int time_steps(Scalar dt, Scalar t_final);

/// Exact solutions of u_t + μ u_x = 0, u(x, 0) = 0, u(0, t) = 1, as cell
/// averages on a uniform grid of [0, 1].
[[nodiscard]] std::vector<Vector> advection_snapshots(Scalar mu, int grid_n,
                                                      std::span<const Scalar> times);

/// One CSV row per time step: step, t, u_0, …, u_{n-1}.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

}  // namespace rbcert
