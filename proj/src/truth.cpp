#include "rbcert/truth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "rbcert/errors.hpp"

namespace rbcert {

namespace {

struct Point {
    Scalar x;
    Scalar y;
};

// P1 element matrices on one triangle.
struct P1Element {
    std::array<std::array<Scalar, 3>, 3> stiffness{};
    std::array<std::array<Scalar, 3>, 3> mass{};
    Scalar area = 0.0;
};

P1Element p1_element(const std::array<Point, 3>& p) {
    P1Element e;
    const Scalar det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    e.area = 0.5 * std::abs(det);
    std::array<Point, 3> grad;
    for (int a = 0; a < 3; ++a) {
        const auto& q1 = p[(a + 1) % 3];
        const auto& q2 = p[(a + 2) % 3];
        grad[a] = {(q1.y - q2.y) / det, (q2.x - q1.x) / det};
    }
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            e.stiffness[a][b] = e.area * (grad[a].x * grad[b].x + grad[a].y * grad[b].y);
            e.mass[a][b] = e.area / 12.0 * (a == b ? 2.0 : 1.0);
        }
    }
    return e;
}

SparseMatrix from_triplets(Eigen::Index n, const std::vector<Triplet>& t) {
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

}  // namespace

TruthProblem::TruthProblem(AffineOperator op, Vector load, Matrix outputs, SparseMatrix inner_product,
                           ParameterDomain domain, MeshInfo mesh, CoercivityReference coercivity)
    : op_(std::move(op)),
      load_(std::move(load)),
      outputs_(std::move(outputs)),
      inner_product_(std::move(inner_product)),
      domain_(std::move(domain)),
      mesh_(std::move(mesh)),
      coercivity_(std::move(coercivity)) {
    const auto n = op_.size();
    if (load_.size() != n) {
        throw InvalidInput("load vector length does not match operator size");
    }
    if (outputs_.cols() != n) {
        throw InvalidInput("output functionals do not match operator size");
    }
    if (inner_product_.rows() != n || inner_product_.cols() != n) {
        throw InvalidInput("inner-product matrix does not match operator size");
    }
    if (mesh_.mass && (mesh_.mass->rows() != n || mesh_.mass->cols() != n)) {
        throw InvalidInput("mass matrix does not match operator size");
    }
    if (domain_.dim() != op_.parameter_dim()) {
        throw InvalidInput("parameter domain dimension does not match operator");
    }
    if (!(coercivity_.c_ref > 0.0)) {
        throw InvalidInput("reference coercivity constant must be positive");
    }
    domain_.check(coercivity_.mu_bar);
    // Throws if X is not SPD.
    [[maybe_unused]] const InnerProductFactor check(inner_product_);
}

TruthProblem TruthProblem::with_load(Vector load) const {
    return TruthProblem(op_, std::move(load), outputs_, inner_product_, domain_, mesh_, coercivity_);
}

TruthProblem build_thermal_block(int blocks_x, int blocks_y, int cells_per_axis, Scalar mu_min,
                                 Scalar mu_max) {
    if (blocks_x < 1 || blocks_y < 1) {
        throw InvalidInput("thermal block needs at least one block per direction");
    }
    if (cells_per_axis < 2 || cells_per_axis % blocks_x != 0 || cells_per_axis % blocks_y != 0) {
        throw InvalidInput("cells_per_axis = " + std::to_string(cells_per_axis) +
                           " must be >= 2 and divisible by both block counts (" +
                           std::to_string(blocks_x) + ", " + std::to_string(blocks_y) + ")");
    }
    if (!(mu_min > 0.0 && mu_min < mu_max)) {
        throw InvalidInput("thermal block needs 0 < mu_min < mu_max");
    }
    const int c = cells_per_axis;
    const int m = c - 1;  // interior nodes per axis
    const Scalar h = 1.0 / c;
    const auto n = static_cast<Eigen::Index>(m) * m;
    const int num_blocks = blocks_x * blocks_y;
    const int cells_per_block_x = c / blocks_x;
    const int cells_per_block_y = c / blocks_y;

    auto dof = [m](int i, int j) -> Eigen::Index {
        if (i <= 0 || j <= 0 || i >= m + 1 || j >= m + 1) {
            return -1;
        }
        return static_cast<Eigen::Index>(j - 1) * m + (i - 1);
    };

    std::vector<std::vector<Triplet>> stiffness(static_cast<std::size_t>(num_blocks));
    std::vector<Triplet> mass;
    Vector load = Vector::Zero(n);

    for (int j = 0; j < c; ++j) {
        for (int i = 0; i < c; ++i) {
            const int block = (j / cells_per_block_y) * blocks_x + (i / cells_per_block_x);
            auto& target = stiffness[static_cast<std::size_t>(block)];
            const std::array<std::array<std::array<int, 2>, 3>, 2> triangles{{
                {{{i, j}, {i + 1, j}, {i + 1, j + 1}}},
                {{{i, j}, {i + 1, j + 1}, {i, j + 1}}},
            }};
            for (const auto& tri : triangles) {
                std::array<Point, 3> pts;
                std::array<Eigen::Index, 3> ids;
                for (int a = 0; a < 3; ++a) {
                    pts[a] = {tri[a][0] * h, tri[a][1] * h};
                    ids[a] = dof(tri[a][0], tri[a][1]);
                }
                const P1Element e = p1_element(pts);
                for (int a = 0; a < 3; ++a) {
                    if (ids[a] < 0) {
                        continue;
                    }
                    load[ids[a]] += e.area / 3.0;
                    for (int b = 0; b < 3; ++b) {
                        if (ids[b] < 0) {
                            continue;
                        }
                        target.emplace_back(ids[a], ids[b], e.stiffness[a][b]);
                        mass.emplace_back(ids[a], ids[b], e.mass[a][b]);
                    }
                }
            }
        }
    }

    std::vector<AffineTerm> terms;
    terms.reserve(static_cast<std::size_t>(num_blocks));
    std::vector<Triplet> all;
    for (int q = 0; q < num_blocks; ++q) {
        const auto& t = stiffness[static_cast<std::size_t>(q)];
        all.insert(all.end(), t.begin(), t.end());
        terms.push_back({CoefficientFunction::component(static_cast<std::size_t>(q)), from_triplets(n, t)});
    }
    // X = A(1, …, 1) assembled from the same triplets.
    SparseMatrix x = from_triplets(n, all);

    MeshInfo mesh;
    mesh.spatial_dim = 2;
    mesh.cells_per_axis = c;
    mesh.blocks_x = blocks_x;
    mesh.blocks_y = blocks_y;
    mesh.h = h;
    mesh.mass = from_triplets(n, mass);

    const auto dim = static_cast<std::size_t>(num_blocks);
    Matrix outputs = load.transpose();
    return TruthProblem(AffineOperator(std::move(terms), dim), load, std::move(outputs), std::move(x),
                        ParameterDomain::cube(dim, mu_min, mu_max), std::move(mesh),
                        CoercivityReference{Parameter(std::vector<Scalar>(dim, 1.0)), 1.0});
}

TruthProblem build_poisson_1d(int cells, Scalar mu_min, Scalar mu_max) {
    if (cells < 2) {
        throw InvalidInput("1D Poisson problem needs at least 2 cells");
    }
    if (!(mu_min > 0.0 && mu_min < mu_max)) {
        throw InvalidInput("1D Poisson problem needs 0 < mu_min < mu_max");
    }
    const Scalar h = 1.0 / cells;
    const Eigen::Index n = cells - 1;
    std::vector<Triplet> k;
    std::vector<Triplet> m;
    for (Eigen::Index i = 0; i < n; ++i) {
        k.emplace_back(i, i, 2.0 / h);
        m.emplace_back(i, i, 4.0 * h / 6.0);
        if (i + 1 < n) {
            k.emplace_back(i, i + 1, -1.0 / h);
            k.emplace_back(i + 1, i, -1.0 / h);
            m.emplace_back(i, i + 1, h / 6.0);
            m.emplace_back(i + 1, i, h / 6.0);
        }
    }
    SparseMatrix a = from_triplets(n, k);
    Vector load = Vector::Constant(n, h);
    MeshInfo mesh;
    mesh.spatial_dim = 1;
    mesh.cells_per_axis = cells;
    mesh.h = h;
    mesh.mass = from_triplets(n, m);
    std::vector<AffineTerm> terms{{CoefficientFunction::component(0), a}};
    Matrix outputs = load.transpose();
    return TruthProblem(AffineOperator(std::move(terms), 1), load, std::move(outputs), a,
                        ParameterDomain::cube(1, mu_min, mu_max), std::move(mesh),
                        CoercivityReference{Parameter({1.0}), 1.0});
}

TruthSolution solve_truth(const TruthProblem& problem, const Parameter& mu) {
    problem.domain().check(mu);
    const SparseMatrix a = assemble(problem.op(), mu);
    Eigen::SimplicialLLT<SparseMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("loss of coercivity: A(mu) is not positive definite at the requested parameter");
    }
    const Vector& f = problem.load();
    Vector u = llt.solve(f);
    const Scalar tol = 1e-10 * f.norm();
    Vector r = f - a * u;
    // Refinement only kicks in for badly conditioned operators.
    for (int pass = 0; pass < 2 && r.norm() > tol; ++pass) {
        u += llt.solve(r);
        r = f - a * u;
    }
    if (r.norm() > tol) {
        throw NumericalFailure("truth solve residual " + std::to_string(r.norm()) +
                               " exceeds 1e-10 * |f|");
    }
    return {std::move(u), mu};
}

int time_steps(Scalar dt, Scalar t_final) {
    if (!(dt > 0.0) || !(t_final > 0.0)) {
        throw InvalidInput("time stepping needs dt > 0 and t_final > 0");
    }
    const Scalar ratio = t_final / dt;
    const auto k = std::llround(ratio);
    if (k < 1 || std::abs(static_cast<Scalar>(k) * dt - t_final) > 1e-12 * t_final) {
        throw InvalidInput("t_final must be a positive multiple of dt");
    }
    return static_cast<int>(k);
}

Trajectory solve_parabolic(const TruthProblem& problem, const Parameter& mu, Scalar dt,
                           Scalar t_final, const Vector& initial) {
    const int steps = time_steps(dt, t_final);
    problem.domain().check(mu);
    if (!problem.mesh().mass) {
        throw InvalidInput("parabolic solve requires a mass matrix");
    }
    if (initial.size() != problem.size()) {
        throw InvalidInput("initial condition length does not match problem size");
    }
    const SparseMatrix& mass = *problem.mesh().mass;
    const SparseMatrix system = mass + dt * assemble(problem.op(), mu);
    Eigen::SimplicialLLT<SparseMatrix> llt(system);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("loss of coercivity: M + dt*A(mu) is not positive definite");
    }
    const Vector dt_f = dt * problem.load();
    Trajectory traj;
    traj.dt = dt;
    traj.t_final = t_final;
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);
    traj.states.push_back(initial);
    for (int k = 0; k < steps; ++k) {
        traj.states.push_back(llt.solve(mass * traj.states.back() + dt_f));
    }
    return traj;
}

std::vector<Vector> advection_snapshots(Scalar mu, int grid_n, std::span<const Scalar> times) {
    if (grid_n < 1) {
        throw InvalidInput("advection grid needs at least one cell");
    }
    std::vector<Vector> out;
    out.reserve(times.size());
    for (const Scalar t : times) {
        // Front position in units of cells; cell i covers [i, i + 1).
        const Scalar front = mu * t * grid_n;
        Vector u(grid_n);
        for (int i = 0; i < grid_n; ++i) {
            u[i] = std::clamp(front - i, 0.0, 1.0);
        }
        out.push_back(std::move(u));
    }
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
    const auto n = trajectory.states.empty() ? 0 : trajectory.states.front().size();
    os << "step,t";
    for (Eigen::Index i = 0; i < n; ++i) {
        os << ",u" << i;
    }
    os << '\n';
    for (std::size_t k = 0; k < trajectory.states.size(); ++k) {
        os << k << ',' << fmt::format("{:.17g}", static_cast<Scalar>(k) * trajectory.dt);
        for (Eigen::Index i = 0; i < n; ++i) {
            os << ',' << fmt::format("{:.17g}", trajectory.states[k][i]);
        }
        os << '\n';
    }
}

}  // namespace rbcert
