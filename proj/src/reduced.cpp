#include "rbcert/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "rbcert/errors.hpp"

namespace rbcert {

namespace {

// Dense generalized eigensolve below this size, power iteration above.
constexpr Eigen::Index kDenseEigenLimit = 400;

Matrix symmetrized(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

// Coefficients c of the residual f − Σ θ_q A_q V u − M V w in the operand
// layout [f | A_1 V | … | A_Q V | M V].
ExtendedVector residual_coefficients(const Vector& theta, const Vector& u_n, const ExtendedVector* mass_rate,
                                     Eigen::Index total) {
    const Eigen::Index n = u_n.size();
    ExtendedVector c = ExtendedVector::Zero(total);
    c[0] = 1.0L;
    const ExtendedVector u = u_n.cast<Extended>();
    for (Eigen::Index q = 0; q < theta.size(); ++q) {
        c.segment(1 + q * n, n) = -static_cast<Extended>(theta[q]) * u;
    }
    if (mass_rate != nullptr) {
        c.segment(1 + theta.size() * n, n) = -*mass_rate;
    }
    return c;
}

// ‖R c‖₂ with R = hi + lo evaluated in extended precision; the residual can sit
// near eps·‖c‖ relative to the operands, so a double product would cap it there.
Scalar factor_norm(const ReducedModel& model, const ExtendedVector& c) {
    const Matrix& hi = model.residual_factor;
    const Matrix& lo = model.residual_factor_low;
    Extended sum = 0.0L;
    for (Eigen::Index i = 0; i < hi.rows(); ++i) {
        Extended y = 0.0L;
        for (Eigen::Index j = i; j < hi.cols(); ++j) {
            y += (static_cast<Extended>(hi(i, j)) + static_cast<Extended>(lo(i, j))) * c[j];
        }
        sum += y * y;
    }
    return static_cast<Scalar>(std::sqrt(sum));
}

Matrix assemble_reduced(const ReducedModel& model, const Vector& theta) {
    const Eigen::Index n = model.basis_size();
    Matrix a = Matrix::Zero(n, n);
    for (std::size_t q = 0; q < model.num_terms(); ++q) {
        a.noalias() += theta[static_cast<Eigen::Index>(q)] * model.reduced_terms[q];
    }
    return a;
}

void check_dimensions(const ReducedModel& model, const Parameter& mu) {
    if (mu.size() != model.domain.dim()) {
        throw InvalidInput("parameter has dimension " + std::to_string(mu.size()) +
                           ", model expects " + std::to_string(model.domain.dim()));
    }
}

}  // namespace

Scalar largest_generalized_eigenvalue(const SparseMatrix& a, const SparseMatrix& x,
                                      const InnerProductFactor& x_factor) {
    const Eigen::Index n = a.rows();
    if (n == 0) {
        return 0.0;
    }
    if (n <= kDenseEigenLimit) {
        // With P X Pᵀ = L Lᵀ the pencil (A, X) has the spectrum of L⁻¹ P A Pᵀ L⁻ᵀ.
        const Matrix half = x_factor.half_solve(Matrix(a));
        const Matrix sym = x_factor.half_solve(Matrix(half.transpose()));
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(sym), Eigen::EigenvaluesOnly);
        return es.eigenvalues().maxCoeff();
    }
    std::mt19937_64 rng(0x5eedULL);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = static_cast<Scalar>(rng() >> 11) * 0x1.0p-53 - 0.5;
    }
    v /= x_norm(x, v);
    Scalar lambda = 0.0;
    for (int it = 0; it < 5000; ++it) {
        const Vector av = a * v;
        const Scalar next = v.dot(av);
        Vector w = x_factor.solve(av);
        const Scalar wn = x_norm(x, w);
        if (!(wn > 0.0)) {
            return std::max(next, 0.0);
        }
        v = w / wn;
        if (it > 2 && std::abs(next - lambda) <= 1e-13 * std::abs(next)) {
            return next;
        }
        lambda = next;
    }
    return lambda;
}

TruthPrecomputation prepare_offline(const TruthProblem& problem) {
    TruthPrecomputation pre{InnerProductFactor(problem.inner_product()), {}, {}};
    for (std::size_t q = 0; q < problem.op().num_terms(); ++q) {
        pre.continuity.push_back(
            largest_generalized_eigenvalue(problem.op().matrix(q), problem.inner_product(), pre.factor));
    }
    const Matrix& s = problem.outputs();
    pre.output_dual_norms.resize(s.rows());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        pre.output_dual_norms[i] = pre.factor.dual_norm(s.row(i).transpose());
    }
    return pre;
}

ReducedModel project(const TruthProblem& problem, const ReducedBasis& basis) {
    return project(problem, basis, prepare_offline(problem));
}

ReducedModel project(const TruthProblem& problem, const ReducedBasis& basis,
                     const TruthPrecomputation& pre, const Vector* initial_condition) {
    const Matrix& v = basis.matrix;
    const SparseMatrix& x = problem.inner_product();
    if (v.rows() != problem.size()) {
        throw InvalidInput("basis row count does not match truth dimension");
    }
    if (orthonormality_defect(x, v) > 1e-8) {
        throw InvalidInput("basis is not X-orthonormal (max |VᵀXV − I| > 1e-8)");
    }
    const bool parabolic = initial_condition != nullptr;
    if (parabolic && !problem.mesh().mass) {
        throw InvalidInput("parabolic projection needs a mass matrix");
    }

    const Eigen::Index n = v.cols();
    const auto q_terms = static_cast<Eigen::Index>(problem.op().num_terms());
    const Eigen::Index operands = 1 + q_terms * n + (parabolic ? n : 0);

    ReducedModel model;
    model.domain = problem.domain();
    model.coefficients = problem.op().coefficients();
    model.reduced_load = v.transpose() * problem.load();
    model.reduced_outputs = problem.outputs() * v;
    model.output_dual_norms = pre.output_dual_norms;
    model.continuity = pre.continuity;
    model.coercivity.mu_bar = problem.coercivity().mu_bar;
    model.coercivity.c_ref = problem.coercivity().c_ref;
    for (const auto& c : model.coefficients) {
        model.coercivity.positive.push_back(c.positive_on(problem.domain()));
    }

    // Operands are formed in extended precision: A_q V rounded to double would
    // already carry the eps·‖A_q V‖ floor the factor is meant to avoid.
    ExtendedMatrix rhs(problem.size(), operands);
    rhs.col(0) = problem.load().cast<Extended>();
    const ExtendedMatrix v_ext = v.cast<Extended>();
    for (Eigen::Index q = 0; q < q_terms; ++q) {
        const SparseMatrix& aq = problem.op().matrix(static_cast<std::size_t>(q));
        const ExtendedMatrix aqv = aq.cast<Extended>() * v_ext;
        model.reduced_terms.push_back(symmetrized((v_ext.transpose() * aqv).cast<Scalar>()));
        rhs.middleCols(1 + q * n, n) = aqv;
    }
    if (parabolic) {
        const SparseMatrix& mass = *problem.mesh().mass;
        const ExtendedMatrix mv = mass.cast<Extended>() * v_ext;
        rhs.rightCols(n) = mv;
        ParabolicData pd;
        pd.reduced_mass = symmetrized((v_ext.transpose() * mv).cast<Scalar>());
        pd.initial_coordinates = v.transpose() * (x * *initial_condition);
        const Vector defect = *initial_condition - v * pd.initial_coordinates;
        pd.initial_defect_mass = x_norm(mass, defect);
        model.parabolic = std::move(pd);
    }

    // One X factorization serves all 1 + QN (+N) Riesz solves; w_iᵀ w_j is the
    // X-inner product of the corresponding representers.
    const ExtendedMatrix half = pre.factor.half_solve(rhs);

    const Matrix gram = (half.transpose() * half).cast<Scalar>();
    auto& rg = model.residual_gram;
    rg.c_ff = gram(0, 0);
    rg.c_fA.resize(static_cast<std::size_t>(q_terms));
    rg.c_AA.assign(static_cast<std::size_t>(q_terms), std::vector<Matrix>(static_cast<std::size_t>(q_terms)));
    for (Eigen::Index q = 0; q < q_terms; ++q) {
        rg.c_fA[static_cast<std::size_t>(q)] = gram.block(1 + q * n, 0, n, 1);
        for (Eigen::Index p = 0; p < q_terms; ++p) {
            rg.c_AA[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)] =
                gram.block(1 + q * n, 1 + p * n, n, n);
        }
    }

    Eigen::HouseholderQR<ExtendedMatrix> qr(half);
    const Eigen::Index rows = std::min(half.rows(), operands);
    const ExtendedMatrix r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
    model.residual_factor = r.cast<Scalar>();
    model.residual_factor_low = (r - model.residual_factor.cast<Extended>()).cast<Scalar>();
    return model;
}

ReducedSolution solve_reduced(const ReducedModel& model, const Parameter& mu) {
    check_dimensions(model, mu);
    const Vector theta = evaluate_coefficients(model.coefficients, mu);
    if (model.basis_size() == 0) {
        return {Vector(0), mu};
    }
    const Matrix a = assemble_reduced(model, theta);
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("reduced coercivity loss: reduced matrix is not positive definite");
    }
    return {llt.solve(model.reduced_load), mu};
}

Vector evaluate_outputs(const ReducedModel& model, const ReducedSolution& sol) {
    if (model.basis_size() == 0) {
        return Vector::Zero(model.num_outputs());
    }
    return model.reduced_outputs * sol.coordinates;
}

Scalar residual_dual_norm(const ReducedModel& model, const Parameter& mu, const Vector& u_n) {
    check_dimensions(model, mu);
    if (u_n.size() != model.basis_size()) {
        throw InvalidInput("reduced coordinates do not match basis size");
    }
    const Vector theta = evaluate_coefficients(model.coefficients, mu);
    return factor_norm(model, residual_coefficients(theta, u_n, nullptr, model.residual_factor.cols()));
}

Scalar residual_gram_square(const ReducedModel& model, const Parameter& mu, const Vector& u_n) {
    check_dimensions(model, mu);
    if (u_n.size() != model.basis_size()) {
        throw InvalidInput("reduced coordinates do not match basis size");
    }
    const Vector theta = evaluate_coefficients(model.coefficients, mu);
    const auto& rg = model.residual_gram;
    Scalar value = rg.c_ff;
    if (u_n.size() == 0) {
        return value;
    }
    Vector combined = Vector::Zero(u_n.size());
    for (std::size_t q = 0; q < model.num_terms(); ++q) {
        const Scalar tq = theta[static_cast<Eigen::Index>(q)];
        value -= 2.0 * tq * u_n.dot(rg.c_fA[q]);
        for (std::size_t p = 0; p < model.num_terms(); ++p) {
            combined.noalias() += (tq * theta[static_cast<Eigen::Index>(p)]) * (rg.c_AA[q][p] * u_n);
        }
    }
    return value + u_n.dot(combined);
}

Scalar residual_dual_norm_gram(const ReducedModel& model, const Parameter& mu, const Vector& u_n) {
    return std::sqrt(std::max(0.0, residual_gram_square(model, mu, u_n)));
}

Scalar coercivity_lower_bound(const ReducedModel& model, const Parameter& mu) {
    check_dimensions(model, mu);
    const auto& spec = model.coercivity;
    const Vector theta = evaluate_coefficients(model.coefficients, mu);
    const Vector theta_ref = evaluate_coefficients(model.coefficients, spec.mu_bar);
    Scalar ratio = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index q = 0; q < theta.size(); ++q) {
        if (!spec.positive.at(static_cast<std::size_t>(q))) {
            throw InvalidInput("min-theta bound inapplicable: coefficient " + std::to_string(q) +
                               " is not positive on the parameter domain");
        }
        if (!(theta[q] > 0.0) || !(theta_ref[q] > 0.0)) {
            throw InvalidInput("min-theta bound inapplicable: coefficient " + std::to_string(q) +
                               " is non-positive at the requested parameter");
        }
        ratio = std::min(ratio, theta[q] / theta_ref[q]);
    }
    return spec.c_ref * ratio;
}

Scalar continuity_upper_bound(const ReducedModel& model, const Parameter& mu) {
    check_dimensions(model, mu);
    const Vector theta = evaluate_coefficients(model.coefficients, mu);
    Scalar bound = 0.0;
    for (Eigen::Index q = 0; q < theta.size(); ++q) {
        bound += std::abs(theta[q]) * model.continuity.at(static_cast<std::size_t>(q));
    }
    return bound;
}

Certificate certify(const ReducedModel& model, const Parameter& mu, const ReducedSolution& sol) {
    Certificate cert;
    cert.coercivity_lb = coercivity_lower_bound(model, mu);
    cert.residual_dual_norm = residual_dual_norm(model, mu, sol.coordinates);
    cert.error_bound = cert.residual_dual_norm / cert.coercivity_lb;
    cert.output_bound = model.output_dual_norms * cert.error_bound;
    return cert;
}

Vector lift(const ReducedBasis& basis, const ReducedSolution& sol) {
    if (sol.coordinates.size() != basis.size()) {
        throw InvalidInput("reduced coordinates do not match basis size");
    }
    if (basis.size() == 0) {
        return Vector::Zero(basis.truth_size());
    }
    return basis.matrix * sol.coordinates;
}

ReducedTrajectory solve_reduced_parabolic(const ReducedModel& model, const Parameter& mu, Scalar dt,
                                          Scalar t_final) {
    if (!model.parabolic) {
        throw InvalidInput("model carries no parabolic data");
    }
    const int steps = time_steps(dt, t_final);
    check_dimensions(model, mu);
    const auto& pd = *model.parabolic;
    const Eigen::Index n = model.basis_size();
    const Vector theta = evaluate_coefficients(model.coefficients, mu);

    ReducedTrajectory out;
    out.coercivity_lb = coercivity_lower_bound(model, mu);
    out.coordinates.reserve(static_cast<std::size_t>(steps) + 1);
    out.coordinates.push_back(pd.initial_coordinates);
    out.indicators.reserve(static_cast<std::size_t>(steps));

    Eigen::LLT<Matrix> llt;
    if (n > 0) {
        llt.compute(pd.reduced_mass + dt * assemble_reduced(model, theta));
        if (llt.info() != Eigen::Success) {
            throw NumericalFailure("reduced coercivity loss in M_N + dt*A_N(mu)");
        }
    }
    const Vector dt_f = dt * model.reduced_load;
    const Eigen::Index total = model.residual_factor.cols();
    Scalar accumulated = pd.initial_defect_mass * pd.initial_defect_mass / out.coercivity_lb;
    for (int k = 0; k < steps; ++k) {
        const Vector& prev = out.coordinates.back();
        Vector next = n > 0 ? Vector(llt.solve(pd.reduced_mass * prev + dt_f)) : Vector(0);
        const ExtendedVector rate = (next.cast<Extended>() - prev.cast<Extended>()) / static_cast<Extended>(dt);
        const Scalar eta = factor_norm(model, residual_coefficients(theta, next, &rate, total)) / out.coercivity_lb;
        out.indicators.push_back(eta);
        accumulated += dt * eta * eta;
        out.coordinates.push_back(std::move(next));
    }
    out.surrogate = std::sqrt(accumulated);
    return out;
}

}  // namespace rbcert
