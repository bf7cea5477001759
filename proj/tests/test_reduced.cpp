#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rbcert/errors.hpp"
#include "rbcert/greedy.hpp"
#include "rbcert/reduced.hpp"
#include "rbcert/truth.hpp"

using namespace rbcert;

namespace {

ReducedBasis snapshot_basis(const TruthProblem& p, const std::vector<Parameter>& mus) {
    ReducedBasis basis = ReducedBasis::empty(p.size());
    for (const auto& mu : mus) {
        auto next = orthonormalize_extend(basis, solve_truth(p, mu).coefficients, p.inner_product(), mu);
        REQUIRE(next.has_value());
        basis = std::move(*next);
    }
    return basis;
}

std::vector<Parameter> random_parameters(const ParameterDomain& dom, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Parameter> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(oracle::log_parameter(dom, rng));
    }
    return out;
}

Matrix gram_block_matrix(const ReducedModel& m) {
    const auto n = m.basis_size();
    const auto q = static_cast<Eigen::Index>(m.num_terms());
    Matrix g(1 + q * n, 1 + q * n);
    g(0, 0) = m.residual_gram.c_ff;
    for (Eigen::Index a = 0; a < q; ++a) {
        g.block(1 + a * n, 0, n, 1) = m.residual_gram.c_fA[static_cast<std::size_t>(a)];
        g.block(0, 1 + a * n, 1, n) = m.residual_gram.c_fA[static_cast<std::size_t>(a)].transpose();
        for (Eigen::Index b = 0; b < q; ++b) {
            g.block(1 + a * n, 1 + b * n, n, n) =
                m.residual_gram.c_AA[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        }
    }
    return g;
}

}  // namespace

TEST_CASE("projection reproduces a normalized snapshot") {
    const auto p = build_thermal_block(2, 2, 16, 0.1, 10.0);
    const Parameter star({0.4, 3.0, 1.2, 8.0});
    const auto basis = snapshot_basis(p, {star});
    const auto model = project(p, basis);
    const auto sol = solve_reduced(model, star);
    const Vector truth = solve_truth(p, star).coefficients;
    CHECK(x_norm(p.inner_product(), truth - lift(basis, sol)) <= 1e-10);
    const Scalar f_dual = std::sqrt(model.residual_gram.c_ff);
    CHECK(residual_dual_norm(model, star, sol.coordinates) <= 1e-8 * f_dual);
    CHECK(certify(model, star, sol).error_bound <= 1e-7);
}

TEST_CASE("single term with generalized eigenvectors projects to the eigenvalues") {
    const auto base = build_poisson_1d(40);
    const Matrix a = oracle::dense(base.op().matrix(0));
    const Matrix x = oracle::dense(*base.mesh().mass);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, x);  // X-orthonormal eigenvectors
    const int k = 6;
    const TruthProblem p(AffineOperator({{CoefficientFunction::constant(1.0), base.op().matrix(0)}}, 1), base.load(),
                         base.outputs(), *base.mesh().mass, ParameterDomain::cube(1, 0.1, 10.0), base.mesh(),
                         CoercivityReference{Parameter({1.0}), es.eigenvalues()[0]});
    const ReducedBasis basis{es.eigenvectors().leftCols(k), {}};
    const auto model = project(p, basis);
    const Matrix an = model.reduced_terms[0];
    const Matrix expected = es.eigenvalues().head(k).asDiagonal();
    CHECK((an - expected).cwiseAbs().maxCoeff() <= 1e-9 * es.eigenvalues()[k - 1]);
}

TEST_CASE("projection rejects non-orthonormal or mis-sized bases") {
    const auto p = build_thermal_block(2, 2, 8, 0.1, 10.0);
    ReducedBasis raw{Matrix::Random(p.size(), 2), {}};
    CHECK_THROWS_AS((void)project(p, raw), InvalidInput);
    ReducedBasis wrong{Matrix::Zero(p.size() + 1, 0), {}};
    CHECK_THROWS_AS((void)project(p, wrong), InvalidInput);
}

TEST_CASE("reduced model carries no truth-sized data") {
    const auto p = build_thermal_block(2, 2, 16, 0.1, 10.0);
    const auto basis = snapshot_basis(p, random_parameters(p.domain(), 5, 1));
    const auto m = project(p, basis);
    const Eigen::Index big = p.size();
    CHECK(m.basis_size() == 5);
    for (const auto& t : m.reduced_terms) {
        CHECK(t.rows() == 5);
        CHECK(t.cols() == 5);
    }
    CHECK(m.reduced_outputs.rows() == 1);
    CHECK(m.reduced_outputs.cols() == 5);
    CHECK(m.residual_factor.rows() < big);
    CHECK(m.residual_factor.cols() == 1 + 4 * 5);
    CHECK(m.output_dual_norms.size() == 1);
    CHECK(m.continuity.size() == 4);
}

TEST_CASE("residual Gram structure is symmetric and positive semidefinite") {
    const auto p = build_thermal_block(2, 2, 16, 0.1, 10.0);
    const auto m = project(p, snapshot_basis(p, random_parameters(p.domain(), 4, 2)));
    const auto& rg = m.residual_gram;
    CHECK(rg.c_ff >= 0.0);
    for (std::size_t q = 0; q < m.num_terms(); ++q) {
        for (std::size_t r = 0; r < m.num_terms(); ++r) {
            CHECK(rg.c_AA[q][r] == rg.c_AA[r][q].transpose());
        }
    }
    const Matrix g = gram_block_matrix(m);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().maxCoeff());

    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const Parameter mu = oracle::random_parameter(p.domain(), rng);
        const Vector u = oracle::random_vector(m.basis_size(), rng);
        CHECK(residual_gram_square(m, mu, u) >= -1e-12 * rg.c_ff);
    }
}

TEST_CASE("solve_reduced matches the truth-space Galerkin oracle") {
    const auto p = build_thermal_block(2, 2, 16, 0.1, 10.0);
    const auto basis = snapshot_basis(p, random_parameters(p.domain(), 5, 3));
    const auto m = project(p, basis);
    for (const auto& mu : random_parameters(p.domain(), 10, 4)) {
        const auto sol = solve_reduced(m, mu);
        const Vector oracle_state = oracle::truth_galerkin(p, basis.matrix, mu);
        CHECK((lift(basis, sol) - oracle_state).norm() <= 1e-12 * oracle_state.norm());

        Matrix an = Matrix::Zero(5, 5);
        const Vector theta = evaluate_coefficients(p.op(), mu);
        for (std::size_t q = 0; q < m.num_terms(); ++q) {
            an += theta[static_cast<Eigen::Index>(q)] * m.reduced_terms[q];
        }
        CHECK(an.llt().info() == Eigen::Success);
        CHECK((an * sol.coordinates - m.reduced_load).norm() <= 1e-10 * m.reduced_load.norm());
    }
    for (const auto& mu : basis.snapshot_parameters) {
        const Vector truth = solve_truth(p, mu).coefficients;
        CHECK(x_norm(p.inner_product(), truth - lift(basis, solve_reduced(m, mu))) <= 1e-9);
    }
}

TEST_CASE("ray manifold: one block needs one basis vector") {
    const auto p = build_thermal_block(1, 1, 16, 0.1, 10.0);
    const Parameter bar({1.0});
    const auto m = project(p, snapshot_basis(p, {bar}));
    const Scalar ubar = solve_reduced(m, bar).coordinates[0];
    for (double mu : {0.1, 0.5, 2.0, 10.0}) {
        const auto sol = solve_reduced(m, Parameter({mu}));
        CHECK(sol.coordinates[0] == doctest::Approx(ubar / mu).epsilon(1e-13));
        CHECK(certify(m, Parameter({mu}), sol).error_bound <= 1e-7);
    }
}

TEST_CASE("residual dual norm agrees with the truth-space oracle") {
    const auto p = build_thermal_block(2, 2, 16, 0.1, 10.0);
    const auto basis = snapshot_basis(p, random_parameters(p.domain(), 6, 5));
    const auto m = project(p, basis);
    const Matrix x = oracle::dense(p.inner_product());
    const Scalar f_dual = oracle::dual_norm(x, p.load());

    CHECK(residual_dual_norm(m, Parameter({1, 1, 1, 1}), Vector::Zero(6)) ==
          doctest::Approx(f_dual).epsilon(1e-12));
    CHECK(std::sqrt(m.residual_gram.c_ff) == doctest::Approx(f_dual).epsilon(1e-12));

    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Parameter mu = oracle::log_parameter(p.domain(), rng);
        const Vector u = trial % 2 == 0 ? Vector(oracle::random_vector(6, rng)) : solve_reduced(m, mu).coordinates;
        const Vector r = p.load() - oracle::dense_assemble(p.op(), mu) * (basis.matrix * u);
        const Scalar expected = oracle::dual_norm(x, r);
        CHECK(std::abs(residual_dual_norm(m, mu, u) - expected) <= 1e-8 * expected);
        if (trial % 2 == 0) {
            // Large residuals: the expanded Gram form is accurate too.
            CHECK(std::abs(residual_dual_norm_gram(m, mu, u) - expected) <= 1e-8 * expected);
        }
    }
    CHECK_THROWS_AS((void)residual_dual_norm(m, Parameter({1, 1, 1, 1}), Vector::Zero(5)), InvalidInput);
}

TEST_CASE("tiny residuals keep their relative accuracy") {
    const auto p = build_thermal_block(2, 2, 16, 0.1, 10.0);
    const auto basis = snapshot_basis(p, random_parameters(p.domain(), 18, 8));
    const auto m = project(p, basis);
    using Ext = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const Ext x = oracle::dense(p.inner_product()).cast<long double>();
    const auto x_ldlt = x.ldlt();
    const Scalar f_dual = oracle::dual_norm(oracle::dense(p.inner_product()), p.load());
    std::mt19937_64 rng(9);
    Scalar smallest = 1.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Parameter mu = oracle::log_parameter(p.domain(), rng);
        const Vector u = solve_reduced(m, mu).coordinates;
        Ext a = Ext::Zero(p.size(), p.size());
        for (const auto& term : p.op().terms()) {
            a += static_cast<long double>(term.coefficient(mu)) * oracle::dense(term.matrix).cast<long double>();
        }
        const Ext r = p.load().cast<long double>() - a * (basis.matrix.cast<long double>() * u.cast<long double>());
        const auto expected = static_cast<Scalar>(std::sqrt((r.transpose() * x_ldlt.solve(r))(0, 0)));
        smallest = std::min(smallest, expected / f_dual);
        CHECK(std::abs(residual_dual_norm(m, mu, u) - expected) <= 1e-8 * expected);
    }
    // The check only bites if some residual sits far below the load.
    CHECK(smallest < 1e-7);
}

TEST_CASE("min-theta coercivity bound") {
    const auto p = build_thermal_block(2, 2, 10, 0.1, 10.0);  // n_h = 81
    const auto m = project(p, snapshot_basis(p, random_parameters(p.domain(), 2, 7)));
    const Parameter bar({1, 1, 1, 1});
    CHECK(coercivity_lower_bound(m, bar) == 1.0);
    CHECK(coercivity_lower_bound(m, bar.scaled(2.0)) == 2.0);
    const Matrix x = oracle::dense(p.inner_product());
    const Scalar exact_double = oracle::generalized_eigenvalues(oracle::dense_assemble(p.op(), bar.scaled(2.0)), x)[0];
    CHECK(exact_double == doctest::Approx(2.0).epsilon(1e-12));
    for (const auto& mu : random_parameters(p.domain(), 18, 8)) {
        const Scalar lb = coercivity_lower_bound(m, mu);
        const Vector ev = oracle::generalized_eigenvalues(oracle::dense_assemble(p.op(), mu), x);
        CHECK(lb <= ev[0] * (1.0 + 1e-12));
        CHECK(lb > 0.0);
    }
}

TEST_CASE("min-theta bound refuses non-positive coefficients") {
    SparseMatrix id(3, 3);
    id.setIdentity();
    const AffineOperator op({{AffineCombinationCoefficient{1.0, {0}, {-1.0}}, id}}, 1);
    const TruthProblem p(op, Vector::Ones(3), Matrix::Ones(1, 3), id, ParameterDomain::cube(1, 0.0, 0.9), MeshInfo{},
                         CoercivityReference{Parameter({0.0}), 1.0});
    const auto m = project(p, ReducedBasis::empty(3));
    CHECK(m.coercivity.positive == std::vector<bool>{true});
    CHECK(coercivity_lower_bound(m, Parameter({0.5})) == doctest::Approx(0.5));

    const TruthProblem q(op, Vector::Ones(3), Matrix::Ones(1, 3), id, ParameterDomain::cube(1, 0.0, 2.0), MeshInfo{},
                         CoercivityReference{Parameter({0.0}), 1.0});
    const auto mq = project(q, ReducedBasis::empty(3));
    CHECK(mq.coercivity.positive == std::vector<bool>{false});
    CHECK_THROWS_AS((void)coercivity_lower_bound(mq, Parameter({0.5})), InvalidInput);
    CHECK_THROWS_AS((void)certify(mq, Parameter({0.5}), solve_reduced(mq, Parameter({0.5}))), InvalidInput);
}

TEST_CASE("continuity bound: reference point, single term and dense oracle") {
    const auto p = build_thermal_block(2, 2, 10, 0.1, 10.0);
    const auto m = project(p, ReducedBasis::empty(p.size()));
    for (Scalar g : m.continuity) {
        CHECK(g == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(continuity_upper_bound(m, Parameter({1, 1, 1, 1})) >= 1.0);
    const Matrix x = oracle::dense(p.inner_product());
    for (const auto& mu : random_parameters(p.domain(), 20, 9)) {
        const Vector ev = oracle::generalized_eigenvalues(oracle::dense_assemble(p.op(), mu), x);
        CHECK(continuity_upper_bound(m, mu) >= ev[ev.size() - 1] * (1.0 - 1e-12));
    }

    const auto base = build_poisson_1d(30);
    const TruthProblem single(AffineOperator({{CoefficientFunction::constant(1.0), base.op().matrix(0)}}, 1),
                              base.load(), base.outputs(), *base.mesh().mass, ParameterDomain::cube(1, 0.1, 1.0),
                              base.mesh(), CoercivityReference{Parameter({1.0}), 1.0});
    const auto ms = project(single, ReducedBasis::empty(single.size()));
    const Vector ev = oracle::generalized_eigenvalues(oracle::dense(base.op().matrix(0)), oracle::dense(*base.mesh().mass));
    CHECK(continuity_upper_bound(ms, Parameter({0.5})) == doctest::Approx(ev[ev.size() - 1]).epsilon(1e-12));
}

TEST_CASE("power iteration and dense eigensolve agree on the pencil maximum") {
    const auto p = build_poisson_1d(500);  // n_h = 499, above the dense limit
    const SparseMatrix& a = p.op().matrix(0);
    const SparseMatrix& x = *p.mesh().mass;
    const InnerProductFactor fx(x);
    const Vector ev = oracle::generalized_eigenvalues(oracle::dense(a), oracle::dense(x));
    // The top of this pencil is well separated only relative to the spectrum width.
    const Scalar gamma = largest_generalized_eigenvalue(a, x, fx);
    CHECK(gamma <= ev[ev.size() - 1] * (1.0 + 1e-12));
    CHECK(gamma >= ev[ev.size() - 1] * (1.0 - 1e-3));

    const auto tb = build_thermal_block(2, 2, 30, 0.1, 10.0);  // n_h = 841
    const InnerProductFactor ftb(tb.inner_product());
    for (std::size_t q = 0; q < 4; ++q) {
        CHECK(largest_generalized_eigenvalue(tb.op().matrix(q), tb.inner_product(), ftb) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("certificates: identity, rigor, effectivity and quasi-optimality") {
    const auto p = build_thermal_block(2, 2, 16, 0.1, 10.0);
    const auto basis = snapshot_basis(p, random_parameters(p.domain(), 6, 10));
    const auto m = project(p, basis);
    const Matrix x = oracle::dense(p.inner_product());
    const Scalar s_dual = oracle::dual_norm(x, p.outputs().row(0).transpose());
    for (const auto& mu : random_parameters(p.domain(), 25, 11)) {
        const auto sol = solve_reduced(m, mu);
        const auto cert = certify(m, mu, sol);
        CHECK(cert.error_bound == cert.residual_dual_norm / cert.coercivity_lb);
        CHECK(cert.output_bound[0] == doctest::Approx(s_dual * cert.error_bound).epsilon(1e-12));

        const Vector truth = solve_truth(p, mu).coefficients;
        const Scalar err = oracle::x_norm(x, truth - lift(basis, sol));
        const Scalar ratio = continuity_upper_bound(m, mu) / cert.coercivity_lb;
        CHECK(cert.error_bound + 1e-9 >= err);
        CHECK(cert.error_bound <= ratio * err + 1e-8);
        const Scalar out_err = std::abs(p.outputs().row(0).dot(truth) - evaluate_outputs(m, sol)[0]);
        CHECK(out_err <= cert.output_bound[0] + 1e-12);

        const Vector best = oracle::x_projection(x, basis.matrix, truth);
        CHECK(err <= ratio * oracle::x_norm(x, truth - best) + 1e-9);
    }
}

TEST_CASE("empty basis certifies the zero ansatz") {
    const auto p = build_thermal_block(2, 2, 8, 0.1, 10.0);
    const auto m = project(p, ReducedBasis::empty(p.size()));
    const Parameter mu({0.1, 1, 1, 1});
    const auto sol = solve_reduced(m, mu);
    CHECK(sol.coordinates.size() == 0);
    const auto cert = certify(m, mu, sol);
    CHECK(cert.error_bound == doctest::Approx(std::sqrt(m.residual_gram.c_ff) / 0.1).epsilon(1e-14));
    CHECK(evaluate_outputs(m, sol) == Vector::Zero(1));
    CHECK(lift(ReducedBasis::empty(p.size()), sol) == Vector::Zero(p.size()));
}

TEST_CASE("reduced parabolic solve: full basis reproduces the truth, surrogate bounds the l2 error") {
    const auto p = build_thermal_block(2, 2, 6, 0.5, 2.0);  // n_h = 25
    const Vector u0 = Vector::Constant(p.size(), 0.3);
    const Parameter mu({0.7, 1.9, 1.1, 0.5});
    const Scalar dt = 0.05, t_final = 1.0;
    const auto truth = solve_parabolic(p, mu, dt, t_final, u0);
    const auto pre = prepare_offline(p);

    // Identity basis orthonormalized in X spans everything.
    ReducedBasis full = ReducedBasis::empty(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        full = *orthonormalize_extend(full, Vector::Unit(p.size(), i), p.inner_product());
    }
    const auto mf = project(p, full, pre, &u0);
    const auto rf = solve_reduced_parabolic(mf, mu, dt, t_final);
    REQUIRE(rf.coordinates.size() == truth.states.size());
    for (std::size_t k = 0; k < truth.states.size(); ++k) {
        CHECK((full.matrix * rf.coordinates[k] - truth.states[k]).norm() <= 1e-10 * truth.states[k].norm());
    }
    CHECK(rf.surrogate <= 1e-8);

    // A small snapshot basis without u0 in its span exercises the initial defect term.
    ReducedBasis small = ReducedBasis::empty(p.size());
    for (std::size_t k : {3u, 10u, 20u}) {
        small = *orthonormalize_extend(small, truth.states[k], p.inner_product());
    }
    const auto ms = project(p, small, pre, &u0);
    CHECK(ms.parabolic->initial_defect_mass > 0.0);
    const Matrix x = oracle::dense(p.inner_product());
    for (const auto& nu : random_parameters(p.domain(), 8, 12)) {
        const auto tr = solve_parabolic(p, nu, dt, t_final, u0);
        const auto rs = solve_reduced_parabolic(ms, nu, dt, t_final);
        Scalar l2 = 0.0;
        for (std::size_t k = 1; k < tr.states.size(); ++k) {
            l2 += dt * std::pow(oracle::x_norm(x, tr.states[k] - small.matrix * rs.coordinates[k]), 2);
        }
        CHECK(std::sqrt(l2) <= rs.surrogate + 1e-12);
        CHECK(rs.indicators.size() == 20);
    }
    CHECK_THROWS_AS((void)solve_reduced_parabolic(project(p, small), mu, dt, t_final), InvalidInput);
}
