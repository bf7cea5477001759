#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rbcert/affine.hpp"
#include "rbcert/errors.hpp"
#include "rbcert/truth.hpp"

using namespace rbcert;

namespace {

SparseMatrix random_symmetric_sparse(int n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution keep(density);
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            if (i == j || keep(rng)) {
                const double v = u(rng);
                t.emplace_back(i, j, v);
                if (i != j) {
                    t.emplace_back(j, i, v);
                }
            }
        }
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

}  // namespace

TEST_CASE("parameter domain validates boxes and parameters") {
    CHECK_THROWS_AS(ParameterDomain({}, {}), InvalidInput);
    CHECK_THROWS_AS(ParameterDomain({1.0}, {0.0}), InvalidInput);
    CHECK_THROWS_AS(ParameterDomain({0.0, 0.0}, {1.0}), InvalidInput);
    const auto dom = ParameterDomain::cube(2, 0.1, 10.0);
    CHECK(dom.contains(Parameter({0.1, 10.0})));
    CHECK_FALSE(dom.contains(Parameter({0.05, 1.0})));
    CHECK_FALSE(dom.contains(Parameter({1.0})));
    CHECK_THROWS_AS((void)dom.make({1.0, 1.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS((void)dom.make({11.0, 1.0}), InvalidInput);
    CHECK(dom.make({0.5, 2.0}).values() == std::vector<double>{0.5, 2.0});
}

TEST_CASE("coefficient kinds evaluate as defined") {
    const Parameter mu({0.1, 10.0});
    CHECK(CoefficientFunction::component(0)(mu) == 0.1);
    CHECK(CoefficientFunction::component(1)(mu) == 10.0);
    CHECK(CoefficientFunction::constant(2.5)(mu) == 2.5);
    CHECK(CoefficientFunction::constant(2.5)(Parameter({3.0, 4.0})) == 2.5);
    const CoefficientFunction aff = AffineCombinationCoefficient{1.0, {0, 1}, {2.0, -0.5}};
    CHECK(aff(mu) == doctest::Approx(1.0 + 0.2 - 5.0));
    const CoefficientFunction prod = ProductCoefficient{3.0, {0, 1, 1}};
    CHECK(prod(mu) == doctest::Approx(3.0 * 0.1 * 100.0));
    CHECK_THROWS_AS((void)CoefficientFunction::component(2)(mu), InvalidInput);
    CHECK_THROWS_AS(CoefficientFunction(AffineCombinationCoefficient{0.0, {0}, {}}), InvalidInput);
}

TEST_CASE("evaluate_coefficients on the thermal block and on components") {
    const auto tb = build_thermal_block(2, 2, 8, 0.1, 10.0);
    const Vector ones = evaluate_coefficients(tb.op(), Parameter({1.0, 1.0, 1.0, 1.0}));
    CHECK(ones == Vector::Ones(4));
    CHECK_THROWS_AS((void)evaluate_coefficients(tb.op(), Parameter({1.0, 1.0})), InvalidInput);

    const std::vector<CoefficientFunction> comps{CoefficientFunction::component(0),
                                                 CoefficientFunction::component(1)};
    const Vector th = evaluate_coefficients(comps, Parameter({0.1, 10.0}));
    CHECK(th[0] == 0.1);
    CHECK(th[1] == 10.0);
}

TEST_CASE("affine operator rejects inconsistent terms") {
    SparseMatrix a(3, 3), b(4, 4);
    a.setIdentity();
    b.setIdentity();
    CHECK_THROWS_AS(AffineOperator({}, 1), InvalidInput);
    CHECK_THROWS_AS(AffineOperator({{CoefficientFunction::component(0), a}, {CoefficientFunction::component(0), b}}, 1),
                    InvalidInput);
    CHECK_THROWS_AS(AffineOperator({{CoefficientFunction::component(1), a}}, 1), InvalidInput);
}

TEST_CASE("assemble reproduces single terms, scales homogeneously and matches a dense sum") {
    std::mt19937_64 rng(11);
    const SparseMatrix a1 = random_symmetric_sparse(30, 0.2, rng);
    const SparseMatrix a2 = random_symmetric_sparse(30, 0.2, rng);

    const AffineOperator single({{CoefficientFunction::constant(1.0), a1}}, 1);
    CHECK(oracle::dense(assemble(single, Parameter({0.7}))) == oracle::dense(a1));

    const AffineOperator two({{CoefficientFunction::component(0), a1}, {CoefficientFunction::component(1), a2}}, 2);
    const Parameter bar({1.3, 0.4});
    const Matrix base = oracle::dense(assemble(two, bar));
    const Matrix doubled = oracle::dense(assemble(two, bar.scaled(2.0)));
    CHECK(oracle::max_rel_diff(doubled, 2.0 * base) <= 1e-15);

    for (int trial = 0; trial < 5; ++trial) {
        const Parameter mu = oracle::random_parameter(ParameterDomain::cube(2, -3.0, 3.0), rng);
        CHECK(oracle::max_rel_diff(oracle::dense(assemble(two, mu)), oracle::dense_assemble(two, mu)) <= 1e-14);
    }
}

TEST_CASE("assembly commutes with coefficient evaluation on vectors") {
    std::mt19937_64 rng(5);
    const auto tb = build_thermal_block(2, 2, 12, 0.1, 10.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Parameter mu = oracle::random_parameter(tb.domain(), rng);
        const Vector v = oracle::random_vector(tb.size(), rng);
        const Vector lhs = assemble(tb.op(), mu) * v;
        const Vector theta = evaluate_coefficients(tb.op(), mu);
        Vector rhs = Vector::Zero(tb.size());
        for (std::size_t q = 0; q < tb.op().num_terms(); ++q) {
            rhs += theta[static_cast<Eigen::Index>(q)] * (tb.op().matrix(q) * v);
        }
        CHECK((lhs - rhs).norm() <= 1e-13 * rhs.norm());
    }
}

TEST_CASE("assembled pattern is the union of term patterns") {
    SparseMatrix a(3, 3), b(3, 3);
    a.insert(0, 0) = 1.0;
    b.insert(2, 2) = 1.0;
    a.makeCompressed();
    b.makeCompressed();
    const AffineOperator op({{CoefficientFunction::component(0), a}, {CoefficientFunction::component(1), b}}, 2);
    const SparseMatrix s = assemble(op, Parameter({2.0, 3.0}));
    CHECK(s.nonZeros() == 2);
    CHECK(s.coeff(0, 0) == 2.0);
    CHECK(s.coeff(2, 2) == 3.0);
}

TEST_CASE("grid training sets") {
    const auto line = sample_training_set(ParameterDomain({0.0}, {1.0}), UniformGrid{3});
    REQUIRE(line.size() == 3);
    CHECK(line[0][0] == 0.0);
    CHECK(line[1][0] == 0.5);
    CHECK(line[2][0] == 1.0);

    const auto square = sample_training_set(ParameterDomain({0.0, 0.0}, {1.0, 1.0}), UniformGrid{2});
    REQUIRE(square.size() == 4);
    CHECK(square[0].values() == std::vector<double>{0.0, 0.0});
    CHECK(square[1].values() == std::vector<double>{1.0, 0.0});
    CHECK(square[2].values() == std::vector<double>{0.0, 1.0});
    CHECK(square[3].values() == std::vector<double>{1.0, 1.0});

    for (std::size_t dim : {1u, 2u, 3u, 4u}) {
        for (std::size_t k : {2u, 3u, 5u}) {
            const auto dom = ParameterDomain::cube(dim, 0.1, 10.0);
            const auto set = sample_training_set(dom, UniformGrid{k});
            std::size_t expected = 1;
            for (std::size_t d = 0; d < dim; ++d) {
                expected *= k;
            }
            CHECK(set.size() == expected);
            for (const auto& mu : set) {
                CHECK(dom.contains(mu));
            }
            CHECK(set.back().values() == std::vector<double>(dim, 10.0));
        }
    }
    CHECK_THROWS_AS((void)sample_training_set(ParameterDomain::cube(2, 0.0, 1.0), UniformGrid{1}), InvalidInput);
}

TEST_CASE("random training sets are reproducible and inside the box") {
    const auto dom = ParameterDomain::cube(4, 0.1, 10.0);
    const auto a = sample_training_set(dom, RandomSampling{100, 42});
    const auto b = sample_training_set(dom, RandomSampling{100, 42});
    const auto c = sample_training_set(dom, RandomSampling{100, 43});
    REQUIRE(a.size() == 100);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    for (const auto& mu : a) {
        CHECK(dom.contains(mu));
    }
    CHECK_THROWS_AS((void)sample_training_set(dom, RandomSampling{0, 1}), InvalidInput);
}

TEST_CASE("positivity flags agree with sampled evaluations") {
    const auto dom = ParameterDomain::cube(3, 0.1, 10.0);
    const std::vector<CoefficientFunction> flagged{
        CoefficientFunction::component(0), CoefficientFunction::constant(0.5),
        AffineCombinationCoefficient{0.05, {0, 2}, {1.0, -0.0}}, ProductCoefficient{2.0, {1, 2}},
        AffineCombinationCoefficient{10.5, {1}, {-1.0}}};
    for (const auto& c : flagged) {
        REQUIRE(c.positive_on(dom));
    }
    CHECK_FALSE(CoefficientFunction::constant(-1.0).positive_on(dom));
    CHECK_FALSE(CoefficientFunction(AffineCombinationCoefficient{10.0, {1}, {-1.0}}).positive_on(dom));
    CHECK_FALSE(CoefficientFunction::component(0).positive_on(ParameterDomain::cube(1, -1.0, 1.0)));
    CHECK_FALSE(CoefficientFunction::component(3).positive_on(dom));

    const auto samples = sample_training_set(dom, RandomSampling{10000, 9});
    for (const auto& c : flagged) {
        bool all = true;
        for (const auto& mu : samples) {
            all = all && c(mu) > 0.0;
        }
        CHECK(all);
    }
}
