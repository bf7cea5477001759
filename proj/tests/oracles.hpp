#pragma once

// Brute-force references that avoid the library's fast paths: dense
// matrices, explicit inverses and textbook decompositions.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rbcert/affine.hpp"
#include "rbcert/reduced.hpp"
#include "rbcert/truth.hpp"

namespace oracle {

using rbcert::Matrix;
using rbcert::Parameter;
using rbcert::Scalar;
using rbcert::Vector;

inline Matrix dense(const rbcert::SparseMatrix& a) {
    return Matrix(a);
}

inline Matrix dense_assemble(const rbcert::AffineOperator& op, const Parameter& mu) {
    Matrix a = Matrix::Zero(op.size(), op.size());
    for (const auto& term : op.terms()) {
        a += term.coefficient(mu) * dense(term.matrix);
    }
    return a;
}

/// Generalized eigenvalues of (A, X), ascending, via X^{-1/2} A X^{-1/2}.
inline Vector generalized_eigenvalues(const Matrix& a, const Matrix& x) {
    Eigen::SelfAdjointEigenSolver<Matrix> ex(x);
    const Matrix xinv_half = ex.eigenvectors() * ex.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                             ex.eigenvectors().transpose();
    const Matrix c = xinv_half * a * xinv_half;
    Eigen::SelfAdjointEigenSolver<Matrix> ec(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
    return ec.eigenvalues();
}

/// sqrt(rᵀ X⁻¹ r) by a dense LDLT solve.
inline Scalar dual_norm(const Matrix& x, const Vector& r) {
    const Vector z = x.ldlt().solve(r);
    return std::sqrt(std::max(0.0, r.dot(z)));
}

inline Scalar x_norm(const Matrix& x, const Vector& v) {
    return std::sqrt(std::max(0.0, v.dot(x * v)));
}

/// Galerkin solution in span V computed with truth-size operations only.
inline Vector truth_galerkin(const rbcert::TruthProblem& p, const Matrix& v, const Parameter& mu) {
    const Matrix a = dense_assemble(p.op(), mu);
    const Matrix an = v.transpose() * a * v;
    const Vector fn = v.transpose() * p.load();
    return v * an.llt().solve(fn);
}

/// X-orthogonal projection of u onto span V for arbitrary (non-orthonormal) V.
inline Vector x_projection(const Matrix& x, const Matrix& v, const Vector& u) {
    const Matrix g = v.transpose() * x * v;
    return v * g.ldlt().solve(v.transpose() * x * u);
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<Scalar> d;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = d(rng);
    }
    return v;
}

inline Parameter random_parameter(const rbcert::ParameterDomain& dom, std::mt19937_64& rng) {
    std::vector<Scalar> v(dom.dim());
    for (std::size_t i = 0; i < dom.dim(); ++i) {
        std::uniform_real_distribution<Scalar> d(dom.lower()[i], dom.upper()[i]);
        v[i] = d(rng);
    }
    return Parameter(v);
}

/// Log-uniform sample, spreads contrast over the decades of the box.
inline Parameter log_parameter(const rbcert::ParameterDomain& dom, std::mt19937_64& rng) {
    std::vector<Scalar> v(dom.dim());
    for (std::size_t i = 0; i < dom.dim(); ++i) {
        std::uniform_real_distribution<Scalar> d(std::log(dom.lower()[i]), std::log(dom.upper()[i]));
        v[i] = std::min(dom.upper()[i], std::max(dom.lower()[i], std::exp(d(rng))));
    }
    return Parameter(v);
}

inline Scalar max_rel_diff(const Matrix& a, const Matrix& b) {
    const Scalar scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return scale == 0.0 ? 0.0 : (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace oracle
