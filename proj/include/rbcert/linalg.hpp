#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>

namespace rbcert {

using Scalar = double;
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<Scalar>;

// 64-bit mantissa on x86-64; used only where double cancellation would cap accuracy.
using Extended = long double;
using ExtendedMatrix = Eigen::Matrix<Extended, Eigen::Dynamic, Eigen::Dynamic>;
using ExtendedVector = Eigen::Matrix<Extended, Eigen::Dynamic, 1>;
using ExtendedSparse = Eigen::SparseMatrix<Extended, Eigen::ColMajor>;

/// Sparse Cholesky factorization of an SPD inner-product matrix X = Pᵀ L Lᵀ P.
///
/// Besides plain solves it exposes the "half solve" y = L⁻¹ P b, for which
/// yᵀy = bᵀ X⁻¹ b. Dual norms and Riesz-representer inner products are then
/// plain Euclidean operations on half-solved vectors.
class InnerProductFactor {
public:
    InnerProductFactor() = default;
    explicit InnerProductFactor(const SparseMatrix& x);

    [[nodiscard]] Eigen::Index size() const noexcept { return size_; }

    [[nodiscard]] Vector solve(const Vector& b) const;
    [[nodiscard]] Matrix solve(const Matrix& b) const;

    [[nodiscard]] Vector half_solve(const Vector& b) const;
    [[nodiscard]] Matrix half_solve(const Matrix& b) const;
    /// Same map through a second factorization carried out in extended precision.
    [[nodiscard]] ExtendedMatrix half_solve(const ExtendedMatrix& b) const;

    /// sqrt(bᵀ X⁻¹ b)
    [[nodiscard]] Scalar dual_norm(const Vector& b) const;

private:
    [[nodiscard]] const Eigen::SimplicialLLT<SparseMatrix>& llt() const;
    [[nodiscard]] const Eigen::SimplicialLLT<ExtendedSparse>& extended() const;

    // Shared and immutable after construction; copies alias one factorization.
    std::shared_ptr<const Eigen::SimplicialLLT<SparseMatrix>> llt_;
    std::shared_ptr<const Eigen::SimplicialLLT<ExtendedSparse>> extended_;
    Eigen::Index size_ = 0;
};

/// sqrt(vᵀ X v)
[[nodiscard]] Scalar x_norm(const SparseMatrix& x, const Vector& v);

/// uᵀ X v
[[nodiscard]] Scalar x_dot(const SparseMatrix& x, const Vector& u, const Vector& v);

/// max |entry| of Vᵀ X V − I.
[[nodiscard]] Scalar orthonormality_defect(const SparseMatrix& x, const Matrix& v);

}  // namespace rbcert
