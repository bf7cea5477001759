#include "rbcert/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "rbcert/errors.hpp"

namespace rbcert {

InnerProductFactor::InnerProductFactor(const SparseMatrix& x) : size_(x.rows()) {
    if (x.rows() != x.cols()) {
        throw InvalidInput("inner-product matrix must be square");
    }
    auto llt = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(x);
    if (llt->info() != Eigen::Success) {
        throw NumericalFailure("inner-product matrix is not positive definite");
    }
    llt_ = std::move(llt);
    auto ext = std::make_shared<Eigen::SimplicialLLT<ExtendedSparse>>(x.cast<Extended>());
    if (ext->info() != Eigen::Success) {
        throw NumericalFailure("inner-product matrix is not positive definite");
    }
    extended_ = std::move(ext);
}

const Eigen::SimplicialLLT<SparseMatrix>& InnerProductFactor::llt() const {
    if (!llt_) {
        throw InvalidInput("inner-product factor is empty");
    }
    return *llt_;
}

const Eigen::SimplicialLLT<ExtendedSparse>& InnerProductFactor::extended() const {
    if (!extended_) {
        throw InvalidInput("inner-product factor is empty");
    }
    return *extended_;
}

Vector InnerProductFactor::solve(const Vector& b) const {
    return llt().solve(b);
}

Matrix InnerProductFactor::solve(const Matrix& b) const {
    return llt().solve(b);
}

Vector InnerProductFactor::half_solve(const Vector& b) const {
    Vector pb = llt().permutationP() * b;
    llt().matrixL().solveInPlace(pb);
    return pb;
}

Matrix InnerProductFactor::half_solve(const Matrix& b) const {
    Matrix pb = llt().permutationP() * b;
    llt().matrixL().solveInPlace(pb);
    return pb;
}

ExtendedMatrix InnerProductFactor::half_solve(const ExtendedMatrix& b) const {
    ExtendedMatrix pb = extended().permutationP() * b;
    extended().matrixL().solveInPlace(pb);
    return pb;
}

Scalar InnerProductFactor::dual_norm(const Vector& b) const {
    return half_solve(b).norm();
}

Scalar x_norm(const SparseMatrix& x, const Vector& v) {
    return std::sqrt(std::max(0.0, x_dot(x, v, v)));
}

Scalar x_dot(const SparseMatrix& x, const Vector& u, const Vector& v) {
    return u.dot(x * v);
}

Scalar orthonormality_defect(const SparseMatrix& x, const Matrix& v) {
    if (v.cols() == 0) {
        return 0.0;
    }
    const Matrix gram = v.transpose() * (x * v);
    return (gram - Matrix::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
}

}  // namespace rbcert
