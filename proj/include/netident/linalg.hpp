#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>

namespace netident {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

template <typename Real>
using CMatrixT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVectorT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

/// Kronecker product A (x) B; row (a * rows(B) + b), column (p * cols(B) + q).
template <typename DA, typename DB>
auto kronecker(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B) {
    using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DA::Scalar, typename DB::Scalar>::ReturnType;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index p = 0; p < A.cols(); ++p) {
        for (Eigen::Index a = 0; a < A.rows(); ++a) {
            out.block(a * B.rows(), p * B.cols(), B.rows(), B.cols()) = A(a, p) * B;
        }
    }
    return out;
}

/// Column-stacking vectorization.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> vec(const Eigen::MatrixBase<Derived>& M) {
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> dense = M;
    return Eigen::Map<const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>>(dense.data(), dense.size());
}

/// Inverse of vec() for a rows x cols result.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> unvec(const Eigen::MatrixBase<Derived>& v,
                                                                              Eigen::Index rows, Eigen::Index cols) {
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> dense = v;
    return Eigen::Map<const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>>(dense.data(),
                                                                                                   rows, cols);
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& M) {
    if (M.size() == 0) return 0.0;
    return static_cast<double>(M.cwiseAbs().maxCoeff());
}

/// max|A - B| / max(max|A|, max|B|); 0 when both are zero.
template <typename DA, typename DB>
double relative_max_diff(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B) {
    const double scale = std::max(max_abs(A), max_abs(B));
    const double diff = max_abs(A - B);
    if (scale == 0.0) return diff;
    return diff / scale;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& M) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
        for (Eigen::Index r = 0; r < M.rows(); ++r) {
            const auto v = M(r, c);
            if (!std::isfinite(std::real(v)) || !std::isfinite(std::imag(v))) return false;
        }
    }
    return true;
}

}  // namespace netident
