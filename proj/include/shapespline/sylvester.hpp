#pragma once

#include "shapespline/types.hpp"

namespace shapespline {

/// Eigen-decomposed symmetric PSD matrix, reused to solve A S + S A = B for several B.
class SkewSylvesterSolver
{
public:
    explicit SkewSylvesterSolver(const Matrix& s) : eig_(s)
    {
        const auto& lambda = eig_.eigenvalues(); // ascending
        if (lambda.size() >= 2 && lambda(0) + lambda(1) <= 1e-12)
            throw Error(ErrorCode::RankDeficient, "skew Sylvester equation is singular (rank < m-1)");
    }

    /// Unique skew A with A S + S A = B, via a_ij = b_ij / (l_i + l_j) in the eigenbasis.
    Matrix solve(const Matrix& b) const
    {
        const Matrix& r = eig_.eigenvectors();
        const auto& lambda = eig_.eigenvalues();
        Matrix bt = r.transpose() * b * r;
        const Eigen::Index m = bt.rows();
        for (Eigen::Index i = 0; i < m; ++i) {
            bt(i, i) = 0.0;
            for (Eigen::Index j = i + 1; j < m; ++j) {
                const double a = 0.5 * (bt(i, j) - bt(j, i)) / (lambda(i) + lambda(j));
                bt(i, j) = a;
                bt(j, i) = -a;
            }
        }
        return r * bt * r.transpose();
    }

    const Vector& eigenvalues() const { return eig_.eigenvalues(); }

private:
    Eigen::SelfAdjointEigenSolver<Matrix> eig_;
};

inline Matrix solve_skew_sylvester(const Matrix& s, const Matrix& b)
{
    if (s.rows() != s.cols() || b.rows() != s.rows() || b.cols() != s.cols())
        throw Error(ErrorCode::InvalidArgument, "solve_skew_sylvester: dimension mismatch");
    return SkewSylvesterSolver(s).solve(b);
}

} // namespace shapespline
