#pragma once

// Pre-shape and pre-size-and-shape primitives: Helmertization, Procrustes
// alignment, horizontal geodesics, exponential / inverse exponential maps and
// the tangent / horizontal projections.
//
// Points are stored as m x (k-1) matrices: rows are spatial axes, columns are
// Helmertized landmarks. Rotations act on the left.

#include "shapespline/types.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <vector>

namespace shapespline {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;
inline constexpr double kCutLocusMargin = 1e-8;
inline constexpr double kZeroDistance = 1e-12;
inline constexpr double kRankTolerance = 1e-10;

/// (k-1) x k Helmert sub-matrix. Rows are orthonormal and orthogonal to the ones vector.
inline Matrix helmert_submatrix(int k)
{
    Matrix h = Matrix::Zero(k - 1, k);
    for (int j = 1; j < k; ++j) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(j) * (j + 1));
        h.row(j - 1).head(j).setConstant(-scale);
        h(j - 1, j) = j * scale;
    }
    return h;
}

/// Translation-free m x (k-1) representation of a configuration, scale kept.
inline Matrix helmertize(const Matrix& landmarks)
{
    return (helmert_submatrix(static_cast<int>(landmarks.rows())) * landmarks).transpose();
}

inline double centroid_size(const Matrix& landmarks)
{
    return helmertize(landmarks).norm();
}

/// Inverse of helmertize: centred k x m landmarks.
inline Matrix landmarks_from(const Matrix& helmertized)
{
    const int k = static_cast<int>(helmertized.cols()) + 1;
    return helmert_submatrix(k).transpose() * helmertized.transpose();
}

/// Unit-norm pre-shape matrix.
class PreShape
{
public:
    PreShape() = default;

    /// Scales `x` to unit Frobenius norm.
    static PreShape normalized(Matrix x)
    {
        const double n = x.norm();
        if (!(n > 0.0) || !std::isfinite(n))
            throw Error(ErrorCode::DegenerateConfiguration, "cannot normalise a zero pre-shape");
        x /= n;
        return PreShape(std::move(x));
    }

    /// Wraps a matrix that is already unit norm (checked to 1e-12).
    static PreShape from_unit(Matrix x)
    {
        if (std::abs(x.norm() - 1.0) > 1e-12)
            throw Error(ErrorCode::InvalidArgument, "pre-shape must have unit Frobenius norm");
        return PreShape(std::move(x));
    }

    const Matrix& matrix() const { return x_; }
    int m() const { return static_cast<int>(x_.rows()); }
    int k() const { return static_cast<int>(x_.cols()) + 1; }

private:
    explicit PreShape(Matrix x) : x_(std::move(x)) {}
    Matrix x_;
};

/// Translation-free matrix with size retained.
class PreSizeShape
{
public:
    PreSizeShape() = default;
    explicit PreSizeShape(Matrix x) : x_(std::move(x))
    {
        if (x_.size() == 0 || x_.isZero(0.0))
            throw Error(ErrorCode::DegenerateConfiguration, "pre-size-and-shape must be nonzero");
    }

    const Matrix& matrix() const { return x_; }

private:
    Matrix x_;
};

/// Tangent matrix carried with its foot point.
struct HorizontalVector
{
    Matrix matrix;
    Matrix base;

    double norm() const { return matrix.norm(); }
};

inline PreShape to_preshape(const Configuration& c)
{
    validate(c);
    Matrix x = helmertize(c.landmarks);
    if (x.norm() <= 0.0)
        throw Error(ErrorCode::DegenerateConfiguration, "all landmarks coincide");
    return PreShape::normalized(std::move(x));
}

inline PreSizeShape to_presize_shape(const Configuration& c)
{
    validate(c);
    return PreSizeShape(helmertize(c.landmarks));
}

// ---------------------------------------------------------------------------
// Procrustes

struct ProcrustesResult
{
    Matrix fitted;   ///< rotation * x2
    Matrix rotation; ///< in SO(m)
    bool ambiguous = false;
};

/// Rotates x2 onto x1. The fitted x1 * fitted^T is symmetric with eigenvalues
/// non-negative except possibly the smallest, whose sign is sign(det(x1 x2^T)).
inline ProcrustesResult procrustes_fit(const Matrix& x1, const Matrix& x2)
{
    const Eigen::Index m = x1.rows();
    if (x2.rows() != m || x2.cols() != x1.cols())
        throw Error(ErrorCode::InvalidArgument, "procrustes_fit: dimension mismatch");

    const Matrix cross = x1 * x2.transpose();
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix u = svd.matrixU();
    const Matrix& w = svd.matrixV();
    const double d = (u * w.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    if (d < 0.0)
        u.col(m - 1) *= -1.0;

    ProcrustesResult out;
    out.rotation = u * w.transpose();
    out.fitted = out.rotation * x2;
    if (m >= 2) {
        const auto& sv = svd.singularValues();
        const double gap = sv(m - 2) - sv(m - 1);
        out.ambiguous = gap < 1e-9 && (d < 0.0 || sv(m - 2) < 1e-9);
    }
    return out;
}

inline std::pair<PreShape, Matrix> procrustes_fit(const PreShape& x1, const PreShape& x2)
{
    auto r = procrustes_fit(x1.matrix(), x2.matrix());
    return {PreShape::normalized(std::move(r.fitted)), std::move(r.rotation)};
}

/// Great-circle angle between two unit matrices, computed as atan2 for accuracy near 0.
inline double sphere_angle(const Matrix& x1, const Matrix& x2)
{
    const double c = inner(x1, x2);
    const double s = (x2 - c * x1).norm();
    return std::atan2(s, c);
}

/// Riemannian shape distance in [0, pi/2].
inline double shape_distance(const Matrix& x1, const Matrix& x2)
{
    return sphere_angle(x1, procrustes_fit(x1, x2).fitted);
}

inline double shape_distance(const PreShape& x1, const PreShape& x2)
{
    return shape_distance(x1.matrix(), x2.matrix());
}

/// Riemannian size-and-shape distance.
inline double size_shape_distance(const Matrix& x1, const Matrix& x2)
{
    return (procrustes_fit(x1, x2).fitted - x1).norm();
}

inline double distance(Mode mode, const Matrix& x1, const Matrix& x2)
{
    return mode == Mode::shape ? shape_distance(x1, x2) : size_shape_distance(x1, x2);
}

// ---------------------------------------------------------------------------
// Projections

/// Orthonormal basis A_ij = (E_ij - E_ji)/sqrt(2), i < j, of the m x m skew matrices.
inline std::vector<Matrix> skew_basis(int m)
{
    std::vector<Matrix> basis;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            Matrix a = Matrix::Zero(m, m);
            a(i, j) = std::sqrt(0.5);
            a(j, i) = -std::sqrt(0.5);
            basis.push_back(std::move(a));
        }
    return basis;
}

/// Second-smallest eigenvalue of x x^T; rank(x) >= m-1 iff this is positive.
inline double rank_margin(const Matrix& x)
{
    if (x.rows() < 2)
        return std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(x * x.transpose(), Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(1);
}

inline Matrix project_tangent(const Matrix& x, const Matrix& w)
{
    return w - inner(w, x) * x;
}

/// Orthogonal projector onto the horizontal subspace at a fixed point: removes the
/// vertical part {A x : A skew}. The vectors A_ij x are not mutually orthogonal
/// unless x x^T is diagonal, so coefficients come from their Gram system.
class HorizontalProjector
{
public:
    explicit HorizontalProjector(const Matrix& x)
    {
        const int m = static_cast<int>(x.rows());
        if (m < 2)
            return;
        if (rank_margin(x) < kRankTolerance)
            throw Error(ErrorCode::RankDeficient, "point has rank below m-1");
        for (const auto& a : skew_basis(m))
            vertical_.push_back(a * x);
        const auto dim = static_cast<Eigen::Index>(vertical_.size());
        Matrix gram(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j <= i; ++j)
                gram(i, j) = gram(j, i) = inner(vertical_[i], vertical_[j]);
        ldlt_.compute(gram);
    }

    Matrix apply(const Matrix& v) const
    {
        if (vertical_.empty())
            return v;
        Vector rhs(static_cast<Eigen::Index>(vertical_.size()));
        for (std::size_t i = 0; i < vertical_.size(); ++i)
            rhs(static_cast<Eigen::Index>(i)) = inner(vertical_[i], v);
        const Vector coef = ldlt_.solve(rhs);
        Matrix out = v;
        for (std::size_t i = 0; i < vertical_.size(); ++i)
            out -= coef(static_cast<Eigen::Index>(i)) * vertical_[i];
        return out;
    }

private:
    std::vector<Matrix> vertical_;
    Eigen::LDLT<Matrix> ldlt_;
};

inline Matrix project_horizontal(const Matrix& x, const Matrix& vt)
{
    return HorizontalProjector(x).apply(vt);
}

inline HorizontalVector project_horizontal(const PreShape& x, const Matrix& vt)
{
    return {project_horizontal(x.matrix(), vt), x.matrix()};
}

/// Tangent then horizontal projection; size-and-shape has no tangent constraint.
inline Matrix project(Mode mode, const Matrix& x, const Matrix& w)
{
    return mode == Mode::shape ? project_horizontal(x, project_tangent(x, w)) : project_horizontal(x, w);
}

// ---------------------------------------------------------------------------
// Geodesics

/// Unit-speed horizontal geodesic piece, parametrised by arc length s in [0, length].
/// Shape mode: start cos s + direction sin s. Size-and-shape: start + s direction.
struct GeodesicSegment
{
    Matrix start;
    Matrix direction; ///< unit norm, or zero when length == 0
    double length = 0.0;
    double t_start = 0.0;
    double t_end = 1.0;
    Mode mode = Mode::shape;

    Matrix point(double s) const
    {
        if (mode == Mode::shape)
            return start * std::cos(s) + direction * std::sin(s);
        return start + s * direction;
    }

    Matrix velocity(double s) const
    {
        if (mode == Mode::shape)
            return -start * std::sin(s) + direction * std::cos(s);
        return direction;
    }

    Matrix end() const { return point(length); }

    /// Arc-length parameter for time t (linear in t).
    double arc_at(double t) const
    {
        if (t_end == t_start)
            return 0.0;
        return length * (t - t_start) / (t_end - t_start);
    }
};

/// Segment from x1 to x2, where x2 has already been Procrustes-fitted onto x1.
/// Zero-length segments are allowed here; geodesic_between rejects them.
inline GeodesicSegment make_segment(Mode mode, const Matrix& x1, const Matrix& x2_fitted, double t0, double t1)
{
    GeodesicSegment seg;
    seg.start = x1;
    seg.mode = mode;
    seg.t_start = t0;
    seg.t_end = t1;
    if (mode == Mode::shape) {
        const double c = inner(x1, x2_fitted);
        Matrix w = x2_fitted - c * x1;
        const double sn = w.norm();
        seg.length = std::atan2(sn, c);
        if (seg.length >= kHalfPi - kCutLocusMargin)
            throw Error(ErrorCode::CutLocus, "shape distance " + std::to_string(seg.length) + " reaches pi/2");
        if (sn > 0.0 && seg.length >= kZeroDistance) {
            seg.direction = w / sn;
        } else {
            seg.length = 0.0;
            seg.direction = Matrix::Zero(x1.rows(), x1.cols());
        }
    } else {
        Matrix w = x2_fitted - x1;
        seg.length = w.norm();
        seg.direction = seg.length > 0.0 ? Matrix(w / seg.length) : Matrix::Zero(x1.rows(), x1.cols());
    }
    return seg;
}

/// Horizontal geodesic from x1 to the Procrustes fit of x2 onto x1.
inline GeodesicSegment geodesic_between(const PreShape& x1, const PreShape& x2, double t0 = 0.0, double t1 = 1.0)
{
    const auto fit = procrustes_fit(x1.matrix(), x2.matrix());
    auto seg = make_segment(Mode::shape, x1.matrix(), fit.fitted, t0, t1);
    if (seg.length < kZeroDistance)
        throw Error(ErrorCode::ZeroDistance, "shapes coincide; geodesic direction undefined");
    return seg;
}

inline GeodesicSegment ss_geodesic_between(const PreSizeShape& x1, const PreSizeShape& x2, double t0 = 0.0,
                                           double t1 = 1.0)
{
    const auto fit = procrustes_fit(x1.matrix(), x2.matrix());
    return make_segment(Mode::size_and_shape, x1.matrix(), fit.fitted, t0, t1);
}

/// Horizontal lift of the inverse exponential map; zero when the shapes coincide.
inline Matrix log_map(Mode mode, const Matrix& x1, const Matrix& x2)
{
    const auto fit = procrustes_fit(x1, x2);
    if (mode == Mode::size_and_shape)
        return fit.fitted - x1;
    const auto seg = make_segment(mode, x1, fit.fitted, 0.0, 1.0);
    return seg.length * seg.direction;
}

inline HorizontalVector inverse_exp(const PreShape& x1, const PreShape& x2)
{
    return {log_map(Mode::shape, x1.matrix(), x2.matrix()), x1.matrix()};
}

inline Matrix exp_point(Mode mode, const Matrix& x, const Matrix& v)
{
    if (mode == Mode::size_and_shape)
        return x + v;
    const double n = v.norm();
    if (n >= kHalfPi)
        throw Error(ErrorCode::VectorTooLong, "tangent vector length " + std::to_string(n) + " >= pi/2");
    if (n == 0.0)
        return x;
    Matrix out = x * std::cos(n) + v * (std::sin(n) / n);
    out /= out.norm();
    return out;
}

inline PreShape exp_map(const PreShape& x, const HorizontalVector& v)
{
    return PreShape::normalized(exp_point(Mode::shape, x.matrix(), v.matrix));
}

// ---------------------------------------------------------------------------
// Tangent-space coordinates

/// Dimension of the shape (or size-and-shape) space.
inline int quotient_dimension(Mode mode, int m, int k)
{
    const int d = m * (k - 1) - m * (m - 1) / 2;
    return mode == Mode::shape ? d - 1 : d;
}

/// Orthonormal basis of the horizontal space at x, chosen so that rotating x by R
/// rotates every basis matrix by R. Built in the principal-axis frame of x.
inline std::vector<Matrix> horizontal_basis(Mode mode, const Matrix& x)
{
    const Eigen::Index m = x.rows();
    const Eigen::Index n = x.cols();
    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU);
    Matrix u = svd.matrixU();
    for (Eigen::Index a = 0; a < m; ++a) {
        const RowVector row = u.col(a).transpose() * x;
        Eigen::Index idx = 0;
        row.cwiseAbs().maxCoeff(&idx);
        if (row(idx) < 0.0)
            u.col(a) *= -1.0;
    }
    const Matrix canonical = u.transpose() * x;

    std::vector<Matrix> basis;
    const int target = quotient_dimension(mode, static_cast<int>(m), static_cast<int>(n) + 1);
    for (Eigen::Index col = 0; col < n && static_cast<int>(basis.size()) < target; ++col)
        for (Eigen::Index row = 0; row < m && static_cast<int>(basis.size()) < target; ++row) {
            Matrix e = Matrix::Zero(m, n);
            e(row, col) = 1.0;
            Matrix v = project(mode, canonical, e);
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& b : basis)
                    v -= inner(v, b) * b;
            const double len = v.norm();
            if (len > 1e-8)
                basis.push_back(v / len);
        }
    for (auto& b : basis)
        b = u * b;
    return basis;
}

/// Coordinates of a horizontal vector in a basis from horizontal_basis.
inline Vector coordinates(const std::vector<Matrix>& basis, const Matrix& v)
{
    Vector c(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i)
        c(static_cast<Eigen::Index>(i)) = inner(basis[i], v);
    return c;
}

} // namespace shapespline
