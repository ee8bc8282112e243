#pragma once

// Euclidean splines fitted coordinate-wise to vector data observed at increasing
// times: natural cubic smoothing splines (Reinsch form, knots at the data
// times), continuous piecewise-linear splines on equally spaced knots, and the
// least-squares line.

#include "shapespline/types.hpp"

#include <algorithm>
#include <span>
#include <vector>

namespace shapespline {

struct ScatterData
{
    std::vector<double> times;
    Matrix values; ///< one row per observation, one column per coordinate

    std::size_t size() const { return times.size(); }
};

inline void validate(const ScatterData& data, std::size_t min_points)
{
    if (static_cast<std::size_t>(data.values.rows()) != data.times.size())
        throw Error(ErrorCode::InvalidArgument, "scatter data: times and values differ in length");
    if (data.times.size() < min_points)
        throw Error(ErrorCode::TooFewPoints, "need at least " + std::to_string(min_points) + " observations, got " +
                                                 std::to_string(data.times.size()));
    for (std::size_t i = 1; i < data.times.size(); ++i)
        if (!(data.times[i] > data.times[i - 1]))
            throw Error(ErrorCode::DuplicateTimes, "times must be strictly increasing (observation " +
                                                       std::to_string(i) + ")");
}

enum class SplineKind { cubic_smoothing, linear_knotted, least_squares_line };

/// Symmetric positive-definite matrix with two sub-diagonals, factored as L D L^T.
class PentadiagonalLdlt
{
public:
    /// diag(i) = M(i,i), off1(i) = M(i+1,i), off2(i) = M(i+2,i).
    PentadiagonalLdlt(Vector diag, Vector off1, Vector off2)
        : d_(std::move(diag)), l1_(std::move(off1)), l2_(std::move(off2))
    {
        const Eigen::Index n = d_.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i >= 1) {
                d_(i) -= l1_(i - 1) * l1_(i - 1) * d_(i - 1);
                if (i >= 2)
                    d_(i) -= l2_(i - 2) * l2_(i - 2) * d_(i - 2);
            }
            if (!(d_(i) > 0.0))
                throw Error(ErrorCode::SingularDesign, "spline system is not positive definite");
            if (i + 1 < n) {
                double v = l1_(i);
                if (i >= 1)
                    v -= l2_(i - 1) * l1_(i - 1) * d_(i - 1);
                l1_(i) = v / d_(i);
            }
            if (i + 2 < n)
                l2_(i) /= d_(i);
        }
    }

    Matrix solve(Matrix b) const
    {
        const Eigen::Index n = d_.size();
        for (Eigen::Index i = 1; i < n; ++i) {
            b.row(i) -= l1_(i - 1) * b.row(i - 1);
            if (i >= 2)
                b.row(i) -= l2_(i - 2) * b.row(i - 2);
        }
        for (Eigen::Index i = 0; i < n; ++i)
            b.row(i) /= d_(i);
        for (Eigen::Index i = n - 2; i >= 0; --i) {
            b.row(i) -= l1_(i) * b.row(i + 1);
            if (i + 2 < n)
                b.row(i) -= l2_(i) * b.row(i + 2);
        }
        return b;
    }

private:
    Vector d_, l1_, l2_;
};

class EuclideanSpline
{
public:
    SplineKind kind = SplineKind::cubic_smoothing;
    std::vector<double> knots; ///< data times (cubic) or breakpoints incl. endpoints (linear)
    Matrix values;             ///< cubic: fitted values at knots; linear: basis coefficients
    Matrix second;             ///< cubic: second derivatives at knots
    double lambda = 0.0;
    double edf = 0.0; ///< effective degrees of freedom per coordinate

    Eigen::Index dimension() const { return values.cols(); }

    RowVector evaluate(double t) const
    {
        return kind == SplineKind::cubic_smoothing ? evaluate_cubic(t) : evaluate_linear(t);
    }

    Matrix evaluate(std::span<const double> ts) const
    {
        Matrix out(static_cast<Eigen::Index>(ts.size()), dimension());
        for (std::size_t i = 0; i < ts.size(); ++i)
            out.row(static_cast<Eigen::Index>(i)) = evaluate(ts[i]);
        return out;
    }

    /// Linear-basis design row at t: 1, u, (u - kappa_j)_+ with u rescaled to [0, 1].
    RowVector basis_row(double t) const
    {
        const auto nk = static_cast<Eigen::Index>(knots.size());
        const double u = (t - knots.front()) / (knots.back() - knots.front());
        RowVector row(nk);
        row(0) = 1.0;
        row(1) = u;
        for (Eigen::Index j = 1; j + 1 < nk; ++j) {
            const double kappa = (knots[j] - knots.front()) / (knots.back() - knots.front());
            row(j + 1) = std::max(0.0, u - kappa);
        }
        return row;
    }

private:
    RowVector evaluate_cubic(double t) const
    {
        const auto n = static_cast<Eigen::Index>(knots.size());
        if (t <= knots.front()) {
            const double h = knots[1] - knots[0];
            const RowVector slope = (values.row(1) - values.row(0)) / h - h / 6.0 * second.row(1);
            return values.row(0) + (t - knots[0]) * slope;
        }
        if (t >= knots.back()) {
            const double h = knots[n - 1] - knots[n - 2];
            const RowVector slope = (values.row(n - 1) - values.row(n - 2)) / h + h / 6.0 * second.row(n - 2);
            return values.row(n - 1) + (t - knots[n - 1]) * slope;
        }
        const auto it = std::upper_bound(knots.begin(), knots.end(), t);
        const auto i = static_cast<Eigen::Index>(it - knots.begin()) - 1;
        const double h = knots[i + 1] - knots[i];
        const double a = t - knots[i];
        const double b = knots[i + 1] - t;
        return (a * values.row(i + 1) + b * values.row(i)) / h -
               a * b / 6.0 * ((1.0 + a / h) * second.row(i + 1) + (1.0 + b / h) * second.row(i));
    }

    RowVector evaluate_linear(double t) const { return basis_row(t) * values; }
};

namespace detail {

/// Entry (r, c) of the N x (N-2) second-difference matrix Q for spacings h.
inline double q_entry(const std::vector<double>& h, Eigen::Index r, Eigen::Index c)
{
    const Eigen::Index j = c + 1;
    if (r == j - 1)
        return 1.0 / h[j - 1];
    if (r == j)
        return -1.0 / h[j - 1] - 1.0 / h[j];
    if (r == j + 1)
        return 1.0 / h[j];
    return 0.0;
}

} // namespace detail

/// Natural cubic smoothing spline minimising sum |v_i - f(t_i)|^2 + lambda int |f''|^2,
/// solved coordinate-wise through (R + lambda Q^T Q) gamma = Q^T y, g = y - lambda Q gamma.
inline EuclideanSpline fit_cubic_smoothing(const ScatterData& data, double lambda)
{
    validate(data, 3);
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::InvalidArgument, "smoothing parameter must be positive and finite");

    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::Index p = n - 2;
    std::vector<double> h(static_cast<std::size_t>(n - 1));
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        h[i] = data.times[i + 1] - data.times[i];

    Vector diag(p), off1 = Vector::Zero(p), off2 = Vector::Zero(p);
    for (Eigen::Index c = 0; c < p; ++c) {
        const Eigen::Index j = c + 1;
        for (Eigen::Index c2 = c; c2 < std::min(p, c + 3); ++c2) {
            double qtq = 0.0;
            for (Eigen::Index r = c2; r <= c + 2; ++r)
                qtq += detail::q_entry(h, r, c) * detail::q_entry(h, r, c2);
            double r_entry = 0.0;
            if (c2 == c)
                r_entry = (h[j - 1] + h[j]) / 3.0;
            else if (c2 == c + 1)
                r_entry = h[j] / 6.0;
            const double value = r_entry + lambda * qtq;
            if (c2 == c)
                diag(c) = value;
            else if (c2 == c + 1)
                off1(c) = value;
            else
                off2(c) = value;
        }
    }
    const PentadiagonalLdlt system(diag, off1, off2);

    const Matrix& y = data.values;
    Matrix qty(p, y.cols());
    for (Eigen::Index c = 0; c < p; ++c)
        qty.row(c) = detail::q_entry(h, c, c) * y.row(c) + detail::q_entry(h, c + 1, c) * y.row(c + 1) +
                     detail::q_entry(h, c + 2, c) * y.row(c + 2);
    const Matrix gamma = system.solve(qty);

    EuclideanSpline s;
    s.kind = SplineKind::cubic_smoothing;
    s.knots = data.times;
    s.lambda = lambda;
    s.second = Matrix::Zero(n, y.cols());
    s.second.middleRows(1, p) = gamma;
    s.values = y;
    for (Eigen::Index c = 0; c < p; ++c)
        for (Eigen::Index r = c; r <= c + 2; ++r)
            s.values.row(r) -= lambda * detail::q_entry(h, r, c) * gamma.row(c);

    // edf = tr(I - lambda Q M^{-1} Q^T) = n - lambda tr(M^{-1} Q^T Q)
    Matrix qtq = Matrix::Zero(p, p);
    for (Eigen::Index c = 0; c < p; ++c)
        for (Eigen::Index c2 = std::max<Eigen::Index>(0, c - 2); c2 < std::min(p, c + 3); ++c2)
            for (Eigen::Index r = std::max(c, c2); r <= std::min(c, c2) + 2; ++r)
                qtq(c, c2) += detail::q_entry(h, r, c) * detail::q_entry(h, r, c2);
    s.edf = static_cast<double>(n) - lambda * system.solve(qtq).trace();
    return s;
}

/// Ordinary least squares on the truncated-linear basis with `num_knots` equally
/// spaced knots over [t_0, t_n], endpoints included. Two knots give the straight line.
inline EuclideanSpline fit_linear_knotted(const ScatterData& data, int num_knots)
{
    validate(data, 2);
    if (num_knots < 2)
        throw Error(ErrorCode::InvalidArgument, "a linear spline needs at least 2 knots");

    EuclideanSpline s;
    s.kind = num_knots == 2 ? SplineKind::least_squares_line : SplineKind::linear_knotted;
    const double t0 = data.times.front();
    const double t1 = data.times.back();
    for (int j = 0; j < num_knots; ++j)
        s.knots.push_back(j + 1 == num_knots ? t1 : t0 + (t1 - t0) * j / (num_knots - 1));

    const auto n = static_cast<Eigen::Index>(data.size());
    Matrix design(n, num_knots);
    for (Eigen::Index i = 0; i < n; ++i)
        design.row(i) = s.basis_row(data.times[i]);
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < num_knots)
        throw Error(ErrorCode::SingularDesign, "linear spline design is rank deficient (" + std::to_string(num_knots) +
                                                   " knots, " + std::to_string(n) + " observations)");
    s.values = qr.solve(data.values);
    s.edf = num_knots;
    s.lambda = 0.0;
    return s;
}

inline EuclideanSpline fit_least_squares_line(const ScatterData& data)
{
    return fit_linear_knotted(data, 2);
}

struct SplineModel
{
    SplineKind kind = SplineKind::cubic_smoothing;
    double lambda = 1e-3; ///< cubic only
    int num_knots = 2;    ///< linear only

    EuclideanSpline fit(const ScatterData& data) const
    {
        switch (kind) {
        case SplineKind::cubic_smoothing: return fit_cubic_smoothing(data, lambda);
        case SplineKind::linear_knotted: return fit_linear_knotted(data, num_knots);
        case SplineKind::least_squares_line: return fit_least_squares_line(data);
        }
        throw Error(ErrorCode::InvalidArgument, "unknown spline kind");
    }
};

/// One fit per observation, each with that observation removed.
inline std::vector<EuclideanSpline> leave_one_out_fits(const ScatterData& data, const SplineModel& model)
{
    validate(data, 4);
    std::vector<EuclideanSpline> fits;
    const auto n = static_cast<Eigen::Index>(data.size());
    for (Eigen::Index skip = 0; skip < n; ++skip) {
        ScatterData sub;
        sub.values.resize(n - 1, data.values.cols());
        Eigen::Index row = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == skip)
                continue;
            sub.times.push_back(data.times[i]);
            sub.values.row(row++) = data.values.row(i);
        }
        fits.push_back(model.fit(sub));
    }
    return fits;
}

} // namespace shapespline
