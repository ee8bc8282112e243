#pragma once

// Random inputs and independent reference implementations for the tests.

#include "shapespline/shapespline.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

using namespace shapespline;

inline Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out.data()[i] = n(rng);
    return out;
}

inline Matrix random_preshape(std::mt19937_64& rng, int m, int k)
{
    return PreShape::normalized(gaussian(rng, m, k - 1)).matrix();
}

inline Matrix random_rotation(std::mt19937_64& rng, int m)
{
    Eigen::HouseholderQR<Matrix> qr(gaussian(rng, m, m));
    Matrix q = qr.householderQ();
    if (q.determinant() < 0.0)
        q.col(0) *= -1.0;
    return q;
}

inline Matrix random_horizontal(std::mt19937_64& rng, Mode mode, const Matrix& x, double length)
{
    Matrix v = project(mode, x, gaussian(rng, x.rows(), x.cols()));
    return v * (length / v.norm());
}

/// Shape a horizontal step of the given length away from x.
inline Matrix step_from(std::mt19937_64& rng, const Matrix& x, double length)
{
    return exp_point(Mode::shape, x, random_horizontal(rng, Mode::shape, x, length));
}

/// Random piecewise-geodesic path with `segments` segments of length in [lo, hi].
inline PiecewiseGeodesicPath random_path(std::mt19937_64& rng, Mode mode, int m, int k, int segments, double lo,
                                         double hi, double t0 = 0.0)
{
    std::uniform_real_distribution<double> len(lo, hi);
    std::uniform_real_distribution<double> dt(0.5, 1.5);
    std::vector<Matrix> pts{mode == Mode::shape ? random_preshape(rng, m, k) : gaussian(rng, m, k - 1)};
    std::vector<double> times{t0};
    for (int s = 0; s < segments; ++s) {
        const Matrix v = random_horizontal(rng, mode, pts.back(), len(rng));
        pts.push_back(exp_point(mode, pts.back(), v));
        times.push_back(times.back() + dt(rng));
    }
    return build_path(mode, pts, times);
}

inline std::vector<Configuration> as_configurations(const std::vector<Matrix>& pts, const std::vector<double>& times)
{
    std::vector<Configuration> out;
    for (std::size_t i = 0; i < pts.size(); ++i)
        out.push_back({landmarks_from(pts[i]), times[i]});
    return out;
}

inline std::vector<Configuration> rotated(const std::vector<Configuration>& data, const Matrix& r)
{
    auto out = data;
    for (auto& c : out)
        c.landmarks = c.landmarks * r.transpose();
    return out;
}

// ---------------------------------------------------------------------------
// Dense reference solves.

namespace dense {

/// Solves A S + S A = B for skew A by expanding A in the skew basis.
inline Matrix skew_sylvester(const Matrix& s, const Matrix& b)
{
    const auto basis = skew_basis(static_cast<int>(s.rows()));
    const auto d = static_cast<Eigen::Index>(basis.size());
    Matrix system(d, d);
    Vector rhs(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const Matrix image = basis[j] * s + s * basis[j];
        for (Eigen::Index i = 0; i < d; ++i)
            system(i, j) = inner(basis[i], image);
    }
    for (Eigen::Index i = 0; i < d; ++i)
        rhs(i) = inner(basis[i], b);
    const Vector coef = system.fullPivLu().solve(rhs);
    Matrix a = Matrix::Zero(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < d; ++i)
        a += coef(i) * basis[i];
    return a;
}

/// Roughness penalty K = Q R^{-1} Q^T of the natural cubic spline with knots t.
inline Matrix penalty(const std::vector<double>& t)
{
    const auto n = static_cast<Eigen::Index>(t.size());
    Matrix q = Matrix::Zero(n, n - 2);
    Matrix r = Matrix::Zero(n - 2, n - 2);
    for (Eigen::Index j = 1; j + 1 < n; ++j) {
        const double h0 = t[j] - t[j - 1];
        const double h1 = t[j + 1] - t[j];
        q(j - 1, j - 1) = 1.0 / h0;
        q(j, j - 1) = -1.0 / h0 - 1.0 / h1;
        q(j + 1, j - 1) = 1.0 / h1;
        r(j - 1, j - 1) = (h0 + h1) / 3.0;
        if (j + 2 < n)
            r(j - 1, j) = r(j, j - 1) = h1 / 6.0;
    }
    return q * r.inverse() * q.transpose();
}

inline Matrix smoother(const std::vector<double>& t, double lambda)
{
    const auto n = static_cast<Eigen::Index>(t.size());
    return (Matrix::Identity(n, n) + lambda * penalty(t)).inverse();
}

inline Matrix ols_line(const std::vector<double>& t, const Matrix& y)
{
    const auto n = static_cast<Eigen::Index>(t.size());
    Matrix x(n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
        x.row(i) << 1.0, t[static_cast<std::size_t>(i)];
    return x * x.colPivHouseholderQr().solve(y);
}

} // namespace dense

// ---------------------------------------------------------------------------
// Unit-sphere reference built only from closed forms: geodesic x cos s + u sin s,
// transport w(s) = w - <w,u>(u - gamma'(s)), log via arccos.

namespace sphere {

inline Vector vec(const Matrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

struct Arc
{
    Vector x, u;
    double length;
    Vector at(double s) const { return x * std::cos(s) + u * std::sin(s); }
    Vector velocity(double s) const { return -x * std::sin(s) + u * std::cos(s); }
};

inline Arc arc(const Vector& a, const Vector& b)
{
    const double c = std::clamp(a.dot(b), -1.0, 1.0);
    const Vector w = b - c * a;
    const double len = std::acos(c);
    return {a, w.norm() > 0 ? Vector(w / w.norm()) : Vector(Vector::Zero(a.size())), len};
}

inline Vector forward(const Arc& g, const Vector& w, double s)
{
    return w - w.dot(g.u) * (g.u - g.velocity(s));
}

/// Inverse of forward at arc s (transport from gamma(s) back to gamma(0)).
inline Vector backward(const Arc& g, const Vector& w, double s)
{
    // Reversed arc from gamma(s) with direction -gamma'(s).
    const Arc rev{g.at(s), -g.velocity(s), s};
    return forward(rev, w, s);
}

inline Vector log(const Vector& a, const Vector& b)
{
    const auto g = arc(a, b);
    return g.length * g.u;
}

inline Vector exp(const Vector& a, const Vector& v)
{
    const double n = v.norm();
    return n == 0.0 ? a : Vector(a * std::cos(n) + v * (std::sin(n) / n));
}

struct Path
{
    std::vector<Vector> knots;
    std::vector<double> times;
    std::vector<Arc> arcs;

    std::size_t segment(double t) const
    {
        std::size_t j = 0;
        while (j + 1 < arcs.size() && t > times[j + 1])
            ++j;
        return j;
    }
    double arc_at(std::size_t j, double t) const
    {
        return arcs[j].length * (t - times[j]) / (times[j + 1] - times[j]);
    }

    /// Carries a vector at knot j back to knot 0.
    Vector to_start(Vector w, std::size_t j) const
    {
        for (std::size_t i = j; i-- > 0;)
            w = backward(arcs[i], w, arcs[i].length);
        return w;
    }
    Vector from_start(Vector w, std::size_t j) const
    {
        for (std::size_t i = 0; i < j; ++i)
            w = forward(arcs[i], w, arcs[i].length);
        return w;
    }

    std::vector<Vector> unrolled() const
    {
        std::vector<Vector> out{Vector::Zero(knots[0].size())};
        for (std::size_t j = 0; j < arcs.size(); ++j)
            out.push_back(out.back() + to_start(arcs[j].length * arcs[j].u, j));
        return out;
    }
    Vector unrolled_at(double t) const
    {
        const auto im = unrolled();
        const std::size_t j = segment(t);
        const double w = (t - times[j]) / (times[j + 1] - times[j]);
        return im[j] + w * (im[j + 1] - im[j]);
    }

    Vector unwrap(const Vector& x, double t) const
    {
        const std::size_t j = segment(t);
        const double s = arc_at(j, t);
        const Vector at = arcs[j].at(s);
        return unrolled_at(t) + to_start(backward(arcs[j], log(at, x), s), j);
    }

    Vector wrap(const Vector& v, double t) const
    {
        const std::size_t j = segment(t);
        const double s = arc_at(j, t);
        const Vector w = forward(arcs[j], from_start(v - unrolled_at(t), j), s);
        return exp(arcs[j].at(s), w);
    }
};

inline Path from(const PiecewiseGeodesicPath& p)
{
    Path out;
    out.times = p.times;
    for (const auto& k : p.knots)
        out.knots.push_back(vec(k));
    for (std::size_t j = 0; j + 1 < out.knots.size(); ++j)
        out.arcs.push_back(arc(out.knots[j], out.knots[j + 1]));
    return out;
}

} // namespace sphere

} // namespace testing_support
