#pragma once

// Unrolling a piecewise geodesic into the tangent space at its first knot,
// unwrapping points into that space and wrapping tangent vectors back.
//
// Vectors are carried between knots by transport_batch. Every vector that has
// to cross a segment crosses it in the same batch, so the per-step Sylvester
// factorisation and horizontal projector are shared.

#include "shapespline/path.hpp"
#include "shapespline/transport.hpp"

#include <vector>

namespace shapespline {

struct UnrolledPath
{
    Matrix base;
    std::vector<Matrix> knot_images;
    std::vector<double> times;

    /// Piecewise-linear image at time t (t_0 <= t <= t_n).
    Matrix at(double t) const
    {
        if (t < times.front() || t > times.back())
            throw Error(ErrorCode::TimeOutOfRange, "unrolled path evaluated outside its time range");
        if (times.size() == 1)
            return knot_images.front();
        const auto it = std::lower_bound(times.begin(), times.end(), t);
        auto hi = static_cast<std::size_t>(it - times.begin());
        if (hi == 0)
            return knot_images.front();
        const std::size_t lo = hi - 1;
        if (t == times[hi])
            return knot_images[hi];
        const double w = (t - times[lo]) / (times[hi] - times[lo]);
        return knot_images[lo] + w * (knot_images[hi] - knot_images[lo]);
    }
};

namespace detail {

inline GeodesicSegment head_of(const GeodesicSegment& seg, double arc)
{
    GeodesicSegment sub = seg;
    sub.length = arc;
    return sub;
}

/// Carries vectors sitting at knots back to knot 0. `origin[i]` is the knot index of vs[i].
inline void transport_to_start(const PiecewiseGeodesicPath& path, std::vector<Matrix>& vs,
                               const std::vector<std::size_t>& origin, const TransportConfig& cfg)
{
    if (path.segments.empty())
        return;
    std::vector<std::vector<std::size_t>> at_knot(path.size());
    for (std::size_t i = 0; i < vs.size(); ++i)
        at_knot[origin[i]].push_back(i);

    std::vector<std::size_t> pending;
    std::vector<Matrix> batch;
    for (std::size_t knot = path.size() - 1; knot > 0; --knot) {
        pending.insert(pending.end(), at_knot[knot].begin(), at_knot[knot].end());
        if (pending.empty())
            continue;
        batch.clear();
        for (auto i : pending)
            batch.push_back(std::move(vs[i]));
        transport_batch(path.segments[knot - 1], batch, cfg, Direction::backward);
        for (std::size_t b = 0; b < pending.size(); ++b)
            vs[pending[b]] = std::move(batch[b]);
    }
}

} // namespace detail

inline UnrolledPath unroll(const PiecewiseGeodesicPath& path, const TransportConfig& cfg)
{
    UnrolledPath out;
    out.base = path.knots.front();
    out.times = path.times;

    std::vector<Matrix> steps;
    std::vector<std::size_t> origin;
    for (std::size_t j = 0; j < path.segments.size(); ++j) {
        steps.push_back(path.segments[j].length * path.segments[j].direction);
        origin.push_back(j);
    }
    detail::transport_to_start(path, steps, origin, cfg);

    out.knot_images.push_back(Matrix::Zero(out.base.rows(), out.base.cols()));
    for (const auto& s : steps)
        out.knot_images.push_back(out.knot_images.back() + s);
    return out;
}

/// Point on the path at time t.
inline Matrix interior_point(const PiecewiseGeodesicPath& path, double t)
{
    const std::size_t j = path.segment_index(t);
    for (std::size_t i : {j, j + 1})
        if (i < path.size() && path.times[i] == t)
            return path.knots[i];
    const auto& seg = path.segments[j];
    return seg.point(seg.arc_at(t));
}

/// Unwraps each xs[i] observed at ts[i] into the tangent space at the path start.
inline std::vector<Matrix> unwrap_many(const PiecewiseGeodesicPath& path, const UnrolledPath& unrolled,
                                       const std::vector<Matrix>& xs, const std::vector<double>& ts,
                                       const TransportConfig& cfg)
{
    if (xs.size() != ts.size())
        throw Error(ErrorCode::InvalidArgument, "unwrap: points and times differ in length");
    std::vector<Matrix> logs(xs.size());
    std::vector<std::size_t> origin(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double t = ts[i];
        const std::size_t j = path.segment_index(t);
        if (t == path.t_front() || path.segments.empty()) {
            logs[i] = log_map(path.mode, path.knots.front(), xs[i]);
            origin[i] = 0;
            continue;
        }
        const auto& seg = path.segments[j];
        const double arc = seg.arc_at(t);
        logs[i] = log_map(path.mode, seg.point(arc), xs[i]);
        logs[i] = transport_along_segment(detail::head_of(seg, arc), logs[i], cfg, Direction::backward);
        origin[i] = j;
    }
    detail::transport_to_start(path, logs, origin, cfg);
    for (std::size_t i = 0; i < xs.size(); ++i)
        logs[i] += unrolled.at(ts[i]);
    return logs;
}

inline Matrix unwrap(const PiecewiseGeodesicPath& path, const UnrolledPath& unrolled, const Matrix& x, double t,
                     const TransportConfig& cfg)
{
    return unwrap_many(path, unrolled, {x}, {t}, cfg).front();
}

/// Wraps each tangent vector vs[i] (at the path start) back onto the manifold at ts[i].
inline std::vector<Matrix> wrap_many(const PiecewiseGeodesicPath& path, const UnrolledPath& unrolled,
                                     const std::vector<Matrix>& vs, const std::vector<double>& ts,
                                     const TransportConfig& cfg)
{
    if (vs.size() != ts.size())
        throw Error(ErrorCode::InvalidArgument, "wrap: vectors and times differ in length");
    std::vector<Matrix> carried(vs.size());
    std::vector<std::size_t> seg_of(vs.size());
    std::vector<std::vector<std::size_t>> leaving(std::max<std::size_t>(path.segments.size(), 1));
    for (std::size_t i = 0; i < vs.size(); ++i) {
        seg_of[i] = path.segment_index(ts[i]);
        carried[i] = vs[i] - unrolled.at(ts[i]);
        leaving[seg_of[i]].push_back(i);
    }

    std::vector<Matrix> out(vs.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < vs.size(); ++i)
        pending.push_back(i);
    std::vector<Matrix> batch;

    for (std::size_t j = 0; j < leaving.size(); ++j) {
        for (auto i : leaving[j]) {
            const double t = ts[i];
            Matrix foot;
            if (path.segments.empty() || t == path.t_front()) {
                foot = path.knots.front();
            } else {
                const auto& seg = path.segments[j];
                const double arc = seg.arc_at(t);
                carried[i] = transport_along_segment(detail::head_of(seg, arc), carried[i], cfg, Direction::forward);
                foot = seg.point(arc);
            }
            out[i] = exp_point(path.mode, foot, carried[i]);
        }
        std::erase_if(pending, [&](std::size_t i) { return seg_of[i] == j; });
        if (pending.empty() || j >= path.segments.size())
            continue;
        batch.clear();
        for (auto i : pending)
            batch.push_back(std::move(carried[i]));
        transport_batch(path.segments[j], batch, cfg, Direction::forward);
        for (std::size_t b = 0; b < pending.size(); ++b)
            carried[pending[b]] = std::move(batch[b]);
    }
    return out;
}

inline Matrix wrap(const PiecewiseGeodesicPath& path, const UnrolledPath& unrolled, const Matrix& v, double t,
                   const TransportConfig& cfg)
{
    return wrap_many(path, unrolled, {v}, {t}, cfg).front();
}

} // namespace shapespline
