#pragma once

#include "shapespline/geometry.hpp"

#include <algorithm>
#include <vector>

namespace shapespline {

/// Knots at strictly increasing times joined by horizontal geodesic segments.
/// Each knot is the Procrustes fit of the supplied point onto its predecessor.
struct PiecewiseGeodesicPath
{
    Mode mode = Mode::shape;
    std::vector<double> times;
    std::vector<Matrix> knots;
    std::vector<GeodesicSegment> segments;

    std::size_t size() const { return knots.size(); }
    double t_front() const { return times.front(); }
    double t_back() const { return times.back(); }

    bool contains(double t) const { return !times.empty() && t >= times.front() && t <= times.back(); }

    /// Index j of the segment with t_j < t <= t_{j+1}; t = t_0 maps to segment 0.
    std::size_t segment_index(double t) const
    {
        if (!contains(t))
            throw Error(ErrorCode::TimeOutOfRange, "time " + std::to_string(t) + " outside [" +
                                                       std::to_string(t_front()) + ", " +
                                                       std::to_string(t_back()) + "]");
        if (segments.empty())
            return 0;
        const auto it = std::lower_bound(times.begin(), times.end(), t);
        const auto idx = static_cast<std::size_t>(it - times.begin());
        return idx == 0 ? 0 : std::min(idx - 1, segments.size() - 1);
    }

    double total_length() const
    {
        double sum = 0.0;
        for (const auto& s : segments)
            sum += s.length;
        return sum;
    }
};

inline void check_increasing(const std::vector<double>& times)
{
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw Error(ErrorCode::DuplicateTimes, "times must be strictly increasing (index " +
                                                       std::to_string(i) + ")");
}

/// Chains Procrustes fits through `points` and joins consecutive knots by geodesics.
inline PiecewiseGeodesicPath build_path(Mode mode, const std::vector<Matrix>& points, const std::vector<double>& times)
{
    if (points.empty() || points.size() != times.size())
        throw Error(ErrorCode::InvalidArgument, "build_path: need matching non-empty points and times");
    check_increasing(times);

    PiecewiseGeodesicPath path;
    path.mode = mode;
    path.times = times;
    path.knots.reserve(points.size());
    path.knots.push_back(points.front());
    for (std::size_t i = 1; i < points.size(); ++i) {
        Matrix next = procrustes_fit(path.knots.back(), points[i]).fitted;
        path.segments.push_back(make_segment(mode, path.knots.back(), next, times[i - 1], times[i]));
        path.knots.push_back(std::move(next));
    }
    return path;
}

} // namespace shapespline
