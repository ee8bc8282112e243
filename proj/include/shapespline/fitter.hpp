#pragma once

// Smoothing splines on shape space by iterated unwrapping, Euclidean fitting and
// wrapping along a piecewise geodesic base path.

#include "shapespline/euclid_spline.hpp"
#include "shapespline/parallel.hpp"
#include "shapespline/rolling.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace shapespline {

inline const std::vector<double>& default_lambda_grid()
{
    static const std::vector<double> grid{1e-9, 1e-7, 1e-5, 1e-3, 1e-1};
    return grid;
}

struct FitConfig
{
    int grid_points_between = 2;
    double epsilon = 1e-5;
    int max_iterations = 20;
    SplineModel model;
    TransportConfig transport;
    Mode mode = Mode::shape;

    TransportConfig transport_config() const
    {
        TransportConfig t = transport;
        t.mode = mode;
        return t;
    }
};

inline void validate(const FitConfig& cfg)
{
    if (cfg.grid_points_between < 0)
        throw Error(ErrorCode::InvalidArgument, "grid points between observations must be >= 0");
    if (!(cfg.epsilon > 0.0))
        throw Error(ErrorCode::InvalidArgument, "convergence tolerance must be positive");
    if (cfg.max_iterations < 1)
        throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
    validate(cfg.transport);
}

struct CvEntry
{
    double lambda = 0.0;
    double cv = std::numeric_limits<double>::quiet_NaN();
    bool valid = true;
    int unconverged_folds = 0;
    std::string reason;
};

struct ShapeSplineFit
{
    Mode mode = Mode::shape;
    SplineModel model;
    std::vector<double> data_times;
    std::vector<double> grid_times;
    std::vector<std::size_t> data_grid_index; ///< position of each data time in grid_times

    PiecewiseGeodesicPath base_path;  ///< piecewise geodesic through the final fitted grid shapes
    std::vector<Matrix> fitted_knots; ///< base_path knots

    /// The path and unrolling the final spline was fitted against; wrapping the
    /// spline along it reproduces fitted_knots.
    PiecewiseGeodesicPath wrap_path;
    UnrolledPath wrap_unrolled;
    EuclideanSpline spline;

    std::vector<Matrix> aligned_data;
    std::vector<Matrix> unwrapped_data;

    int iterations = 0;
    std::vector<double> displacement_history;
    bool converged = false;
    double lambda_used = 0.0;
    std::vector<CvEntry> cv_table;

    Matrix fitted_at(std::size_t data_index) const { return fitted_knots[data_grid_index[data_index]]; }
};

namespace detail {

inline Matrix to_point(Mode mode, const Configuration& c)
{
    return mode == Mode::shape ? to_preshape(c).matrix() : to_presize_shape(c).matrix();
}

inline RowVector flatten(const Matrix& x)
{
    return Eigen::Map<const RowVector>(x.data(), x.size());
}

inline Matrix unflatten(const RowVector& v, Eigen::Index rows, Eigen::Index cols)
{
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline std::vector<double> build_grid(const std::vector<double>& times, int between, std::vector<std::size_t>& index)
{
    std::vector<double> grid;
    index.clear();
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        index.push_back(grid.size());
        for (int j = 0; j <= between; ++j)
            grid.push_back(times[i] + (times[i + 1] - times[i]) * j / (between + 1));
    }
    index.push_back(grid.size());
    grid.push_back(times.back());
    return grid;
}

} // namespace detail

inline std::vector<Matrix> to_points(Mode mode, const std::vector<Configuration>& data)
{
    std::vector<Matrix> out;
    out.reserve(data.size());
    for (const auto& c : data)
        out.push_back(detail::to_point(mode, c));
    return out;
}

/// Fits the shape spline to configurations observed at their `time` stamps.
/// Non-convergence within max_iterations returns the iterate with the smallest
/// displacement, flagged converged = false.
inline ShapeSplineFit fit_shape_spline(const std::vector<Configuration>& data, const FitConfig& cfg)
{
    validate(cfg);
    if (data.size() < 2)
        throw Error(ErrorCode::TooFewPoints, "shape spline needs at least 2 configurations");
    for (const auto& c : data) {
        validate(c);
        if (c.landmarks.rows() != data.front().landmarks.rows() || c.landmarks.cols() != data.front().landmarks.cols())
            throw Error(ErrorCode::InvalidArgument, "configurations differ in landmark count or dimension");
    }
    const Mode mode = cfg.mode;
    const TransportConfig tcfg = cfg.transport_config();

    ShapeSplineFit fit;
    fit.mode = mode;
    fit.model = cfg.model;
    fit.lambda_used = cfg.model.kind == SplineKind::cubic_smoothing ? cfg.model.lambda
                                                                     : std::numeric_limits<double>::infinity();
    for (const auto& c : data)
        fit.data_times.push_back(c.time);

    // Procrustes-chain the data.
    const auto initial = build_path(mode, to_points(mode, data), fit.data_times);
    std::vector<Matrix> aligned = initial.knots;

    // Dense grid, and the base path through the interpolated points.
    fit.grid_times = detail::build_grid(fit.data_times, cfg.grid_points_between, fit.data_grid_index);
    std::vector<Matrix> grid_points;
    for (double t : fit.grid_times)
        grid_points.push_back(interior_point(initial, t));
    PiecewiseGeodesicPath current = build_path(mode, grid_points, fit.grid_times);

    const Eigen::Index rows = aligned.front().rows();
    const Eigen::Index cols = aligned.front().cols();
    double best = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        // Unwrap the data against the current base path.
        UnrolledPath unrolled = unroll(current, tcfg);
        std::vector<Matrix> unwrapped = unwrap_many(current, unrolled, aligned, fit.data_times, tcfg);

        // Euclidean spline in the base tangent space, evaluated on the grid.
        ScatterData scatter;
        scatter.times = fit.data_times;
        scatter.values.resize(static_cast<Eigen::Index>(unwrapped.size()), rows * cols);
        for (std::size_t i = 0; i < unwrapped.size(); ++i)
            scatter.values.row(static_cast<Eigen::Index>(i)) = detail::flatten(unwrapped[i]);
        EuclideanSpline spline = cfg.model.fit(scatter);
        const Matrix grid_values = spline.evaluate(fit.grid_times);
        std::vector<Matrix> tangent_grid;
        for (Eigen::Index r = 0; r < grid_values.rows(); ++r)
            tangent_grid.push_back(detail::unflatten(grid_values.row(r), rows, cols));

        // Wrap back and re-chain into the next base path.
        const auto wrapped = wrap_many(current, unrolled, tangent_grid, fit.grid_times, tcfg);
        PiecewiseGeodesicPath next = build_path(mode, wrapped, fit.grid_times);

        // Converged when no grid point moves more than epsilon.
        double displacement = 0.0;
        for (std::size_t g = 0; g < next.size(); ++g)
            displacement = std::max(displacement, distance(mode, next.knots[g], current.knots[g]));
        fit.displacement_history.push_back(displacement);
        fit.iterations = iter;

        const bool done = displacement < cfg.epsilon;
        if (done || displacement < best) {
            best = displacement;
            fit.base_path = next;
            fit.wrap_path = current;
            fit.wrap_unrolled = std::move(unrolled);
            fit.spline = std::move(spline);
            fit.aligned_data = aligned;
            fit.unwrapped_data = std::move(unwrapped);
        }
        if (done) {
            fit.converged = true;
            break;
        }
        for (std::size_t i = 0; i < aligned.size(); ++i)
            aligned[i] = procrustes_fit(next.knots[fit.data_grid_index[i]], aligned[i]).fitted;
        current = std::move(next);
    }
    fit.fitted_knots = fit.base_path.knots;
    return fit;
}

/// Shape-space prediction at time t: the final spline wrapped along the path it was fitted against.
inline Matrix predict(const ShapeSplineFit& fit, double t, const TransportConfig& cfg)
{
    if (!fit.wrap_path.contains(t))
        throw Error(ErrorCode::TimeOutOfRange, "prediction time outside the fitted range");
    const Matrix& base = fit.wrap_path.knots.front();
    const Matrix v = detail::unflatten(fit.spline.evaluate(t), base.rows(), base.cols());
    TransportConfig tcfg = cfg;
    tcfg.mode = fit.mode;
    return wrap(fit.wrap_path, fit.wrap_unrolled, v, t, tcfg);
}

struct CvResult
{
    double best_lambda = std::numeric_limits<double>::quiet_NaN();
    std::vector<CvEntry> table;
};

/// Leave-one-out cross-validation of the smoothing parameter. Each interior
/// observation is held out in turn, the shape spline is refitted from scratch,
/// and the held-out shape is unwrapped against the refit's base path. The
/// squared distance to the refit's unrolling at that time is averaged.
/// End observations are not held out: the refit does not cover their times.
inline CvResult cross_validate(const std::vector<Configuration>& data, const FitConfig& cfg,
                               const std::vector<double>& lambda_grid, unsigned threads = 0)
{
    if (lambda_grid.empty())
        throw Error(ErrorCode::InvalidArgument, "lambda grid is empty");
    if (data.size() < 4)
        throw Error(ErrorCode::TooFewPoints, "cross-validation needs at least 4 configurations");

    const std::size_t folds = data.size() - 2;
    const std::size_t jobs = lambda_grid.size() * folds;
    std::vector<double> residual(jobs, 0.0);
    std::vector<int> unconverged(jobs, 0);
    std::vector<std::string> failure(jobs);
    const TransportConfig tcfg = cfg.transport_config();

    parallel_for(
        jobs,
        [&](std::size_t job) {
            const std::size_t li = job / folds;
            const std::size_t held = job % folds + 1;
            try {
                FitConfig fold_cfg = cfg;
                fold_cfg.model.kind = SplineKind::cubic_smoothing;
                fold_cfg.model.lambda = lambda_grid[li];
                std::vector<Configuration> train;
                for (std::size_t i = 0; i < data.size(); ++i)
                    if (i != held)
                        train.push_back(data[i]);
                const ShapeSplineFit fold = fit_shape_spline(train, fold_cfg);
                const UnrolledPath unrolled = unroll(fold.base_path, tcfg);
                const double t = data[held].time;
                const Matrix v = unwrap(fold.base_path, unrolled, detail::to_point(cfg.mode, data[held]), t, tcfg);
                residual[job] = (v - unrolled.at(t)).squaredNorm();
                unconverged[job] = fold.converged ? 0 : 1;
            } catch (const Error& e) {
                failure[job] = "fold " + std::to_string(held) + ": " + e.what();
            }
        },
        threads);

    CvResult out;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
        CvEntry entry;
        entry.lambda = lambda_grid[li];
        double sum = 0.0;
        for (std::size_t f = 0; f < folds; ++f) {
            const std::size_t job = li * folds + f;
            if (!failure[job].empty()) {
                entry.valid = false;
                if (entry.reason.empty())
                    entry.reason = failure[job];
            }
            sum += residual[job];
            entry.unconverged_folds += unconverged[job];
        }
        if (entry.valid) {
            entry.cv = sum / static_cast<double>(folds);
            if (entry.cv < best) {
                best = entry.cv;
                out.best_lambda = entry.lambda;
            }
        }
        out.table.push_back(std::move(entry));
    }
    if (!(best < std::numeric_limits<double>::infinity()))
        throw Error(ErrorCode::NonConvergence, "every lambda in the grid failed: " + out.table.front().reason);
    return out;
}

// ---------------------------------------------------------------------------
// Tangent-space PCA

struct PCAResult
{
    Matrix scores;     ///< n x q
    Vector proportions; ///< variance fraction of each of the q components
    Matrix loadings;   ///< d x q, unit columns
    RowVector mean;
    std::optional<Matrix> mean_shape;
};

/// PCA of row vectors. Each loading's first nonzero entry is made positive.
inline PCAResult tangent_pca(const Matrix& rows, int q)
{
    if (rows.rows() < 2)
        throw Error(ErrorCode::TooFewPoints, "PCA needs at least 2 vectors");
    PCAResult out;
    out.mean = rows.colwise().mean();
    const Matrix centred = rows.rowwise() - out.mean;
    Eigen::JacobiSVD<Matrix> svd(centred, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double total = sv.squaredNorm();
    const Eigen::Index keep = std::min<Eigen::Index>(q, sv.size());

    out.loadings = svd.matrixV().leftCols(keep);
    for (Eigen::Index c = 0; c < keep; ++c) {
        for (Eigen::Index r = 0; r < out.loadings.rows(); ++r) {
            if (std::abs(out.loadings(r, c)) > 1e-12) {
                if (out.loadings(r, c) < 0.0)
                    out.loadings.col(c) *= -1.0;
                break;
            }
        }
    }
    out.scores = centred * out.loadings;
    out.proportions = Vector::Zero(keep);
    if (total > 0.0)
        for (Eigen::Index c = 0; c < keep; ++c)
            out.proportions(c) = sv(c) * sv(c) / total;
    return out;
}

inline PCAResult tangent_pca(const std::vector<Matrix>& vectors, int q)
{
    if (vectors.empty())
        throw Error(ErrorCode::TooFewPoints, "PCA needs at least 2 vectors");
    Matrix rows(static_cast<Eigen::Index>(vectors.size()), vectors.front().size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        rows.row(static_cast<Eigen::Index>(i)) = detail::flatten(vectors[i]);
    return tangent_pca(rows, q);
}

/// PCA of Procrustes tangent coordinates at the full Procrustes mean.
inline PCAResult procrustes_tangent_pca(Mode mode, const std::vector<Matrix>& points, int q)
{
    if (points.size() < 2)
        throw Error(ErrorCode::TooFewPoints, "PCA needs at least 2 shapes");
    Matrix mean = points.front();
    std::vector<Matrix> aligned(points.size());
    for (int iter = 0; iter < 100; ++iter) {
        Matrix sum = Matrix::Zero(mean.rows(), mean.cols());
        for (std::size_t i = 0; i < points.size(); ++i) {
            aligned[i] = procrustes_fit(mean, points[i]).fitted;
            sum += aligned[i];
        }
        Matrix next = sum / static_cast<double>(points.size());
        if (mode == Mode::shape)
            next /= next.norm();
        next = procrustes_fit(mean, next).fitted;
        const double change = (next - mean).norm();
        mean = std::move(next);
        if (change < 1e-12)
            break;
    }
    std::vector<Matrix> tangent;
    for (const auto& p : points) {
        const Matrix a = procrustes_fit(mean, p).fitted;
        tangent.push_back(mode == Mode::shape ? project_tangent(mean, a) : Matrix(a - mean));
    }
    auto out = tangent_pca(tangent, q);
    out.mean_shape = mean;
    return out;
}

// ---------------------------------------------------------------------------
// Model comparison

/// Degrees of freedom per tangent coordinate of the fitted Euclidean model.
inline double model_df(const EuclideanSpline& s)
{
    switch (s.kind) {
    case SplineKind::cubic_smoothing: return s.edf;
    case SplineKind::linear_knotted: return static_cast<double>(s.knots.size());
    case SplineKind::least_squares_line: return 2.0;
    }
    return 0.0;
}

/// Coefficients per dimension plus one variance per dimension.
inline double parameter_count(double df, int dimension)
{
    return (df + 1.0) * dimension;
}

struct InformationCriteria
{
    std::string model;
    double sum_log_variance = 0.0;
    double parameters = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    int dimension = 0;
    bool zero_residual = false;
};

/// IC = n sum_i log sigma_i^2 + K p, with independent Gaussian residuals per
/// horizontal tangent coordinate at the fitted base point; K = 2 (AIC) or log n (BIC).
inline InformationCriteria information_criteria(const std::string& name, const ShapeSplineFit& fit)
{
    InformationCriteria ic;
    ic.model = name;
    const Matrix& base = fit.wrap_path.knots.front();
    const auto basis = horizontal_basis(fit.mode, base);
    ic.dimension = static_cast<int>(basis.size());
    const auto n = static_cast<double>(fit.data_times.size());

    Vector variance = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < fit.data_times.size(); ++i) {
        const Matrix fitted = detail::unflatten(fit.spline.evaluate(fit.data_times[i]), base.rows(), base.cols());
        variance += coordinates(basis, fit.unwrapped_data[i] - fitted).cwiseAbs2();
    }
    variance /= n;

    ic.parameters = parameter_count(model_df(fit.spline), ic.dimension);
    if ((variance.array() <= 0.0).any()) {
        ic.zero_residual = true;
        ic.sum_log_variance = -std::numeric_limits<double>::infinity();
    } else {
        ic.sum_log_variance = variance.array().log().sum();
    }
    ic.aic = n * ic.sum_log_variance + 2.0 * ic.parameters;
    ic.bic = n * ic.sum_log_variance + std::log(n) * ic.parameters;
    return ic;
}

inline std::vector<InformationCriteria>
information_criteria(const std::vector<std::pair<std::string, ShapeSplineFit>>& fits)
{
    std::vector<InformationCriteria> out;
    for (const auto& [name, fit] : fits) {
        if (!fits.empty() && fit.data_times != fits.front().second.data_times)
            throw Error(ErrorCode::InvalidArgument, "fits compared on different data");
        out.push_back(information_criteria(name, fit));
    }
    return out;
}

} // namespace shapespline
