#pragma once

// Simulated piecewise-geodesic shape trajectories with landmark noise, and the
// study pipeline that fits them.

#include "shapespline/fitter.hpp"

#include <chrono>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace shapespline {

inline constexpr const char* kRngName = "mt19937_64/seed_seq(seed,replicate)";

struct NoiseSpec
{
    enum class Kind { gaussian, student_t };
    Kind kind = Kind::gaussian;
    double sigma = 0.0;
    double df = 3.0; ///< student_t only

    static NoiseSpec gaussian(double sigma) { return {Kind::gaussian, sigma, 0.0}; }
    static NoiseSpec student_t(double df, double sigma) { return {Kind::student_t, sigma, df}; }
};

struct SimulationSpec
{
    int k = 8;
    int m = 3;
    std::vector<double> segment_distances{0.47, 0.75, 0.54};
    int points_per_segment = 4; ///< interior shapes between consecutive vertices
    NoiseSpec noise;
    std::uint64_t seed = 1;
    double t_start = 0.0;
    double t_end = 1.0;

    std::size_t size() const { return segment_distances.size() * (points_per_segment + 1) + 1; }
    std::size_t vertex_index(std::size_t v) const { return v * (points_per_segment + 1); }
};

inline void validate(const SimulationSpec& spec)
{
    if (spec.m < 1 || spec.k <= spec.m)
        throw Error(ErrorCode::InvalidArgument, "simulation needs k > m >= 1");
    if (spec.segment_distances.empty())
        throw Error(ErrorCode::InvalidArgument, "simulation needs at least one segment");
    for (double d : spec.segment_distances)
        if (!(d > 0.0 && d < kHalfPi))
            throw Error(ErrorCode::InvalidArgument, "segment distances must lie in (0, pi/2)");
    if (spec.points_per_segment < 0)
        throw Error(ErrorCode::InvalidArgument, "points_per_segment must be >= 0");
    if (!(spec.t_end > spec.t_start))
        throw Error(ErrorCode::InvalidArgument, "simulation time range is empty");
    if (!(spec.noise.sigma >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
    if (spec.noise.kind == NoiseSpec::Kind::student_t && !(spec.noise.df > 0.0))
        throw Error(ErrorCode::InvalidArgument, "student-t degrees of freedom must be positive");
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t replicate)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)};
    return std::mt19937_64(seq);
}

struct Truth
{
    std::vector<Matrix> shapes; ///< pre-shapes, Procrustes-chained
    std::vector<double> times;
    std::vector<std::size_t> vertices;
    int attempts = 0;

    std::vector<Configuration> configurations() const
    {
        std::vector<Configuration> out;
        for (std::size_t i = 0; i < shapes.size(); ++i)
            out.push_back({landmarks_from(shapes[i]), times[i]});
        return out;
    }
};

namespace detail {

inline Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols)
{
    std::normal_distribution<double> normal;
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            out(i, j) = normal(rng);
    return out;
}

/// Arc length s along the horizontal direction u from x with shape distance
/// `target`, by bisection on the measured distance. Fails if the measured
/// distance stops growing before reaching the target.
inline bool arc_for_distance(const Matrix& x, const Matrix& u, double target, double& arc)
{
    auto measured = [&](double s) { return shape_distance(x, std::cos(s) * x + std::sin(s) * u); };
    double lo = 0.0;
    double hi = kHalfPi - 1e-6;
    if (measured(hi) < target)
        return false;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (measured(mid) < target ? lo : hi) = mid;
    }
    arc = 0.5 * (lo + hi);
    return std::abs(measured(arc) - target) < 1e-9;
}

} // namespace detail

/// Piecewise-geodesic truth: random vertices at the requested shape distances,
/// with equally spaced shapes on each joining geodesic. Every distance is
/// re-measured; a vertex that misses its target is redrawn.
inline Truth generate_truth(const SimulationSpec& spec)
{
    validate(spec);
    auto rng = make_rng(spec.seed, 0);
    Truth truth;
    for (int attempt = 1; attempt <= 100; ++attempt) {
        truth.attempts = attempt;
        std::vector<Matrix> vertices{PreShape::normalized(detail::gaussian_matrix(rng, spec.m, spec.k - 1)).matrix()};
        bool ok = true;
        for (double target : spec.segment_distances) {
            const Matrix& x = vertices.back();
            Matrix u = project(Mode::shape, x, detail::gaussian_matrix(rng, spec.m, spec.k - 1));
            u /= u.norm();
            double arc = 0.0;
            if (!detail::arc_for_distance(x, u, target, arc)) {
                ok = false;
                break;
            }
            vertices.push_back(std::cos(arc) * x + std::sin(arc) * u);
        }
        if (!ok)
            continue;

        truth.shapes.clear();
        truth.vertices.clear();
        truth.shapes.push_back(vertices.front());
        for (std::size_t v = 0; v + 1 < vertices.size(); ++v) {
            truth.vertices.push_back(truth.shapes.size() - 1);
            const Matrix start = truth.shapes.back();
            const Matrix end = procrustes_fit(start, vertices[v + 1]).fitted;
            const auto seg = make_segment(Mode::shape, start, end, 0.0, 1.0);
            if (std::abs(seg.length - spec.segment_distances[v]) > 1e-3) {
                ok = false;
                break;
            }
            const int pieces = spec.points_per_segment + 1;
            for (int j = 1; j < pieces; ++j)
                truth.shapes.push_back(seg.point(seg.length * j / pieces));
            truth.shapes.push_back(end);
        }
        if (!ok)
            continue;
        truth.vertices.push_back(truth.shapes.size() - 1);

        const auto n = truth.shapes.size();
        truth.times.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            truth.times[i] = spec.t_start + (spec.t_end - spec.t_start) * static_cast<double>(i) / (n - 1);
        return truth;
    }
    throw Error(ErrorCode::NonConvergence, "could not construct vertices at the requested distances");
}

/// Adds i.i.d. noise to every landmark coordinate of the unit-size truth
/// configurations. Student-t noise is scaled to standard deviation sigma when df > 2.
inline std::vector<Configuration> perturb(const Truth& truth, const NoiseSpec& noise, std::uint64_t seed,
                                          std::uint64_t replicate)
{
    auto rng = make_rng(seed, replicate + 1);
    std::normal_distribution<double> normal;
    std::student_t_distribution<double> student(noise.kind == NoiseSpec::Kind::student_t ? noise.df : 1.0);
    double scale = noise.sigma;
    if (noise.kind == NoiseSpec::Kind::student_t && noise.df > 2.0)
        scale /= std::sqrt(noise.df / (noise.df - 2.0));

    auto out = truth.configurations();
    if (noise.sigma == 0.0)
        return out;
    for (auto& c : out)
        for (Eigen::Index j = 0; j < c.landmarks.cols(); ++j)
            for (Eigen::Index i = 0; i < c.landmarks.rows(); ++i)
                c.landmarks(i, j) +=
                    scale * (noise.kind == NoiseSpec::Kind::gaussian ? normal(rng) : student(rng));
    return out;
}

/// Relative residual of the best piecewise-linear fit with `breakpoints`
/// breakpoints through the rows of `points` (consecutive runs share their end
/// row). Lines are total-least-squares; the residual is normalised by the
/// spread of the points about their mean.
inline double piecewise_linear_residual(const Matrix& points, int breakpoints, std::vector<std::size_t>* best_at = nullptr)
{
    const auto n = static_cast<std::size_t>(points.rows());
    if (breakpoints < 0 || n < static_cast<std::size_t>(breakpoints) + 2)
        throw Error(ErrorCode::InvalidArgument, "too few points for the requested breakpoints");

    auto run_cost = [&](std::size_t a, std::size_t b) {
        if (b - a < 2)
            return 0.0;
        const Matrix block = points.middleRows(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b - a + 1));
        const Matrix centred = block.rowwise() - block.colwise().mean();
        Eigen::JacobiSVD<Matrix> svd(centred);
        const Vector& sv = svd.singularValues();
        return sv.squaredNorm() - sv(0) * sv(0);
    };

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> cut(static_cast<std::size_t>(breakpoints));
    std::vector<std::size_t> chosen;
    auto search = [&](auto&& self, std::size_t level, std::size_t from, double cost) -> void {
        if (cost >= best)
            return;
        if (level == cut.size()) {
            const double total = cost + run_cost(from, n - 1);
            if (total < best) {
                best = total;
                chosen = cut;
            }
            return;
        }
        for (std::size_t b = from + 1; b + (cut.size() - level) < n; ++b) {
            cut[level] = b;
            self(self, level + 1, b, cost + run_cost(from, b));
        }
    };
    search(search, 0, 0, 0.0);
    if (best_at)
        *best_at = chosen;
    const double spread = (points.rowwise() - points.colwise().mean()).squaredNorm();
    return spread > 0.0 ? std::sqrt(best / spread) : 0.0;
}

struct SimulationReport
{
    SimulationSpec spec;
    std::uint64_t replicate = 0;
    Truth truth;
    std::vector<Configuration> data;
    ShapeSplineFit fit;

    PCAResult unrolled_data_pca;   ///< PCA of the unwrapped data
    Matrix unrolled_fit_scores;    ///< fitted spline on the grid, in the data PC basis
    Vector unrolled_fit_proportions; ///< variance fractions of the fitted spline's own PCA

    double data_to_truth = 0.0; ///< mean shape distance, noisy data to truth
    double fit_to_truth = 0.0;  ///< mean shape distance, fitted shapes to truth
    double runtime_seconds = 0.0;
};

/// Fits one replicate. With `lambda_grid` non-empty the smoothing parameter is
/// chosen by cross-validation, otherwise cfg.model is used as given.
inline SimulationReport run_simulation_study(const SimulationSpec& spec, const FitConfig& cfg,
                                             std::uint64_t replicate = 0,
                                             const std::vector<double>& lambda_grid = {}, unsigned threads = 1)
{
    const auto started = std::chrono::steady_clock::now();
    SimulationReport r;
    r.spec = spec;
    r.replicate = replicate;
    r.truth = generate_truth(spec);
    r.data = perturb(r.truth, spec.noise, spec.seed, replicate);

    FitConfig fit_cfg = cfg;
    std::vector<CvEntry> table;
    if (!lambda_grid.empty()) {
        auto cv = cross_validate(r.data, cfg, lambda_grid, threads);
        fit_cfg.model.kind = SplineKind::cubic_smoothing;
        fit_cfg.model.lambda = cv.best_lambda;
        table = std::move(cv.table);
    }
    r.fit = fit_shape_spline(r.data, fit_cfg);
    r.fit.cv_table = std::move(table);

    r.unrolled_data_pca = tangent_pca(r.fit.unwrapped_data, 2);
    const Matrix grid_values = r.fit.spline.evaluate(r.fit.grid_times);
    r.unrolled_fit_scores = (grid_values.rowwise() - r.unrolled_data_pca.mean) * r.unrolled_data_pca.loadings;
    r.unrolled_fit_proportions = tangent_pca(grid_values, 2).proportions;

    const auto data_points = to_points(Mode::shape, r.data);
    for (std::size_t i = 0; i < r.truth.shapes.size(); ++i) {
        r.data_to_truth += shape_distance(r.truth.shapes[i], data_points[i]);
        r.fit_to_truth += shape_distance(r.truth.shapes[i], r.fit.fitted_at(i));
    }
    r.data_to_truth /= static_cast<double>(r.truth.shapes.size());
    r.fit_to_truth /= static_cast<double>(r.truth.shapes.size());
    r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return r;
}

/// Independent replicates; replicate r draws its noise from (spec.seed, r).
inline std::vector<SimulationReport> run_replicates(const SimulationSpec& spec, const FitConfig& cfg,
                                                    std::size_t count, unsigned threads = 0)
{
    std::vector<SimulationReport> out(count);
    parallel_for(count, [&](std::size_t r) { out[r] = run_simulation_study(spec, cfg, r); }, threads);
    return out;
}

} // namespace shapespline
