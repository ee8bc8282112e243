// shapespline: fit, cross-validate, predict, simulate, pca and compare on
// landmark trajectories. Run with --help for flags.

#include "shapespline/shapespline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shapespline;

namespace {

struct Options
{
    std::string input;
    std::string output = ".";
    std::string mode = "shape";
    int grid_points = 2;
    double epsilon = 1e-5;
    int max_iter = 20;
    std::string lambda = "cv";
    std::string lambda_grid = "1e-9,1e-7,1e-5,1e-3,1e-1";
    std::string model = "cubic";
    std::string models = "geodesic,linear:3,linear:4,cubic";
    int steps_per_unit = 200;
    std::string integrator = "rk4";
    std::uint64_t seed = 1;
    bool with_size = false;
    unsigned threads = 0;

    // predict
    std::string at;
    // pca
    int components = 2;
    // simulate
    int k = 8;
    int m = 3;
    double sigma = 0.05;
    std::string noise = "gaussian";
    double noise_df = 3.0;
    int points_per_segment = 4;
    std::string distances = "0.47,0.75,0.54";
};

std::vector<double> parse_list(const std::string& text, const char* what)
{
    std::vector<double> out;
    for (auto field : detail::split(text, ',')) {
        field = detail::trim(field);
        if (field.empty())
            continue;
        try {
            out.push_back(detail::parse_number(field, 1, out.size() + 1));
        } catch (const Error&) {
            throw Error(ErrorCode::InvalidArgument, std::string("bad value in ") + what + ": '" +
                                                        std::string(field) + "'");
        }
    }
    if (out.empty())
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " is empty");
    return out;
}

/// geodesic | linear:K | cubic
SplineModel parse_model(const std::string& text, double lambda)
{
    SplineModel model;
    if (text == "geodesic") {
        model.kind = SplineKind::least_squares_line;
    } else if (text == "cubic") {
        model.kind = SplineKind::cubic_smoothing;
        model.lambda = lambda;
    } else if (text.rfind("linear:", 0) == 0) {
        model.kind = SplineKind::linear_knotted;
        try {
            model.num_knots = std::stoi(text.substr(7));
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::InvalidArgument, "bad knot count in model '" + text + "'");
        }
        if (model.num_knots < 2)
            throw Error(ErrorCode::InvalidArgument, "linear spline needs at least 2 knots");
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown model '" + text + "' (geodesic, linear:K, cubic)");
    }
    return model;
}

std::string model_name(const SplineModel& m)
{
    switch (m.kind) {
    case SplineKind::least_squares_line: return "geodesic";
    case SplineKind::linear_knotted: return "linear:" + std::to_string(m.num_knots);
    case SplineKind::cubic_smoothing: return "cubic";
    }
    return "";
}

FitConfig fit_config(const Options& o)
{
    FitConfig cfg;
    cfg.mode = parse_mode(o.mode);
    cfg.grid_points_between = o.grid_points;
    cfg.epsilon = o.epsilon;
    cfg.max_iterations = o.max_iter;
    cfg.transport.steps_per_unit = o.steps_per_unit;
    if (o.integrator == "euler")
        cfg.transport.integrator = Integrator::euler;
    else if (o.integrator != "rk4")
        throw Error(ErrorCode::InvalidArgument, "unknown integrator '" + o.integrator + "' (rk4, euler)");
    cfg.model = parse_model(o.model, o.lambda == "cv" ? 1e-3 : 0.0);
    if (o.lambda != "cv" && cfg.model.kind == SplineKind::cubic_smoothing)
        cfg.model.lambda = parse_list(o.lambda, "--lambda").front();
    validate(cfg);
    return cfg;
}

/// Run record; `identity` determines the outputs and is what gets hashed.
class Manifest
{
public:
    Manifest(std::string command, const Options& o) : started_(std::chrono::steady_clock::now())
    {
        identity_["tool"] = "shapespline";
        identity_["version"] = SHAPESPLINE_VERSION;
        identity_["command"] = std::move(command);
        identity_["rng"] = kRngName;
        identity_["config"] = {{"mode", o.mode},
                               {"grid_points", o.grid_points},
                               {"epsilon", o.epsilon},
                               {"max_iter", o.max_iter},
                               {"lambda", o.lambda},
                               {"lambda_grid", o.lambda_grid},
                               {"model", o.model},
                               {"steps_per_unit", o.steps_per_unit},
                               {"integrator", o.integrator},
                               {"seed", o.seed},
                               {"with_size", o.with_size}};
    }

    json& identity() { return identity_; }
    json& results() { return results_; }

    void set_input(const std::string& path)
    {
        identity_["input"] = {{"path", path}, {"fnv1a", hex64(fnv1a(read_file(path)))}};
    }

    std::string hash() const { return hex64(fnv1a(identity_.dump())); }

    void output(const fs::path& dir, const std::string& name, const std::string& contents)
    {
        atomic_write(dir / name, "# manifest=" + hash() + "\n" + contents);
        outputs_.push_back(name);
    }

    void write(const fs::path& dir) const
    {
        json j = identity_;
        j["manifest_hash"] = hash();
        j["results"] = results_;
        j["outputs"] = outputs_;
        j["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        atomic_write(dir / "manifest.json", j.dump(2) + "\n");
    }

private:
    std::chrono::steady_clock::time_point started_;
    json identity_;
    json results_ = json::object();
    std::vector<std::string> outputs_;
};

Trajectory load(const Options& o, Manifest& manifest)
{
    if (o.input.empty())
        throw Error(ErrorCode::InvalidArgument, "--input is required");
    manifest.set_input(o.input);
    return read_trajectory(o.input);
}

fs::path output_dir(const Options& o)
{
    fs::path dir(o.output);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

json fit_summary(const ShapeSplineFit& fit)
{
    json cv = json::array();
    for (const auto& e : fit.cv_table)
        cv.push_back({{"lambda", e.lambda},
                      {"cv", e.valid ? json(e.cv) : json(nullptr)},
                      {"valid", e.valid},
                      {"unconverged_folds", e.unconverged_folds},
                      {"reason", e.reason}});
    return {{"model", model_name(fit.model)},
            {"lambda", fit.model.kind == SplineKind::cubic_smoothing ? json(fit.lambda_used) : json(nullptr)},
            {"edf", fit.model.kind == SplineKind::cubic_smoothing ? json(fit.spline.edf) : json(nullptr)},
            {"converged", fit.converged},
            {"iterations", fit.iterations},
            {"displacement_history", fit.displacement_history},
            {"cv_table", cv}};
}

std::string cv_csv(const std::vector<CvEntry>& table)
{
    CsvTable csv({"lambda", "cv", "valid", "unconverged_folds"});
    for (const auto& e : table)
        csv.add({format_double(e.lambda), e.valid ? format_double(e.cv) : "nan", e.valid ? "1" : "0",
                 std::to_string(e.unconverged_folds)});
    return csv.str();
}

/// Shapes as a trajectory at unit centroid size (shape mode) or fitted size.
std::string shapes_csv(const std::vector<Matrix>& shapes, const std::vector<double>& times, Mode mode)
{
    Trajectory t;
    t.header.mode = mode;
    for (std::size_t i = 0; i < shapes.size(); ++i)
        t.frames.push_back({landmarks_from(shapes[i]), times[i]});
    return write_trajectory_csv(t);
}

ShapeSplineFit fit_with_lambda(const std::vector<Configuration>& data, FitConfig cfg, const Options& o)
{
    std::vector<CvEntry> table;
    if (cfg.model.kind == SplineKind::cubic_smoothing && o.lambda == "cv") {
        auto cv = cross_validate(data, cfg, parse_list(o.lambda_grid, "--lambda-grid"), o.threads);
        cfg.model.lambda = cv.best_lambda;
        table = std::move(cv.table);
    }
    auto fit = fit_shape_spline(data, cfg);
    fit.cv_table = std::move(table);
    return fit;
}

int cmd_fit(const Options& o)
{
    Manifest manifest("fit", o);
    const auto traj = load(o, manifest);
    const auto cfg = fit_config(o);
    const auto dir = output_dir(o);
    const auto fit = fit_with_lambda(traj.frames, cfg, o);

    manifest.output(dir, "fitted_shapes.csv", shapes_csv(fit.fitted_knots, fit.grid_times, cfg.mode));

    const auto d = fit.unwrapped_data.front().size();
    std::vector<std::string> cols{"kind", "time"};
    for (Eigen::Index c = 0; c < d; ++c)
        cols.push_back("v" + std::to_string(c + 1));
    CsvTable unrolled(cols);
    const Matrix grid_values = fit.spline.evaluate(fit.grid_times);
    for (std::size_t i = 0; i < fit.data_times.size(); ++i) {
        std::vector<std::string> row{"data", format_double(fit.data_times[i])};
        const RowVector v = detail::flatten(fit.unwrapped_data[i]);
        for (Eigen::Index c = 0; c < d; ++c)
            row.push_back(format_double(v(c)));
        unrolled.add(row);
    }
    for (std::size_t g = 0; g < fit.grid_times.size(); ++g) {
        std::vector<std::string> row{"fit", format_double(fit.grid_times[g])};
        for (Eigen::Index c = 0; c < d; ++c)
            row.push_back(format_double(grid_values(static_cast<Eigen::Index>(g), c)));
        unrolled.add(row);
    }
    manifest.output(dir, "unrolled.csv", unrolled.str());

    const auto pca = tangent_pca(fit.unwrapped_data, o.components);
    const Matrix fit_scores = (grid_values.rowwise() - pca.mean) * pca.loadings;
    std::vector<std::string> pc_cols{"kind", "time"};
    for (Eigen::Index c = 0; c < pca.scores.cols(); ++c)
        pc_cols.push_back("pc" + std::to_string(c + 1));
    CsvTable scores(pc_cols);
    auto add_scores = [&](const char* kind, const Matrix& s, const std::vector<double>& times) {
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            std::vector<std::string> row{kind, format_double(times[static_cast<std::size_t>(r)])};
            for (Eigen::Index c = 0; c < s.cols(); ++c)
                row.push_back(format_double(s(r, c)));
            scores.add(row);
        }
    };
    add_scores("data", pca.scores, fit.data_times);
    add_scores("fit", fit_scores, fit.grid_times);
    manifest.output(dir, "pc_scores.csv", scores.str());
    if (!fit.cv_table.empty())
        manifest.output(dir, "cv_table.csv", cv_csv(fit.cv_table));

    auto& results = manifest.results();
    results["fit"] = fit_summary(fit);
    results["pc_proportions"] = std::vector<double>(pca.proportions.data(), pca.proportions.data() + pca.proportions.size());

    if (o.with_size) {
        ScatterData sizes;
        sizes.times = fit.data_times;
        sizes.values.resize(static_cast<Eigen::Index>(traj.frames.size()), 1);
        for (std::size_t i = 0; i < traj.frames.size(); ++i)
            sizes.values(static_cast<Eigen::Index>(i), 0) = centroid_size(traj.frames[i].landmarks);
        const auto size_fit = fit_linear_knotted(sizes, 4);
        CsvTable csv({"time", "centroid_size", "fitted"});
        for (std::size_t i = 0; i < sizes.times.size(); ++i)
            csv.add({format_double(sizes.times[i]), format_double(sizes.values(static_cast<Eigen::Index>(i), 0)),
                     format_double(size_fit.evaluate(sizes.times[i])(0))});
        manifest.output(dir, "size_fit.csv", csv.str());
        results["size_model"] = "linear:4";
    }
    manifest.write(dir);
    return 0;
}

int cmd_cv(const Options& o)
{
    Manifest manifest("cv", o);
    const auto traj = load(o, manifest);
    auto cfg = fit_config(o);
    cfg.model.kind = SplineKind::cubic_smoothing;
    const auto dir = output_dir(o);
    const auto grid = parse_list(o.lambda_grid, "--lambda-grid");
    const auto cv = cross_validate(traj.frames, cfg, grid, o.threads);
    manifest.output(dir, "cv_table.csv", cv_csv(cv.table));
    manifest.results()["best_lambda"] = cv.best_lambda;
    manifest.write(dir);
    return 0;
}

int cmd_predict(const Options& o)
{
    Manifest manifest("predict", o);
    manifest.identity()["config"]["at"] = o.at;
    const auto traj = load(o, manifest);
    const auto cfg = fit_config(o);
    const auto dir = output_dir(o);
    const auto times = parse_list(o.at, "--at");
    check_increasing(times);
    const auto fit = fit_with_lambda(traj.frames, cfg, o);
    std::vector<Matrix> shapes;
    for (double t : times)
        shapes.push_back(predict(fit, t, cfg.transport_config()));
    manifest.output(dir, "predicted_shapes.csv", shapes_csv(shapes, times, cfg.mode));
    manifest.results()["fit"] = fit_summary(fit);
    manifest.write(dir);
    return 0;
}

int cmd_simulate(const Options& o)
{
    Manifest manifest("simulate", o);
    manifest.identity()["config"].update({{"k", o.k},
                                          {"m", o.m},
                                          {"sigma", o.sigma},
                                          {"noise", o.noise},
                                          {"noise_df", o.noise_df},
                                          {"points_per_segment", o.points_per_segment},
                                          {"distances", o.distances}});
    SimulationSpec spec;
    spec.k = o.k;
    spec.m = o.m;
    spec.seed = o.seed;
    spec.points_per_segment = o.points_per_segment;
    spec.segment_distances = parse_list(o.distances, "--distances");
    if (o.noise == "gaussian")
        spec.noise = NoiseSpec::gaussian(o.sigma);
    else if (o.noise == "student-t")
        spec.noise = NoiseSpec::student_t(o.noise_df, o.sigma);
    else
        throw Error(ErrorCode::InvalidArgument, "unknown noise '" + o.noise + "' (gaussian, student-t)");

    const auto dir = output_dir(o);
    const auto truth = generate_truth(spec);
    Trajectory data;
    data.frames = perturb(truth, spec.noise, spec.seed, 0);
    Trajectory clean;
    clean.frames = truth.configurations();
    manifest.output(dir, "trajectory.csv", write_trajectory_csv(data));
    manifest.output(dir, "truth.csv", write_trajectory_csv(clean));

    json measured = json::array();
    for (std::size_t v = 0; v + 1 < truth.vertices.size(); ++v)
        measured.push_back(shape_distance(truth.shapes[truth.vertices[v]], truth.shapes[truth.vertices[v + 1]]));
    manifest.results()["vertex_distances"] = measured;
    manifest.results()["vertex_indices"] = truth.vertices;
    manifest.write(dir);
    return 0;
}

int cmd_pca(const Options& o)
{
    Manifest manifest("pca", o);
    const auto traj = load(o, manifest);
    const Mode mode = parse_mode(o.mode);
    const auto dir = output_dir(o);
    const auto pca = procrustes_tangent_pca(mode, to_points(mode, traj.frames), o.components);
    std::vector<std::string> cols{"time"};
    for (Eigen::Index c = 0; c < pca.scores.cols(); ++c)
        cols.push_back("pc" + std::to_string(c + 1));
    CsvTable csv(cols);
    for (Eigen::Index r = 0; r < pca.scores.rows(); ++r) {
        std::vector<std::string> row{format_double(traj.frames[static_cast<std::size_t>(r)].time)};
        for (Eigen::Index c = 0; c < pca.scores.cols(); ++c)
            row.push_back(format_double(pca.scores(r, c)));
        csv.add(row);
    }
    manifest.output(dir, "pc_scores.csv", csv.str());
    manifest.results()["pc_proportions"] =
        std::vector<double>(pca.proportions.data(), pca.proportions.data() + pca.proportions.size());
    manifest.write(dir);
    return 0;
}

int cmd_compare(const Options& o)
{
    Manifest manifest("compare", o);
    manifest.identity()["config"]["models"] = o.models;
    const auto traj = load(o, manifest);
    const auto dir = output_dir(o);

    std::vector<std::pair<std::string, ShapeSplineFit>> fits;
    for (auto name : detail::split(o.models, ',')) {
        Options mo = o;
        mo.model = std::string(detail::trim(name));
        auto cfg = fit_config(mo);
        fits.emplace_back(mo.model, fit_with_lambda(traj.frames, cfg, mo));
    }
    const auto table = information_criteria(fits);
    CsvTable csv({"model", "df", "parameters", "sum_log_variance", "aic", "bic", "zero_residual", "converged",
                  "iterations"});
    json rows = json::array();
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& ic = table[i];
        const auto& fit = fits[i].second;
        csv.add({ic.model, format_double(model_df(fit.spline)), format_double(ic.parameters),
                 format_double(ic.sum_log_variance), format_double(ic.aic), format_double(ic.bic),
                 ic.zero_residual ? "1" : "0", fit.converged ? "1" : "0", std::to_string(fit.iterations)});
        rows.push_back(fit_summary(fit));
    }
    manifest.output(dir, "ic_table.csv", csv.str());
    manifest.results()["fits"] = rows;
    manifest.results()["dimension"] = table.empty() ? 0 : table.front().dimension;
    manifest.write(dir);
    return 0;
}

void shared_flags(CLI::App* app, Options& o)
{
    app->add_option("--input", o.input, "trajectory file (.csv or .json)");
    app->add_option("--output", o.output, "output directory")->capture_default_str();
    app->add_option("--mode", o.mode, "shape | size-and-shape")->capture_default_str();
    app->add_option("--grid-points", o.grid_points, "grid points between observations")->capture_default_str();
    app->add_option("--epsilon", o.epsilon, "convergence tolerance")->capture_default_str();
    app->add_option("--max-iter", o.max_iter, "iteration cap")->capture_default_str();
    app->add_option("--lambda", o.lambda, "smoothing parameter or 'cv'")->capture_default_str();
    app->add_option("--lambda-grid", o.lambda_grid, "comma-separated CV grid")->capture_default_str();
    app->add_option("--model", o.model, "geodesic | linear:K | cubic")->capture_default_str();
    app->add_option("--steps-per-unit", o.steps_per_unit, "transport steps per unit length")->capture_default_str();
    app->add_option("--integrator", o.integrator, "transport integrator: rk4 | euler")
        ->check(CLI::IsMember({"rk4", "euler"}))
        ->capture_default_str();
    app->add_option("--seed", o.seed, "random seed")->capture_default_str();
    app->add_flag("--with-size", o.with_size, "also fit a 4-knot linear spline to centroid size");
    app->add_option("--threads", o.threads, "worker threads (0 = all cores)")->capture_default_str();
}

void print_error(std::string_view code, std::string_view message)
{
    std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Smoothing splines for landmark shape trajectories"};
    app.require_subcommand(1);
    Options o;

    auto* fit = app.add_subcommand("fit", "fit a shape spline");
    auto* cv = app.add_subcommand("cv", "cross-validate the smoothing parameter");
    auto* pred = app.add_subcommand("predict", "predict shapes at given times");
    auto* sim = app.add_subcommand("simulate", "simulate a piecewise-geodesic trajectory");
    auto* pca = app.add_subcommand("pca", "Procrustes tangent PCA of the input shapes");
    auto* cmp = app.add_subcommand("compare", "AIC/BIC comparison of several models");
    for (auto* sub : {fit, cv, pred, sim, pca, cmp})
        shared_flags(sub, o);
    for (auto* sub : {fit, pca})
        sub->add_option("--components", o.components, "principal components to report")->capture_default_str();
    pred->add_option("--at", o.at, "comma-separated prediction times")->required();
    cmp->add_option("--models", o.models, "comma-separated models")->capture_default_str();
    sim->add_option("--k", o.k, "landmarks")->capture_default_str();
    sim->add_option("--m", o.m, "dimension")->capture_default_str();
    sim->add_option("--sigma", o.sigma, "noise standard deviation")->capture_default_str();
    sim->add_option("--noise", o.noise, "gaussian | student-t")->capture_default_str();
    sim->add_option("--noise-df", o.noise_df, "student-t degrees of freedom")->capture_default_str();
    sim->add_option("--points-per-segment", o.points_per_segment, "interior shapes per segment")->capture_default_str();
    sim->add_option("--distances", o.distances, "vertex shape distances")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("UsageError", e.what());
        return 2;
    }

    try {
        if (*fit)
            return cmd_fit(o);
        if (*cv)
            return cmd_cv(o);
        if (*pred)
            return cmd_predict(o);
        if (*sim)
            return cmd_simulate(o);
        if (*pca)
            return cmd_pca(o);
        return cmd_compare(o);
    } catch (const Error& e) {
        print_error(to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        print_error("InternalError", e.what());
    }
    return 1;
}
