// AIC/BIC for a geodesic, knotted linear splines and a cubic spline on one simulated dataset.

#include "shapespline/shapespline.hpp"

#include <cstdio>

using namespace shapespline;

int main()
{
    SimulationSpec spec;
    spec.noise = NoiseSpec::gaussian(0.03);
    const auto data = perturb(generate_truth(spec), spec.noise, spec.seed, 0);

    std::vector<std::pair<std::string, ShapeSplineFit>> fits;
    FitConfig cfg;
    cfg.model.kind = SplineKind::least_squares_line;
    fits.emplace_back("geodesic", fit_shape_spline(data, cfg));
    for (int knots : {3, 4, 5}) {
        cfg.model.kind = SplineKind::linear_knotted;
        cfg.model.num_knots = knots;
        fits.emplace_back("linear:" + std::to_string(knots), fit_shape_spline(data, cfg));
    }
    cfg.model.kind = SplineKind::cubic_smoothing;
    cfg.model.lambda = 1e-3;
    fits.emplace_back("cubic", fit_shape_spline(data, cfg));

    std::printf("%-10s %8s %10s %10s\n", "model", "p", "AIC", "BIC");
    for (const auto& ic : information_criteria(fits))
        std::printf("%-10s %8.1f %10.2f %10.2f\n", ic.model.c_str(), ic.parameters, ic.aic, ic.bic);
    return 0;
}
