#include "support.hpp"

#include <gtest/gtest.h>

using namespace shapespline;
using namespace testing_support;

namespace {

GeodesicSegment random_segment(std::mt19937_64& rng, Mode mode, int m, int k, double length)
{
    const Matrix x = mode == Mode::shape ? random_preshape(rng, m, k) : gaussian(rng, m, k - 1);
    const Matrix y = exp_point(mode, x, random_horizontal(rng, mode, x, length));
    return make_segment(mode, x, procrustes_fit(x, y).fitted, 0.0, 1.0);
}

} // namespace

TEST(Transport, SphereClosedForm)
{
    std::mt19937_64 rng(31);
    TransportConfig cfg;
    cfg.steps_per_unit = 10000;
    for (int trial = 0; trial < 10; ++trial) {
        const auto seg = random_segment(rng, Mode::shape, 1, 5, 0.2 + 0.1 * trial);
        const Matrix w = random_horizontal(rng, Mode::shape, seg.start, 0.8);
        const Matrix out = transport_along_segment(seg, w, cfg, Direction::forward);
        const auto a = sphere::arc(sphere::vec(seg.start), sphere::vec(seg.end()));
        const Vector ref = sphere::forward(a, sphere::vec(w), a.length);
        EXPECT_LT((sphere::vec(out) - ref).norm(), 1e-5);
    }
}

TEST(Transport, IsometryAndHorizontality)
{
    std::mt19937_64 rng(32);
    const TransportConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const auto seg = random_segment(rng, Mode::shape, 3, 8, 0.1 + 0.05 * trial);
        std::vector<Matrix> vs{random_horizontal(rng, Mode::shape, seg.start, 0.9),
                               random_horizontal(rng, Mode::shape, seg.start, 0.4)};
        const double n0 = vs[0].norm();
        const double ip = inner(vs[0], vs[1]);
        transport_batch(seg, vs, cfg, Direction::forward);
        EXPECT_NEAR(vs[0].norm(), n0, 1e-14);
        EXPECT_NEAR(inner(vs[0], vs[1]), ip, 1e-8);
        const Matrix end = seg.end();
        EXPECT_LT((project(Mode::shape, end, vs[0]) - vs[0]).norm(), 1e-12);
    }
}

TEST(Transport, ForwardBackwardIdentity)
{
    std::mt19937_64 rng(33);
    const TransportConfig cfg;
    for (Mode mode : {Mode::shape, Mode::size_and_shape}) {
        TransportConfig c = cfg;
        c.mode = mode;
        for (int trial = 0; trial < 20; ++trial) {
            const auto seg = random_segment(rng, mode, 3, 8, 0.1 + 0.05 * trial);
            const Matrix v = random_horizontal(rng, mode, seg.start, 0.5);
            const Matrix there = transport_along_segment(seg, v, c, Direction::forward);
            const Matrix back = transport_along_segment(seg, there, c, Direction::backward);
            EXPECT_LT((back - v).norm(), 1e-8);
        }
    }
}

TEST(Transport, VelocityIsParallel)
{
    std::mt19937_64 rng(34);
    TransportConfig cfg;
    double coarse = 0.0;
    double fine = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const auto seg = random_segment(rng, Mode::shape, 3, 6, 0.8);
        cfg.steps_per_unit = 200;
        coarse += (transport_along_segment(seg, seg.direction, cfg, Direction::forward) - seg.velocity(seg.length)).norm();
        cfg.steps_per_unit = 2000;
        fine += (transport_along_segment(seg, seg.direction, cfg, Direction::forward) - seg.velocity(seg.length)).norm();
    }
    EXPECT_LT(fine, 1e-4);
    EXPECT_LE(fine, coarse + 1e-12);
}

TEST(Transport, EulerIsFirstOrder)
{
    std::mt19937_64 rng(39);
    TransportConfig cfg;
    cfg.integrator = Integrator::euler;
    const auto seg = random_segment(rng, Mode::shape, 3, 7, 1.0);
    const Matrix v = random_horizontal(rng, Mode::shape, seg.start, 1.0);
    std::vector<double> err;
    for (int steps : {100, 200, 400, 800}) {
        cfg.steps_per_unit = steps;
        const Matrix there = transport_along_segment(seg, v, cfg, Direction::forward);
        err.push_back((transport_along_segment(seg, there, cfg, Direction::backward) - v).norm());
    }
    for (std::size_t i = 1; i < err.size(); ++i)
        EXPECT_GE(std::log2(err[i - 1] / err[i]), 0.9) << "steps " << (100 << i);
}

TEST(Transport, EulerAgreesWithRk4)
{
    std::mt19937_64 rng(40);
    TransportConfig euler;
    euler.integrator = Integrator::euler;
    euler.steps_per_unit = 20000;
    const auto seg = random_segment(rng, Mode::shape, 3, 7, 0.5);
    const Matrix v = random_horizontal(rng, Mode::shape, seg.start, 1.0);
    const Matrix a = transport_along_segment(seg, v, euler, Direction::forward);
    const Matrix b = transport_along_segment(seg, v, TransportConfig{}, Direction::forward);
    EXPECT_LT((a - b).norm(), 1e-5);
}

TEST(Transport, RotationEquivariant)
{
    std::mt19937_64 rng(35);
    const TransportConfig cfg;
    const auto seg = random_segment(rng, Mode::shape, 3, 7, 0.6);
    const Matrix v = random_horizontal(rng, Mode::shape, seg.start, 0.5);
    const Matrix r = random_rotation(rng, 3);
    GeodesicSegment rotated = seg;
    rotated.start = r * seg.start;
    rotated.direction = r * seg.direction;
    const Matrix a = r * transport_along_segment(seg, v, cfg, Direction::forward);
    const Matrix b = transport_along_segment(rotated, r * v, cfg, Direction::forward);
    EXPECT_LT((a - b).norm(), 1e-10);
}

TEST(Transport, SizeAndShapeSegmentIsStraight)
{
    std::mt19937_64 rng(36);
    const auto seg = random_segment(rng, Mode::size_and_shape, 3, 6, 1.3);
    EXPECT_LT((seg.point(0.5) - (seg.start + 0.5 * seg.direction)).norm(), 1e-14);
    TransportConfig cfg;
    cfg.mode = Mode::size_and_shape;
    const Matrix v = random_horizontal(rng, Mode::size_and_shape, seg.start, 1.0);
    const Matrix w = transport_along_segment(seg, v, cfg, Direction::forward);
    EXPECT_NEAR(w.norm(), 1.0, 1e-14);
    const Matrix xv = seg.end() * w.transpose();
    EXPECT_LT((xv - xv.transpose()).norm(), 1e-12);
}

TEST(Transport, Errors)
{
    std::mt19937_64 rng(37);
    const auto seg = random_segment(rng, Mode::shape, 3, 6, 0.3);
    TransportConfig cfg;
    cfg.mode = Mode::size_and_shape;
    EXPECT_THROW(transport_along_segment(seg, seg.direction, cfg, Direction::forward), Error);
    cfg = TransportConfig{};
    cfg.steps_per_unit = 0;
    EXPECT_THROW(transport_along_segment(seg, seg.direction, cfg, Direction::forward), Error);
}

TEST(Transport, StepCount)
{
    const TransportConfig cfg;
    EXPECT_EQ(step_count(0.0, cfg), 0);
    EXPECT_EQ(step_count(0.01, cfg), 50);
    EXPECT_EQ(step_count(1.0, cfg), 200);
}

TEST(Transport, LibrarySphereFormula)
{
    // sphere_transport agrees with the test's own closed form.
    std::mt19937_64 rng(38);
    const Matrix x = random_preshape(rng, 1, 6);
    const Matrix u = random_horizontal(rng, Mode::shape, x, 1.0);
    const Matrix w = random_horizontal(rng, Mode::shape, x, 0.5);
    const sphere::Arc a{sphere::vec(x), sphere::vec(u), 0.7};
    EXPECT_LT((sphere_transport(sphere::vec(x), sphere::vec(u), sphere::vec(w), 0.7) -
               sphere::forward(a, sphere::vec(w), 0.7))
                  .norm(),
              1e-14);
}
