#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rsplines/avoidance.hpp"
#include "rsplines/rng.hpp"

using namespace rsplines;

namespace {

Vec make_vec(std::initializer_list<double> vals) {
    Vec v(static_cast<int>(vals.size()));
    int i = 0;
    for (double x : vals) v[i++] = x;
    return v;
}

const double kSimTau = 100.0 / M_E;

Vec on_sphere(double phi, double theta) {
    return make_vec({std::sin(phi) * std::sin(theta), std::sin(phi) * std::cos(theta),
                     std::cos(phi)});
}

/// Synthetic reference trajectory with prescribed stored jets; certify only
/// reads the samples, so kinematic consistency is not needed for the
/// arithmetic oracle tests.
Trajectory synthetic_reference(const std::vector<Vec>& points, const Vec& v0, const Vec& accel,
                               double T) {
    Trajectory traj;
    const int n = static_cast<int>(points.size());
    for (int i = 0; i < n; ++i) {
        traj.times.push_back(T * i / (n - 1));
        traj.states.push_back(JetState{points[i], v0, accel, Vec::Zero(v0.size())});
    }
    return traj;
}

/// Independent reimplementation of the certificate chain (the oracle).
struct ChainOracle {
    double c, v, threshold;
};
ChainOracle oracle_chain(double a, double v_minus, double T, double v0_norm, double r,
                         double r_star) {
    ChainOracle o;
    o.c = (a * a + v_minus) * T;
    o.v = std::sqrt(o.c * T) + std::sqrt(o.c * T + v0_norm * v0_norm);
    o.threshold = o.c * o.v / (2.0 * (r_star - r));
    return o;
}

double oracle_profile(double d, double D, double tau, int k) {
    if (d >= D) return 0.0;
    const double s = std::pow(d / D, 2.0 * k);
    return M_E * tau * std::exp(-1.0 / (1.0 - s));
}

}  // namespace

TEST_CASE("tolerance bands validation") {
    CHECK_NOTHROW(ToleranceBands{0.1, 0.2, 0.3}.validate());
    CHECK_THROWS_AS((ToleranceBands{0.2, 0.2, 0.3}.validate()), validation_error);
    CHECK_THROWS_AS((ToleranceBands{0.1, 0.3, 0.3}.validate()), validation_error);
    CHECK_THROWS_AS((ToleranceBands{0.0, 0.1, 0.2}.validate()), validation_error);
}

TEST_CASE("minimum distance to a cloud along a trajectory") {
    const Chart e2 = euclidean_chart(2);

    // constant trajectory against a single point
    const Vec q = make_vec({1.0, 2.0});
    const Trajectory constant =
        synthetic_reference({q, q, q}, Vec::Zero(2), Vec::Zero(2), 1.0);
    ObstacleCloud cloud{{make_vec({4.0, 6.0})}};
    const auto [d0, t0] = min_distance(e2, constant, cloud);
    CHECK(d0 == Catch::Approx(5.0).margin(1e-12));
    CHECK(t0 == 0.0);

    // straight pass through a cloud point
    const JetState s0{make_vec({-1.0, 0.0}), make_vec({1.0, 0.0}), Vec::Zero(2), Vec::Zero(2)};
    const Trajectory pass = integrate(e2, PotentialSum{}, s0, 2.0, 1e-3, StepMethod::rk4);
    ObstacleCloud origin{{make_vec({0.0, 0.0})}};
    const auto [dmin, tmin] = min_distance(e2, pass, origin);
    CHECK(dmin < 1e-9);
    CHECK(tmin == Catch::Approx(1.0).margin(1e-3 + 1e-12));

    CHECK_THROWS_AS(min_distance(e2, pass, ObstacleCloud{}), validation_error);
}

TEST_CASE("set distance satisfies the triangle inequality") {
    const Chart e3 = euclidean_chart(3);
    Rng rng(41);
    ObstacleCloud cloud;
    for (int i = 0; i < 40; ++i) cloud.points.push_back(rng.normal_vector(3));
    for (int i = 0; i < 100; ++i) {
        const Vec m = 2.0 * rng.normal_vector(3);
        const Vec p = 2.0 * rng.normal_vector(3);
        CHECK(cloud_distance(e3, m, cloud) <=
              e3.distance(m, p) + cloud_distance(e3, p, cloud) + 1e-12);
    }
}

TEST_CASE("certificate: degenerate geodesic reference") {
    const Chart e2 = euclidean_chart(2);
    // straight line (zero stored acceleration) well outside the safety radius
    std::vector<Vec> pts;
    for (int i = 0; i <= 20; ++i) pts.push_back(make_vec({2.0 + 0.05 * i, 0.0}));
    const Trajectory ref = synthetic_reference(pts, make_vec({1.0, 0.0}), Vec::Zero(2), 1.0);

    PotentialSum sum{{BumpSpec{make_vec({0.0, 0.0}), 0.3, 5.0, 2}}};  // D = R
    const ToleranceBands bands{0.1, 0.2, 0.3};
    const Certificate cert = certify(e2, ref, sum, bands, 1.0, 1.0);
    CHECK(cert.a == 0.0);
    CHECK(cert.V_minus == 0.0);
    CHECK(cert.c == 0.0);
    CHECK(cert.threshold == 0.0);  // exactly
    CHECK(cert.v == 1.0);
    CHECK(cert.V_star_lower > 0.0);
    CHECK(cert.satisfied);
}

TEST_CASE("certificate: shrinking risk margin defeats any finite height") {
    const Chart e2 = euclidean_chart(2);
    std::vector<Vec> pts;
    for (int i = 0; i <= 20; ++i) pts.push_back(make_vec({2.0 + 0.05 * i, 0.0}));
    const Trajectory ref =
        synthetic_reference(pts, make_vec({1.0, 0.0}), make_vec({0.7, 0.0}), 1.0);
    PotentialSum sum{{BumpSpec{make_vec({0.0, 0.0}), 0.3, 1e12, 4}}};
    const ToleranceBands tight{0.2, 0.2 + 1e-14, 0.3};
    const Certificate cert = certify(e2, ref, sum, tight, 1.0, 1.0);
    CHECK(cert.threshold > 1e13);
    CHECK_FALSE(cert.satisfied);
}

TEST_CASE("certificate: frozen chain for the simulation-style potential") {
    const Chart e2 = euclidean_chart(2);
    // parabola-style reference: max covariant acceleration 0.5, ‖v0‖ = 0.5
    std::vector<Vec> pts;
    for (int i = 0; i <= 100; ++i) {
        const double t = i / 100.0;
        pts.push_back(make_vec({1.0 + 0.5 * t - 0.25 * t * t, 0.0}));
    }
    const Trajectory ref =
        synthetic_reference(pts, make_vec({0.5, 0.0}), make_vec({-0.5, 0.0}), 1.0);
    PotentialSum sum{{BumpSpec{make_vec({0.0, 0.0}), 0.3, kSimTau, 4}}};
    const ToleranceBands bands{0.2, 0.25, 0.3};

    const Certificate cert = certify(e2, ref, sum, bands, 0.5, 1.0);
    CHECK(cert.a == Catch::Approx(0.5).margin(1e-15));
    CHECK(cert.V_minus == 0.0);
    CHECK(cert.c == Catch::Approx(0.25).epsilon(1e-14));
    CHECK(cert.v == Catch::Approx(1.20710678118654752).epsilon(1e-14));
    CHECK(cert.threshold == Catch::Approx(3.01776695296636881).epsilon(1e-14));
    CHECK(cert.V_star_lower == Catch::Approx(27.1702622055236581).epsilon(1e-12));
    CHECK(cert.satisfied);
}

TEST_CASE("certificate: reference must stay in the safety region") {
    const Chart e2 = euclidean_chart(2);
    std::vector<Vec> pts;
    for (int i = 0; i <= 10; ++i) pts.push_back(make_vec({1.0 - 0.09 * i, 0.0}));
    const Trajectory ref = synthetic_reference(pts, make_vec({1.0, 0.0}), Vec::Zero(2), 1.0);
    PotentialSum sum{{BumpSpec{make_vec({0.0, 0.0}), 0.3, 1.0, 2}}};
    try {
        certify(e2, ref, sum, ToleranceBands{0.1, 0.2, 0.3}, 1.0, 1.0);
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        CHECK(std::string(e.what()).find("t = ") != std::string::npos);
    }
}

TEST_CASE("certificate arithmetic matches the independent oracle") {
    const Chart e2 = euclidean_chart(2);
    Rng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = rng.uniform(0.0, 3.0);
        const double T = rng.uniform(0.2, 4.0);
        const double v0n = rng.uniform(0.0, 2.0);
        const double r = rng.uniform(0.05, 0.5);
        const double r_star = r + rng.uniform(0.01, 0.4);
        const double R = r_star + rng.uniform(0.01, 0.4);
        const ToleranceBands bands{r, r_star, R};

        // one term centered at the origin, support possibly wider than R
        const double D = rng.uniform(0.5 * R, 2.0 * R);
        const double tau = rng.uniform(0.5, 200.0);
        const int k = 1 + static_cast<int>(rng.integer(6));
        PotentialSum sum{{BumpSpec{make_vec({0.0, 0.0}), D, tau, k}}};

        // reference far outside every support
        const double base = 2.0 * std::max(D, R) + 1.0;
        std::vector<Vec> pts;
        for (int i = 0; i <= 10; ++i) pts.push_back(make_vec({base + 0.01 * i, 0.0}));
        Vec accel = make_vec({a, 0.0});
        const Trajectory ref = synthetic_reference(pts, make_vec({v0n, 0.0}), accel, T);

        const Certificate cert = certify(e2, ref, sum, bands, v0n, T);

        const double v_minus = D > R ? oracle_profile(R, D, tau, k) : 0.0;
        const ChainOracle o = oracle_chain(a, v_minus, T, v0n, r, r_star);
        const double v_star = oracle_profile(r_star, D, tau, k);

        REQUIRE(cert.a == Catch::Approx(a).epsilon(1e-12));
        REQUIRE(cert.V_minus == Catch::Approx(v_minus).margin(1e-12 * (1.0 + v_minus)));
        REQUIRE(cert.c == Catch::Approx(o.c).epsilon(1e-12));
        REQUIRE(cert.v == Catch::Approx(o.v).epsilon(1e-12));
        REQUIRE(cert.threshold == Catch::Approx(o.threshold).epsilon(1e-12));
        REQUIRE(cert.V_star_lower == Catch::Approx(v_star).margin(1e-12 * (1.0 + v_star)));
        REQUIRE(cert.satisfied == (cert.V_star_lower > cert.threshold));
    }
}

TEST_CASE("threshold monotonicity") {
    auto threshold = [](double a, double T, double v0n, double gap) {
        return oracle_chain(a, 0.0, T, v0n, 0.1, 0.1 + gap).threshold;
    };
    // strictly decreasing in the risk margin, increasing in a, T, ‖v0‖
    CHECK(threshold(1.0, 1.0, 1.0, 0.05) > threshold(1.0, 1.0, 1.0, 0.1));
    CHECK(threshold(1.0, 1.0, 1.0, 0.1) > threshold(1.0, 1.0, 1.0, 0.2));
    CHECK(threshold(2.0, 1.0, 1.0, 0.1) > threshold(1.0, 1.0, 1.0, 0.1));
    CHECK(threshold(1.0, 2.0, 1.0, 0.1) > threshold(1.0, 1.0, 1.0, 0.1));
    CHECK(threshold(1.0, 1.0, 2.0, 0.1) > threshold(1.0, 1.0, 1.0, 0.1));

    // and the same ordering through the library path
    const Chart e2 = euclidean_chart(2);
    PotentialSum sum{{BumpSpec{make_vec({0.0, 0.0}), 0.3, 10.0, 4}}};
    auto lib_threshold = [&](double a, double T, double v0n, double gap) {
        std::vector<Vec> pts;
        for (int i = 0; i <= 10; ++i) pts.push_back(make_vec({2.0 + 0.01 * i, 0.0}));
        const Trajectory ref =
            synthetic_reference(pts, make_vec({v0n, 0.0}), make_vec({a, 0.0}), T);
        return certify(e2, ref, sum, ToleranceBands{0.1, 0.1 + gap, 0.3}, v0n, T).threshold;
    };
    CHECK(lib_threshold(1.0, 1.0, 1.0, 0.05) > lib_threshold(1.0, 1.0, 1.0, 0.1));
    CHECK(lib_threshold(2.0, 1.0, 1.0, 0.1) > lib_threshold(1.0, 1.0, 1.0, 0.1));
}

TEST_CASE("parameter selection") {
    // degenerate threshold: the smallest grid element certifies
    {
        CertificateInputs in;  // a = 0, v0 = 0 → threshold 0
        const SelectionResult sel =
            select_parameters(ToleranceBands{0.1, 0.2, 0.3}, 0.5, in);
        REQUIRE(sel.feasible);
        CHECK(sel.tau == 1.0);
        CHECK(sel.k == 1);
        CHECK(sel.threshold == 0.0);
    }

    // synthetic threshold-50 problem: a=1, T=1, ‖v0‖=√15, gap 0.05
    {
        CertificateInputs in;
        in.accel_bound = 1.0;
        in.T = 1.0;
        in.v0_norm = std::sqrt(15.0);
        const ToleranceBands bands{0.2, 0.25, 0.3};
        const SelectionResult sel = select_parameters(bands, 0.5, in);
        REQUIRE(sel.feasible);
        CHECK(sel.threshold == Catch::Approx(50.0).epsilon(1e-12));
        CHECK(sel.v_star_lower > 1.1 * sel.threshold);

        // re-running certify on the output passes with >= 10% margin
        const Chart e1 = euclidean_chart(1);
        std::vector<Vec> pts;
        for (int i = 0; i <= 100; ++i) {
            const double t = i / 100.0;
            pts.push_back(make_vec({1.0 + std::sqrt(15.0) * t - 0.5 * t * t}));
        }
        const Trajectory ref = synthetic_reference(pts, make_vec({std::sqrt(15.0)}),
                                                   make_vec({-1.0}), 1.0);
        const PotentialSum built =
            build_avoidance_potential({make_vec({0.0})}, bands.R, sel.tau, sel.k);
        const Certificate cert = certify(e1, ref, built, bands, std::sqrt(15.0), 1.0);
        CHECK(cert.satisfied);
        CHECK(cert.V_star_lower > 1.1 * cert.threshold);
    }

    // a height cap below the threshold can never certify: V <= tau everywhere
    {
        CertificateInputs in;
        in.accel_bound = 1.0;
        in.T = 1.0;
        in.v0_norm = std::sqrt(15.0);
        ParameterGrid capped;
        capped.taus = {10.0, 45.0};  // all below the threshold of 50
        const SelectionResult sel =
            select_parameters(ToleranceBands{0.2, 0.25, 0.3}, 0.5, in, capped);
        CHECK_FALSE(sel.feasible);
        CHECK(sel.threshold == Catch::Approx(50.0).epsilon(1e-12));
    }

    // sensing radius gate
    {
        CertificateInputs in;
        CHECK_THROWS_AS(select_parameters(ToleranceBands{0.1, 0.2, 0.3}, 0.2, in),
                        validation_error);
    }
}

TEST_CASE("covering a single point") {
    const Chart e3 = euclidean_chart(3);
    const Vec p = make_vec({0.3, -0.2, 1.0});
    const Cover cover = cover_obstacle(e3, ObstacleCloud{{p}}, 0.1, 0.3);
    CHECK(cover.delta == (0.3 - 2 * 0.1) / 2);
    CHECK(cover.r_star == (2 * 0.1 + cover.delta + 0.3) / 2);
    CHECK(cover.delta == Catch::Approx(0.05).margin(1e-15));
    CHECK(cover.r_star == Catch::Approx(0.275).margin(1e-15));
    REQUIRE(cover.centers.size() == 1);
    CHECK((cover.centers[0] - p).norm() == 0.0);

    const CoverCheck check =
        verify_cover(e3, ObstacleCloud{{p}}, cover.centers, 0.1, cover.r_star, 0.3, 2000, 7);
    CHECK(check.inner_violations == 0);
    CHECK(check.outer_violations == 0);
}

TEST_CASE("covering validation errors") {
    const Chart e2 = euclidean_chart(2);
    ObstacleCloud cloud{{make_vec({0.0, 0.0})}};
    CHECK_THROWS_AS(cover_obstacle(e2, cloud, 0.15, 0.3), validation_error);
    CHECK_THROWS_AS(cover_obstacle(e2, cloud, 0.2, 0.3), validation_error);
    CHECK_THROWS_AS(cover_obstacle(e2, ObstacleCloud{}, 0.1, 0.3), validation_error);
}

TEST_CASE("covering a planar ring") {
    const Chart e2 = euclidean_chart(2);
    ObstacleCloud ring;
    for (int i = 0; i < 400; ++i) {
        const double ang = 2.0 * M_PI * i / 400;
        ring.points.push_back(make_vec({std::cos(ang), std::sin(ang)}));
    }
    const double r = 0.08, R = 0.25;
    const Cover cover = cover_obstacle(e2, ring, r, R);
    CHECK(cover.delta == Catch::Approx((R - 2 * r) / 2).margin(1e-15));
    CHECK(cover.r_star == Catch::Approx((2 * r + cover.delta + R) / 2).margin(1e-15));
    CHECK(cover.centers.size() >= 3);
    CHECK(cover.centers.size() <= ring.points.size());

    const CoverCheck check =
        verify_cover(e2, ring, cover.centers, r, cover.r_star, R, 10000, 11);
    INFO("centers " << cover.centers.size() << " max min-center distance "
                    << check.max_min_center_distance);
    CHECK(check.inner_violations == 0);
    CHECK(check.outer_violations == 0);
}

TEST_CASE("covering the simulation's spherical patch") {
    const Chart e3 = euclidean_chart(3);
    ObstacleCloud patch;
    const int n_phi = 40, n_theta = 60;
    for (int i = 1; i <= n_phi; ++i)
        for (int j = 1; j <= n_theta; ++j)
            patch.points.push_back(
                on_sphere(M_PI / 4 * i / (n_phi + 1.0), M_PI / 2 * j / (n_theta + 1.0)));

    const Cover cover = cover_obstacle(e3, patch, 0.1, 0.3);
    CHECK(cover.delta == (0.3 - 2 * 0.1) / 2);
    CHECK(cover.r_star == (2 * 0.1 + cover.delta + 0.3) / 2);
    const CoverCheck check =
        verify_cover(e3, patch, cover.centers, 0.1, cover.r_star, 0.3, 10000, 13);
    INFO("patch cover uses " << cover.centers.size() << " centers, max min-center distance "
                             << check.max_min_center_distance);
    CHECK(check.inner_violations == 0);
    CHECK(check.outer_violations == 0);
}

TEST_CASE("avoidance potential construction") {
    const Chart e3 = euclidean_chart(3);
    CHECK(build_avoidance_potential({}, 0.3, 1.0, 1).terms.empty());

    const Vec c = make_vec({1.0, 0.0, 0.0});
    const PotentialSum one = build_avoidance_potential({c}, 0.3, kSimTau, 4);
    const BumpSpec direct{c, 0.3, kSimTau, 4};
    Rng rng(43);
    for (int i = 0; i < 20; ++i) {
        const Vec q = c + 0.35 * rng.normal_vector(3);
        CHECK(sum_value(e3, one, q) == potential_value(e3, direct, q));
    }

    const std::vector<Vec> centers = {on_sphere(M_PI / 12, M_PI / 4),
                                      on_sphere(M_PI / 5, M_PI / 9),
                                      on_sphere(M_PI / 5, M_PI / 3)};
    const PotentialSum sim = build_avoidance_potential(centers, 0.3, kSimTau, 4);
    REQUIRE(sim.terms.size() == 3);
    for (const auto& t : sim.terms) {
        CHECK(t.support_radius == 0.3);
        CHECK(t.height == kSimTau);
        CHECK(t.sharpness == 4);
    }
}
