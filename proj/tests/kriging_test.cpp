#include <gtest/gtest.h>

#include "support.hpp"

using namespace asfkit;
using asfkit::test_support::dense_solve;
using asfkit::test_support::matrix;
using asfkit::test_support::oracle_gamma;

namespace {

kriging_options quiet()
{
    kriging_options o;
    o.log = nullptr;
    return o;
}

cross_track_trend zero_trend() { return fit_smoothing_spline({{-1, 0}, {1, 0}}, 0.0); }

cross_track_trend random_trend(rng& r)
{
    std::vector<deviation_sample> d;
    for (int i = 0; i < 8; ++i) d.push_back({-150.0 + 300.0 * i / 7, 0.1 * r.normal()});
    return fit_smoothing_spline(d, 0.3);
}

// Survey in the identity frame, so l is the north coordinate.
detrended_survey make_survey(const std::vector<vec2>& pos, const std::vector<double>& asf, const cross_track_trend& t)
{
    std::vector<detrended_point> pts;
    for (std::size_t i = 0; i < pos.size(); ++i) pts.push_back({pos[i], pos[i].y(), asf[i], 0.0});
    return detail::detrend_points(std::move(pts), t);
}

struct instance {
    std::vector<vec2> pos;
    std::vector<double> asf;
    variogram_model model;
    cross_track_trend trend;
    vec2 target;
};

instance random_instance(rng& r, std::size_t n)
{
    instance in;
    for (std::size_t i = 0; i < n; ++i) {
        in.pos.push_back({r.uniform(0, 300), r.uniform(-120, 120)});
        in.asf.push_back(1.0 + 0.1 * r.normal());
    }
    in.model = {variogram_kind::exponential, r.bernoulli(0.5) ? 0.0 : r.uniform(0, 0.002), r.uniform(0.001, 0.01),
        r.uniform(50, 500)};
    in.trend = random_trend(r);
    in.target = {r.uniform(0, 300), r.uniform(-120, 120)};
    return in;
}

// Weights and multipliers of the bordered kriging system with optional drift.
std::vector<double> oracle_weights(const instance& in, const std::vector<double>* drift, double drift_target)
{
    const std::size_t n = in.pos.size(), m = n + 1 + (drift ? 1 : 0);
    matrix a(m, std::vector<long double>(m, 0.0L));
    std::vector<long double> b(m, 0.0L);
    const auto& md = in.model;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] = oracle_gamma(md.nugget, md.partial_sill, md.range, in.pos[i], in.pos[j]);
        a[i][n] = a[n][i] = 1.0L;
        if (drift) a[i][n + 1] = a[n + 1][i] = (*drift)[i];
        b[i] = oracle_gamma(md.nugget, md.partial_sill, md.range, in.pos[i], in.target);
    }
    b[n] = 1.0L;
    if (drift) b[n + 1] = drift_target;
    return dense_solve(a, b);
}

} // namespace

TEST(OrdinaryKriging, SinglePointGetsFullWeight)
{
    const variogram_model m{variogram_kind::exponential, 0.001, 0.01, 200};
    const std::vector<vec2> p{{5, 5}};
    EXPECT_NEAR(ok_weights(p, {100, -40}, m, quiet()).w[0], 1.0, 1e-15);
}

TEST(OrdinaryKriging, SymmetricPairSplitsEvenly)
{
    for (auto kind : {variogram_kind::exponential, variogram_kind::spherical, variogram_kind::gaussian}) {
        const variogram_model m{kind, 0.0, 0.01, 150};
        const std::vector<vec2> p{{-30, 10}, {30, -10}};
        const auto w = ok_weights(p, {0, 0}, m, quiet()).w;
        EXPECT_NEAR(w[0], 0.5, 1e-12);
        EXPECT_NEAR(w[1], 0.5, 1e-12);
    }
}

TEST(OrdinaryKriging, FourPointsMatchDenseOracle)
{
    rng r(1);
    for (int trial = 0; trial < 50; ++trial) {
        const auto in = random_instance(r, 4);
        const auto got = ok_weights(in.pos, in.target, in.model, quiet());
        const auto want = oracle_weights(in, nullptr, 0.0);
        for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(got.w[i], want[i], 1e-9);
        EXPECT_NEAR(got.multipliers[0], want[4], 1e-9);
    }
}

TEST(UniversalKriging, FourPointsMatchDenseOracle)
{
    rng r(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto in = random_instance(r, 4);
        std::vector<double> drift;
        for (const auto& p : in.pos) drift.push_back(in.trend.value(p.y()));
        const double d0 = in.trend.value(in.target.y());
        const auto got = universal_kriging(in.pos, drift, in.model, quiet()).weights(in.target, d0);
        const auto want = oracle_weights(in, &drift, d0);
        for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(got.w[i], want[i], 1e-9);
    }
}

TEST(Predictors, MatchDenseOracle)
{
    rng r(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto in = random_instance(r, 2 + static_cast<std::size_t>(trial % 5));
        const auto s = make_survey(in.pos, in.asf, in.trend);
        const double lt = in.target.y();

        const auto w5 = oracle_weights(in, nullptr, 0.0);
        long double rk = s.mu0 + in.trend.value(lt);
        for (std::size_t i = 0; i < in.pos.size(); ++i) rk += w5[i] * s.points[i].eps;
        EXPECT_NEAR(rk_predict(s, in.target, lt, in.model, quiet()), static_cast<double>(rk), 1e-9);

        std::vector<double> drift;
        for (const auto& p : in.pos) drift.push_back(in.trend.value(p.y()));
        const auto w6 = oracle_weights(in, &drift, in.trend.value(lt));
        long double uk = 0.0L;
        for (std::size_t i = 0; i < in.pos.size(); ++i) uk += w6[i] * in.asf[i];
        EXPECT_NEAR(uk_predict(s, in.target, lt, in.model, quiet()), static_cast<double>(uk), 1e-9);
    }
}

TEST(Predictors, UnbiasednessConstraints)
{
    rng r(4);
    for (int trial = 0; trial < 200; ++trial) {
        const auto in = random_instance(r, 3 + static_cast<std::size_t>(trial % 20));
        const auto s = make_survey(in.pos, in.asf, in.trend);
        const double lt = in.target.y();
        const auto wr = regression_kriging_predictor(s, in.model, quiet()).weights(in.target);
        double sum = 0.0;
        for (double w : wr.w) sum += w;
        EXPECT_NEAR(sum, 1.0, 1e-9);

        const auto wu = universal_kriging_predictor(s, in.model, quiet()).weights(in.target, lt);
        double su = 0.0, sf = 0.0;
        for (std::size_t i = 0; i < wu.w.size(); ++i) {
            su += wu.w[i];
            sf += wu.w[i] * in.trend.value(in.pos[i].y());
        }
        EXPECT_NEAR(su, 1.0, 1e-9);
        EXPECT_NEAR(sf, in.trend.value(lt), 1e-9);
    }
}

TEST(Predictors, NuggetFreeExactAtSurveyPoints)
{
    rng r(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto in = random_instance(r, 12);
        in.model.nugget = 0.0;
        const auto s = make_survey(in.pos, in.asf, in.trend);
        const regression_kriging_predictor rk(s, in.model, quiet());
        const universal_kriging_predictor uk(s, in.model, quiet());
        for (std::size_t i = 0; i < in.pos.size(); ++i) {
            EXPECT_NEAR(rk.predict(in.pos[i], in.pos[i].y()), in.asf[i], 1e-6);
            EXPECT_NEAR(uk.predict(in.pos[i], in.pos[i].y()), in.asf[i], 1e-6);
        }
    }
}

TEST(Predictors, ZeroResidualsGiveTrend)
{
    rng r(6);
    const auto trend = random_trend(r);
    std::vector<vec2> pos;
    std::vector<double> asf;
    for (int i = 0; i < 15; ++i) {
        pos.push_back({r.uniform(0, 400), r.uniform(-100, 100)});
        asf.push_back(0.9 + trend.value(pos.back().y()));
    }
    const auto s = make_survey(pos, asf, trend);
    EXPECT_NEAR(s.mu0, 0.9, 1e-12);
    for (const auto& p : s.points) EXPECT_NEAR(p.eps, 0.0, 1e-12);
    const variogram_model m{variogram_kind::exponential, 0.0, 0.01, 200};
    for (int k = 0; k < 20; ++k) {
        const vec2 t(r.uniform(0, 400), r.uniform(-100, 100));
        EXPECT_NEAR(rk_predict(s, t, t.y(), m, quiet()), 0.9 + trend.value(t.y()), 1e-9);
        // Drift-consistent data are reproduced by UK as well.
        EXPECT_NEAR(uk_predict(s, t, t.y(), m, quiet()), 0.9 + trend.value(t.y()), 1e-6);
    }
}

TEST(Predictors, ConstantFieldStaysConstant)
{
    rng r(7);
    std::vector<vec2> pos;
    for (int i = 0; i < 10; ++i) pos.push_back({r.uniform(0, 400), r.uniform(-100, 100)});
    const auto s = make_survey(pos, std::vector<double>(pos.size(), 1.25), zero_trend());
    EXPECT_NEAR(s.mu0, 1.25, 1e-15);
    const variogram_model m{variogram_kind::spherical, 0.001, 0.01, 200};
    for (int k = 0; k < 10; ++k) {
        const vec2 t(r.uniform(-100, 500), r.uniform(-100, 100));
        EXPECT_NEAR(rk_predict(s, t, t.y(), m, quiet()), 1.25, 1e-12);
    }
}

TEST(Detrend, ZeroTrendSubtractsMean)
{
    const auto s = make_survey({{0, 0}, {1, 1}, {2, 2}}, {1.0, 2.0, 6.0}, zero_trend());
    EXPECT_DOUBLE_EQ(s.mu0, 3.0);
    EXPECT_DOUBLE_EQ(s.points[0].eps, -2.0);
    EXPECT_DOUBLE_EQ(s.points[2].eps, 3.0);
    EXPECT_THROW(detail::detrend_points({}, zero_trend()), validation_error);
}

TEST(UniversalKriging, DegenerateDriftHasDistinctError)
{
    const variogram_model m{variogram_kind::exponential, 0.0, 0.01, 200};
    rng r(1);
    // Every point on one cross-track line, so the drift row is constant.
    const auto s = make_survey({{0, 10}, {50, 10}, {100, 10}}, {1.0, 1.1, 1.2}, random_trend(r));
    try {
        uk_predict(s, {20, 10}, 10, m, quiet());
        FAIL() << "expected degenerate_drift_error";
    } catch (const degenerate_drift_error& e) {
        EXPECT_NE(std::string(e.what()).find("regression kriging"), std::string::npos);
    }
    // RK still works on the same data.
    EXPECT_NO_THROW(rk_predict(s, {20, 10}, 10, m, quiet()));
}

TEST(Kriging, CoincidentPointsMerged)
{
    const auto s = make_survey({{0, 0}, {0.004, 0}, {50, 0}, {100, 0}}, {1.0, 1.2, 1.5, 1.7}, zero_trend());
    const auto merged = merge_coincident(s, 0.01);
    ASSERT_EQ(merged.points.size(), 3u);
    EXPECT_NEAR(merged.points[0].asf, 1.1, 1e-15);
    EXPECT_NEAR(merged.points[0].pos.x(), 0.002, 1e-15);
}

TEST(Kriging, IllConditionedSystemGetsJitter)
{
    // Two points 1e-9 m apart and no nugget: the rows nearly coincide.
    std::vector<std::string> logged;
    kriging_options o;
    o.log = [&](const std::string& s) { logged.push_back(s); };
    const variogram_model m{variogram_kind::gaussian, 0.0, 0.01, 300};
    const std::vector<vec2> p{{0, 0}, {1e-9, 0}, {100, 0}};
    try {
        const auto w = ok_weights(p, {50, 0}, m, o);
        double sum = 0;
        for (double x : w.w) sum += x;
        EXPECT_NEAR(sum, 1.0, 1e-6);
    } catch (const singular_system_error& e) {
        EXPECT_NE(std::string(e.what()).find("closest points"), std::string::npos);
    }
    EXPECT_FALSE(logged.empty());
}

TEST(Kriging, NeighborhoodRestrictsWeights)
{
    rng r(8);
    auto in = random_instance(r, 30);
    const auto s = make_survey(in.pos, in.asf, in.trend);
    auto o = quiet();
    o.neighbors = 8;
    const auto w = regression_kriging_predictor(s, in.model, o).weights(in.target).w;
    std::size_t nonzero = 0;
    double sum = 0.0;
    for (double x : w) {
        nonzero += x != 0.0;
        sum += x;
    }
    EXPECT_LE(nonzero, 8u);
    EXPECT_NEAR(sum, 1.0, 1e-9);

    o.neighbors = 30;
    EXPECT_NEAR(rk_predict(s, in.target, in.target.y(), in.model, o),
        rk_predict(s, in.target, in.target.y(), in.model, quiet()), 1e-12);
}
