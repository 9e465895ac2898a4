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

// Heading 60 frame so grid and global axes differ.
const waterway_frame frame = waterway_frame::from_heading({1000.0, -500.0}, 60.0);

survey_track local_track(const std::vector<local_coord>& lc, const std::function<double(const vec2&)>& f)
{
    std::vector<vec2> pos;
    std::vector<double> asf;
    for (const auto& c : lc) {
        pos.push_back(to_global(frame, c));
        asf.push_back(f(pos.back()));
    }
    return test_support::make_track(pos, asf);
}

std::vector<local_coord> scatter(rng& r, std::size_t n, double length, double hw)
{
    std::vector<local_coord> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({r.uniform(0, length), r.uniform(-hw, hw)});
    return out;
}

cross_track_trend bowl()
{
    std::vector<deviation_sample> d;
    for (int i = -4; i <= 4; ++i) d.push_back({30.0 * i, 1e-5 * 900.0 * i * i + 0.0005 * 30.0 * i});
    return fit_smoothing_spline(d, 0.0);
}

} // namespace

TEST(Grid, LayoutFollowsFrame)
{
    const auto g = make_grid(frame, 3000, 120, 100);
    EXPECT_EQ(g.rows, 31u);
    EXPECT_EQ(g.cols, 3u);
    const auto c = to_local(frame, g.node(4, 2));
    EXPECT_NEAR(c.s, 400.0, 1e-9);
    EXPECT_NEAR(c.l, 100.0, 1e-9);
    EXPECT_NEAR(cross_track(frame, g.node(7, 1)), 0.0, 1e-9);
    EXPECT_THROW(make_grid(frame, 3000, 120, 0), validation_error);
}

TEST(LinearMap, PlanarFieldReproducedInside)
{
    rng r(1);
    const auto plane = [](const vec2& p) { return 0.3 + 2e-4 * p.x() - 3e-4 * p.y(); };
    const auto t = local_track(scatter(r, 300, 1000, 150), plane);
    const auto g = make_grid(frame, 1000, 150, 50);
    const auto m = build_map_linear(t, g, "A");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j)
            if (m.valid(i, j)) {
                ++inside;
                EXPECT_NEAR(m.at(i, j), plane(g.node(i, j)), 1e-9);
            }
    EXPECT_GT(inside, g.rows * g.cols / 2);
}

TEST(LinearMap, NodeOnSurveyPointAndCentroid)
{
    const auto g = make_grid(frame, 200, 100, 100);
    // Triangle with the centroid exactly on node (1, 1).
    const auto t = local_track({{100, 0}, {0, -100}, {200, -50}, {0, 100}, {200, 100}}, [](const vec2&) { return 1.0; });
    const auto m = build_map_linear(t, g, "A");
    EXPECT_NEAR(m.at(0, 2), 1.0, 1e-12);
    EXPECT_NEAR(m.at(1, 1), 1.0, 1e-12);

    auto varied = t;
    for (std::size_t k = 0; k < varied.size(); ++k) varied.measurements[k].asf["A"] = 0.1 * static_cast<double>(k);
    const auto mv = build_map_linear(varied, g, "A");
    EXPECT_NEAR(mv.at(1, 1), 0.0, 1e-12); // node (1,1) is survey point 0
    EXPECT_NEAR(mv.at(0, 2), 0.3, 1e-12); // node (0,2) is survey point 3
}

TEST(LinearMap, OutsideHullIsMaskedNearest)
{
    const auto g = make_grid(frame, 400, 100, 100);
    const auto t = local_track({{100, -10}, {300, -10}, {200, 10}}, [](const vec2& p) { return p.x(); });
    const auto m = build_map_linear(t, g, "A");
    EXPECT_FALSE(m.valid(0, 0));
    EXPECT_DOUBLE_EQ(m.at(0, 0), t.measurements[0].asf.at("A"));
}

TEST(LinearMap, CollinearRejected)
{
    const auto g = make_grid(frame, 400, 100, 100);
    const auto t = local_track({{0, 0}, {100, 0}, {200, 0}, {300, 0}}, [](const vec2&) { return 1.0; });
    EXPECT_THROW(build_map_linear(t, g, "A"), validation_error);
}

TEST(KrigedMaps, MatchDenseOracleOnSmallGrid)
{
    rng r(2);
    const variogram_model model{variogram_kind::exponential, 0.0005, 0.01, 150};
    const auto trend = bowl();
    const auto t = local_track(scatter(r, 5, 200, 100), [&](const vec2& p) { return 1.0 + 0.05 * std::sin(p.x() / 50); });
    const auto s = detrend(t, frame, trend, "A");
    auto g = make_grid(frame, 200, 100, 100);
    ASSERT_EQ(g.rows * g.cols, 9u);
    const auto rk = build_map_rk(s, model, frame, g, "A", quiet());
    const auto uk = build_map_uk(s, model, frame, g, "A", quiet());

    const std::size_t n = s.points.size();
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) {
            const vec2 x0 = g.node(i, j);
            const double l0 = cross_track(frame, x0);
            for (int with_drift = 0; with_drift < 2; ++with_drift) {
                const std::size_t m = n + 1 + static_cast<std::size_t>(with_drift);
                matrix a(m, std::vector<long double>(m, 0.0L));
                std::vector<long double> b(m, 0.0L);
                for (std::size_t p = 0; p < n; ++p) {
                    for (std::size_t q = 0; q < n; ++q)
                        a[p][q] = oracle_gamma(model.nugget, model.partial_sill, model.range, s.points[p].pos, s.points[q].pos);
                    a[p][n] = a[n][p] = 1.0L;
                    if (with_drift) a[p][n + 1] = a[n + 1][p] = trend.value(s.points[p].l);
                    b[p] = oracle_gamma(model.nugget, model.partial_sill, model.range, s.points[p].pos, x0);
                }
                b[n] = 1.0L;
                if (with_drift) b[n + 1] = trend.value(l0);
                const auto w = dense_solve(a, b);
                long double pred = with_drift ? 0.0L : s.mu0 + trend.value(l0);
                for (std::size_t p = 0; p < n; ++p) pred += w[p] * (with_drift ? s.points[p].asf : s.points[p].eps);
                EXPECT_NEAR((with_drift ? uk : rk).at(i, j), static_cast<double>(pred), 1e-9);
            }
        }
}

TEST(KrigedMaps, DriftConsistentDataReproduceDriftSurface)
{
    rng r(3);
    const auto trend = bowl();
    const variogram_model model{variogram_kind::exponential, 0.0, 0.01, 300};
    const auto t = local_track(scatter(r, 60, 1000, 120), [&](const vec2& p) { return 0.7 + trend.value(cross_track(frame, p)); });
    const auto s = detrend(t, frame, trend, "A");
    const auto g = make_grid(frame, 1000, 120, 100);
    const auto rk = build_map_rk(s, model, frame, g, "A", quiet());
    const auto uk = build_map_uk(s, model, frame, g, "A", quiet());
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) {
            const double want = 0.7 + trend.value(cross_track(frame, g.node(i, j)));
            EXPECT_NEAR(rk.at(i, j), want, 1e-6);
            EXPECT_NEAR(uk.at(i, j), want, 1e-6);
            EXPECT_NEAR(rk.at(i, j) - uk.at(i, j), 0.0, 1e-6);
        }
}

TEST(Maps, AllMethodsAgreeOnConstantField)
{
    rng r(4);
    const auto t = local_track(scatter(r, 80, 1000, 120), [](const vec2&) { return 1.5; });
    const variogram_model model{variogram_kind::spherical, 0.001, 0.01, 300};
    const auto g = make_grid(frame, 1000, 120, 100);
    const auto lin = build_map_linear(t, g, "A");
    const auto rk = build_map_rk(detrend(t, frame, fit_smoothing_spline({{-1, 0}, {1, 0}}, 0), "A"), model, frame, g, "A", quiet());
    const auto uk = build_map_uk(detrend(t, frame, bowl(), "A"), model, frame, g, "A", quiet());
    for (std::size_t k = 0; k < lin.values.size(); ++k) {
        EXPECT_NEAR(lin.values[k], 1.5, 1e-6);
        EXPECT_NEAR(rk.values[k], 1.5, 1e-6);
        EXPECT_NEAR(uk.values[k], 1.5, 1e-6);
    }
}

TEST(Maps, CenterlineRowOfConstantField)
{
    rng r(5);
    const auto t = local_track(scatter(r, 30, 1000, 120), [](const vec2&) { return 0.25; });
    grid_spec g = make_grid(frame, 1000, 120, 100);
    g.origin = frame.origin;
    g.cols = 1;
    const variogram_model model{variogram_kind::exponential, 0.0, 0.01, 300};
    for (double v : build_map_uk(detrend(t, frame, bowl(), "A"), model, frame, g, "A", quiet()).values) EXPECT_NEAR(v, 0.25, 1e-9);
}

TEST(Lookup, NodesAndCellCenter)
{
    grid_spec g;
    g.origin = {10, 20};
    g.heading_deg = 90; // rows along east, columns north
    g.spacing = 100;
    g.rows = 2;
    g.cols = 2;
    auto m = asf_map::blank("A", g, map_method::rk);
    m.at(0, 0) = 0;
    m.at(1, 0) = 0;
    m.at(0, 1) = 2;
    m.at(1, 1) = 2;
    EXPECT_NEAR(lookup_asf(m, g.node(0, 1)), 2.0, 1e-15);
    EXPECT_NEAR(lookup_asf(m, {60, 70}), 1.0, 1e-15);

    m.mask[1] = 0; // node (0, 1)
    EXPECT_NEAR(lookup_asf(m, {60, 70}), (0 + 0 + 2) / 3.0, 1e-15);
    m.mask.assign(4, 0);
    EXPECT_THROW(lookup_asf(m, {60, 70}), validation_error);
    EXPECT_NEAR(lookup_asf(m, {60, 70}, {1.0, true}), 1.0, 1e-15);
}

TEST(Lookup, ClampMargin)
{
    auto g = make_grid(frame, 1000, 120, 100);
    auto m = asf_map::blank("A", g, map_method::rk);
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) m.at(i, j) = static_cast<double>(j);
    EXPECT_NEAR(lookup_asf(m, to_global(frame, {500, 150})), 2.0, 1e-12);
    EXPECT_THROW(lookup_asf(m, to_global(frame, {500, 260})), validation_error);
    EXPECT_THROW(lookup_asf(m, to_global(frame, {-150, 0})), validation_error);
}

TEST(Lookup, BilinearReproducesPlanarField)
{
    rng r(6);
    const auto g = make_grid(frame, 1000, 200, 100);
    auto m = asf_map::blank("A", g, map_method::truth);
    const auto plane = [](const vec2& p) { return 1.0 + 1e-4 * p.x() + 2e-4 * p.y(); };
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) m.at(i, j) = plane(g.node(i, j));
    for (int k = 0; k < 200; ++k) {
        const vec2 p = to_global(frame, {r.uniform(0, 1000), r.uniform(-200, 200)});
        EXPECT_NEAR(lookup_asf(m, p), plane(p), 1e-9);
    }
}

TEST(MapFile, RoundTrip)
{
    rng r(7);
    const auto g = make_grid(frame, 1000, 120, 100);
    auto m = asf_map::blank("9930", g, map_method::uk);
    for (auto& v : m.values) v = r.normal();
    m.mask[3] = 0;
    test_support::temp_dir dir("map");
    write_map(dir.file("a.map"), m);
    const auto back = load_map(dir.file("a.map"));
    EXPECT_EQ(back.tx, m.tx);
    EXPECT_EQ(back.method, m.method);
    EXPECT_EQ(back.grid.rows, g.rows);
    EXPECT_EQ(back.grid.cols, g.cols);
    EXPECT_EQ(back.grid.origin, g.origin);
    EXPECT_EQ(back.grid.heading_deg, g.heading_deg);
    EXPECT_EQ(back.mask, m.mask);
    for (std::size_t k = 0; k < m.values.size(); ++k) {
        EXPECT_NEAR(back.values[k], m.values[k], 1e-8 * std::abs(m.values[k]));
        EXPECT_EQ(back.values[k], *text::parse_double(text::format_sig(m.values[k], 9)));
    }
    // At the printed precision the round trip is bit-exact.
    const auto again = parse_map(format_map(back));
    EXPECT_EQ(again.values, back.values);
    EXPECT_EQ(format_map(again), format_map(back));
}

TEST(MapFile, MalformedInput)
{
    EXPECT_THROW(parse_map("nope\n"), parse_error);
    const auto g = make_grid(frame, 200, 100, 100);
    auto text = format_map(asf_map::blank("A", g, map_method::linear));
    text.replace(text.find("values\n") + 7, 1, "x");
    EXPECT_THROW(parse_map(text), parse_error);
}
