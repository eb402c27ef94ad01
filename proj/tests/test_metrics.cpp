#include "lawnav/episodes.hpp"
#include "lawnav/metrics.hpp"

#include <gtest/gtest.h>

using namespace lawnav;

namespace
{

// every monotone alignment, summed in path order like the DP
void enumerate(const std::vector<Point>& p, const std::vector<Point>& r, std::size_t i, std::size_t j, double acc,
               double& best)
{
    acc += distance(p[i], r[j]);
    if (i + 1 == p.size() && j + 1 == r.size()) {
        best = std::min(best, acc);
        return;
    }
    if (i + 1 < p.size()) enumerate(p, r, i + 1, j, acc, best);
    if (j + 1 < r.size()) enumerate(p, r, i, j + 1, acc, best);
    if (i + 1 < p.size() && j + 1 < r.size()) enumerate(p, r, i + 1, j + 1, acc, best);
}

double exhaustive_dtw(const std::vector<Point>& p, const std::vector<Point>& r)
{
    double best = kInfinity;
    enumerate(p, r, 0, 0, 0.0, best);
    return best;
}

std::vector<Point> random_polyline(Rng& rng, int n)
{
    std::vector<Point> out;
    for (int i = 0; i < n; ++i) out.push_back({uniform(rng, 0.0, 10.0), uniform(rng, 0.0, 10.0)});
    return out;
}

std::vector<Point> line(Point a, Point step, int n)
{
    std::vector<Point> out;
    for (int i = 0; i < n; ++i) out.push_back(a + step * i);
    return out;
}

GridMap open_map(int w, int h) { return GridBuilder(w, h, 0.1).build(); }

// straight episode along y = 1.05 on an open 12 m corridor
Episode straight_episode(double length)
{
    Episode ep;
    ep.id = "e0";
    ep.split = "val_unseen";
    ep.start = {1.05, 1.05, 0.0};
    ep.goal = {1.05 + length, 1.05};
    ep.pano = WaypointPath{{ep.start.position(), {1.05 + length / 2, 1.05}, ep.goal}, PathKind::pano()};
    return ep;
}

Trajectory from_points(const std::vector<Point>& pts, bool stopped)
{
    Trajectory tr;
    for (const Point& p : pts) tr.poses.push_back({p.x, p.y, 0.0});
    tr.actions.assign(pts.size() - 1, ActionType::Forward);
    tr.stopped = stopped;
    return tr;
}

} // namespace

TEST(Dtw, MatchesExhaustiveAlignment)
{
    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p = random_polyline(rng, uniform_int(rng, 1, 6));
        const auto r = random_polyline(rng, uniform_int(rng, 1, 6));
        ASSERT_EQ(dtw_cost(p, r), exhaustive_dtw(p, r)) << "trial " << trial;
    }
}

TEST(Dtw, IdentityAndSinglePoint)
{
    Rng rng(3);
    const auto r = random_polyline(rng, 6);
    EXPECT_EQ(dtw_cost(r, r), 0.0);
    const std::vector<Point> one{{1.0, 2.0}};
    double sum = 0.0;
    for (const Point& q : r) sum += distance(one[0], q);
    EXPECT_DOUBLE_EQ(dtw_cost(one, r), sum);
    EXPECT_THROW(dtw_cost({}, r), InvalidArgument);
}

TEST(Ndtw, OffsetByThresholdIsInverseE)
{
    const auto r = line({1.0, 1.0}, {0.25, 0.0}, 20);
    const auto p = line({1.0, 1.0 + kSuccessDistance}, {0.25, 0.0}, 20);
    EXPECT_NEAR(ndtw(p, r), std::exp(-1.0), 1e-12);
    EXPECT_EQ(ndtw(r, r), 1.0);
}

TEST(Ndtw, DecreasesWithOffset)
{
    const auto r = line({1.0, 1.0}, {0.25, 0.0}, 20);
    double prev = 1.0;
    for (double d : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double v = ndtw(line({1.0, 1.0 + d}, {0.25, 0.0}, 20), r);
        EXPECT_LT(v, prev);
        EXPECT_GT(v, 0.0);
        prev = v;
    }
}

TEST(WaypointAccuracy, HandExamples)
{
    const auto map = open_map(80, 30);
    const WaypointPath w{line({1.05, 1.05}, {1.0, 0.0}, 5), PathKind::pano()};
    EXPECT_EQ(waypoint_accuracy(std::span<const Point>(w.points), w, 0.5, map), 1.0);
    const std::vector<Point> idle{w[0]};
    EXPECT_EQ(waypoint_accuracy(idle, w, 0.5, map), 0.2);
    // passes 0.3 m from w_0 and w_1, far from the rest
    const std::vector<Point> part{{1.05, 1.35}, {2.05, 1.35}, {2.05, 2.35}};
    EXPECT_DOUBLE_EQ(waypoint_accuracy(part, w, 0.5, map), 0.4);
    EXPECT_THROW(waypoint_accuracy(part, w, 0.0, map), InvalidArgument);
}

TEST(WaypointAccuracy, GeodesicNotEuclidean)
{
    // 0.2 m from the waypoint in a straight line, but on the far side of a wall
    auto b = GridBuilder(40, 40, 0.1);
    b.fill_cells(20, 0, 21, 39);
    const auto map = b.build();
    const WaypointPath w{{{2.15, 1.05}}, PathKind::pano()};
    const std::vector<Point> across{{1.95, 1.05}};
    EXPECT_EQ(waypoint_accuracy(across, w, 0.5, map), 0.0);
}

TEST(WaypointAccuracy, OrderedMode)
{
    const auto map = open_map(80, 30);
    const WaypointPath w{line({1.05, 1.05}, {1.0, 0.0}, 3), PathKind::pano()};
    std::vector<Point> backwards(w.points.rbegin(), w.points.rend());
    EXPECT_EQ(waypoint_accuracy(backwards, w, 0.5, map), 1.0);
    EXPECT_DOUBLE_EQ(waypoint_accuracy(backwards, w, 0.5, map, true), 1.0 / 3.0);
    EXPECT_EQ(waypoint_accuracy(std::span<const Point>(w.points), w, 0.5, map, true), 1.0);
}

TEST(ComputeMetrics, ReferenceTrajectory)
{
    const auto map = open_map(122, 30);
    const auto ep = straight_episode(10.0);
    const auto step = densify_to_steps(map, ep.pano);
    const auto r = compute_metrics(map, ep, from_points(step.points, true));
    EXPECT_EQ(r.sr, 1.0);
    EXPECT_EQ(r.os, 1.0);
    EXPECT_NEAR(r.tl, 10.0, 1e-9);
    EXPECT_NEAR(r.spl, 1.0, 1e-9);
    EXPECT_EQ(r.ndtw, 1.0);
    EXPECT_EQ(r.sdtw, 1.0);
    EXPECT_EQ(r.wa_05, 1.0);
    EXPECT_EQ(r.ne, 0.0);
}

TEST(ComputeMetrics, NeverMoves)
{
    const auto map = open_map(122, 30);
    const auto ep = straight_episode(10.0);
    const auto r = compute_metrics(map, ep, from_points({ep.start.position()}, true));
    EXPECT_EQ(r.tl, 0.0);
    EXPECT_EQ(r.sr, 0.0);
    EXPECT_EQ(r.spl, 0.0);
    EXPECT_EQ(r.sdtw, 0.0);
    EXPECT_NEAR(r.ne, 10.0, 1e-9);
}

TEST(ComputeMetrics, StopRequiredUnlessLenient)
{
    const auto map = open_map(122, 30);
    const auto ep = straight_episode(10.0);
    const auto step = densify_to_steps(map, ep.pano);
    const auto tr = from_points(step.points, false);
    EXPECT_EQ(compute_metrics(map, ep, tr).sr, 0.0);
    MetricsOptions lenient;
    lenient.lenient_stop = true;
    EXPECT_EQ(compute_metrics(map, ep, tr, lenient).sr, 1.0);
}

TEST(ComputeMetrics, RandomRolloutInvariants)
{
    DatasetSpec spec;
    spec.seen_maps = 2;
    spec.unseen_maps = 0;
    spec.train_episodes = 20;
    spec.val_seen_episodes = 0;
    spec.val_unseen_episodes = 0;
    const auto ds = generate_dataset(spec);
    Rng rng(5);
    for (const auto& ep : ds.episodes) {
        const auto& map = ds.map_for(ep);
        const auto step = densify_to_steps(map, ep.pano);
        const DistanceField field(map, ep.goal);
        for (int k = 0; k < 10; ++k) {
            Trajectory tr;
            Pose pose = ep.start;
            tr.poses.push_back(pose);
            const int n = uniform_int(rng, 0, 120);
            for (int t = 0; t < n; ++t) {
                // forward-heavy so rollouts actually travel
                const double u = uniform01(rng);
                const auto a = u < 0.6 ? ActionType::Forward : (u < 0.8 ? ActionType::Left : ActionType::Right);
                pose = apply_action(map, pose, a);
                tr.actions.push_back(a);
                tr.poses.push_back(pose);
            }
            tr.stopped = uniform01(rng) < 0.5;
            const auto r = compute_metrics(map, ep, step, field, tr);
            EXPECT_GT(r.ndtw, 0.0);
            EXPECT_LE(r.ndtw, 1.0);
            EXPECT_LE(r.spl, r.sr);
            EXPECT_LE(r.sdtw, std::min(r.sr, r.ndtw));
            EXPECT_GE(r.os, r.sr);
            EXPECT_LE(r.wa_05, r.wa_10);
            EXPECT_EQ(r, compute_metrics(map, ep, step, field, tr));
            // extending the trajectory never lowers WA
            auto longer = tr.points();
            longer.push_back(ep.goal);
            EXPECT_GE(waypoint_accuracy(longer, ep.pano, 0.5, map), r.wa_05);
        }
    }
}

TEST(Bins, HandFixture)
{
    auto rep = [](double div, double nd, double wa) {
        MetricsReport r;
        r.divergence = div;
        r.ndtw = nd;
        r.wa_05 = wa;
        return r;
    };
    const std::vector<MetricsReport> rs{rep(0.3, 0.9, 1.0), rep(0.6, 0.4, 0.2), rep(0.7, 0.6, 0.2), rep(0.95, 0.5, 0.5)};
    const auto t = bin_by_divergence(rs);
    ASSERT_EQ(t.bins.size(), 5u);
    EXPECT_EQ(t.bins[0].n, 1u);
    EXPECT_DOUBLE_EQ(t.bins[0].ndtw_mean, 0.9);
    EXPECT_TRUE(std::isnan(t.bins[0].ndtw_ci));
    EXPECT_EQ(t.bins[1].n, 2u); // 0.7 closes (0.5, 0.7]
    EXPECT_DOUBLE_EQ(t.bins[1].ndtw_mean, 0.5);
    EXPECT_NEAR(t.bins[1].ndtw_ci, 0.196, 1e-12);
    EXPECT_NEAR(t.bins[1].wa_ci, 0.0, 1e-12);
    EXPECT_EQ(t.bins[2].n, 0u);
    EXPECT_TRUE(std::isnan(t.bins[2].ndtw_mean));
    EXPECT_EQ(t.bins[4].n, 1u);
}

TEST(Bins, SingleBinMatchesGlobalMean)
{
    std::vector<MetricsReport> rs;
    Rng rng(9);
    double total = 0.0;
    for (int i = 0; i < 30; ++i) {
        MetricsReport r;
        r.divergence = uniform(rng, 0.01, 1.0);
        r.ndtw = uniform01(rng);
        total += r.ndtw;
        rs.push_back(r);
    }
    const auto t = bin_by_divergence(rs, {0.0, 1.0});
    ASSERT_EQ(t.bins.size(), 1u);
    EXPECT_NEAR(t.bins[0].ndtw_mean, total / 30.0, 1e-12);
    EXPECT_NEAR(mean_report(rs).ndtw, total / 30.0, 1e-12);
    EXPECT_THROW(bin_by_divergence(rs, {0.0, 0.5}), InvalidArgument);
    EXPECT_THROW(bin_by_divergence(rs, {0.0, 0.5, 0.5, 1.0}), InvalidArgument);
}
