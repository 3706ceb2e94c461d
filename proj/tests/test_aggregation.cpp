#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "volseg/aggregation.hpp"
#include "volseg/decoding_error.hpp"
#include "volseg/simulation.hpp"

using namespace volseg;

namespace {

// Lance-Williams-free reference: brute-force Ward on explicit clusters.
std::vector<double> brute_ward_heights(const std::vector<std::vector<double>>& pts) {
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < pts.size(); ++i) clusters.push_back({i});
  auto centroid = [&](const std::vector<std::size_t>& c) {
    std::vector<double> m(pts[0].size(), 0.0);
    for (auto i : c)
      for (std::size_t d = 0; d < m.size(); ++d) m[d] += pts[i][d] / static_cast<double>(c.size());
    return m;
  };
  std::vector<double> heights;
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double ni = static_cast<double>(clusters[i].size()), nj = static_cast<double>(clusters[j].size());
        const double cost = 2.0 * ni * nj / (ni + nj) * squared_distance(centroid(clusters[i]), centroid(clusters[j]));
        if (cost < best) {
          best = cost;
          bi = i;
          bj = j;
        }
      }
    heights.push_back(std::sqrt(best));
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return heights;
}

}  // namespace

TEST(Ward, HeightsMatchBruteForce) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> normal(0, 1);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<std::vector<double>> pts(3 + rep % 9, std::vector<double>(3));
    for (auto& p : pts)
      for (auto& x : p) x = normal(rng);
    const Dendrogram d = ward_linkage(pts);
    const std::vector<double> want = brute_ward_heights(pts);
    ASSERT_EQ(d.merges.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(d.merges[i].height, want[i], 1e-9);
  }
}

TEST(Ward, WeightsEqualDuplicatedPoints) {
  const std::vector<std::vector<double>> pts{{0.0}, {1.0}, {5.0}, {6.5}};
  const std::vector<double> w{2, 1, 3, 1};
  std::vector<std::vector<double>> expanded;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int k = 0; k < static_cast<int>(w[i]); ++k) expanded.push_back(pts[i]);
  const Dendrogram weighted = ward_linkage(pts, w);
  const Dendrogram full = ward_linkage(expanded);
  // the last three merges of the expanded tree join distinct points
  ASSERT_EQ(weighted.merges.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(weighted.merges[i].height, full.merges[full.merges.size() - 3 + i].height, 1e-9);
}

TEST(AverageLinkage, HandExample) {
  // d(0,1)=1, d(2,{0,1}) = (4 + 3) / 2
  const std::vector<double> dist{0, 1, 4, 1, 0, 3, 4, 3, 0};
  const Dendrogram d = average_linkage(dist, 3);
  ASSERT_EQ(d.merges.size(), 2u);
  EXPECT_DOUBLE_EQ(d.merges[0].height, 1.0);
  EXPECT_DOUBLE_EQ(d.merges[1].height, 3.5);
  EXPECT_EQ(d.merges[1].left, 2u);
  EXPECT_EQ(d.merges[1].right, 3u);
}

TEST(CutTree, LabelsAndLeafOrder) {
  const std::vector<std::vector<double>> pts{{0}, {10}, {0.1}, {10.2}, {20}};
  const Dendrogram d = ward_linkage(pts);
  EXPECT_EQ(cut_tree(d, 1), (std::vector<int>{0, 0, 0, 0, 0}));
  EXPECT_EQ(cut_tree(d, 3), (std::vector<int>{0, 1, 0, 1, 2}));
  EXPECT_EQ(cut_tree(d, 5), (std::vector<int>{0, 1, 2, 3, 4}));
  const auto order = leaf_order(d);
  ASSERT_EQ(order.size(), 5u);
  std::vector<int> groups;
  const auto lab = cut_tree(d, 3);
  for (auto leaf : order) groups.push_back(lab[leaf]);
  EXPECT_EQ(count_alternations(groups), 3);
}

TEST(Silhouette, HandValue) {
  // points 0, 1 | 10: a(0)=1, b(0)=10 -> s=0.9; a(1)=1, b(1)=9 -> 8/9; singleton -> 0
  const std::vector<double> dist{0, 1, 10, 1, 0, 9, 10, 9, 0};
  const std::vector<double> w{1, 1, 1};
  const std::vector<int> lab{0, 0, 1};
  EXPECT_NEAR(mean_silhouette(dist, w, lab), (0.9 + 8.0 / 9.0 + 0.0) / 3.0, 1e-12);
}

TEST(Isotonic, PoolsViolators) {
  EXPECT_EQ(isotonic_nondecreasing(std::vector<double>{1, 3, 2, 4}), (std::vector<double>{1, 2.5, 2.5, 4}));
  EXPECT_EQ(isotonic_nondecreasing(std::vector<double>{3, 2, 1}), (std::vector<double>{2, 2, 2}));
}

TEST(EncodeDecode, FarTailRowIsConstant) {
  SimSpec s;
  s.kind = SimKind::regime_gaussian;
  s.n = 2000;
  s.seed = 2;
  const SimResult sim = generate(s);
  ThresholdLadder ladder;
  ladder.thresholds = {1e6, -1.0};
  const EmissionMatrix em = encode_decode(sim.values, ladder, LossConfig{});
  EXPECT_TRUE(em.decodes[0].constant);
  for (double v : em.rows[0]) EXPECT_EQ(v, 0.0);
  EXPECT_FALSE(em.decodes[1].constant);
}

TEST(EncodeDecode, StudentTLevelShiftAtTheBreak) {
  // df 2 then df 5, one break in the middle. The outermost rows differ by
  // about 0.04 in raw event rate, heavier side first; a drop above 0.02 on
  // either of them is a real detection, not row noise.
  Rng rng = make_rng(33);
  std::student_t_distribution<double> heavy(2.0), light(5.0);
  std::vector<double> y;
  for (int t = 0; t < 4000; ++t) y.push_back(t < 2000 ? heavy(rng) : light(rng));
  const ThresholdLadder ladder = ladder_from_quantiles(y, default_ladder_levels());
  const EmissionMatrix em = encode_decode(y, ladder, LossConfig{});
  double largest = -1.0;
  for (std::size_t r : {std::size_t{0}, em.rows.size() - 1}) {
    double before = 0, after = 0;
    for (int t = 1500; t < 1900; ++t) before += em.rows[r][t] / 400;
    for (int t = 2100; t < 2500; ++t) after += em.rows[r][t] / 400;
    largest = std::max(largest, before - after);
  }
  EXPECT_GT(largest, 0.02);
}

TEST(EncodeDecode, ThreadCountDoesNotMatter) {
  SimSpec s;
  s.kind = SimKind::regime_t;
  s.n = 3000;
  s.seed = 4;
  const SimResult sim = generate(s);
  const ThresholdLadder ladder = ladder_from_quantiles(sim.values, default_ladder_levels());
  const EmissionMatrix a = encode_decode(sim.values, ladder, LossConfig{}, 1);
  const EmissionMatrix b = encode_decode(sim.values, ladder, LossConfig{}, 4);
  EXPECT_EQ(a.rows, b.rows);
}

TEST(ClusterStates, SeparableDuplicates) {
  EmissionMatrix em;
  em.ladder.thresholds = {-1.0, 1.0};
  em.rows = {{0.1, 0.1, 0.4, 0.4, 0.1}, {0.2, 0.2, 0.6, 0.6, 0.2}};
  const ClusterResult r = cluster_states(em, 2);
  EXPECT_EQ(r.labels, (std::vector<int>{1, 1, 2, 2, 1}));
  EXPECT_EQ(r.distinct.size(), 2u);
  EXPECT_DOUBLE_EQ(r.tree.merges.back().height, std::sqrt(2.0 * 3 * 2 / 5.0 * (0.09 + 0.16)));
  // lower-tail CDF at (-1, 1): p for the negative threshold, 1 - p for the positive one
  EXPECT_DOUBLE_EQ(r.cdf[0][0], 0.1);
  EXPECT_DOUBLE_EQ(r.cdf[0][1], 0.8);
}

TEST(ClusterStates, IdenticalColumnsAreDegenerate) {
  EmissionMatrix em;
  em.ladder.thresholds = {-1.0};
  em.rows = {{0.3, 0.3, 0.3}};
  const ClusterResult r = cluster_states(em);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.k, 1);
  EXPECT_THROW(cluster_states(em, 2), Error);
}

TEST(ClusterStates, SilhouetteChoosesPlantedCount) {
  EmissionMatrix em;
  em.ladder.thresholds = {-1.0, 1.0};
  std::vector<double> a, b;
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < 10; ++i) {
      a.push_back(0.1 + 0.3 * g + 0.001 * i);
      b.push_back(0.9 - 0.3 * g);
    }
  em.rows = {a, b};
  const ClusterResult r = cluster_states(em);
  EXPECT_EQ(r.k, 3);
  EXPECT_FALSE(r.silhouettes.empty());
}

TEST(ClusterStates, RepairsNonMonotoneCdf) {
  EmissionMatrix em;
  em.ladder.thresholds = {-1.0, -0.5};
  em.rows = {{0.3, 0.3}, {0.2, 0.2}};  // F(-1) = .3 > F(-.5) = .2
  const ClusterResult r = cluster_states(em, 1);
  EXPECT_TRUE(r.cdf_repaired);
  EXPECT_DOUBLE_EQ(r.cdf[0][0], 0.25);
  EXPECT_DOUBLE_EQ(r.cdf[0][1], 0.25);
  EXPECT_DOUBLE_EQ(r.raw_cdf[0][0], 0.3);
}

TEST(Ladder, RejectsZeroAndDuplicates) {
  ThresholdLadder l;
  l.thresholds = {0.0};
  EXPECT_THROW(validate(l), Error);
  l.thresholds = {1.0, 1.0};
  EXPECT_THROW(validate(l), Error);
}
