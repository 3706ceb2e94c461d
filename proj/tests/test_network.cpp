#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "volseg/network.hpp"

using namespace volseg;

TEST(ClockSymbols, DirectPlacement) {
  const std::vector<int> st{2};
  const std::vector<double> ts{2.0};
  const SymbolSeries s = to_clock_symbols(st, ts, 1.0, 0.0, 5);
  EXPECT_EQ(s.symbols, (std::vector<int>{0, 0, 2, 0, 0}));
  EXPECT_FALSE(s.collided);
}

TEST(ClockSymbols, DenseTradingHasNoZerosAndCollisionsKeepMax) {
  const std::vector<int> st{1, 3, 2, 1, 2};
  const std::vector<double> ts{0, 1, 1.5, 2, 3};
  const SymbolSeries s = to_clock_symbols(st, ts, 1.0);
  EXPECT_EQ(s.symbols, (std::vector<int>{1, 3, 1, 2}));
  EXPECT_TRUE(s.collided);
}

TEST(ClockSymbols, SharedGridAligns) {
  const std::vector<int> a{1, 2}, b{3};
  const std::vector<double> ta{10, 12}, tb{11};
  const SymbolSeries x = to_clock_symbols(a, ta, 1.0, 10.0, 3);
  const SymbolSeries y = to_clock_symbols(b, tb, 1.0, 10.0, 3);
  EXPECT_EQ(x.symbols, (std::vector<int>{1, 0, 2}));
  EXPECT_EQ(y.symbols, (std::vector<int>{0, 3, 0}));
}

TEST(BlockMax, HandSlidingMax) {
  SymbolSeries s;
  s.symbols = {0, 1, 0, 3, 2};
  EXPECT_EQ(block_max_summarize(s, 3).symbols, (std::vector<int>{1, 3, 3}));
  EXPECT_EQ(block_max_summarize(s, 1).symbols, s.symbols);
  EXPECT_THROW(block_max_summarize(s, 2), Error);
  EXPECT_THROW(block_max_summarize(s, 7), Error);
}

TEST(TeLagLead, HandTable) {
  // (x=3, y=target):4, (3, other):1, (other, target):1, (other, other):4
  std::vector<int> x, y;
  auto add = [&](int a, int b, int n) {
    for (int i = 0; i < n; ++i) {
      x.push_back(a);
      y.push_back(b);
    }
  };
  add(3, 3, 4);
  add(3, 1, 1);
  add(1, 3, 1);
  add(1, 1, 4);
  const double want = 0.4 * std::log(0.8 / 0.5) + 0.1 * std::log(0.2 / 0.5);
  EXPECT_NEAR(te_lag_lead(x, y), want, 1e-12);
  EXPECT_NEAR(te_lag_lead(x, y, 3), oracle::te_from_counts({{3, {4, 1}}, {1, {1, 4}}}), 1e-12);
}

TEST(TeLagLead, FactorizingJointIsZero) {
  // every (x, y) combination equally often
  std::vector<int> x, y;
  for (int a = 0; a < 3; ++a)
    for (int b = 1; b <= 2; ++b)
      for (int r = 0; r < 5; ++r) {
        x.push_back(a);
        y.push_back(b);
      }
  EXPECT_NEAR(te_lag_lead(x, y), 0.0, 1e-15);
  EXPECT_EQ(te_lag_lead(x, std::vector<int>(x.size(), 1), 7), 0.0);
}

TEST(TeClassic, HandBinaryChain) {
  // l=1 with counts over (y_{t-1}, x_{t-1}, y_t)
  const std::vector<int> y{0, 0, 1, 1, 0, 1, 0, 0};
  const std::vector<int> x{1, 0, 1, 1, 0, 0, 1, 1};
  std::map<std::tuple<int, int, int>, double> c3;
  std::map<std::pair<int, int>, double> cxy, cyy;
  std::map<int, double> cy;
  for (std::size_t t = 1; t < y.size(); ++t) {
    c3[{y[t - 1], x[t - 1], y[t]}] += 1;
    cxy[{y[t - 1], x[t - 1]}] += 1;
    cyy[{y[t - 1], y[t]}] += 1;
    cy[y[t - 1]] += 1;
  }
  double want = 0.0;
  for (const auto& [k, c] : c3) {
    const auto [yp, xp, yt] = k;
    want += c / 7.0 * std::log((c / cxy[{yp, xp}]) / (cyy[{yp, yt}] / cy[yp]));
  }
  EXPECT_NEAR(te_classic(x, y, 1), want, 1e-12);
}

TEST(TeClassic, IndependentFactorizingCountsAreZero) {
  // y alternates on its own; x is constant, so it carries nothing
  std::vector<int> y, x;
  for (int t = 0; t < 40; ++t) {
    y.push_back(t % 2);
    x.push_back(1);
  }
  EXPECT_NEAR(te_classic(x, y, 1), 0.0, 1e-15);
  EXPECT_NEAR(te_classic(x, y, 3), 0.0, 1e-15);
}

TEST(TeClassic, HistoryCapAndShortSeries) {
  std::vector<int> x(50), y(50);
  for (int t = 0; t < 50; ++t) {
    x[t] = t;
    y[t] = t * 7 % 13;
  }
  EXPECT_THROW(te_classic(x, y, 2, 5), Error);
  EXPECT_THROW(te_classic(std::vector<int>{1}, std::vector<int>{1}, 1), Error);
}

TEST(SimpleBinning, MedianSplitAndUniformShares) {
  const std::vector<double> v{1, 2, 3, 4};
  const BinnedSeries b = simple_binning(v, 2);
  EXPECT_EQ(b.symbols, (std::vector<int>{1, 1, 2, 2}));
  Rng rng = make_rng(71);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> w(10000);
  for (auto& x : w) x = u(rng);
  const BinnedSeries q = simple_binning(w, 5);
  std::vector<int> count(6, 0);
  for (int s : q.symbols) ++count[static_cast<std::size_t>(s)];
  for (int s = 1; s <= 5; ++s) EXPECT_NEAR(count[static_cast<std::size_t>(s)] / 10000.0, 0.2, 0.005);
  const BinnedSeries seven = simple_binning(w, 7);
  EXPECT_EQ(*std::max_element(seven.symbols.begin(), seven.symbols.end()), 7);
  EXPECT_TRUE(simple_binning(std::vector<double>{1, 1, 1}, 3).constant);
}

namespace {

TEMatrix hand3() { return {{"a", "b", "c"}, {{0, 1, 2}, {3, 0, 4}, {5, 6, 0}}}; }

}  // namespace

TEST(NodeStrengths, HandSums) {
  const NodeStrengths s = node_strengths(hand3());
  EXPECT_EQ(s.out, (std::vector<double>{3, 7, 11}));
  EXPECT_EQ(s.in, (std::vector<double>{8, 7, 6}));
  const NodeStrengths z = node_strengths({{"a", "b"}, {{0, 0}, {0, 0}}});
  EXPECT_EQ(z.in, (std::vector<double>{0, 0}));
}

TEST(ReorderMatrix, SortedReversedAndRandom) {
  const Reordering r = reorder_matrix(hand3());
  EXPECT_EQ(r.rows, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(r.cols, (std::vector<std::size_t>{2, 1, 0}));
  Rng rng = make_rng(72);
  std::uniform_real_distribution<double> u(0, 1);
  TEMatrix m{{"1", "2", "3", "4", "5"}, std::vector<std::vector<double>>(5, std::vector<double>(5, 0.0))};
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (i != j) m.values[i][j] = u(rng);
  const Reordering q = reorder_matrix(m);
  const auto s = node_strengths(m);
  for (std::size_t i = 1; i < 5; ++i) {
    EXPECT_LE(s.out[q.rows[i - 1]], s.out[q.rows[i]]);
    EXPECT_LE(s.in[q.cols[i - 1]], s.in[q.cols[i]]);
  }
}

TEST(Dissimilarity, HandThreeNode) {
  // similarities: ab = 2, ac = 3.5, bc = 5 -> dis ab = 1, ac = .5, bc = 0
  const auto d = dissimilarity(hand3());
  EXPECT_DOUBLE_EQ(d[0][1], 1.0);
  EXPECT_DOUBLE_EQ(d[0][2], 0.5);
  EXPECT_DOUBLE_EQ(d[1][2], 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(d[i][j], d[j][i]);
  EXPECT_THROW(dissimilarity({{"a", "b"}, {{0, 1}, {1, 0}}}), Error);
}

TEST(BuildNetwork, Filters) {
  const TEMatrix m{{"a", "b", "c", "d"}, {{0, .9, .1, .2}, {.3, 0, .8, 0}, {0, 0, 0, .5}, {.05, 0, .6, 0}}};
  const Network empty = build_network(m, {std::nullopt, 1.0});
  EXPECT_TRUE(empty.edges.empty());
  EXPECT_TRUE(empty.empty_warning);
  const Network top = build_network(m, {1, std::nullopt});
  ASSERT_EQ(top.edges.size(), 1u);
  EXPECT_EQ(top.edges[0], (Edge{0, 1, 0.9}));
  EXPECT_EQ(top.nodes, (std::vector<std::size_t>{0, 1}));
  const Network thr = build_network(m, {std::nullopt, 0.5});
  EXPECT_EQ(thr.edges, (std::vector<Edge>{{0, 1, .9}, {1, 2, .8}, {3, 2, .6}, {2, 3, .5}}));
  EXPECT_EQ(thr.nodes, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_THROW(build_network(m, {}), Error);
}

TEST(ClusterDissimilarity, TwoBlocksBranchCleanly) {
  // nodes 0, 2, 4 identical; 1, 3, 5 identical
  std::vector<std::vector<double>> d(6, std::vector<double>(6, 0.0));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) d[i][j] = (i % 2 == j % 2) ? (i == j ? 0.0 : 0.1) : 1.0;
  const DissimilarityClustering c = cluster_dissimilarity(d);
  const auto cut = cut_tree(c.tree, 2);
  EXPECT_EQ(cut, (std::vector<int>{0, 1, 0, 1, 0, 1}));
  std::vector<int> seq;
  for (auto leaf : c.order) seq.push_back(static_cast<int>(leaf % 2));
  EXPECT_EQ(count_alternations(seq), 2);
  d[0][1] = 0.5;
  EXPECT_THROW(cluster_dissimilarity(d), Error);
}

TEST(TeMatrix, ThreadCountDoesNotMatter) {
  Rng rng = make_rng(73);
  std::uniform_int_distribution<int> sym(0, 3);
  std::vector<std::vector<int>> series(4, std::vector<int>(500));
  for (auto& s : series)
    for (auto& v : s) v = sym(rng);
  const std::vector<std::string> names{"a", "b", "c", "d"};
  auto flow = [](std::span<const int> x, std::span<const int> y) { return te_lag_lead(x, y); };
  EXPECT_EQ(te_matrix(names, series, flow, 1).values, te_matrix(names, series, flow, 3).values);
}
