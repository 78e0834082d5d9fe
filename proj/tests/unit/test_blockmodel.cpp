#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "fincon/blockmodel.hpp"
#include "fincon/error.hpp"

using namespace fincon;

namespace {

// Direct summation of the inconsistency of every block under its cheaper type.
double oracle_criterion(const Eigen::MatrixXd& w, const std::vector<int>& a, int clusters) {
  const auto n = static_cast<int>(w.rows());
  double total = 0.0;
  for (int r = 0; r < clusters; ++r) {
    for (int c = 0; c < clusters; ++c) {
      double null_cost = 0.0;
      std::vector<double> maxima;
      for (int i = 0; i < n; ++i) {
        if (a[static_cast<std::size_t>(i)] != r) continue;
        double m = -1.0;
        for (int j = 0; j < n; ++j) {
          if (a[static_cast<std::size_t>(j)] != c || i == j) continue;
          null_cost += w(i, j) * w(i, j);
          m = std::max(m, w(i, j));
        }
        if (m >= 0.0) maxima.push_back(m);
      }
      for (int j = 0; j < n; ++j) {
        if (a[static_cast<std::size_t>(j)] != c) continue;
        double m = -1.0;
        for (int i = 0; i < n; ++i) {
          if (a[static_cast<std::size_t>(i)] == r && i != j) m = std::max(m, w(i, j));
        }
        if (m >= 0.0) maxima.push_back(m);
      }
      double reg_cost = 0.0;
      if (!maxima.empty()) {
        double mu = 0.0;
        for (double m : maxima) mu += m;
        mu /= static_cast<double>(maxima.size());
        for (double m : maxima) reg_cost += (m - mu) * (m - mu);
      }
      total += std::min(null_cost, reg_cost);
    }
  }
  return total;
}

double exhaustive_optimum(const Eigen::MatrixXd& w, int clusters) {
  const auto n = static_cast<int>(w.rows());
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<int> sizes(static_cast<std::size_t>(clusters), 0);
    for (int c : a) ++sizes[static_cast<std::size_t>(c)];
    if (std::none_of(sizes.begin(), sizes.end(), [](int s) { return s == 0; })) {
      best = std::min(best, oracle_criterion(w, a, clusters));
    }
    int pos = 0;
    while (pos < n && ++a[static_cast<std::size_t>(pos)] == clusters) a[static_cast<std::size_t>(pos++)] = 0;
    if (pos == n) break;
  }
  return best;
}

Eigen::MatrixXd random_network(int n, RngHandle& rng) {
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform();
  return w;
}

ValuedNetwork as_network(const Eigen::MatrixXd& w) {
  ValuedNetwork net;
  net.weights = w;
  for (Eigen::Index i = 0; i < w.rows(); ++i) net.labels.push_back("c" + std::to_string(i));
  return net;
}

// Three groups of three with image rows (R,R,N), (N,R,R), (N,N,N); each
// regular block holds one tie per row and column in a cyclic pattern.
Eigen::MatrixXd planted_network(double noise, RngHandle& rng) {
  const int image[3][3] = {{1, 1, 0}, {0, 1, 1}, {0, 0, 0}};
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(9, 9);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (!image[r][c]) continue;
      for (int u = 0; u < 3; ++u) w(3 * r + u, 3 * c + (u + 1) % 3) = 1.0;
    }
  }
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = std::max(0.0, w.data()[i] + noise * rng.normal());
  w.diagonal().setZero();
  return w;
}

}  // namespace

TEST(BlockCriterion, ZeroNetwork) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Zero(5, 5);
  const std::vector<int> a = {0, 1, 0, 1, 1};
  const std::vector<BlockType> nulls(4, BlockType::null);
  EXPECT_EQ(block_criterion(w, a, 2, nulls), 0.0);
  RngHandle rng(41);
  const BlockPartition one = fit_blockmodel(as_network(w), 1, 5, rng);
  EXPECT_EQ(one.criterion, 0.0);
  EXPECT_EQ(one.assignment, std::vector<int>(5, 0));
  // With two clusters forced nonempty the tie-break picks the smallest canonical vector.
  const BlockPartition two = fit_blockmodel(as_network(w), 2, 20, rng);
  EXPECT_EQ(two.criterion, 0.0);
  EXPECT_EQ(two.assignment, (std::vector<int>{0, 0, 0, 0, 1}));
}

TEST(BlockCriterion, PerfectRegularBlockCostsNothing) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(6, 6);
  // Rows 0-2 send to columns 3-5 with maximum 0.7 in every row and column.
  w(0, 3) = 0.7;
  w(0, 4) = 0.2;
  w(1, 4) = 0.7;
  w(2, 5) = 0.7;
  w(2, 3) = 0.1;
  const std::vector<int> rows = {0, 1, 2}, cols = {3, 4, 5};
  EXPECT_NEAR(block_inconsistency(w, rows, cols, BlockType::regular), 0.0, 1e-15);
  EXPECT_NEAR(block_inconsistency(w, rows, cols, BlockType::null), 3 * 0.49 + 0.04 + 0.01, 1e-15);
  const std::vector<int> a = {0, 0, 0, 1, 1, 1};
  std::vector<BlockType> types;
  EXPECT_NEAR(best_block_criterion(w, a, 2, &types), 0.0, 1e-15);
  EXPECT_EQ(types[1], BlockType::regular);
  EXPECT_EQ(types[0], BlockType::null);
}

TEST(BlockCriterion, DiagonalIsIgnored) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w.diagonal().setConstant(5.0);
  const std::vector<int> all = {0, 1, 2};
  EXPECT_EQ(block_inconsistency(w, all, all, BlockType::null), 0.0);
  EXPECT_EQ(block_inconsistency(w, std::vector<int>{1}, std::vector<int>{1}, BlockType::regular), 0.0);
}

TEST(BlockCriterion, MatchesDirectSummation) {
  RngHandle rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd w = random_network(6, rng);
    std::vector<int> a(6);
    for (auto& c : a) c = static_cast<int>(rng.uniform_index(3));
    EXPECT_NEAR(best_block_criterion(w, a, 3), oracle_criterion(w, a, 3), 1e-12);
  }
}

TEST(BlockCriterion, RelabelInvariant) {
  RngHandle rng(43);
  const Eigen::MatrixXd w = random_network(7, rng);
  const std::vector<int> a = {0, 2, 1, 1, 3, 0, 2};
  const std::vector<int> perm = {3, 0, 2, 1};
  std::vector<int> b;
  for (int c : a) b.push_back(perm[static_cast<std::size_t>(c)]);
  EXPECT_NEAR(best_block_criterion(w, a, 4), best_block_criterion(w, b, 4), 1e-14);
  EXPECT_EQ(canonical_assignment(a), canonical_assignment(b));
}

TEST(BlockCriterion, RejectsBadAssignments) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(best_block_criterion(w, std::vector<int>{0, 1}, 2), ValidationError);
  EXPECT_THROW(best_block_criterion(w, std::vector<int>{0, 1, 2}, 2), ValidationError);
  EXPECT_THROW(block_criterion(w, std::vector<int>{0, 1, 1}, 2, std::vector<BlockType>(3)), ValidationError);
}

TEST(CanonicalAssignment, FirstAppearanceOrder) {
  EXPECT_EQ(canonical_assignment(std::vector<int>{2, 2, 0, 3, 0}), (std::vector<int>{0, 0, 1, 2, 1}));
  EXPECT_EQ(canonical_assignment(std::vector<int>{}), std::vector<int>{});
}

TEST(FitBlockmodel, ReachesExhaustiveOptimum) {
  RngHandle rng(44);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd w = random_network(6, rng);
    const BlockPartition p = fit_blockmodel(as_network(w), 2, 100, rng);
    EXPECT_NEAR(p.criterion, exhaustive_optimum(w, 2), 1e-12);
  }
}

TEST(FitBlockmodel, RecoversPlantedPartition) {
  int hits = 0;
  const std::vector<int> truth = {0, 0, 0, 1, 1, 1, 2, 2, 2};
  for (int rep = 0; rep < 20; ++rep) {
    RngHandle rng(45, static_cast<std::uint64_t>(rep));
    const Eigen::MatrixXd w = planted_network(0.1, rng);
    const BlockPartition p = fit_blockmodel(as_network(w), 3, 50, rng);
    hits += p.assignment == truth ? 1 : 0;
  }
  EXPECT_GE(hits, 19);
}

TEST(FitBlockmodel, StructurallyEquivalentInputFitsExactly) {
  // Identical rows and columns within groups.
  const std::vector<int> groups = {0, 0, 1, 1, 1, 2};
  const double level[3][3] = {{0.5, 0.2, 0.0}, {0.0, 0.4, 0.3}, {0.1, 0.0, 0.0}};
  Eigen::MatrixXd w(6, 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) w(i, j) = i == j ? 0.0 : level[groups[static_cast<std::size_t>(i)]][groups[static_cast<std::size_t>(j)]];
  }
  EXPECT_NEAR(best_block_criterion(w, groups, 3), 0.0, 1e-15);
  RngHandle rng(46);
  const BlockPartition p = fit_blockmodel(as_network(w), 3, 50, rng);
  EXPECT_NEAR(p.criterion, 0.0, 1e-15);
}

TEST(LocalSearch, NeverWorseThanStart) {
  RngHandle rng(47);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::MatrixXd w = random_network(8, rng);
    std::vector<int> start = {0, 1, 2, 3, 0, 0, 0, 0};
    for (std::size_t i = 4; i < start.size(); ++i) start[i] = static_cast<int>(rng.uniform_index(4));
    const double before = best_block_criterion(w, start, 4);
    const BlockPartition p = local_search(w, start, 4);
    EXPECT_LE(p.criterion, before + 1e-12);
    std::vector<int> sizes(4, 0);
    for (int c : p.assignment) ++sizes[static_cast<std::size_t>(c)];
    EXPECT_TRUE(std::none_of(sizes.begin(), sizes.end(), [](int s) { return s == 0; }));
    EXPECT_EQ(p.densities, block_densities(w, p.assignment, 4));
  }
  EXPECT_THROW(local_search(Eigen::MatrixXd::Zero(3, 3), {0, 0, 0}, 2), ValidationError);
}

TEST(FitBlockmodel, ParallelRestartsAgree) {
  RngHandle a(48);
  const Eigen::MatrixXd w = random_network(9, a);
  RngHandle x(49), y(49);
  const BlockPartition p1 = fit_blockmodel(as_network(w), 4, 30, x, 1);
  const BlockPartition p2 = fit_blockmodel(as_network(w), 4, 30, y, 3);
  EXPECT_EQ(p1.assignment, p2.assignment);
  EXPECT_EQ(p1.criterion, p2.criterion);
}

TEST(FitBlockmodel, Validation) {
  RngHandle rng(50);
  EXPECT_THROW(fit_blockmodel(as_network(Eigen::MatrixXd::Zero(3, 3)), 4, 10, rng), ValidationError);
  EXPECT_THROW(fit_blockmodel(as_network(Eigen::MatrixXd::Zero(3, 3)), 0, 10, rng), ValidationError);
  EXPECT_THROW(fit_blockmodel(as_network(-Eigen::MatrixXd::Ones(3, 3)), 2, 10, rng), ValidationError);
  EXPECT_THROW(fit_blockmodel(as_network(Eigen::MatrixXd::Zero(3, 3)), 2, 0, rng), ValidationError);
}

TEST(AverageGfevd, Examples) {
  const std::vector<std::string> labels = {"AT", "BE"};
  Eigen::Matrix2d a;
  a << 0.8, 0.2, 0.3, 0.7;
  const std::vector<YearMonth> one = {YearMonth(2010, 5)};
  const std::vector<Eigen::MatrixXd> single = {a};
  EXPECT_EQ(average_gfevd(one, single, labels, {"x", YearMonth(2010, 1), YearMonth(2010, 12)}).weights, a);

  const std::vector<YearMonth> two = {YearMonth(2010, 5), YearMonth(2010, 6)};
  const std::vector<Eigen::MatrixXd> pair = {a, 3.0 * a};
  EXPECT_LT((average_gfevd(two, pair, labels, {"x", YearMonth(2010, 1), YearMonth(2010, 12)}).weights - 2.0 * a)
                .cwiseAbs()
                .maxCoeff(),
            1e-15);

  std::vector<YearMonth> dates;
  std::vector<Eigen::MatrixXd> mats;
  Eigen::Matrix2d expected = Eigen::Matrix2d::Zero();
  int count = 0;
  for (YearMonth d(2009, 1); d <= YearMonth(2013, 12); d = d + 1) {
    const double v = static_cast<double>(d - YearMonth(2009, 1));
    Eigen::Matrix2d m;
    m << v, 1.0, 2.0 * v, v * v;
    dates.push_back(d);
    mats.push_back(m);
    if (YearMonth(2010, 4) <= d && d <= YearMonth(2012, 7)) {
      expected += m;
      ++count;
    }
  }
  ASSERT_EQ(count, 28);
  const ValuedNetwork esdc = average_gfevd(dates, mats, labels, {"esdc", YearMonth(2010, 4), YearMonth(2012, 7)});
  EXPECT_LT((esdc.weights - expected / count).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(esdc.period.name, "esdc");
  EXPECT_THROW(average_gfevd(dates, mats, labels, {"none", YearMonth(2020, 1), YearMonth(2020, 2)}), ValidationError);
}

TEST(ClassifyRoles, SymmetricNetworkIsAllMain) {
  RngHandle rng(51);
  Eigen::MatrixXd w = random_network(8, rng);
  w = (w + w.transpose()).eval();
  const BlockPartition p = fit_blockmodel(as_network(w), 3, 20, rng);
  for (Role r : classify_roles(p)) EXPECT_EQ(r, Role::main);
}

TEST(ClassifyRoles, StarSinkIsAbsorber) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(5, 5, 0.05);
  w.row(0).setConstant(0.6);  // node 0 draws its variance from everyone else
  w.col(0).setConstant(0.0);
  w.diagonal().setZero();
  BlockPartition p;
  p.clusters = 2;
  p.assignment = {0, 1, 1, 1, 1};
  p.densities = block_densities(w, p.assignment, 2);
  const auto roles = classify_roles(p);
  EXPECT_EQ(roles[0], Role::absorber);
  EXPECT_EQ(roles[1], Role::main);
}

TEST(ClassifyRoles, SinkGroup) {
  const std::vector<std::string> countries = {"AT", "BE", "DE", "ES", "FI", "FR", "GR", "IE", "IT", "LU", "NL", "PT"};
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(12, 12, 0.05);
  for (int i = 0; i < 3; ++i) {
    for (int j = 3; j < 12; ++j) {
      w(i, j) = 0.08;
      w(j, i) = 0.01;
    }
  }
  w.diagonal().setConstant(0.4);
  ValuedNetwork net = as_network(w);
  net.labels = countries;
  RngHandle rng(52);
  const BlockPartition p = fit_blockmodel(net, 2, 50, rng);
  const auto roles = classify_roles(p);
  const int sink = p.assignment[0];
  EXPECT_EQ(p.assignment[1], sink);
  EXPECT_EQ(p.assignment[2], sink);
  for (std::size_t v = 3; v < 12; ++v) EXPECT_NE(p.assignment[v], sink);
  EXPECT_EQ(roles[static_cast<std::size_t>(sink)], Role::absorber);
  EXPECT_EQ(roles[static_cast<std::size_t>(1 - sink)], Role::main);
  std::ostringstream out;
  write_partition_csv(p, net, roles, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "country,cluster,role");
  EXPECT_NE(out.str().find("AT,1,absorber"), std::string::npos);
  EXPECT_NE(out.str().find("PT,2,main"), std::string::npos);
}

TEST(ClassifyRoles, WeakClusterIsIsolate) {
  BlockPartition p;
  p.clusters = 3;
  p.densities.resize(3, 3);
  p.densities << 0.0, 0.3, 0.001, 0.3, 0.0, 0.001, 0.001, 0.001, 0.0;
  const auto roles = classify_roles(p);
  EXPECT_EQ(roles[2], Role::isolate);
  EXPECT_EQ(roles[0], Role::main);
  EXPECT_STREQ(role_name(Role::isolate), "isolate");
}
