#include "oracles.hpp"

#include "stag/assignment.hpp"
#include "stag/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace stag;

TEST(Geometry, IouExamples) {
  EXPECT_DOUBLE_EQ(iou(Box{0, 0, 10, 10}, Box{0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou(Box{0, 0, 10, 10}, Box{5, 0, 10, 10}), 50.0 / 150.0);
  EXPECT_DOUBLE_EQ(iou(Box{0, 0, 10, 10}, Box{20, 20, 5, 5}), 0.0);
  // Touching edges share no area.
  EXPECT_DOUBLE_EQ(iou(Box{0, 0, 10, 10}, Box{10, 0, 10, 10}), 0.0);
  // Degenerate boxes never overlap, even with themselves.
  EXPECT_DOUBLE_EQ(iou(Box{0, 0, 0, 10}, Box{0, 0, 0, 10}), 0.0);
  EXPECT_NEAR(iou(Box{0, 0, 100, 100}, Box{0, 0, 100, 110}), 1.0 / 1.1, 1e-15);
}

TEST(Geometry, EnlargeKeepsCenter) {
  const Box b{10, 20, 40, 100};
  const Box e = enlarge_about_center(b, 1.1);
  EXPECT_DOUBLE_EQ(e.center_x(), b.center_x());
  EXPECT_DOUBLE_EQ(e.center_y(), b.center_y());
  EXPECT_NEAR(e.width, 44.0, 1e-12);
  EXPECT_NEAR(e.height, 110.0, 1e-12);
}

TEST(Assignment, EmptyAndTrivial) {
  EXPECT_TRUE(solve_assignment(Eigen::MatrixXd(0, 3)).empty());
  Eigen::MatrixXd one(1, 1);
  one << 4.0;
  const auto m = solve_assignment(one);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0], std::make_pair(0, 0));
}

TEST(Assignment, KnownSquare) {
  Eigen::Matrix3d c;
  c << 4, 1, 3,
       2, 0, 5,
       3, 2, 2;
  const auto m = solve_assignment(c);
  EXPECT_DOUBLE_EQ(matching_cost(c, m), 5.0);
  EXPECT_EQ(m, (Matching{{0, 1}, {1, 0}, {2, 2}}));
}

TEST(Assignment, RectangularBothOrientations) {
  Eigen::MatrixXd wide(2, 4);
  wide << 9, 1, 9, 9,
          9, 9, 9, 2;
  EXPECT_EQ(solve_assignment(wide), (Matching{{0, 1}, {1, 3}}));
  const Eigen::MatrixXd tall = wide.transpose();
  EXPECT_EQ(solve_assignment(tall), (Matching{{1, 0}, {3, 1}}));
}

TEST(Assignment, GateLeavesExpensivePairsUnmatched) {
  Eigen::Matrix2d c;
  c << 0.1, 0.9,
       0.95, 0.99;
  const auto m = solve_assignment(c, 0.85);
  EXPECT_EQ(m, (Matching{{0, 0}}));
}

TEST(Assignment, GatePrefersTwoCheapPairsOverOneCheaper) {
  // Greedy would take (0,0)=0.0 and leave row 1 stranded (total 0.5).
  Eigen::Matrix2d c;
  c << 0.0, 0.1,
       0.1, 0.9;
  const auto m = solve_assignment(c, 0.5);
  EXPECT_EQ(m, (Matching{{0, 1}, {1, 0}}));
}

TEST(Assignment, GateChargesUnmatchedPairs) {
  // One free pair plus a stranded row/column (0.25 + 0.25) beats 0.3 + 0.4.
  Eigen::Matrix2d c;
  c << 0.0, 0.3,
       0.4, 0.9;
  EXPECT_EQ(solve_assignment(c, 0.5), (Matching{{0, 0}}));
}

TEST(Assignment, RejectsNonFinite) {
  Eigen::Matrix2d c;
  c << 0, std::numeric_limits<double>::quiet_NaN(), 1, 2;
  EXPECT_THROW(solve_assignment(c), Error);
}

TEST(Assignment, FloatScalarWorks) {
  Eigen::Matrix2f c;
  c << 1.f, 0.f, 0.f, 1.f;
  EXPECT_EQ(solve_assignment(c), (Matching{{0, 1}, {1, 0}}));
}

TEST(Assignment, MatchesBruteForceFull) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 6), val(0, 50);
  std::uniform_real_distribution<double> real(-5.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::MatrixXd c(dim(rng), dim(rng));
    for (int i = 0; i < c.size(); ++i) c.data()[i] = trial % 2 ? val(rng) : real(rng);
    const auto m = solve_assignment(c);
    EXPECT_EQ(m.size(), static_cast<std::size_t>(std::min(c.rows(), c.cols())));
    EXPECT_NEAR(matching_cost(c, m), oracle::brute_force_full(c), 1e-9) << c;
  }
}

TEST(Assignment, MatchesBruteForceGated) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::MatrixXd c(dim(rng), dim(rng));
    for (int i = 0; i < c.size(); ++i) c.data()[i] = unit(rng);
    const double gate = 0.2 + 0.6 * unit(rng);
    const auto m = solve_assignment(c, gate);
    for (const auto& [r, col] : m) EXPECT_LE(c(r, col), gate);
    const double objective = matching_cost(c, m) + 0.5 * gate * (c.rows() + c.cols() - 2.0 * m.size());
    EXPECT_NEAR(objective, oracle::brute_force_gated(c, gate), 1e-9) << c;
  }
}
