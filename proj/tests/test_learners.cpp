#include <gtest/gtest.h>

#include <json.hpp>

#include "dagbench/errors.hpp"
#include "dagbench/learners.hpp"
#include "dagbench/metrics.hpp"
#include "dagbench/misspec.hpp"
#include "support.hpp"

namespace dagbench {
namespace {

Dataset two_node_data(std::uint64_t seed) {
  LinearScm scm = make_linear_scm(Dag::from_edges(2, {{0, 1}}), 0);
  scm.weights(0, 1) = 0.8;
  return sample_linear(scm, 2000, seed);
}

const Dag kForward = Dag::from_edges(2, {{0, 1}});

TEST(MethodNamesTest, RoundTripAndAliases) {
  for (Method m : {Method::Notears, Method::GolemEV, Method::GolemNV, Method::NoCurl, Method::Dagma,
                   Method::VarSortnRegress, Method::R2SortnRegress, Method::Random}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(parse_method("golem_ev"), Method::GolemEV);
  EXPECT_EQ(parse_method("var-sortnregress"), Method::VarSortnRegress);
  EXPECT_THROW(parse_method("pc"), ParameterError);
  EXPECT_FALSE(uses_lambda_grid(Method::Random));
  EXPECT_EQ(lambda1_grid(), (std::vector<double>{0.005, 0.01, 0.05, 0.5, 2.0, 5.0}));
}

TEST(ThresholdTest, Examples) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(3, 3);
  W(0, 1) = 0.8;
  W(1, 2) = 0.05;
  EXPECT_EQ(threshold(W, 0.3), Dag::from_edges(3, {{0, 1}}));
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, 2);
  C(0, 1) = 0.9;
  C(1, 0) = -0.4;
  EXPECT_EQ(threshold(C, 0.3), kForward);
  EXPECT_EQ(threshold(Eigen::MatrixXd::Zero(4, 4), 0.3).num_edges(), 0);
  EXPECT_THROW(threshold(W, -1.0), ParameterError);
}

TEST(ThresholdProperty, AlwaysAcyclicAndDropsOnlyCycleEdges) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::MatrixXd W(6, 6);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) W(i, j) = i == j ? 0.0 : u(rng);
    }
    const Dag g = threshold(W, 0.3);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        if (g.has_edge(i, j)) {
          ASSERT_GE(std::abs(W(i, j)), 0.3);
        }
      }
    }
    // The largest surviving weight is never removed.
    Eigen::Index bi = 0;
    Eigen::Index bj = 0;
    W.cwiseAbs().maxCoeff(&bi, &bj);
    ASSERT_TRUE(g.has_edge(static_cast<int>(bi), static_cast<int>(bj)));
  }
}

TEST(ScoreTest, LeastSquaresMatchesResidualsAndGradient) {
  const Dataset data = sample_linear(make_linear_scm(gen_er(4, 2, 1), 1), 300, 1);
  const Eigen::MatrixXd Xc = data.X.rowwise() - data.X.colwise().mean();
  const SmoothFn f = least_squares_score(centered_covariance(data.X));
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd W = testing::random_weights(gen_er(4, 3, 2), rng) * 0.3;
  EXPECT_NEAR(f(W, nullptr), (Xc - Xc * W).squaredNorm() / (2.0 * 300), 1e-12);
  Eigen::MatrixXd grad;
  f(W, &grad);
  const Eigen::MatrixXd fd = testing::finite_difference([&](const Eigen::MatrixXd& M) { return f(M, nullptr); }, W, 1e-6);
  EXPECT_LT((grad - fd).norm() / grad.norm(), 1e-6);
}

TEST(ScoreTest, GolemAtZeroAndGradient) {
  const Dataset data = sample_linear(make_linear_scm(gen_er(4, 2, 3), 3), 400, 3);
  const Eigen::MatrixXd Xc = data.X.rowwise() - data.X.colwise().mean();
  const Eigen::MatrixXd S = centered_covariance(data.X);
  const SmoothFn ev = golem_score(S, 400, 5.0, true);
  EXPECT_NEAR(ev(Eigen::MatrixXd::Zero(4, 4), nullptr), 2.0 * std::log(Xc.squaredNorm()), 1e-10);
  const SmoothFn nv = golem_score(S, 400, 5.0, false);
  double expected_nv = 0.0;
  for (int j = 0; j < 4; ++j) expected_nv += 0.5 * std::log(Xc.col(j).squaredNorm());
  EXPECT_NEAR(nv(Eigen::MatrixXd::Zero(4, 4), nullptr), expected_nv, 1e-10);

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4, 4);
  W(0, 1) = 0.4;
  W(1, 2) = -0.3;
  W(2, 0) = 0.2;
  W(3, 1) = 0.5;
  for (const SmoothFn& f : {ev, nv}) {
    Eigen::MatrixXd grad;
    f(W, &grad);
    Eigen::MatrixXd fd = testing::finite_difference([&](const Eigen::MatrixXd& M) { return f(M, nullptr); }, W, 1e-6);
    for (int i = 0; i < 4; ++i) fd(i, i) = grad(i, i);
    EXPECT_LT((grad - fd).norm() / grad.norm(), 1e-6);
  }
}

TEST(TwoNodeTest, NotearsRecoversTheEdge) {
  const LearnedGraph lg = notears_linear(two_node_data(1), 0.05, AcyclicityKind::expm_kind(), LearnerConfig::default_alm());
  EXPECT_EQ(lg.dag, kForward);
  EXPECT_GE(lg.W_raw(0, 1), 0.7);
  EXPECT_LE(lg.W_raw(0, 1), 0.9);
  EXPECT_TRUE(lg.converged);
}

TEST(TwoNodeTest, GolemRecoversTheEdge) {
  const LearnedGraph lg = golem(two_node_data(2), 0.05, 5.0, true, LearnerConfig::default_inner());
  EXPECT_EQ(lg.dag, kForward);
}

TEST(TwoNodeTest, NoCurlRecoversTheEdge) {
  LearnerConfig cfg;
  cfg.method = Method::NoCurl;
  const LearnedGraph lg = nocurl(two_node_data(3), 0.05, cfg);
  EXPECT_EQ(lg.dag, kForward);
}

TEST(TwoNodeTest, DagmaRecoversTheEdge) {
  const LearnedGraph lg = dagma_linear(two_node_data(4), 0.05, CentralPathConfig{});
  EXPECT_EQ(lg.dag, kForward);
  EXPECT_NEAR(lg.W_raw(0, 1), 0.8, 0.1);
}

TEST(TwoNodeTest, VarSortnRegressFollowsVariances) {
  const Dataset data = two_node_data(5);
  const LearnedGraph lg = sortnregress(data, SortCriterion::Var, 0.01, LearnerConfig::default_inner());
  EXPECT_EQ(lg.dag, kForward);
  // Standardized data ties on variance, and ties resolve to index order.
  const Eigen::Vector2d tie(1.0, 1.0);
  EXPECT_EQ(criterion_order(tie), (std::vector<int>{0, 1}));
  EXPECT_EQ(criterion_order(Eigen::Vector3d(2.0, 1.0, 2.0)), (std::vector<int>{1, 0, 2}));
  const LearnedGraph z = sortnregress(apply_scale_variant(data), SortCriterion::Var, 0.01, LearnerConfig::default_inner());
  EXPECT_EQ(z.dag, kForward);
}

TEST(NullModelTest, NotearsKeepsPureNoiseSparse) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset data = sample_linear(make_linear_scm(Dag(5), seed), 2000, seed);
    const LearnedGraph lg = notears_linear(data, 0.5, AcyclicityKind::expm_kind(), LearnerConfig::default_alm());
    EXPECT_LE(lg.dag.num_edges(), 1) << seed;
  }
}

TEST(NoCurlMapTest, ReluKillsBackEdges) {
  const Eigen::MatrixXd W = Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4);
  const Eigen::Vector4d p(0.0, 1.0, 2.5, 3.0);
  const Eigen::MatrixXd A = nocurl_map(W, p);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (j > i) {
        EXPECT_DOUBLE_EQ(A(i, j), p(j) - p(i));
      } else {
        EXPECT_EQ(A(i, j), 0.0);
      }
    }
  }
  EXPECT_TRUE(threshold(A, 0.3).num_edges() == 6);
}

TEST(RandomBaselineTest, EdgeCountAndDeterminism) {
  EXPECT_EQ(random_baseline(10, 2, 5).dag.num_edges(), 10);
  EXPECT_EQ(random_baseline(10, 2, 5).dag, random_baseline(10, 2, 5).dag);
  EXPECT_NE(random_baseline(10, 2, 5).dag, random_baseline(10, 2, 6).dag);
}

double mean_random_shd(double k) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    total += shd(random_baseline(10, k, seed).dag, gen_er(10, 2, seed + 5000));
  }
  return total / 100.0;
}

TEST(RandomBaselineTest, ShdMatchesPairCountingOracle) {
  // Independent uniform placements of m1 and m2 edges on P pairs share
  // m1 m2 / P pairs in expectation, half of them reversed:
  // E[SHD] = m1 + m2 - 1.5 m1 m2 / P.
  auto expected = [](double m1, double m2) { return m1 + m2 - 1.5 * m1 * m2 / 45.0; };
  EXPECT_NEAR(mean_random_shd(2.0), expected(10, 10), 1.0);
  EXPECT_NEAR(mean_random_shd(4.5), expected(10, 22), 1.5);
}

TEST(RandomBaselineTest, CoinFlipDensityLandsInPublishedBand) {
  const double mean = mean_random_shd(4.5);
  EXPECT_GE(mean, 18.0);
  EXPECT_LE(mean, 34.0);
}

TEST(SortabilityMechanism, VarSortabilityHighOnVanilla) {
  double total = 0.0;
  int order_changes = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dag g = gen_er(10, 2, seed);
    const Dataset data = sample_linear(make_linear_scm(g, seed + 50), 2000, seed + 90);
    total += sortability(data.X, g, SortCriterion::Var);
    const Dataset z = apply_scale_variant(data);
    EXPECT_EQ(criterion_order(sort_criterion(data.X, SortCriterion::R2)),
              criterion_order(sort_criterion(z.X, SortCriterion::R2)))
        << seed;
    if (criterion_order(sort_criterion(data.X, SortCriterion::Var)) !=
        criterion_order(sort_criterion(z.X, SortCriterion::Var))) {
      ++order_changes;
    }
  }
  EXPECT_GE(total / 10.0, 0.7);
  EXPECT_EQ(order_changes, 10);
}

TEST(LearnerProperty, EveryMethodReturnsAnAcyclicGraph) {
  const Dag g = gen_er(6, 4, 2);
  const Dataset data = compose({{ScenarioKind::Unfaithful, {}}}, make_linear_scm(g, 2), 300, 2);
  for (Method m : {Method::Notears, Method::GolemEV, Method::GolemNV, Method::NoCurl, Method::Dagma,
                   Method::VarSortnRegress, Method::R2SortnRegress, Method::Random}) {
    LearnerConfig cfg;
    cfg.method = m;
    cfg.lambda1 = 0.01;
    const LearnedGraph lg = run_learner(data, cfg, 3);
    EXPECT_TRUE(is_acyclic(lg.dag.adjacency())) << to_string(m);
    EXPECT_EQ(lg.method, m);
    EXPECT_GE(lg.runtime_s, 0.0);
    const auto doc = nlohmann::json::parse(lg.to_json());
    EXPECT_EQ(doc.at("method").get<std::string>(), to_string(m));
  }
}

TEST(SortnRegressTest, AdaptiveBicIgnoresLambda) {
  const Dataset data = sample_linear(make_linear_scm(gen_er(6, 2, 4), 4), 1000, 4);
  const InnerConfig inner = LearnerConfig::default_inner();
  const LearnedGraph a = sortnregress(data, SortCriterion::Var, 0.01, inner, SortRegression::AdaptiveLassoBic);
  const LearnedGraph b = sortnregress(data, SortCriterion::Var, 2.0, inner, SortRegression::AdaptiveLassoBic);
  EXPECT_EQ(a.dag, b.dag);
  EXPECT_EQ(parse_sort_regression(to_string(SortRegression::AdaptiveLassoBic)), SortRegression::AdaptiveLassoBic);
}

TEST(ConfigTest, RejectsBadHyperparameters) {
  LearnerConfig cfg;
  cfg.lambda1 = -1.0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = LearnerConfig{};
  cfg.tau = -0.1;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

}  // namespace
}  // namespace dagbench
