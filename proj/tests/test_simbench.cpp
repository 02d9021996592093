#include <gtest/gtest.h>

#include "hsepsr/learner.hpp"
#include "hsepsr/oracle.hpp"
#include "hsepsr/simbench.hpp"
#include "test_util.hpp"

using namespace hsepsr;

TEST(Simulator, OriginIsEquilibrium) {
  SynthConfig c;
  c.n_steps = 200;
  const Trajectory t = integrate_system(c, Eigen::VectorXd::Zero(200));
  EXPECT_EQ(t.observations, Eigen::MatrixXd::Zero(200, 1));
  EXPECT_EQ(synth_derivative(Eigen::Vector2d::Zero(), 0.0), Eigen::Vector2d::Zero());
}

TEST(Simulator, DerivativeMatchesEquations) {
  const Eigen::Vector2d x(0.3, -0.2);
  const double u = 0.1;
  const double x1 = x[0];
  const double f1 = x[1] - 0.1 * std::cos(x1) * (5 * x1 - 4 * std::pow(x1, 3) + std::pow(x1, 5)) -
                    0.5 * std::cos(x1) * u;
  const double f2 = -65 * x1 + 50 * std::pow(x1, 3) - 15 * std::pow(x1, 5) - x[1] - 100 * u;
  const Eigen::Vector2d d = synth_derivative(x, u);
  EXPECT_NEAR(d[0], f1, 1e-14);
  EXPECT_NEAR(d[1], f2, 1e-12);
}

TEST(Simulator, SeededAndBounded) {
  SynthConfig c;
  c.seed = 42;
  c.n_steps = 300;
  const Trajectory a = simulate_system(c), b = simulate_system(c);
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_GE(a.actions.minCoeff(), -0.5);
  EXPECT_LE(a.actions.maxCoeff(), 0.5);
  c.seed = 43;
  EXPECT_NE(simulate_system(c).actions, a.actions);
  EXPECT_TRUE(a.observations.allFinite());
}

TEST(Simulator, SubstepHalvingConverges) {
  SynthConfig c;
  c.seed = 5;
  c.n_steps = 100;
  const Eigen::VectorXd u = draw_policy(c);
  Eigen::Vector2d coarse, fine;
  c.substeps = 10;
  integrate_system(c, u, &coarse);
  c.substeps = 20;
  integrate_system(c, u, &fine);
  EXPECT_LE((coarse - fine).norm(), 1e-6 * fine.norm());
}

TEST(Simulator, InvalidConfigAndDivergence) {
  SynthConfig c;
  c.n_steps = 0;
  EXPECT_THROW(simulate_system(c), std::invalid_argument);
  c = SynthConfig{};
  c.n_steps = 50;
  c.substeps = 1;
  c.initial_state = Eigen::Vector2d(3.0, 0.0);
  EXPECT_THROW(integrate_system(c, Eigen::VectorXd::Zero(50)), std::runtime_error);
}

TEST(Protocol, ExtentsAndHorizons) {
  const auto e = subsampled_extents(1100, 100);
  ASSERT_FALSE(e.empty());
  EXPECT_EQ(e.front(), 101);
  EXPECT_EQ(e[1] - e[0], 10);
  EXPECT_LE(e.back() + 100, 1100);
  EXPECT_EQ(e.size(), 90u);
  EXPECT_EQ(full_horizons(100).size(), 100u);
  EXPECT_EQ(default_horizons().back(), 100);
}

TEST(Protocol, BaselinesMatchDefinitions) {
  SynthConfig c;
  c.seed = 9;
  c.n_steps = 600;
  const Trajectory all = simulate_system(c);
  const Trajectory tr = all.slice(0, 200), te = all.slice(200, 400);
  const double mu = tr.observations.mean();
  const auto extents = subsampled_extents(te.length(), 20, 101, 10, 300);
  std::vector<Eigen::Index> horizons{5, 1, 20, 1};

  MeanBaseline mean(tr);
  PreviousBaseline prev;
  PerfectPredictor perfect;
  Predictor* ps[] = {&mean, &prev, &perfect};
  const MseTable t = run_protocol(ps, te, extents, horizons);
  EXPECT_EQ(t.horizons, (std::vector<Eigen::Index>{1, 5, 20}));
  EXPECT_EQ(t.n_extents, static_cast<Eigen::Index>(extents.size()));
  EXPECT_EQ(t.models, (std::vector<std::string>{"mean", "prev", "perfect"}));

  for (std::size_t k = 0; k < t.horizons.size(); ++k) {
    const Eigen::Index h = t.horizons[k];
    double m_err = 0.0, p_err = 0.0;
    for (Eigen::Index t1 : extents) {
      const double y = te.observations(t1 + h - 1, 0);
      m_err += (y - mu) * (y - mu);
      p_err += (y - te.observations(t1 - 1, 0)) * (y - te.observations(t1 - 1, 0));
    }
    const double n = static_cast<double>(extents.size());
    EXPECT_NEAR(t.row("mean")[k], m_err / n, 1e-12);
    EXPECT_NEAR(t.row("prev")[k], p_err / n, 1e-12);
    EXPECT_EQ(t.row("perfect")[k], 0.0);
  }
  EXPECT_THROW((void)t.row("nope"), std::out_of_range);

  const Eigen::Index too_far[] = {395};
  EXPECT_THROW(run_protocol(ps, te, too_far, {10}), std::out_of_range);
  Trajectory empty;
  empty.actions.resize(0, 1);
  empty.observations.resize(0, 1);
  EXPECT_THROW(MeanBaseline bad(empty), std::invalid_argument);
}

TEST(Protocol, HsePsrPredictorMatchesManualRollout) {
  SynthConfig c;
  c.seed = 2;
  c.n_steps = 300;
  const Trajectory all = simulate_system(c);
  TrainingOptions o;
  o.windows = {4, 4};
  o.regularizer = 1e-3;
  const auto model = std::make_shared<const HsePsrModel>(train(all.slice(0, 80), o));
  const Trajectory te = all.slice(100, 200);
  HsePsrPredictor p(model);
  const Eigen::Index ex[] = {30, 55};
  const Eigen::Index hs[] = {1, 4, 9};
  const auto out = p.predict(te, ex, hs);
  const FilterRun run = filter_trajectory(*model, feasible_state(*model), te.actions, te.observations);
  for (std::size_t k = 0; k < 2; ++k) {
    const Eigen::Index t1 = ex[k];
    const Eigen::MatrixXd fut = te.actions.middleRows(t1, 9);
    const Eigen::MatrixXd r =
        rollout_predict(*model, run.states[static_cast<std::size_t>(t1 - 1)], fut, {1, 4, 9});
    EXPECT_LT(test::rel_diff(out[k], r), 1e-10);
  }
}

TEST(Oracle, SystemTables) {
  const auto sys = DiscreteOracleSystem::default_system();
  EXPECT_NO_THROW(sys.validate());
  EXPECT_NEAR(sys.stationary().sum(), 1.0, 1e-12);
  const Trajectory t = sys.sample(200, 1);
  EXPECT_TRUE(t.symbolic);
  const Eigen::MatrixXd p = sys.one_step_predictions(t);
  for (Eigen::Index r = 0; r < p.rows(); ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
  DiscreteOracleSystem bad = sys;
  bad.emission(0, 0) += 0.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Oracle, BayesFilterByHandOnCycle) {
  // A 3-cycle emitted exactly: after the first observation the next symbol is
  // known with certainty.
  const auto sys = DiscreteOracleSystem::deterministic_cycle();
  const Trajectory t = sys.sample(12, 4);
  const Eigen::MatrixXd p = sys.one_step_predictions(t);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p(0, k), 1.0 / 3.0, 1e-12);
  for (Eigen::Index r = 1; r < t.length(); ++r) {
    EXPECT_NEAR(p(r, std::lround(t.observations(r, 0))), 1.0, 1e-12);
    EXPECT_EQ(std::lround(t.observations(r, 0)), (std::lround(t.observations(r - 1, 0)) + 1) % 3);
  }
}

TEST(Oracle, ExplicitFilterOnCycleIsOneHot) {
  const auto sys = DiscreteOracleSystem::deterministic_cycle();
  TrainingOptions o;
  o.windows = {2, 2};
  o.regularizer = 1e-10;
  o.kernels = test::delta_kernels();
  const HsePsrModel m = train(sys.sample(60, 3), o);
  const ExplicitHsePsr ex(m.windowed, o.regularizer, sys.actions(), 3);
  const Trajectory q = sys.sample(25, 8);
  Eigen::VectorXd s = ex.initial_state();
  for (Eigen::Index t = 0; t + 2 < q.length(); ++t) {
    if (t >= 3) {
      const std::vector<int> w{int(q.actions(t, 0)), int(q.actions(t + 1, 0))};
      const Eigen::VectorXd p = ex.observation_distribution(s, w);
      const Eigen::VectorXd truth = Eigen::VectorXd::Unit(3, std::lround(q.observations(t, 0)));
      EXPECT_LT((p - truth).cwiseAbs().maxCoeff(), 1e-6) << t;
    }
    s = ex.update(s, int(q.actions(t, 0)), int(q.observations(t, 0)));
  }
}

TEST(Oracle, TotalVariation) {
  Eigen::VectorXd p(3), q(3);
  p << 0.5, 0.5, 0.0;
  q << 0.0, 0.5, 0.5;
  EXPECT_DOUBLE_EQ(total_variation(p, q), 0.5);
  EXPECT_DOUBLE_EQ(total_variation(p, p), 0.0);
}
