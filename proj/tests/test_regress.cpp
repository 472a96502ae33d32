#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fundshift/regress.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fundshift;
using testing_support::fund;
using testing_support::make_sample;
using testing_support::regime;

namespace {

oracle::Matrix to_rows(const Eigen::MatrixXd& X) {
  oracle::Matrix out(static_cast<std::size_t>(X.rows()), std::vector<double>(static_cast<std::size_t>(X.cols())));
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    for (Eigen::Index c = 0; c < X.cols(); ++c) out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = X(r, c);
  return out;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void random_problem(std::mt19937_64& rng, std::size_t n, std::size_t k, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  std::normal_distribution<double> z(0.0, 1.0);
  X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    X(static_cast<Eigen::Index>(t), 0) = 1.0;
    for (std::size_t j = 1; j < k; ++j) X(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = 0.01 * z(rng);
    y(static_cast<Eigen::Index>(t)) = 0.0003 + 0.01 * z(rng);
  }
}

}  // namespace

TEST(Ols, ExactLine) {
  Eigen::MatrixXd X(10, 2);
  Eigen::VectorXd y(10);
  for (int t = 0; t < 10; ++t) {
    X(t, 0) = 1.0;
    X(t, 1) = t;
    y(t) = 3.0 + 2.0 * t;
  }
  auto fit = ols(X, y);
  EXPECT_NEAR(fit.coef(0), 3.0, 1e-12);
  EXPECT_NEAR(fit.coef(1), 2.0, 1e-12);
  EXPECT_NEAR(fit.ssr, 0.0, 1e-20);
  EXPECT_EQ(fit.dof, 8u);
}

TEST(Ols, RegressOnItself) {
  Eigen::MatrixXd X(20, 2);
  Eigen::VectorXd y(20);
  for (int t = 0; t < 20; ++t) {
    X(t, 0) = 1.0;
    X(t, 1) = std::sin(t * 0.7);
    y(t) = X(t, 1);
  }
  auto fit = ols(X, y);
  EXPECT_NEAR(fit.coef(0), 0.0, 1e-14);
  EXPECT_NEAR(fit.coef(1), 1.0, 1e-14);
}

TEST(Ols, MatchesNormalEquationsOracle) {
  std::mt19937_64 rng(2024);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  random_problem(rng, 50, 4, X, y);
  auto fit = ols(X, y);
  auto ref = oracle::normal_equations(to_rows(X), to_vec(y));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_LE(oracle::relative_error(fit.coef(static_cast<Eigen::Index>(j)), ref[j]), 1e-8) << "coef " << j;
  }
}

TEST(Ols, RejectsRankDeficientAndShortDesigns) {
  Eigen::MatrixXd X(30, 3);
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(30, 0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    X(t, 0) = 1.0;
    X(t, 1) = t;
    X(t, 2) = 2.0 * t;
  }
  try {
    ols(X, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::rank_deficient);
  }
  Eigen::MatrixXd Xs = Eigen::MatrixXd::Random(3, 3);
  EXPECT_THROW(ols(Xs, Eigen::VectorXd::Ones(3)), Error);
}

TEST(Significance, StudentTCritical) {
  // Tabulated two-sided 5% critical value for 200 dof is 1.972.
  EXPECT_NEAR(t_critical(0.05, 200), 1.972, 5e-4);
  EXPECT_NEAR(t_critical(0.05, 10), 2.228, 5e-4);
  EXPECT_NEAR(t_critical(0.01, 30), 2.750, 5e-4);

  OlsResult r;
  r.dof = 200;
  r.tstat = Eigen::VectorXd(3);
  r.tstat << 2.5, 0.0, -1.9;
  auto sig = significance(r, 0.05);
  EXPECT_TRUE(sig[0]);
  EXPECT_FALSE(sig[1]);
  EXPECT_FALSE(sig[2]);
  EXPECT_THROW(significance(r, 1.0), Error);
}

TEST(Significance, MonteCarloSizeNearNominal) {
  int hits = 0;
  const int runs = 1000;
  for (int seed = 0; seed < runs; ++seed) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 1);
    std::normal_distribution<double> z(0.0, 1.0);
    const int n = 120;
    Eigen::MatrixXd X(n, 4);
    Eigen::VectorXd y(n);
    for (int t = 0; t < n; ++t) {
      X(t, 0) = 1.0;
      for (int j = 1; j < 4; ++j) X(t, j) = z(rng);
      y(t) = z(rng);
    }
    const auto fit = ols(X, y);
    if (significance(fit, 0.05)[static_cast<std::size_t>(Regressor::Smb)]) ++hits;
  }
  const double rate = static_cast<double>(hits) / runs;
  EXPECT_NEAR(rate, 0.05, 0.02);
}

TEST(FitFf3, PlantedCoefficientsWithoutNoise) {
  auto s = make_sample(fund("F", {regime(400, 0.5, -0.3, 0.0, 1.0, 0.0002)}), {}, 1);
  auto fit = fit_ff3(s, full_window(s));
  EXPECT_NEAR(fit.coef_of(Regressor::Intercept), 0.0002, 1e-12);
  EXPECT_NEAR(fit.coef_of(Regressor::MktRf), 1.0, 1e-10);
  EXPECT_NEAR(fit.coef_of(Regressor::Smb), 0.5, 1e-10);
  EXPECT_NEAR(fit.coef_of(Regressor::Hml), -0.3, 1e-10);
  EXPECT_NEAR(fit.ssr, 0.0, 1e-24);
  EXPECT_EQ(fit.spec.names(), (std::vector<std::string>{"alpha", "mkt_rf", "smb", "hml"}));
}

TEST(FitFf3, NoisyCoefficientsWithinThreeOracleStandardErrors) {
  const double sigma = 0.001;
  const std::vector<double> planted{0.0002, 1.0, 0.5, -0.3};
  auto s = make_sample(fund("F", {regime(750, 0.5, -0.3, sigma, 1.0, 0.0002)}), {}, 77);
  auto fit = fit_ff3(s, full_window(s));
  const auto diag = oracle::gram_inverse_diagonal(to_rows(factor_design(s, full_window(s), false)));
  for (std::size_t j = 0; j < 4; ++j) {
    const double oracle_se = sigma * std::sqrt(diag[j]);
    EXPECT_LE(std::fabs(fit.coef[j] - planted[j]), 3.0 * oracle_se) << "coef " << j;
  }
}

TEST(FitFf3, ShortWindowFails) {
  auto s = make_sample(fund("F", {regime(100, 0.5, -0.3, 0.001)}), {}, 1);
  EXPECT_THROW(fit_ff3(s, Window{10, 13}), Error);
  EXPECT_NO_THROW(fit_ff3(s, Window{10, 14}));
}

TEST(FitAgt, FundEqualToBenchmark) {
  const Loadings same{0.0, 1.0, 0.3, 0.2, 0.0};
  auto s = make_sample(fund("F", {regime(300, 0.3, 0.2, 0.0, 1.0)}), same, 4);
  auto fit = fit_agt(s, full_window(s));
  for (double c : fit.coef) EXPECT_NEAR(c, 0.0, 1e-12);
  EXPECT_NEAR(fit.ssr, 0.0, 1e-28);
}

TEST(FitAgt, PlantedSmbTilt) {
  const Loadings bench{0.0, 1.0, 0.0, 0.2, 0.0};
  auto s = make_sample(fund("F", {regime(300, 0.4, 0.2, 0.0, 1.0)}), bench, 4);
  auto fit = fit_agt(s, full_window(s));
  EXPECT_NEAR(fit.coef_of(Regressor::Smb), 0.4, 1e-10);
  EXPECT_NEAR(fit.coef_of(Regressor::Intercept), 0.0, 1e-12);
  EXPECT_NEAR(fit.coef_of(Regressor::MktRf), 0.0, 1e-10);
  EXPECT_NEAR(fit.coef_of(Regressor::Hml), 0.0, 1e-10);
}

TEST(FitAgt, NoisyTiltWithinThreeOracleStandardErrors) {
  const double sigma = 0.002;
  const Loadings bench{0.0, 1.0, 0.1, 0.2, 0.0};
  auto s = make_sample(fund("F", {regime(750, 0.5, 0.2, sigma, 1.0)}), bench, 19);
  auto fit = fit_agt(s, full_window(s));
  const std::vector<double> planted{0.0, 0.0, 0.4, 0.0};
  const auto diag = oracle::gram_inverse_diagonal(to_rows(factor_design(s, full_window(s), false)));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_LE(std::fabs(fit.coef[j] - planted[j]), 3.0 * sigma * std::sqrt(diag[j])) << "coef " << j;
  }
}

TEST(FitCarhart, PlantedMomentum) {
  auto s = make_sample(fund("F", {regime(300, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2)}), {}, 8);
  auto fit = fit_carhart(s, full_window(s));
  ASSERT_EQ(fit.k, 5u);
  EXPECT_NEAR(fit.coef_of(Regressor::Mom), 0.2, 1e-10);
  for (auto r : {Regressor::Intercept, Regressor::MktRf, Regressor::Smb, Regressor::Hml}) {
    EXPECT_NEAR(fit.coef_of(r), 0.0, 1e-10);
  }
}

TEST(FitCarhart, NeedsMomentum) {
  auto s = make_sample(fund("F", {regime(300, 0.2, 0.2, 0.001)}), {}, 8, {}, 0.0002, false);
  try {
    fit_carhart(s, full_window(s));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_factor);
  }
}

TEST(RegressProperties, NestingOrthogonalityAndMinimality) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = make_sample(fund("F", {regime(200, 0.3, -0.2, 0.004, 0.9, 0.0001, 0.1)}), {0, 1, 0.1, 0, 0}, seed);
    const Window w{static_cast<std::size_t>(seed), 150 + seed};
    auto ff3 = fit_ff3(s, w);
    auto car = fit_carhart(s, w);
    EXPECT_LE(car.ssr, ff3.ssr);

    for (Model m : {Model::FF3, Model::AGT, Model::Carhart}) {
      const auto X = factor_design(s, w, m == Model::Carhart);
      const auto y = model_response(s, w, m);
      const auto fit = ols(X, y);
      const Eigen::VectorXd e = y - X * fit.coef;
      EXPECT_LE((X.transpose() * e).cwiseAbs().maxCoeff(), 1e-8 * y.norm());
      for (Eigen::Index j = 0; j < fit.coef.size(); ++j) {
        for (double d : {-1e-3, 1e-3}) {
          Eigen::VectorXd b = fit.coef;
          b(j) += d;
          EXPECT_GE((y - X * b).squaredNorm(), fit.ssr);
        }
      }
    }
  }
}

TEST(RegressProperties, ScaleEquivariance) {
  auto s = make_sample(fund("F", {regime(400, 0.3, -0.2, 0.01, 1.0, 0.0002)}), {}, 31);
  const auto X = factor_design(s, full_window(s), false);
  const auto y = model_response(s, full_window(s), Model::FF3);
  for (SeMethod method : {SeMethod::Homoskedastic, SeMethod::NeweyWest}) {
    OlsOptions opts;
    opts.se_method = method;
    const auto base = ols(X, y, opts);
    for (double c : {0.01, 3.0, 250.0}) {
      const auto scaled = ols(X, c * y, opts);
      for (Eigen::Index j = 0; j < 4; ++j) {
        EXPECT_NEAR(scaled.coef(j), c * base.coef(j), 1e-10 * std::fabs(c * base.coef(j)) + 1e-18);
        EXPECT_NEAR(scaled.se(j), c * base.se(j), 1e-10 * c * base.se(j));
        EXPECT_NEAR(scaled.tstat(j), base.tstat(j), 1e-9 * std::fabs(base.tstat(j)) + 1e-12);
      }
      EXPECT_EQ(significance(scaled, 0.05), significance(base, 0.05));
    }
  }
}

TEST(NeweyWest, LagRuleAndHandComputedCovariance) {
  EXPECT_EQ(newey_west_lags(100), 4u);
  EXPECT_EQ(newey_west_lags(1000), 6u);
  EXPECT_EQ(newey_west_lags(4300), 9u);

  std::mt19937_64 rng(5);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  random_problem(rng, 60, 3, X, y);
  OlsOptions opts;
  opts.se_method = SeMethod::NeweyWest;
  const auto fit = ols(X, y, opts);

  // Bartlett-weighted sandwich written out term by term.
  const std::size_t n = 60, k = 3, L = newey_west_lags(n);
  const auto b = oracle::normal_equations(to_rows(X), to_vec(y));
  std::vector<double> e(n);
  for (std::size_t t = 0; t < n; ++t) {
    double f = 0;
    for (std::size_t j = 0; j < k; ++j) f += X(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) * b[j];
    e[t] = y(static_cast<Eigen::Index>(t)) - f;
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t lag = t > s ? t - s : s - t;
      if (lag > L) continue;
      const double w = 1.0 - static_cast<double>(lag) / static_cast<double>(L + 1);
      S += w * e[t] * e[s] * X.row(static_cast<Eigen::Index>(t)).transpose() * X.row(static_cast<Eigen::Index>(s));
    }
  const Eigen::MatrixXd G = (X.transpose() * X).inverse();
  const Eigen::MatrixXd V = G * S * G;
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(fit.se(j), std::sqrt(V(j, j)), 1e-9 * std::sqrt(V(j, j)));
}
