#pragma once

// OLS with inference and the FF3 / Carhart / benchmark-adjusted (AGT) factor fits.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "fundshift/error.hpp"
#include "fundshift/marketdata.hpp"

namespace fundshift {

enum class Model { FF3, Carhart, AGT };

inline std::string_view to_string(Model m) {
  switch (m) {
    case Model::FF3: return "FF3";
    case Model::Carhart: return "CARHART";
    case Model::AGT: return "AGT";
  }
  return "?";
}

/// Column positions in every factor design. MOM exists only for Carhart.
enum class Regressor : std::size_t { Intercept = 0, MktRf = 1, Smb = 2, Hml = 3, Mom = 4 };

struct DesignSpec {
  Model model = Model::FF3;
  bool include_mom = false;

  static DesignSpec of(Model m) { return {m, m == Model::Carhart}; }

  std::size_t k() const { return include_mom ? 5 : 4; }

  std::vector<std::string> names() const {
    std::vector<std::string> out{"alpha", "mkt_rf", "smb", "hml"};
    if (include_mom) out.emplace_back("mom");
    return out;
  }
};

/// Inclusive index range [start, end] on an aligned sample.
struct Window {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start + 1; }
  friend bool operator==(const Window&, const Window&) = default;
};

inline Window full_window(const AlignedSample& s) { return {0, s.n() - 1}; }

enum class SeMethod { Homoskedastic, NeweyWest };

struct OlsOptions {
  SeMethod se_method = SeMethod::Homoskedastic;
  /// Largest accepted condition number of X'X.
  double max_gram_condition = 1e12;
};

struct OlsResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  Eigen::VectorXd tstat;
  double ssr = 0.0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t dof = 0;
};

/// Bartlett-kernel lag count floor(4 (n/100)^(2/9)).
inline std::size_t newey_west_lags(std::size_t n) {
  return static_cast<std::size_t>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
}

/// Least squares through a Householder QR of X; (X'X)^-1 is formed from R only for the standard errors.
inline OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const OlsOptions& opts = {}) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto k = static_cast<std::size_t>(X.cols());
  if (static_cast<std::size_t>(y.size()) != n) {
    throw Error(Errc::malformed_input, "response length does not match design rows");
  }
  if (n <= k) {
    throw Error(Errc::window_too_short, std::to_string(n) + " observations for " + std::to_string(k) + " regressors");
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || (smax / smin) * (smax / smin) > opts.max_gram_condition) {
    throw Error(Errc::rank_deficient, "design matrix is rank deficient or ill-conditioned");
  }

  OlsResult out;
  out.n = n;
  out.k = k;
  out.dof = n - k;
  out.coef = qr.solve(y);
  const Eigen::VectorXd resid = y - X * out.coef;
  out.ssr = resid.squaredNorm();

  // (X'X)^-1 = R^-1 R^-T
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                                      static_cast<Eigen::Index>(k)));
  const Eigen::MatrixXd gram_inv = Rinv * Rinv.transpose();

  Eigen::VectorXd var(k);
  if (opts.se_method == SeMethod::Homoskedastic) {
    const double s2 = out.ssr / static_cast<double>(out.dof);
    var = s2 * gram_inv.diagonal();
  } else {
    const Eigen::MatrixXd scores = X.array().colwise() * resid.array();
    Eigen::MatrixXd meat = scores.transpose() * scores;
    const std::size_t lags = std::min(newey_west_lags(n), n - 1);
    for (std::size_t l = 1; l <= lags; ++l) {
      const double w = 1.0 - static_cast<double>(l) / static_cast<double>(lags + 1);
      const auto rows = static_cast<Eigen::Index>(n - l);
      const Eigen::MatrixXd cross =
          scores.bottomRows(rows).transpose() * scores.topRows(rows);
      meat += w * (cross + cross.transpose());
    }
    var = (gram_inv * meat * gram_inv).diagonal();
  }
  out.se = var.cwiseMax(0.0).cwiseSqrt();

  out.tstat.resize(static_cast<Eigen::Index>(k));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(k); ++j) {
    if (out.se(j) > 0.0) {
      out.tstat(j) = out.coef(j) / out.se(j);
    } else if (out.coef(j) == 0.0) {
      out.tstat(j) = 0.0;
    } else {
      out.tstat(j) = std::copysign(std::numeric_limits<double>::infinity(), out.coef(j));
    }
  }
  return out;
}

/// Two-sided Student-t critical value for `level` with `dof` degrees of freedom.
inline double t_critical(double level, std::size_t dof) {
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, level / 2.0));
}

inline double two_sided_pvalue(double tstat, std::size_t dof) {
  if (std::isinf(tstat)) return 0.0;
  boost::math::students_t dist(static_cast<double>(dof));
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(tstat)));
}

inline std::vector<bool> significance(const OlsResult& fit, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::malformed_input, "significance level must lie in (0, 1)");
  const double crit = t_critical(level, fit.dof);
  std::vector<bool> out(static_cast<std::size_t>(fit.tstat.size()));
  for (Eigen::Index j = 0; j < fit.tstat.size(); ++j) out[static_cast<std::size_t>(j)] = std::fabs(fit.tstat(j)) > crit;
  return out;
}

struct FitOptions {
  double sig_level = 0.05;
  OlsOptions ols;
};

struct RegressionFit {
  DesignSpec spec;
  Window window;
  std::vector<double> coef;
  std::vector<double> se;
  std::vector<double> tstat;
  std::vector<double> pvalue;
  std::vector<bool> significant;
  double ssr = 0.0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t dof = 0;

  double coef_of(Regressor r) const { return coef.at(static_cast<std::size_t>(r)); }
  double tstat_of(Regressor r) const { return tstat.at(static_cast<std::size_t>(r)); }
  bool significant_of(Regressor r) const { return significant.at(static_cast<std::size_t>(r)); }
};

/// [1, mkt_rf, smb, hml(, mom)] rows for the window.
inline Eigen::MatrixXd factor_design(const AlignedSample& s, Window w, bool include_mom) {
  if (include_mom && !s.has_mom()) throw Error(Errc::missing_factor, "sample has no momentum factor");
  if (w.end >= s.n() || w.start > w.end) throw Error(Errc::window_too_short, "window outside sample");
  const auto rows = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd X(rows, include_mom ? 5 : 4);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = w.start + static_cast<std::size_t>(r);
    X(r, 0) = 1.0;
    X(r, 1) = s.mkt_rf[t];
    X(r, 2) = s.smb[t];
    X(r, 3) = s.hml[t];
    if (include_mom) X(r, 4) = (*s.mom)[t];
  }
  return X;
}

/// Fund excess return for FF3/Carhart, fund minus benchmark for AGT.
inline Eigen::VectorXd model_response(const AlignedSample& s, Window w, Model m) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(w.size()));
  for (std::size_t t = w.start; t <= w.end; ++t) {
    const double sub = m == Model::AGT ? s.r_bench[t] : s.rf[t];
    y(static_cast<Eigen::Index>(t - w.start)) = s.r_fund[t] - sub;
  }
  return y;
}

inline RegressionFit fit_model(const AlignedSample& s, Window w, Model m, const FitOptions& opts = {}) {
  const DesignSpec spec = DesignSpec::of(m);
  if (w.end >= s.n() || w.start > w.end) throw Error(Errc::window_too_short, "window outside sample");
  if (w.size() < spec.k() + 1) {
    throw Error(Errc::window_too_short,
                "window of " + std::to_string(w.size()) + " observations for " + std::to_string(spec.k()) + " regressors");
  }
  const OlsResult core = ols(factor_design(s, w, spec.include_mom), model_response(s, w, m), opts.ols);
  RegressionFit fit;
  fit.spec = spec;
  fit.window = w;
  fit.coef.assign(core.coef.data(), core.coef.data() + core.coef.size());
  fit.se.assign(core.se.data(), core.se.data() + core.se.size());
  fit.tstat.assign(core.tstat.data(), core.tstat.data() + core.tstat.size());
  for (double t : fit.tstat) fit.pvalue.push_back(two_sided_pvalue(t, core.dof));
  fit.significant = significance(core, opts.sig_level);
  fit.ssr = core.ssr;
  fit.n = core.n;
  fit.k = core.k;
  fit.dof = core.dof;
  return fit;
}

inline RegressionFit fit_ff3(const AlignedSample& s, Window w, const FitOptions& opts = {}) {
  return fit_model(s, w, Model::FF3, opts);
}

inline RegressionFit fit_agt(const AlignedSample& s, Window w, const FitOptions& opts = {}) {
  return fit_model(s, w, Model::AGT, opts);
}

inline RegressionFit fit_carhart(const AlignedSample& s, Window w, const FitOptions& opts = {}) {
  if (!s.has_mom()) throw Error(Errc::missing_factor, "Carhart fit needs a momentum factor");
  return fit_model(s, w, Model::Carhart, opts);
}

}  // namespace fundshift
