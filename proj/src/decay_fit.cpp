#include "nls/decay_fit.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>

#include "nls/check.hpp"

namespace nls {

FitResult fit_decay(const std::vector<double>& t, const std::vector<double>& value,
                    DecayModel model, double t_min, double t_max) {
  require(t.size() == value.size(), "time and value series differ in length");
  require(t_min > 0.0 && t_max >= 10.0 * t_min,
          "fit window must span at least a decade with t_min > 0");

  std::vector<int> idx;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_min && t[i] <= t_max) idx.push_back(static_cast<int>(i));
  const bool with_log = (model == DecayModel::PowerWithLog);
  const int ncoef = with_log ? 3 : 2;
  require(static_cast<int>(idx.size()) >= ncoef + 1,
          "fit window holds too few samples");

  const int m = static_cast<int>(idx.size());
  Eigen::MatrixXd X(m, ncoef);
  Eigen::VectorXd y(m);
  for (int r = 0; r < m; ++r) {
    double ti = t[idx[r]], vi = value[idx[r]];
    require(std::isfinite(vi) && vi > 0.0, "decay fit needs positive finite values");
    X(r, 0) = 1.0;
    X(r, 1) = std::log(1.0 + ti);
    if (with_log) X(r, 2) = std::log(std::log(2.0 + ti));
    y(r) = std::log(vi);
  }

  Eigen::MatrixXd XtX = X.transpose() * X;
  Eigen::VectorXd beta = XtX.ldlt().solve(X.transpose() * y);
  Eigen::VectorXd resid = y - X * beta;
  double dof = std::max(1, m - ncoef);
  double s2 = resid.squaredNorm() / dof;
  Eigen::MatrixXd cov = s2 * XtX.inverse();

  FitResult out;
  out.logC = beta(0);
  out.B = -beta(1);
  out.A = with_log ? beta(2) : 0.0;
  out.b_halfwidth = 2.0 * std::sqrt(std::max(0.0, cov(1, 1)));
  out.rms_residual = std::sqrt(resid.squaredNorm() / m);
  out.t_min = t_min;
  out.t_max = t_max;
  out.n_points = m;
  out.with_log = with_log;
  return out;
}

void write_decay_csv(const std::string& path, const DecayRecord& rec) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  ensure(fp != nullptr, "cannot open decay csv for writing: " + path);
  std::fprintf(fp, "t,norm,fitted_envelope\n");
  for (std::size_t i = 0; i < rec.t.size(); ++i) {
    double env = std::exp(rec.fit_pure.logC) *
                 std::pow(1.0 + rec.t[i], -rec.fit_pure.B);
    std::fprintf(fp, "%.17g,%.17g,%.17g\n", rec.t[i], rec.value[i], env);
  }
  std::fclose(fp);
}

}  // namespace nls
