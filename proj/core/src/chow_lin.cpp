#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fincon/dataio.hpp"
#include "fincon/error.hpp"

namespace fincon {

namespace {

constexpr Eigen::Index kMonthsPerYear = 12;

void check_inputs(const Eigen::VectorXd& annual, const Eigen::VectorXd& indicator) {
  if (annual.size() < 1) throw ValidationError("chow_lin: empty annual series");
  if (indicator.size() < annual.size() * kMonthsPerYear) {
    throw ValidationError("chow_lin: indicator has " + std::to_string(indicator.size()) +
                          " months but the annual span needs " +
                          std::to_string(annual.size() * kMonthsPerYear));
  }
  if (!annual.allFinite()) throw ValidationError("chow_lin: annual series contains non-finite values");
  if (!indicator.allFinite()) throw ValidationError("chow_lin: indicator contains non-finite values");
}

}  // namespace

ChowLinResult chow_lin_fixed_rho(const Eigen::VectorXd& annual, const Eigen::VectorXd& indicator, double rho) {
  check_inputs(annual, indicator);
  if (!(std::abs(rho) < 1.0)) throw ValidationError("chow_lin: |rho| must be below 1");
  const Eigen::Index years = annual.size();
  const Eigen::Index months = indicator.size();

  Eigen::MatrixXd x(months, 2);
  x.col(0).setOnes();
  x.col(1) = indicator;

  // V C' where V_ij = rho^|i-j| / (1 - rho^2) and C averages each year.
  const double scale = 1.0 / (1.0 - rho * rho);
  Eigen::MatrixXd vc = Eigen::MatrixXd::Zero(months, years);
  for (Eigen::Index i = 0; i < months; ++i) {
    for (Eigen::Index y = 0; y < years; ++y) {
      double acc = 0.0;
      for (Eigen::Index m = y * kMonthsPerYear; m < (y + 1) * kMonthsPerYear; ++m) {
        acc += std::pow(rho, static_cast<double>(std::abs(i - m)));
      }
      vc(i, y) = scale * acc / static_cast<double>(kMonthsPerYear);
    }
  }
  Eigen::MatrixXd cvc(years, years);
  Eigen::MatrixXd cx(years, 2);
  for (Eigen::Index y = 0; y < years; ++y) {
    cvc.row(y) = vc.middleRows(y * kMonthsPerYear, kMonthsPerYear).colwise().mean();
    cx.row(y) = x.middleRows(y * kMonthsPerYear, kMonthsPerYear).colwise().mean();
  }

  const Eigen::LLT<Eigen::MatrixXd> vllt(cvc);
  if (vllt.info() != Eigen::Success) throw NumericalError("chow_lin: singular GLS system (aggregated covariance)");
  const Eigen::MatrixXd vinv_x = vllt.solve(cx);
  const Eigen::Matrix2d gram = cx.transpose() * vinv_x;
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(gram);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) {
    throw NumericalError("chow_lin: singular GLS system (indicator collinear with the constant or too few years)");
  }

  ChowLinResult out;
  out.rho = rho;
  out.beta = lu.solve(vinv_x.transpose() * annual);
  const Eigen::VectorXd resid = annual - cx * out.beta;
  const Eigen::VectorXd vinv_u = vllt.solve(resid);
  out.monthly = x * out.beta + vc * vinv_u;

  const double n = static_cast<double>(years);
  const double sigma2 = std::max(resid.dot(vinv_u) / n, std::numeric_limits<double>::min());
  const double log_det = 2.0 * vllt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  out.log_likelihood = -0.5 * n * (std::log(2.0 * std::numbers::pi) + std::log(sigma2) + 1.0) - 0.5 * log_det;
  return out;
}

ChowLinResult chow_lin_disaggregate(const Eigen::VectorXd& annual, const Eigen::VectorXd& indicator) {
  check_inputs(annual, indicator);
  ChowLinResult best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int k = -99; k <= 99; ++k) {
    ChowLinResult fit = chow_lin_fixed_rho(annual, indicator, k / 100.0);
    if (!found || fit.log_likelihood > best.log_likelihood) {
      best = std::move(fit);
      found = true;
    }
  }
  return best;
}

}  // namespace fincon
