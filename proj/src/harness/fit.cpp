#include "tbft/harness/fit.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace tbft::harness {

namespace {

void check_input(const std::vector<double>& x, const std::vector<double>& y, std::size_t min_points) {
  if (x.size() != y.size()) throw FitError("x and y differ in length");
  const std::set<double> distinct(x.begin(), x.end());
  if (distinct.size() < min_points) {
    throw FitError("need at least " + std::to_string(min_points) + " distinct n values, got " +
                   std::to_string(distinct.size()));
  }
}

// Least squares with columns 1, x, ..., x^degree; returns (coefficients, rss).
std::pair<Eigen::VectorXd, double> polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(m, degree + 1);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double p = 1;
    for (int d = 0; d <= degree; ++d) {
      a(i, d) = p;
      p *= x[static_cast<std::size_t>(i)];
    }
    b(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  return {coef, (a * coef - b).squaredNorm()};
}

double total_ss(const std::vector<double>& y) {
  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double tss = 0;
  for (double v : y) tss += (v - mean) * (v - mean);
  return tss;
}

}  // namespace

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  check_input(x, y, 2);
  auto [coef, rss] = polyfit(x, y, 1);
  LinearFit f;
  f.intercept = coef(0);
  f.slope = coef(1);
  f.rss = rss;
  f.points = x.size();
  const double tss = total_ss(y);
  f.r2 = tss == 0 ? 1.0 : 1.0 - rss / tss;
  return f;
}

QuadraticTest quadratic_term_test(const std::vector<double>& x, const std::vector<double>& y, double alpha) {
  check_input(x, y, kMinDistinctX);
  QuadraticTest t;
  t.alpha = alpha;
  const auto rss1 = polyfit(x, y, 1).second;
  const auto [coef2, rss2] = polyfit(x, y, 2);
  t.coefficient = coef2(2);
  const double tss = total_ss(y);
  // Exact linear data: nothing left for the extra term to explain.
  const double eps = 1e-12 * std::max(tss, 1.0);
  if (rss1 <= eps) return t;
  const double df2 = static_cast<double>(x.size()) - 3.0;
  if (rss2 <= eps) {
    t.f_statistic = std::numeric_limits<double>::infinity();
    t.p_value = 0;
    t.significant = true;
    return t;
  }
  t.f_statistic = (rss1 - rss2) / (rss2 / df2);
  boost::math::fisher_f dist(1.0, df2);
  t.p_value = boost::math::cdf(boost::math::complement(dist, std::max(t.f_statistic, 0.0)));
  t.significant = t.p_value < alpha;
  return t;
}

ComplexityFit complexity_fit(const std::vector<double>& x, const std::vector<double>& y, double alpha) {
  check_input(x, y, kMinDistinctX);
  return {fit_linear(x, y), quadratic_term_test(x, y, alpha)};
}

nlohmann::ordered_json fit_to_json(const ComplexityFit& f) {
  nlohmann::ordered_json j;
  j["points"] = f.linear.points;
  j["slope"] = f.linear.slope;
  j["intercept"] = f.linear.intercept;
  j["r2"] = f.linear.r2;
  j["quadratic_coefficient"] = f.quadratic.coefficient;
  j["quadratic_f"] = std::isfinite(f.quadratic.f_statistic) ? nlohmann::ordered_json(f.quadratic.f_statistic)
                                                               : nlohmann::ordered_json("inf");
  j["quadratic_p"] = f.quadratic.p_value;
  j["quadratic_significant"] = f.quadratic.significant;
  j["linear"] = f.linear_ok();
  return j;
}

}  // namespace tbft::harness
