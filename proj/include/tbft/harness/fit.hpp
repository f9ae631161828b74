#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace tbft::harness {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  double rss = 0;
  std::size_t points = 0;
};

// Nested-model F-test: does adding an x^2 term reduce the residuals significantly?
struct QuadraticTest {
  double coefficient = 0;
  double f_statistic = 0;
  double p_value = 1;
  double alpha = 0.05;
  bool significant = false;
};

struct ComplexityFit {
  LinearFit linear;
  QuadraticTest quadratic;
  bool linear_ok(double min_r2 = 0.99) const { return linear.r2 >= min_r2 && !quadratic.significant; }
};

inline constexpr std::size_t kMinDistinctX = 4;

// Ordinary least squares of y on x. Throws FitError on mismatched or too few points.
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);
QuadraticTest quadratic_term_test(const std::vector<double>& x, const std::vector<double>& y, double alpha = 0.05);
// Requires at least kMinDistinctX distinct x values.
ComplexityFit complexity_fit(const std::vector<double>& x, const std::vector<double>& y, double alpha = 0.05);

nlohmann::ordered_json fit_to_json(const ComplexityFit& f);

}  // namespace tbft::harness
