#pragma once

#include <span>

namespace hoidet::eval {

/// I_x(a, b), continued-fraction evaluation (modified Lentz).
[[nodiscard]] double regularized_incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `df` degrees of freedom.
[[nodiscard]] double student_t_cdf(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  int df = 0;
};

/// Paired t-test on per-class AP vectors. The null hypothesis is a zero mean
/// of a - b. All-zero differences give t = 0, p = 1. Throws
/// PreconditionError for unequal lengths or fewer than 2 pairs.
[[nodiscard]] TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

}  // namespace hoidet::eval
