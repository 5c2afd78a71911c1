#pragma once

#include <span>

namespace bcfl {

struct MetricsResult {
  double rmse = 0.0;  // mg/dL
  double mard = 0.0;  // percent
  int n = 0;
};

// sqrt(mean((ref - pred)^2)).
double rmse(std::span<const double> preds, std::span<const double> refs);

// 100 * mean(|pred - ref| / ref). Throws std::domain_error for ref <= 0.
double mard(std::span<const double> preds, std::span<const double> refs);

// Gap of a method's average against the reference (MCGP) average; negative
// when the method is worse.
inline double delta_avg(double reference_avg, double method_avg) { return reference_avg - method_avg; }

MetricsResult evaluate_metrics(std::span<const double> preds, std::span<const double> refs);

}  // namespace bcfl
