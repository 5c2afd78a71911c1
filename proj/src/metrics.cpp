#include "bcfl/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bcfl {

namespace {

void check_inputs(std::span<const double> preds, std::span<const double> refs) {
  if (preds.size() != refs.size())
    throw std::invalid_argument("metric inputs differ in length: " + std::to_string(preds.size()) + " vs " +
                                std::to_string(refs.size()));
  if (preds.empty()) throw std::invalid_argument("metric inputs are empty");
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (!std::isfinite(preds[i]) || !std::isfinite(refs[i]))
      throw std::invalid_argument("metric inputs contain a non-finite value at index " + std::to_string(i));
}

}  // namespace

double rmse(std::span<const double> preds, std::span<const double> refs) {
  check_inputs(preds, refs);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double r = refs[i] - preds[i];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

double mard(std::span<const double> preds, std::span<const double> refs) {
  check_inputs(preds, refs);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (refs[i] <= 0.0)
      throw std::domain_error("MARD reference must be positive, got " + std::to_string(refs[i]) + " at index " +
                              std::to_string(i));
    acc += std::abs(preds[i] - refs[i]) / refs[i];
  }
  return 100.0 * acc / static_cast<double>(preds.size());
}

MetricsResult evaluate_metrics(std::span<const double> preds, std::span<const double> refs) {
  return {rmse(preds, refs), mard(preds, refs), static_cast<int>(preds.size())};
}

}  // namespace bcfl
