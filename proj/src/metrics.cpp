#include "coopflow/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "coopflow/errors.hpp"

namespace coopflow {

ErrorSeries rmse_series(const EstimateCube& estimates, const EstimateCube& truths) {
  if (estimates.size() != truths.size()) throw InvalidParameter("run counts differ");
  ErrorSeries out;
  if (estimates.empty()) return out;
  const std::size_t steps = estimates.front().size();
  out.p.assign(steps, 0.0);
  out.v.assign(steps, 0.0);
  out.a.assign(steps, 0.0);
  std::vector<double> count(steps, 0.0);

  for (std::size_t r = 0; r < estimates.size(); ++r) {
    if (estimates[r].size() != steps || truths[r].size() != steps) throw InvalidParameter("step counts differ");
    for (std::size_t k = 0; k < steps; ++k) {
      if (estimates[r][k].size() != truths[r][k].size()) throw InvalidParameter("agent counts differ");
      for (std::size_t i = 0; i < estimates[r][k].size(); ++i) {
        const StateVector e = estimates[r][k][i] - truths[r][k][i];
        out.p[k] += e.segment<3>(0).squaredNorm();
        out.v[k] += e.segment<3>(3).squaredNorm();
        out.a[k] += e.segment<3>(6).squaredNorm();
        count[k] += 1.0;
      }
    }
  }
  for (std::size_t k = 0; k < steps; ++k) {
    out.p[k] = std::sqrt(out.p[k] / count[k]);
    out.v[k] = std::sqrt(out.v[k] / count[k]);
    out.a[k] = std::sqrt(out.a[k] / count[k]);
  }
  return out;
}

std::vector<double> cumulative_frequency(std::span<const double> errors, std::span<const double> taus) {
  if (!std::is_sorted(taus.begin(), taus.end())) throw InvalidParameter("thresholds must be sorted");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cf;
  cf.reserve(taus.size());
  const double n = static_cast<double>(sorted.size());
  for (double tau : taus) {
    if (sorted.empty()) {
      cf.push_back(0.0);
      continue;
    }
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), tau) - sorted.begin();
    cf.push_back(static_cast<double>(below) / n);
  }
  return cf;
}

double outage_probability(std::span<const double> errors, double tau) {
  if (!(tau >= 0.0)) throw InvalidParameter("tau must be non-negative");
  const double t[] = {tau};
  return 1.0 - cumulative_frequency(errors, t).front();
}

}  // namespace coopflow
