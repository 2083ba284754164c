#pragma once

#include <span>
#include <vector>

#include "coopflow/types.hpp"

namespace coopflow {

/// Per-time-step RMSE of position, velocity and acceleration.
struct ErrorSeries {
  std::vector<double> p, v, a;
};

/// Estimates indexed [run][k][agent].
using EstimateCube = std::vector<std::vector<std::vector<StateVector>>>;

/// rmse(k) = sqrt(mean over runs and agents of the squared error norm), per state component.
ErrorSeries rmse_series(const EstimateCube& estimates, const EstimateCube& truths);

/// Fraction of errors <= tau for every tau (taus must be sorted ascending).
std::vector<double> cumulative_frequency(std::span<const double> errors, std::span<const double> taus);

/// Fraction of errors > tau.
double outage_probability(std::span<const double> errors, double tau);

}  // namespace coopflow
