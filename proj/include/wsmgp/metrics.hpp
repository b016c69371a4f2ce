#pragma once

#include "wsmgp/predict.hpp"

#include <vector>

namespace wsmgp {

/// sqrt(mean((a - b)^2)).
double rmse(const Vec& a, const Vec& b);

/// Per-output RMSE between predictive means and noiseless curves on the same grid.
Vec rmse_eval(const Prediction& pred, const std::vector<Vec>& curves);

/// Per-source RMSE of predictive means against noisy held-out targets; each
/// point is scored under its own source's output. NaN for sources with no points.
Vec heldout_rmse(const Prediction& pred, const Vec& y, const std::vector<int>& source);

/// Fraction of rows whose argmax PiHat equals the true label; ties go to the lowest index.
double label_accuracy(const Mat& piHat, const std::vector<int>& truth);

}  // namespace wsmgp
