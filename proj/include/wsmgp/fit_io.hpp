#pragma once

#include "wsmgp/baselines.hpp"

#include <string>

namespace wsmgp {

/// A fitted model as stored on disk: kind, configuration, kernel parameters and
/// variational state.
struct SavedFit {
  ModelKind kind = ModelKind::WSMGP;
  FitReport fit;
};

std::string fit_to_json(const SavedFit& f);
SavedFit fit_from_json(const std::string& text);
void save_fit(const std::string& path, const SavedFit& f);
SavedFit load_fit(const std::string& path);

}  // namespace wsmgp
