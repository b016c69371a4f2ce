#pragma once

#include "wsmgp/model.hpp"
#include "wsmgp/predict.hpp"

#include <string>
#include <vector>

namespace wsmgp {

/// Column names of a dataset file. Labels in files are 1-based; an empty label
/// cell marks an unlabeled row. Prior columns are optional and only read on labeled rows.
struct CsvSchema {
  std::vector<std::string> xColumns{"x"};
  std::string yColumn = "y";
  std::string labelColumn = "label";
  std::string priorPrefix = "pi_";
  Index M = 0;  // 0: infer from the largest label and prior columns
};

Dataset ingest_csv(const std::string& path, const CsvSchema& schema = {});
Dataset parse_csv(const std::string& text, const CsvSchema& schema = {});

/// Writes x columns, y, label and pi_1..pi_M with round-trip precision.
void write_csv(const std::string& path, const Dataset& ds, const CsvSchema& schema = {});
std::string format_csv(const Dataset& ds, const CsvSchema& schema = {});

/// grid, then mean_m and var_m for every output.
void write_curves_csv(const std::string& path, const Prediction& p);
void write_pihat_csv(const std::string& path, const Mat& piHat);

}  // namespace wsmgp
