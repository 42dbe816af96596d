#include "mcsis/dataset.hpp"

#include <string>

#include "mcsis/error.hpp"
#include "mcsis/parallel.hpp"
#include "mcsis/stats.hpp"

namespace mcsis {

int default_workers() {
  if (const char* env = std::getenv("MCSIS_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string Dataset::column_name(std::size_t j) const {
  if (j < column_names.size() && !column_names[j].empty()) return column_names[j];
  return "X" + std::to_string(j + 1);
}

void Dataset::validate(std::size_t min_n) const {
  if (y.empty() || x.cols() == 0) throw Error(ErrorCode::EmptyDataset, "dataset has no samples or no predictors");
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw Error(ErrorCode::InvalidDims, "predictor rows and response length differ");
  if (!column_names.empty() && column_names.size() != p())
    throw Error(ErrorCode::InvalidDims, "column name count differs from predictor count");
  if (n() < min_n)
    throw Error(ErrorCode::TooFewSamples, "need at least " + std::to_string(min_n) + " samples, got " + std::to_string(n()));
  if (!all_finite(y) || !x.allFinite()) throw Error(ErrorCode::InvalidArgument, "dataset has non-finite entries");
}

}  // namespace mcsis
