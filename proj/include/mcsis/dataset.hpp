#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mcsis {

// Response y (length n) and an n x p column-major predictor matrix.
struct Dataset {
  std::vector<double> y;
  Eigen::MatrixXd x;
  std::vector<std::string> column_names;  // empty or length p

  std::size_t n() const { return y.size(); }
  std::size_t p() const { return static_cast<std::size_t>(x.cols()); }

  std::span<const double> column(std::size_t j) const {
    return {x.col(static_cast<Eigen::Index>(j)).data(), n()};
  }
  std::string column_name(std::size_t j) const;

  // Shape and finiteness checks; min_n guards the screening procedures.
  // Throws EmptyDataset, InvalidDims or InvalidArgument.
  void validate(std::size_t min_n = 20) const;
};

}  // namespace mcsis
