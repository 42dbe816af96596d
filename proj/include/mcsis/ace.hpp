#pragma once

#include <span>
#include <vector>

namespace mcsis {

enum class AceSmoother {
  // Mean over consecutive rank blocks of ~span*n points (ties kept together).
  // This is an orthogonal projection, so the alternating error is monotone.
  RankBin,
  // Running mean over the span*n nearest neighbours in rank order.
  RunningMean,
};

struct AceConfig {
  double smoother_span = 0.1;
  int max_iter = 100;
  double tol = 1e-6;
  AceSmoother smoother = AceSmoother::RankBin;

  void validate() const;
};

struct AceResult {
  double rho_hat = 0.0;
  std::vector<double> theta;  // transformed response on the sample
  std::vector<double> phi;    // transformed predictor on the sample
  int iterations = 0;
  bool converged = false;
  // Mean squared error n^-1 sum (theta - phi)^2 after each cycle.
  std::vector<double> error_trace;
};

// Alternating conditional expectations for one (x, y) pair.
// Throws TooFewSamples for n < 20 and DegenerateInput for a constant column.
AceResult ace_mc(std::span<const double> x, std::span<const double> y, const AceConfig& cfg = {});

// Smoother for a fixed predictor sample; built once, applied many times.
class RankSmoother {
 public:
  RankSmoother(std::span<const double> predictor, double span, AceSmoother kind);

  std::vector<double> apply(std::span<const double> target) const;

 private:
  AceSmoother kind_;
  std::vector<std::size_t> order_;     // sample indices sorted by predictor
  std::vector<std::size_t> group_end_; // end (exclusive, in order_) of each tie group
  std::vector<int> bin_of_group_;
  int num_bins_ = 0;
  std::size_t window_ = 0;
};

}  // namespace mcsis
