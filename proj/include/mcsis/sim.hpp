#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mcsis/dataset.hpp"
#include "mcsis/screening.hpp"
#include "mcsis/tuning.hpp"

namespace mcsis {

enum class ModelFamily { M1a, M1b, M2a, M2b, M2c, M2d, M2e, M2f, M3a, M3b, M3c, M3d, M3e, M3f };

struct ModelId {
  ModelFamily family = ModelFamily::M2a;
  int s = 3;  // active count for M1a (3, 6 or 12)

  // Token such as "1a-s3", "1b", "2d".
  std::string token() const;
  // Report label such as "1.a(s=3)", "2.d".
  std::string label() const;

  friend bool operator==(const ModelId&, const ModelId&) = default;
};

// Accepts "2d", "2.d", "1a" (s=3), "1a-s6", "1a:12". Throws InvalidArgument.
ModelId parse_model(const std::string& text);
std::vector<ModelId> parse_model_list(const std::string& csv);

// The correlated tail block of model 1.a: the corrected form keeps Var = 1,
// the printed form takes (1 - s*eps/25)^(1/2) literally (clamped at 0).
enum class TailFormula { Corrected, Printed };

struct SimData {
  Dataset data;
  std::vector<std::size_t> active;  // 0-based
};

// Size of the correlated tail block of model 1.a: floor(p / 20).
std::size_t tail_block_size(std::size_t p);

// Throws InvalidDims when p cannot hold the active set (and tail block).
SimData generate(const ModelId& model, std::size_t n, std::size_t p, std::uint64_t seed,
                 TailFormula tail = TailFormula::Corrected);

// Largest ranking position (1-based) over the active set.
std::size_t mms(const ScreeningResult& result, const std::vector<std::size_t>& active);
std::size_t mms(const std::vector<std::size_t>& ranking, const std::vector<std::size_t>& active);

// IQR / 1.34 with type-7 quartiles; 0 for fewer than two values.
double rsd(const std::vector<double>& values);

struct BenchmarkSpec {
  std::vector<ModelId> models;
  std::vector<ScoreKind> methods;
  std::vector<std::size_t> n_list;
  std::size_t p = 200;
  int replicates = 50;
  std::uint64_t seed = kDefaultSeed;
  MethodConfig method;
  TuningConfig tuning;
  bool tune_mc = true;  // MC-SIS(B-spline) through the three-step procedure
  TailFormula tail = TailFormula::Corrected;
  int workers = 1;
};

struct BenchmarkRow {
  ScoreKind method = ScoreKind::Sis;
  ModelId model;
  std::size_t n = 0;
  std::size_t p = 0;
  int replicates = 0;  // successful replicates
  int failures = 0;
  std::uint64_t seed = 0;
  double median_mms = 0.0;
  double rsd = 0.0;
  double mean_mms = 0.0;
  std::vector<double> mms_values;  // per replicate, in replicate order
  double seconds = 0.0;            // summed method time, not serialized
};

struct BenchmarkReport {
  std::size_t p = 0;
  std::vector<BenchmarkRow> rows;  // model-major, then n, then method
  std::vector<std::pair<std::string, std::string>> config;

  const BenchmarkRow* find(ScoreKind method, const ModelId& model, std::size_t n) const;
};

// Seed of one replicate: hash(seed, model, n, rep).
std::uint64_t replicate_seed(std::uint64_t seed, const ModelId& model, std::size_t n, int rep);

BenchmarkReport run_benchmark(const BenchmarkSpec& spec);

// CSV header: method,model,n,p,replicates,median_mms,rsd,mean_mms
void write_report_csv(const BenchmarkReport& report, std::ostream& out);
// One row per (model, n), one column per method, "median(rsd)" cells.
void write_report_markdown(const BenchmarkReport& report, std::ostream& out);

}  // namespace mcsis
