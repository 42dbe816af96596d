#include "mcsis/sim.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mcsis/error.hpp"
#include "mcsis/parallel.hpp"
#include "mcsis/rng.hpp"
#include "mcsis/stats.hpp"

namespace mcsis {

namespace {

constexpr double kC0 = 1e-4;

struct FamilyInfo {
  ModelFamily family;
  const char* token;
};

constexpr FamilyInfo kFamilies[] = {
    {ModelFamily::M1a, "1a"}, {ModelFamily::M1b, "1b"}, {ModelFamily::M2a, "2a"}, {ModelFamily::M2b, "2b"},
    {ModelFamily::M2c, "2c"}, {ModelFamily::M2d, "2d"}, {ModelFamily::M2e, "2e"}, {ModelFamily::M2f, "2f"},
    {ModelFamily::M3a, "3a"}, {ModelFamily::M3b, "3b"}, {ModelFamily::M3c, "3c"}, {ModelFamily::M3d, "3d"},
    {ModelFamily::M3e, "3e"}, {ModelFamily::M3f, "3f"},
};

const char* family_token(ModelFamily f) {
  for (const auto& info : kFamilies)
    if (info.family == f) return info.token;
  return "?";
}

bool is_example3(ModelFamily f) { return f >= ModelFamily::M3a; }

// Example-3 models reuse the Example-2 response formulas.
ModelFamily base_family(ModelFamily f) {
  if (!is_example3(f)) return f;
  return static_cast<ModelFamily>(static_cast<int>(f) - static_cast<int>(ModelFamily::M3a) +
                                  static_cast<int>(ModelFamily::M2a));
}

std::vector<std::size_t> active_set(const ModelId& m) {
  switch (base_family(m.family)) {
    case ModelFamily::M1a: {
      std::vector<std::size_t> a(static_cast<std::size_t>(m.s));
      std::iota(a.begin(), a.end(), std::size_t{0});
      return a;
    }
    case ModelFamily::M1b: return {0, 1, 2};
    case ModelFamily::M2a:
    case ModelFamily::M2b: return {0, 1, 2, 3};
    default: return {0, 1};
  }
}

}  // namespace

std::string ModelId::token() const {
  std::string t = family_token(family);
  if (family == ModelFamily::M1a) t += "-s" + std::to_string(s);
  return t;
}

std::string ModelId::label() const {
  const std::string t = family_token(family);
  std::string l = t.substr(0, 1) + "." + t.substr(1);
  if (family == ModelFamily::M1a) l += "(s=" + std::to_string(s) + ")";
  return l;
}

ModelId parse_model(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t.size() >= 3 && t[1] == '.') t.erase(1, 1);
  if (t.size() < 2) throw Error(ErrorCode::InvalidArgument, "unknown model '" + text + "'");
  const std::string head = t.substr(0, 2);
  std::string tail = t.substr(2);
  for (const auto& info : kFamilies) {
    if (head != info.token) continue;
    ModelId m{info.family, 3};
    if (info.family == ModelFamily::M1a && !tail.empty()) {
      const auto pos = tail.find_first_of("0123456789");
      if (pos == std::string::npos) throw Error(ErrorCode::InvalidArgument, "bad model suffix in '" + text + "'");
      m.s = std::stoi(tail.substr(pos));
      if (m.s != 3 && m.s != 6 && m.s != 12) throw Error(ErrorCode::InvalidArgument, "model 1a needs s in {3,6,12}");
    } else if (!tail.empty()) {
      throw Error(ErrorCode::InvalidArgument, "unexpected suffix in model '" + text + "'");
    }
    return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + text + "'");
}

std::vector<ModelId> parse_model_list(const std::string& csv) {
  std::vector<ModelId> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_model(item));
  return out;
}

std::size_t tail_block_size(std::size_t p) { return p / 20; }

SimData generate(const ModelId& model, std::size_t n, std::size_t p, std::uint64_t seed, TailFormula tail) {
  SimData out;
  out.active = active_set(model);
  if (n < 1 || p < out.active.back() + 1)
    throw Error(ErrorCode::InvalidDims, "model " + model.label() + " needs p >= " + std::to_string(out.active.back() + 1));
  const std::size_t tail_count = model.family == ModelFamily::M1a ? tail_block_size(p) : 0;
  if (model.family == ModelFamily::M1a && p - tail_count < static_cast<std::size_t>(model.s))
    throw Error(ErrorCode::InvalidDims, "p too small for the active set and the correlated tail block");

  Rng rng(seed);
  const bool cauchy = is_example3(model.family);
  Dataset& d = out.data;
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  d.y.assign(n, 0.0);
  const std::size_t independent = p - tail_count;
  for (std::size_t j = 0; j < independent; ++j)
    for (std::size_t u = 0; u < n; ++u) d.x(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j)) = cauchy ? rng.cauchy() : rng.normal();

  auto X = [&](std::size_t u, std::size_t j) -> double& {
    return d.x(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j));
  };
  const double s = model.s;

  if (model.family == ModelFamily::M1a) {
    for (std::size_t j = independent; j < p; ++j) {
      for (std::size_t u = 0; u < n; ++u) {
        double lin = 0.0;
        for (int a = 0; a < model.s; ++a) lin += X(u, static_cast<std::size_t>(a)) * (a % 2 == 0 ? 1.0 : -1.0);
        const double e = rng.normal();
        const double noise = tail == TailFormula::Corrected ? std::sqrt(1.0 - s / 25.0) * e
                                                            : std::sqrt(std::max(0.0, 1.0 - s * e / 25.0));
        X(u, j) = lin / 5.0 + noise;
      }
    }
  }
  if (model.family == ModelFamily::M1b)
    for (std::size_t u = 0; u < n; ++u) X(u, 1) = X(u, 0) * X(u, 0) * X(u, 0) / 3.0 + rng.normal();

  const double sd_linear = std::sqrt(3.0);
  for (std::size_t u = 0; u < n; ++u) {
    const double x1 = X(u, 0), x2 = X(u, 1);
    double v = 0.0;
    switch (base_family(model.family)) {
      case ModelFamily::M1a:
        for (int a = 0; a < model.s; ++a) v += X(u, static_cast<std::size_t>(a)) * (a % 2 == 0 ? 1.0 : -1.0);
        v += rng.normal(0.0, sd_linear);
        break;
      case ModelFamily::M1b: v = x1 + x2 + X(u, 2) + rng.normal(0.0, sd_linear); break;
      case ModelFamily::M2a: v = x1 * x2 + X(u, 2) * X(u, 3); break;
      case ModelFamily::M2b: v = x1 * x1 + x2 * x2 * x2 + X(u, 2) * X(u, 2) * X(u, 3); break;
      case ModelFamily::M2c: v = x1 * std::sin(x2) + x2 * std::sin(x1); break;
      case ModelFamily::M2d: v = x1 * std::exp(x2); break;
      case ModelFamily::M2e: v = x1 * std::log(std::abs(kC0 + x2)); break;
      case ModelFamily::M2f: v = x1 / (kC0 + x2); break;
      default: break;
    }
    if (!cauchy && base_family(model.family) >= ModelFamily::M2a) v += rng.normal();
    d.y[u] = v;
  }
  return out;
}

std::size_t mms(const std::vector<std::size_t>& ranking, const std::vector<std::size_t>& active) {
  std::vector<std::size_t> position(ranking.size(), 0);
  for (std::size_t r = 0; r < ranking.size(); ++r) position[ranking[r]] = r + 1;
  std::size_t worst = 0;
  for (std::size_t j : active) {
    if (j >= position.size()) throw Error(ErrorCode::InvalidArgument, "active index outside the ranking");
    worst = std::max(worst, position[j]);
  }
  return worst;
}

std::size_t mms(const ScreeningResult& result, const std::vector<std::size_t>& active) {
  return mms(result.ranking, active);
}

double rsd(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  std::vector<double> s = values;
  std::sort(s.begin(), s.end());
  return (quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25)) / 1.34;
}

std::uint64_t replicate_seed(std::uint64_t seed, const ModelId& model, std::size_t n, int rep) {
  std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(model.family));
  h = hash_combine(h, static_cast<std::uint64_t>(model.s));
  h = hash_combine(h, n);
  return hash_combine(h, static_cast<std::uint64_t>(rep));
}

const BenchmarkRow* BenchmarkReport::find(ScoreKind method, const ModelId& model, std::size_t n) const {
  for (const auto& r : rows)
    if (r.method == method && r.model == model && r.n == n) return &r;
  return nullptr;
}

BenchmarkReport run_benchmark(const BenchmarkSpec& spec) {
  if (spec.replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  if (spec.models.empty() || spec.methods.empty() || spec.n_list.empty())
    throw Error(ErrorCode::InvalidArgument, "benchmark needs models, methods and sample sizes");

  struct Task {
    std::size_t model, n_index;
    int rep;
  };
  std::vector<Task> tasks;
  for (std::size_t m = 0; m < spec.models.size(); ++m)
    for (std::size_t i = 0; i < spec.n_list.size(); ++i)
      for (int r = 0; r < spec.replicates; ++r) tasks.push_back({m, i, r});

  const std::size_t nm = spec.methods.size();
  std::vector<double> mms_out(tasks.size() * nm, std::nan(""));
  std::vector<double> secs(tasks.size() * nm, 0.0);

  parallel_for(tasks.size(), spec.workers, [&](std::size_t t) {
    const Task& task = tasks[t];
    const ModelId& model = spec.models[task.model];
    const std::size_t n = spec.n_list[task.n_index];
    const std::uint64_t rs = replicate_seed(spec.seed, model, n, task.rep);
    const SimData sim = generate(model, n, spec.p, rs, spec.tail);
    for (std::size_t k = 0; k < nm; ++k) {
      const auto start = std::chrono::steady_clock::now();
      try {
        ScreeningResult result;
        if (spec.methods[k] == ScoreKind::McSpline && spec.tune_mc) {
          TuningConfig tc = spec.tuning;
          tc.seed = hash_combine(rs, 0xc5);
          result = run_tuning(sim.data, tc, 1).as_screening();
        } else {
          result = screen(sim.data, spec.methods[k], spec.method, 1);
        }
        mms_out[t * nm + k] = static_cast<double>(mms(result, sim.active));
      } catch (const Error&) {
        // recorded as a failed replicate
      }
      secs[t * nm + k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  });

  BenchmarkReport report;
  report.p = spec.p;
  for (std::size_t m = 0; m < spec.models.size(); ++m) {
    for (std::size_t i = 0; i < spec.n_list.size(); ++i) {
      for (std::size_t k = 0; k < nm; ++k) {
        BenchmarkRow row;
        row.method = spec.methods[k];
        row.model = spec.models[m];
        row.n = spec.n_list[i];
        row.p = spec.p;
        row.seed = spec.seed;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
          if (tasks[t].model != m || tasks[t].n_index != i) continue;
          row.seconds += secs[t * nm + k];
          const double v = mms_out[t * nm + k];
          if (std::isnan(v)) {
            ++row.failures;
          } else {
            row.mms_values.push_back(v);
          }
        }
        row.replicates = static_cast<int>(row.mms_values.size());
        if (row.replicates > 0) {
          row.median_mms = median(row.mms_values);
          row.rsd = rsd(row.mms_values);
          row.mean_mms = mean(row.mms_values);
        } else {
          row.median_mms = row.rsd = row.mean_mms = std::nan("");
        }
        report.rows.push_back(std::move(row));
      }
    }
  }

  auto& c = report.config;
  c.emplace_back("p", std::to_string(spec.p));
  c.emplace_back("replicates", std::to_string(spec.replicates));
  c.emplace_back("seed", std::to_string(spec.seed));
  c.emplace_back("mms_center", "median");
  c.emplace_back("tail_formula", spec.tail == TailFormula::Corrected ? "corrected" : "printed");
  c.emplace_back("mc_tuned", spec.tune_mc ? "true" : "false");
  if (spec.tune_mc) {
    const TuningConfig& tc = spec.tuning;
    c.emplace_back("k_min", std::to_string(tc.k_min));
    c.emplace_back("k_max", std::to_string(tc.k_max));
    c.emplace_back("b1", std::to_string(tc.b1));
    c.emplace_back("b2", std::to_string(tc.b2));
    c.emplace_back("b3", tc.b3 == 0 ? "auto" : std::to_string(tc.b3));
    c.emplace_back("folds", std::to_string(tc.folds));
    c.emplace_back("knot_rule", to_string(tc.knot_rule));
  } else {
    c.emplace_back("mc_degree", std::to_string(spec.method.mc_spec.degree));
    c.emplace_back("mc_knots", std::to_string(spec.method.mc_spec.num_knots));
  }
  std::ostringstream span;
  span << spec.method.ace.smoother_span;
  c.emplace_back("ace_span", span.str());
  return report;
}

namespace {

std::string fmt(double v, int digits) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

void write_report_csv(const BenchmarkReport& report, std::ostream& out) {
  out << "method,model,n,p,replicates,median_mms,rsd,mean_mms\n";
  for (const auto& r : report.rows) {
    out << to_string(r.method) << ',' << r.model.token() << ',' << r.n << ',' << r.p << ',' << r.replicates << ','
        << fmt(r.median_mms, 1) << ',' << fmt(r.rsd, 2) << ',' << fmt(r.mean_mms, 2) << '\n';
  }
}

void write_report_markdown(const BenchmarkReport& report, std::ostream& out) {
  std::vector<ScoreKind> methods;
  std::vector<std::pair<ModelId, std::size_t>> cells;
  for (const auto& r : report.rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    const auto key = std::make_pair(r.model, r.n);
    if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
  }
  out << "MMS and RSD (in parenthesis), median over replicates\n\n";
  out << "| Model | n |";
  for (ScoreKind m : methods) out << ' ' << to_string(m) << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < methods.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& [model, n] : cells) {
    out << "| " << model.label() << " | " << n << " |";
    for (ScoreKind m : methods) {
      const BenchmarkRow* r = report.find(m, model, n);
      out << ' ' << (r ? fmt(r->median_mms, 1) + "(" + fmt(r->rsd, 1) + ")" : std::string("-")) << " |";
    }
    out << '\n';
  }
  out << '\n';
  for (const auto& [k, v] : report.config) out << "- " << k << ": " << v << '\n';
}

}  // namespace mcsis
