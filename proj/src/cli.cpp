#include "mcsis/cli.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mcsis/csv.hpp"
#include "mcsis/error.hpp"
#include "mcsis/maxcorr.hpp"
#include "mcsis/parallel.hpp"
#include "mcsis/screening.hpp"
#include "mcsis/sim.hpp"
#include "mcsis/tuning.hpp"

namespace mcsis {

namespace {

using Settings = std::vector<std::pair<std::string, std::string>>;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularGram:
    case ErrorCode::DegenerateInput:
    case ErrorCode::AllColumnsDegenerate: return kExitNumerical;
    default: return kExitInput;
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string settings_text(const Settings& s) {
  std::ostringstream os;
  for (const auto& [k, v] : s) os << k << '=' << v << '\n';
  return os.str();
}

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << contents;
  } else {
    write_file_atomic(path, contents);
  }
}

void write_sidecar(const std::string& path, const std::string& command, const Settings& s) {
  if (path.empty() || path == "-") return;
  write_file_atomic(path + ".cfg", "# mcsis " + command + "\n" + settings_text(s));
}

struct TuningOpts {
  int k_min = 3, k_max = 6;
  std::size_t b1 = 200, b2 = 50, b3 = 0;
  int folds = 10;
  std::string knot_rule = "min-gap";
  std::string preset;
  CLI::Option* k_min_opt = nullptr;
  CLI::Option* k_max_opt = nullptr;
  CLI::Option* b1_opt = nullptr;
  CLI::Option* b2_opt = nullptr;
  CLI::Option* folds_opt = nullptr;

  void add(CLI::App* app) {
    k_min_opt = app->add_option("--k-min", k_min, "Smallest knot count K1");
    k_max_opt = app->add_option("--k-max", k_max, "Largest knot count K2");
    b1_opt = app->add_option("--b1", b1, "Predictors kept after step 1");
    b2_opt = app->add_option("--b2", b2, "Predictors kept after step 2");
    app->add_option("--b3", b3, "Predictors kept after step 3 (0: min(B2, [n/log n]))");
    folds_opt = app->add_option("--folds", folds, "Cross-validation folds M");
    app->add_option("--knot-rule", knot_rule, "Step-1 knot rule")->check(CLI::IsMember({"min-gap", "max-gap"}));
    app->add_option("--preset", preset, "Tuning preset")->check(CLI::IsMember({"", "default", "small-sample"}));
  }

  TuningConfig config(std::uint64_t seed, double ridge) const {
    TuningConfig c;
    if (preset == "small-sample") c = TuningConfig::small_sample();
    if (preset != "small-sample" || k_min_opt->count()) c.k_min = k_min;
    if (preset != "small-sample" || k_max_opt->count()) c.k_max = k_max;
    if (preset != "small-sample" || b1_opt->count()) c.b1 = b1;
    if (preset != "small-sample" || b2_opt->count()) c.b2 = b2;
    if (preset != "small-sample" || folds_opt->count()) c.folds = folds;
    c.b3 = b3;
    c.knot_rule = parse_knot_rule(knot_rule);
    c.seed = seed;
    c.ridge = ridge;
    return c;
  }

  static void record(const TuningConfig& c, Settings& s) {
    s.emplace_back("k-min", std::to_string(c.k_min));
    s.emplace_back("k-max", std::to_string(c.k_max));
    s.emplace_back("b1", std::to_string(c.b1));
    s.emplace_back("b2", std::to_string(c.b2));
    s.emplace_back("b3", std::to_string(c.b3));
    s.emplace_back("folds", std::to_string(c.folds));
    s.emplace_back("knot-rule", to_string(c.knot_rule));
  }
};

// Splits "path:column" at the last colon.
std::pair<std::string, std::string> split_source(const std::string& s) {
  const auto pos = s.rfind(':');
  if (pos == std::string::npos || pos == 0) return {s, ""};
  return {s.substr(0, pos), s.substr(pos + 1)};
}

// Expands --config FILE into --key=value arguments placed right after the
// subcommand name, so explicit flags (parsed later) take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::vector<std::string> injected;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    for (const auto& [k, v] : parse_config_text(buf.str())) {
      if (v == "false" || v.empty()) continue;
      injected.push_back(v == "true" ? "--" + k : "--" + k + "=" + v);
    }
  }
  if (!injected.empty() && !out.empty()) out.insert(out.begin() + 1, injected.begin(), injected.end());
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw Error(ErrorCode::ParseError, "config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature screening by B-spline maximum correlation (MC-SIS) and comparators", "mcsis"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", "mcsis 1.0.0");

  int workers = default_workers();
  std::uint64_t seed = kDefaultSeed;
  double ridge = 1e-8;
  std::string config_path;  // consumed by expand_config; declared for --help

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--workers", workers, "Worker threads (default: MCSIS_WORKERS or hardware)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--ridge", ridge, "Relative eigenvalue floor for Gram inversions");
    sub->add_option("--config", config_path, "Flat key=value file of option defaults");
  };

  // screen
  std::string input, response, method = "mc", output = "-", scaling = "minmax";
  int degree = 2, knots = 4;
  std::size_t size = 0;
  bool tuned = false;
  double ace_span = 0.1;
  TuningOpts screen_tuning;
  CLI::App* screen_cmd = app.add_subcommand("screen", "Rank every predictor of a CSV file against the response");
  screen_cmd->add_option("--input,-i", input, "CSV file with a header row")->required();
  screen_cmd->add_option("--response,-r", response, "Response column name or 1-based index (default: first)");
  screen_cmd->add_option("--method,-m", method, "mc, sis, nis, dcsis or ace");
  screen_cmd->add_option("--degree", degree, "B-spline degree for mc")->check(CLI::Range(1, 3));
  screen_cmd->add_option("--knots", knots, "Knot count k for mc")->check(CLI::PositiveNumber);
  screen_cmd->add_flag("--tuned", tuned, "Rank mc through the three-step tuning procedure");
  screen_cmd->add_option("--size", size, "Keep only the top m predictors (0: all)");
  screen_cmd->add_option("--output,-o", output, "Output CSV path ('-' for stdout)");
  screen_cmd->add_option("--scaling", scaling, "Per-variable scaling")->check(CLI::IsMember({"minmax", "rank", "none"}));
  screen_cmd->add_option("--ace-span", ace_span, "ACE smoother span");
  screen_tuning.add(screen_cmd);
  add_common(screen_cmd);

  // mc
  std::string lhs, rhs;
  CLI::App* mc_cmd = app.add_subcommand("mc", "Estimate the maximum correlation of one (y, x) pair");
  mc_cmd->add_option("--lhs", lhs, "Response as FILE:COLUMN")->required();
  mc_cmd->add_option("--rhs", rhs, "Predictor as FILE:COLUMN")->required();
  mc_cmd->add_option("--degree", degree, "B-spline degree")->check(CLI::Range(1, 3));
  mc_cmd->add_option("--knots", knots, "Knot count k")->check(CLI::PositiveNumber);
  mc_cmd->add_option("--scaling", scaling, "Per-variable scaling")->check(CLI::IsMember({"minmax", "rank", "none"}));
  add_common(mc_cmd);

  // tune
  TuningOpts tune_tuning;
  CLI::App* tune_cmd = app.add_subcommand("tune", "Run the three-step degree/knot selection and report kept sets");
  tune_cmd->add_option("--input,-i", input, "CSV file with a header row")->required();
  tune_cmd->add_option("--response,-r", response, "Response column name or 1-based index (default: first)");
  tune_cmd->add_option("--output,-o", output, "Output CSV path ('-' for stdout)");
  tune_cmd->add_option("--scaling", scaling, "Per-variable scaling")->check(CLI::IsMember({"minmax", "rank", "none"}));
  tune_tuning.add(tune_cmd);
  add_common(tune_cmd);

  // benchmark
  std::string models = "2a,2b,2c,2d,2e,2f", methods = "sis,nis,dcsis,ace,mc", n_list = "300", tail = "corrected";
  std::string bench_output = "benchmark";
  std::size_t p = 200;
  int reps = 50;
  bool no_tune = false;
  TuningOpts bench_tuning;
  CLI::App* bench_cmd = app.add_subcommand("benchmark", "Simulate models and report MMS/RSD per method");
  bench_cmd->add_option("--models", models, "Comma list, e.g. 1a-s3,1b,2a,...,3f");
  bench_cmd->add_option("--methods", methods, "Comma list of sis,nis,dcsis,ace,mc");
  bench_cmd->add_option("--n", n_list, "Comma list of sample sizes");
  bench_cmd->add_option("--p", p, "Number of predictors")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--reps", reps, "Replicates per cell")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--output,-o", bench_output, "Output prefix: writes PREFIX.csv and PREFIX.md");
  bench_cmd->add_option("--tail-formula", tail, "Model 1.a tail block")->check(CLI::IsMember({"corrected", "printed"}));
  bench_cmd->add_flag("--no-tune", no_tune, "Use the fixed --degree/--knots basis for mc instead of tuning");
  bench_cmd->add_option("--degree", degree, "B-spline degree for untuned mc")->check(CLI::Range(1, 3));
  bench_cmd->add_option("--knots", knots, "Knot count for untuned mc")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--ace-span", ace_span, "ACE smoother span");
  bench_tuning.add(bench_cmd);
  add_common(bench_cmd);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitInput;
    }

    if (screen_cmd->parsed()) {
      const Scaling sc = parse_scaling(scaling);
      const Dataset data = load_csv(input, response, sc);
      const ScoreKind kind = parse_score_kind(method);
      ScreeningResult result;
      Settings s{{"input", input}, {"response", response}, {"method", method}, {"scaling", to_string(sc)}};
      if (kind == ScoreKind::McSpline && tuned) {
        const TuningConfig tc = screen_tuning.config(seed, ridge);
        result = run_tuning(data, tc, workers).as_screening();
        s.emplace_back("tuned", "true");
        TuningOpts::record(tc, s);
        s.emplace_back("seed", std::to_string(seed));
      } else {
        MethodConfig mc;
        mc.mc_spec = SplineSpec{degree, knots, KnotPlacement::Quantile};
        mc.ridge = ridge;
        mc.ace.smoother_span = ace_span;
        result = screen(data, kind, mc, workers);
        s.emplace_back("degree", std::to_string(degree));
        s.emplace_back("knots", std::to_string(knots));
        s.emplace_back("ace-span", format_double(ace_span));
      }
      s.emplace_back("ridge", format_double(ridge));
      s.emplace_back("size", std::to_string(size));
      const std::size_t m = size == 0 ? data.p() : size;
      const std::vector<std::size_t> top = select_by_size(result, m);
      std::ostringstream csv;
      csv << "rank,index,name,score\n";
      for (std::size_t r = 0; r < top.size(); ++r) {
        const std::size_t j = top[r];
        csv << r + 1 << ',' << j + 1 << ',' << data.column_name(j) << ',' << std::setprecision(12)
            << result.scores[j] << '\n';
      }
      emit(output, csv.str(), out);
      write_sidecar(output, "screen", s);
      err << "screen: method=" << to_string(kind) << " scaling=" << to_string(sc) << " n=" << data.n()
          << " p=" << data.p() << " failed="
          << std::count(result.failed.begin(), result.failed.end(), true) << '\n';
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      return kExitOk;
    }

    if (mc_cmd->parsed()) {
      const Scaling sc = parse_scaling(scaling);
      const auto [lpath, lcol] = split_source(lhs);
      const auto [rpath, rcol] = split_source(rhs);
      const CsvTable lt = read_csv_file(lpath);
      const CsvTable rt = lpath == rpath ? lt : read_csv_file(rpath);
      const std::vector<double> y = scale_column(lt.columns[resolve_column(lt.header, lcol)], sc);
      const std::vector<double> x = scale_column(rt.columns[resolve_column(rt.header, rcol)], sc);
      const SplineSpec spec{degree, knots, KnotPlacement::Quantile};
      McOptions opt;
      opt.ridge = ridge;
      const McEstimate est = estimate_mc(x, y, spec, spec, opt);
      const McDiagnostics& d = est.diagnostics;
      out << std::setprecision(12);
      out << "lambda_hat=" << est.lambda_hat << '\n';
      out << "rho_hat=" << est.rho_hat << '\n';
      out << "raw_lambda=" << d.raw_lambda << '\n';
      out << "n=" << y.size() << '\n';
      out << "degree=" << degree << '\n' << "knots=" << knots << '\n' << "dim=" << spec.dim() << '\n';
      out << "scaling=" << to_string(sc) << '\n';
      out << "cond_a00=" << d.cond_a00 << '\n' << "cond_axx=" << d.cond_axx << '\n';
      out << "lifted_a00=" << d.lifted_a00 << '\n' << "lifted_axx=" << d.lifted_axx << '\n';
      out << "ridge_floor_a00=" << d.floor_a00 << '\n' << "ridge_floor_axx=" << d.floor_axx << '\n';
      out << "uniform_fallback_y=" << (est.basis_y.uniform_fallback() ? "true" : "false") << '\n';
      out << "uniform_fallback_x=" << (est.basis_x.uniform_fallback() ? "true" : "false") << '\n';
      return kExitOk;
    }

    if (tune_cmd->parsed()) {
      const Scaling sc = parse_scaling(scaling);
      const Dataset data = load_csv(input, response, sc);
      const TuningConfig tc = tune_tuning.config(seed, ridge);
      const TuningResult tr = run_tuning(data, tc, workers);
      std::ostringstream csv;
      csv << "stage,rank,index,name,degree,knots,score\n" << std::setprecision(12);
      for (std::size_t r = 0; r < tr.step1.kept.size(); ++r) {
        const std::size_t j = tr.step1.kept[r];
        csv << 1 << ',' << r + 1 << ',' << j + 1 << ',' << data.column_name(j) << ",1," << tr.step1.k_tilde << ','
            << tr.step1.scores[j] << '\n';
      }
      auto stage_rows = [&](int stage, const StageResult& st) {
        for (std::size_t r = 0; r < st.kept.size(); ++r) {
          const StageEntry& e = st.entries[r];
          csv << stage << ',' << r + 1 << ',' << e.index + 1 << ',' << data.column_name(e.index) << ','
              << e.choice.degree << ',' << e.choice.knots << ',' << e.score << '\n';
        }
      };
      stage_rows(2, tr.step2);
      stage_rows(3, tr.step3);
      emit(output, csv.str(), out);
      Settings s{{"input", input}, {"response", response}, {"scaling", to_string(sc)}, {"seed", std::to_string(seed)}};
      TuningOpts::record(tc, s);
      s.emplace_back("ridge", format_double(ridge));
      write_sidecar(output, "tune", s);
      err << "tune: scaling=" << to_string(sc) << " k_tilde=" << tr.step1.k_tilde << " gaps=";
      for (std::size_t i = 0; i < tr.step1.gaps.size(); ++i)
        err << (i ? "," : "") << "k" << tr.step1.k_values[i] << ":" << format_double(tr.step1.gaps[i]);
      err << " kept=" << tr.b1 << "/" << tr.b2 << "/" << tr.b3 << '\n';
      return kExitOk;
    }

    if (bench_cmd->parsed()) {
      BenchmarkSpec spec;
      spec.models = parse_model_list(models);
      std::stringstream ms(methods);
      for (std::string item; std::getline(ms, item, ',');)
        if (!item.empty()) spec.methods.push_back(parse_score_kind(item));
      std::stringstream ns(n_list);
      for (std::string item; std::getline(ns, item, ',');)
        if (!item.empty()) spec.n_list.push_back(static_cast<std::size_t>(std::stoul(item)));
      spec.p = p;
      spec.replicates = reps;
      spec.seed = seed;
      spec.method.mc_spec = SplineSpec{degree, knots, KnotPlacement::Quantile};
      spec.method.ridge = ridge;
      spec.method.ace.smoother_span = ace_span;
      spec.tuning = bench_tuning.config(seed, ridge);
      spec.tune_mc = !no_tune;
      spec.tail = tail == "printed" ? TailFormula::Printed : TailFormula::Corrected;
      spec.workers = workers;
      const BenchmarkReport report = run_benchmark(spec);

      std::ostringstream csv, md;
      write_report_csv(report, csv);
      write_report_markdown(report, md);
      write_file_atomic(bench_output + ".csv", csv.str());
      write_file_atomic(bench_output + ".md", md.str());
      Settings s{{"models", models}, {"methods", methods}, {"n", n_list}, {"p", std::to_string(p)},
                 {"reps", std::to_string(reps)}, {"seed", std::to_string(seed)}, {"tail-formula", tail},
                 {"no-tune", no_tune ? "true" : "false"}, {"degree", std::to_string(degree)},
                 {"knots", std::to_string(knots)}, {"ace-span", format_double(ace_span)},
                 {"ridge", format_double(ridge)}};
      TuningOpts::record(spec.tuning, s);
      write_file_atomic(bench_output + ".cfg", "# mcsis benchmark\n" + settings_text(s));
      for (const auto& r : report.rows)
        err << r.model.label() << " n=" << r.n << ' ' << to_string(r.method) << ": median MMS " << r.median_mms
            << " (" << format_double(r.seconds) << " s)\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace mcsis
