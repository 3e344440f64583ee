#include "permchol/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "permchol/baselines.hpp"
#include "permchol/csv.hpp"
#include "permchol/ensemble.hpp"
#include "permchol/errors.hpp"
#include "permchol/lda.hpp"
#include "permchol/parallel.hpp"

namespace permchol::cli {

namespace {

using nlohmann::ordered_json;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct SimulateFlags {
  int model = 1;
  Index p = 30;
  Index n = 50;
  int reps = 50;
  int M = 100;
  std::string methods = "m1,m2";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> perm_seed;
  std::string out;
};

struct EstimateFlags {
  std::string input;
  bool header = false;
  std::string method = "m2";
  int M = 100;
  std::uint64_t seed = 0;
  std::string out;
};

struct ClassifyFlags {
  std::string train;
  std::string test;
  bool header = false;
  std::string label_col;
  std::string estimator = "m2";
  std::optional<Index> screen_top;
  int M = 100;
  std::uint64_t seed = 0;
  std::string out;
};

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) s += sep;
    s += parts[i];
  }
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void write_json(const std::string& path, const ordered_json& doc) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot write " + path);
  file << doc.dump(2) << '\n';
  if (!file) throw DataError("failed writing " + path);
}

std::vector<Method> parse_method_list(const std::string& list) {
  std::vector<Method> methods;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto m = parse_method(item);
    if (!m || (*m != Method::kM1 && *m != Method::kM2 && *m != Method::kAve &&
               *m != Method::kBicOrder)) {
      throw UsageError("unknown method '" + item + "' (expected m1, m2, ave, bic)");
    }
    if (std::find(methods.begin(), methods.end(), *m) != methods.end()) {
      throw UsageError("method '" + item + "' listed twice");
    }
    methods.push_back(*m);
  }
  if (methods.empty()) throw UsageError("--methods is empty");
  return methods;
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

int simulate(const SimulateFlags& flags, int threads,
             const std::vector<std::string>& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  if (flags.p < 2) throw UsageError("--p must be >= 2");
  if (flags.model == 3 && flags.p < 10) throw UsageError("model 3 needs --p >= 10");
  if (flags.n < 5) throw UsageError("--n must be >= 5 (cross-validation folds)");
  if (flags.reps < 1) throw UsageError("--reps must be >= 1");
  if (flags.M < 1) throw UsageError("--M must be >= 1");

  ExperimentConfig cfg;
  cfg.model = ModelSpec{flags.model, flags.p, flags.perm_seed.value_or(flags.seed)};
  cfg.n = flags.n;
  cfg.reps = flags.reps;
  cfg.M = flags.M;
  cfg.methods = parse_method_list(flags.methods);
  cfg.seed = flags.seed;
  cfg.threads = threads;

  const ExperimentReport report = run_experiment(cfg);

  ordered_json methods = ordered_json::array();
  for (Method m : cfg.methods) methods.push_back(std::string(method_name(m)));
  ordered_json doc;
  doc["command"] = "permchol " + join(args, " ");
  doc["version"] = kVersion;
  doc["config"] = {{"model", flags.model},
                   {"p", flags.p},
                   {"n", flags.n},
                   {"reps", flags.reps},
                   {"M", flags.M},
                   {"methods", methods},
                   {"seed", flags.seed},
                   {"perm_seed", cfg.model.perm_seed}};
  doc["results"] = experiment_results_json(report);
  doc["failures"] = experiment_failures_json(report);
  doc["duration_seconds"] = seconds_since(start);
  write_json(flags.out, doc);
  print_experiment_table(report, out);
  return kSuccess;
}

int estimate(const EstimateFlags& flags, int threads,
             const std::vector<std::string>& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto method = parse_method(flags.method);
  if (!method || (*method != Method::kM1 && *method != Method::kM2 &&
                  *method != Method::kAve && *method != Method::kBicOrder)) {
    throw UsageError("--method must be one of m1, m2, ave, bic");
  }
  if (flags.M < 1) throw UsageError("--M must be >= 1");

  const Matrix X = center_columns(numeric_columns(read_csv(flags.input, flags.header)));
  if (X.rows() < 2) throw DataError("need at least 2 observations");

  EnsembleOptions options;
  options.threads = threads;
  std::optional<double> delta_opt;
  std::optional<PrecisionEstimate> result;
  switch (*method) {
    case Method::kM1:
      result = estimate_m1(X, flags.M, flags.seed, options);
      break;
    case Method::kM2: {
      ThresholdSelection selection;
      result = m2_from_state(ensemble_fit(X, flags.M, flags.seed, options), X,
                             options.threshold_grid, &selection);
      delta_opt = selection.delta_opt;
      break;
    }
    case Method::kAve:
      result = estimate_ave(X, flags.M, flags.seed, options);
      break;
    default:
      result = estimate_bic_order(X, flags.seed, options.cv);
      break;
  }

  ordered_json doc;
  doc["command"] = "permchol " + join(args, " ");
  doc["version"] = kVersion;
  doc["config"] = {{"input", flags.input},
                   {"header", flags.header},
                   {"method", flags.method},
                   {"M", flags.M},
                   {"seed", flags.seed}};
  doc["n"] = X.rows();
  doc["p"] = X.cols();
  doc["method"] = std::string(method_name(*method));
  if (delta_opt) doc["delta_opt"] = *delta_opt;
  doc["omega"] = matrix_json(result->omega());
  doc["nonzero_offdiag_count"] = nonzero_offdiag_count(result->omega());
  doc["duration_seconds"] = seconds_since(start);
  write_json(flags.out, doc);
  out << "wrote " << X.cols() << "x" << X.cols() << " " << method_name(*method)
      << " estimate to " << flags.out << '\n';
  return kSuccess;
}

std::size_t resolve_label_column(const CsvTable& table, const std::string& spec) {
  const auto it = std::find(table.header.begin(), table.header.end(), spec);
  if (it != table.header.end()) {
    return static_cast<std::size_t>(it - table.header.begin());
  }
  const std::size_t width = table.rows.empty() ? 0 : table.rows.front().size();
  std::size_t index = 0;
  std::size_t used = 0;
  try {
    index = std::stoul(spec, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == spec.size() && !spec.empty() && index < width) return index;
  throw DataError("label column '" + spec + "' not found");
}

int classify(const ClassifyFlags& flags, int threads,
             const std::vector<std::string>& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto method = parse_method(flags.estimator);
  if (!method || *method == Method::kSingleOrder) {
    throw UsageError("--estimator must be one of m1, m2, ave, bic, dlda, sample");
  }
  if (flags.M < 1) throw UsageError("--M must be >= 1");
  if (flags.screen_top && *flags.screen_top < 1) {
    throw UsageError("--screen-top must be >= 1");
  }

  const CsvTable train = read_csv(flags.train, flags.header);
  const CsvTable test = read_csv(flags.test, flags.header);
  if (train.rows.empty() || test.rows.empty()) throw DataError("empty data file");
  const std::size_t label_col = resolve_label_column(train, flags.label_col);
  const std::size_t test_label_col = resolve_label_column(test, flags.label_col);
  if (test_label_col != label_col ||
      test.rows.front().size() != train.rows.front().size()) {
    throw DataError("train and test files have different layouts");
  }

  std::set<std::string> names;
  for (const auto& row : train.rows) names.insert(row[label_col]);
  const std::vector<std::string> classes(names.begin(), names.end());
  const auto encode = [&](const CsvTable& table, const char* which) {
    std::vector<int> labels;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& value = table.rows[i][label_col];
      const auto it = std::lower_bound(classes.begin(), classes.end(), value);
      if (it == classes.end() || *it != value) {
        throw DataError(std::string(which) + " line " +
                        std::to_string(table.line_numbers[i]) + ": label '" +
                        value + "' does not occur in the training data");
      }
      labels.push_back(static_cast<int>(it - classes.begin()));
    }
    return labels;
  };
  const std::vector<int> train_labels = encode(train, "train");
  const std::vector<int> test_labels = encode(test, "test");
  const Matrix X_train = numeric_columns(train, label_col);
  const Matrix X_test = numeric_columns(test, label_col);
  const int K = static_cast<int>(classes.size());
  if (X_train.rows() <= K) throw DataError("need more training rows than classes");

  std::vector<Index> selected;
  if (flags.screen_top) {
    if (K != 2) throw UsageError("--screen-top needs exactly two classes");
    if (*flags.screen_top > X_train.cols()) {
      throw UsageError("--screen-top exceeds the number of variables");
    }
    selected = t_test_screen(X_train, train_labels, *flags.screen_top);
  }

  EstimatorSpec spec;
  spec.method = *method;
  spec.M = flags.M;
  spec.seed = flags.seed;
  spec.options.threads = threads;
  const LdaModel model = lda_train(X_train, train_labels, K, spec, selected);
  const ClassificationResult result =
      misclassification_error(model, X_test, test_labels);

  ordered_json confusion = ordered_json::array();
  for (int i = 0; i < K; ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < K; ++j) row.push_back(result.confusion(i, j));
    confusion.push_back(row);
  }
  ordered_json doc;
  doc["command"] = "permchol " + join(args, " ");
  doc["version"] = kVersion;
  doc["config"] = {{"train", flags.train},
                   {"test", flags.test},
                   {"header", flags.header},
                   {"label_col", flags.label_col},
                   {"estimator", flags.estimator},
                   {"screen_top", flags.screen_top ? ordered_json(*flags.screen_top)
                                                   : ordered_json(nullptr)},
                   {"M", flags.M},
                   {"seed", flags.seed}};
  doc["classes"] = classes;
  doc["selected_variables"] = model.selected;
  if (!train.header.empty()) {
    std::vector<std::string> feature_names;
    for (std::size_t j = 0; j < train.header.size(); ++j) {
      if (j != label_col) feature_names.push_back(train.header[j]);
    }
    ordered_json selected_names = ordered_json::array();
    for (Index j : model.selected) {
      selected_names.push_back(feature_names[static_cast<std::size_t>(j)]);
    }
    doc["selected_names"] = selected_names;
  }
  doc["error_count"] = result.error_count;
  doc["error_rate"] = result.error_rate;
  doc["confusion"] = confusion;
  doc["duration_seconds"] = seconds_since(start);
  write_json(flags.out, doc);
  out << result.error_count << " of " << X_test.rows()
      << " test observations misclassified (rate " << result.error_rate << ")\n";
  return kSuccess;
}

template <class Command>
int guarded(Command&& command, std::ostream& err) {
  try {
    return command();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ArgumentError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace

long long nonzero_offdiag_count(const Matrix& omega) {
  long long count = 0;
  for (Index j = 0; j < omega.cols(); ++j) {
    for (Index i = 0; i < omega.rows(); ++i) {
      if (i != j && omega(i, j) != 0.0) ++count;
    }
  }
  return count;
}

ordered_json matrix_json(const Matrix& A) {
  ordered_json rows = ordered_json::array();
  for (Index i = 0; i < A.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const ordered_json& rows) {
  const auto n = static_cast<Index>(rows.size());
  const Index m = n > 0 ? static_cast<Index>(rows[0].size()) : 0;
  Matrix A(n, m);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != m) throw DataError("ragged matrix");
    for (Index j = 0; j < m; ++j) {
      A(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return A;
}

ordered_json experiment_results_json(const ExperimentReport& report) {
  ordered_json results = ordered_json::object();
  const auto& names = loss_names();
  for (const auto& summary : report.methods) {
    ordered_json losses = ordered_json::object();
    for (std::size_t l = 0; l < names.size(); ++l) {
      const LossSummary& s = summary.losses[l];
      losses[std::string(names[l])] = {
          {"mean", s.count > 0 ? ordered_json(s.mean) : ordered_json(nullptr)},
          {"se", optional_number(s.se)},
          {"count", s.count}};
    }
    results[std::string(method_name(summary.method))] = losses;
  }
  return results;
}

ordered_json experiment_failures_json(const ExperimentReport& report) {
  ordered_json failures = ordered_json::object();
  for (const auto& summary : report.methods) {
    failures[std::string(method_name(summary.method))] = {
        {"count", summary.failures}, {"messages", summary.failure_messages}};
  }
  return failures;
}

void print_experiment_table(const ExperimentReport& report, std::ostream& out) {
  const auto& names = loss_names();
  const auto flags = out.flags();
  out << std::left << std::setw(8) << "method";
  for (const auto name : names) out << std::right << std::setw(20) << name;
  out << std::right << std::setw(10) << "failures" << '\n';
  for (const auto& summary : report.methods) {
    out << std::left << std::setw(8) << method_name(summary.method);
    for (const auto& s : summary.losses) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(3);
      if (s.count == 0) {
        cell << "-";
      } else {
        cell << s.mean;
        if (s.se) cell << " (" << *s.se << ")";
      }
      out << std::right << std::setw(20) << cell.str();
    }
    out << std::right << std::setw(10) << summary.failures << '\n';
  }
  out.flags(flags);
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Order-invariant sparse precision matrix estimation", "permchol"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  int threads = default_thread_count();
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);

  SimulateFlags sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo benchmark on a known model");
  sim_cmd->add_option("--model", sim.model, "Model 1..6")->required()->check(CLI::Range(1, 6));
  sim_cmd->add_option("--p", sim.p, "Dimension")->required();
  sim_cmd->add_option("--n", sim.n, "Sample size")->required();
  sim_cmd->add_option("--reps", sim.reps, "Repetitions")->capture_default_str();
  sim_cmd->add_option("--M", sim.M, "Number of permutations")->capture_default_str();
  sim_cmd->add_option("--methods", sim.methods, "Comma-separated: m1,m2,ave,bic")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
  sim_cmd->add_option("--perm-seed", sim.perm_seed, "Model 2 permutation seed (default: --seed)");
  sim_cmd->add_option("--out", sim.out, "Report path (JSON)")->required();
  sim_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  EstimateFlags est;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate a precision matrix from CSV data");
  est_cmd->add_option("--input", est.input, "CSV file, rows are observations")->required();
  est_cmd->add_flag("--header", est.header, "First line is a header");
  est_cmd->add_option("--method", est.method, "m1, m2, ave or bic")->capture_default_str();
  est_cmd->add_option("--M", est.M, "Number of permutations")->capture_default_str();
  est_cmd->add_option("--seed", est.seed, "Seed")->capture_default_str();
  est_cmd->add_option("--out", est.out, "Output path (JSON)")->required();
  est_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  ClassifyFlags cls;
  auto* cls_cmd = app.add_subcommand("classify", "LDA with a plug-in precision estimate");
  cls_cmd->add_option("--train", cls.train, "Training CSV")->required();
  cls_cmd->add_option("--test", cls.test, "Test CSV")->required();
  cls_cmd->add_flag("--header", cls.header, "First line is a header");
  cls_cmd->add_option("--label-col", cls.label_col, "Label column name or 0-based index")
      ->required();
  cls_cmd->add_option("--estimator", cls.estimator, "m1, m2, ave, bic, dlda or sample")
      ->capture_default_str();
  cls_cmd->add_option("--screen-top", cls.screen_top, "Keep the top variables by |t|");
  cls_cmd->add_option("--M", cls.M, "Number of permutations")->capture_default_str();
  cls_cmd->add_option("--seed", cls.seed, "Seed")->capture_default_str();
  cls_cmd->add_option("--out", cls.out, "Output path (JSON)")->required();
  cls_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> argv_storage{"permchol"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  if (*sim_cmd) return guarded([&] { return simulate(sim, threads, args, out); }, err);
  if (*est_cmd) return guarded([&] { return estimate(est, threads, args, out); }, err);
  return guarded([&] { return classify(cls, threads, args, out); }, err);
}

}  // namespace permchol::cli
