#include "udisc/eval_bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "udisc/random.hpp"

namespace udisc {

namespace {

bool parse_bool(std::string_view v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw Error(ErrorCode::InvalidArgument, "expected a boolean, got '" + std::string(v) + "'");
}

double parse_number(std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "expected a number, got '" + std::string(v) + "'");
  }
}

std::size_t parse_count(std::string_view v) {
  const double d = parse_number(v);
  if (d < 0 || d != std::floor(d)) throw Error(ErrorCode::InvalidArgument, "expected a non-negative integer, got '" + std::string(v) + "'");
  return static_cast<std::size_t>(d);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(sep, start);
    parts.push_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return parts;
}

std::string random_word(Rng& rng) {
  const auto len = 4 + rng.below(4);
  std::string w;
  for (std::uint64_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
  return w;
}

// Words whose default embedding has a non-zero dim 0, so the signal feature varies.
std::vector<std::string> signal_pool(Rng& rng, std::size_t size) {
  const HashedNgramEmbedder embedder{EmbedderConfig{}};
  std::vector<std::string> pool;
  while (pool.size() < size) {
    auto w = random_word(rng);
    if (embedder.embed(w)[0] != 0.0 && std::find(pool.begin(), pool.end(), w) == pool.end()) pool.push_back(std::move(w));
  }
  return pool;
}

constexpr std::size_t kWordPool = 32;

}  // namespace

SyntheticSpec SyntheticSpec::normalized() const {
  if (n_rows == 0) throw Error(ErrorCode::InvalidArgument, "n_rows must be positive");
  if (n_numeric == 0) throw Error(ErrorCode::InvalidArgument, "n_numeric must be positive");
  if (noise_sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be non-negative");
  SyntheticSpec s = *this;
  const std::size_t count = n_numeric + (text_signal ? n_text : 0);
  if (s.true_weights.empty()) {
    for (std::size_t i = 0; i < count; ++i) s.true_weights.push_back(static_cast<double>(count - i));
  }
  if (s.true_weights.size() != count) {
    throw Error(ErrorCode::DimensionMismatch, "true_weights needs " + std::to_string(count) + " entries, got " +
                                                  std::to_string(s.true_weights.size()));
  }
  const double total = std::accumulate(s.true_weights.begin(), s.true_weights.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "true_weights must have a positive sum");
  for (auto& w : s.true_weights) w /= total;
  return s;
}

SyntheticSpec SyntheticSpec::parse(std::string_view text) {
  SyntheticSpec s;
  for (auto item : split(text, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "expected key=value in '" + std::string(item) + "'");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "n") s.n_rows = parse_count(value);
    else if (key == "numeric" || key == "m") s.n_numeric = parse_count(value);
    else if (key == "text") s.n_text = parse_count(value);
    else if (key == "noise") s.noise_sigma = parse_number(value);
    else if (key == "signal") s.text_signal = parse_bool(value);
    else if (key == "seed") s.seed = parse_count(value);
    else if (key == "weights") {
      for (auto w : split(value, ':')) s.true_weights.push_back(parse_number(w));
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown synthetic key '" + std::string(key) + "'");
    }
  }
  return s.normalized();
}

LabeledDataset generate(const SyntheticSpec& raw) {
  const SyntheticSpec spec = raw.normalized();
  Rng rng(spec.seed);
  const std::size_t n = spec.n_rows;
  std::vector<AttributeColumn> columns;
  std::vector<double> truth(n, 0.0);

  for (std::size_t j = 0; j < spec.n_numeric; ++j) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) truth[i] += spec.true_weights[j] * v[i];
    columns.push_back(AttributeColumn::numeric("x" + std::to_string(j), std::move(v)));
  }

  const HashedNgramEmbedder embedder{EmbedderConfig{}};
  for (std::size_t t = 0; t < spec.n_text; ++t) {
    Rng pool_rng(spec.seed * 7919 + 104729 * (t + 1));
    const auto pool = signal_pool(pool_rng, kWordPool);
    std::vector<std::string> words(n);
    for (auto& w : words) w = pool[rng.below(pool.size())];
    if (spec.text_signal) {
      const double weight = spec.true_weights[spec.n_numeric + t];
      for (std::size_t i = 0; i < n; ++i) truth[i] += weight * (embedder.embed(words[i])[0] + 1.0) / 2.0;
    }
    columns.push_back(AttributeColumn::text("t" + std::to_string(t), std::move(words)));
  }

  LabeledDataset out;
  out.dataset = Dataset::make("synthetic", std::move(columns));
  std::vector<double> labels = truth;
  if (spec.noise_sigma > 0.0)
    for (auto& y : labels) y += rng.normal(0.0, spec.noise_sigma);
  out.labels = std::move(labels);
  out.label_name = "utility";
  out.truth = std::move(truth);
  out.source_rows.resize(n);
  std::iota(out.source_rows.begin(), out.source_rows.end(), std::size_t{0});
  return out;
}

std::vector<std::string> synthetic_ranking(const SyntheticSpec& raw, const Dataset& ds) {
  const SyntheticSpec spec = raw.normalized();
  std::vector<std::pair<std::string, double>> weighted;
  for (std::size_t j = 0; j < spec.n_numeric; ++j) weighted.emplace_back("x" + std::to_string(j), spec.true_weights[j]);
  for (std::size_t t = 0; t < spec.n_text; ++t) {
    weighted.emplace_back("t" + std::to_string(t), spec.text_signal ? spec.true_weights[spec.n_numeric + t] : -1.0);
  }
  std::stable_sort(weighted.begin(), weighted.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> order;
  for (const auto& [name, w] : weighted)
    if (ds.find(name)) order.push_back(name);
  return order;
}

double precision_at_k(const DiscoveryResult& predicted, std::span<const double> truth_scores, std::size_t k) {
  if (predicted.k != k) {
    throw Error(ErrorCode::KMismatch, "prediction was made for k=" + std::to_string(predicted.k) + ", asked k=" + std::to_string(k));
  }
  if (k == 0 || k > truth_scores.size()) {
    throw Error(ErrorCode::InvalidArgument, "k must be in [1, n]");
  }
  std::vector<ScoredTuple> truth(truth_scores.size());
  for (std::size_t i = 0; i < truth_scores.size(); ++i) truth[i] = {static_cast<TupleId>(i), truth_scores[i]};
  const auto true_top = select_top_k(truth, k).ids();
  auto pred = predicted.ids();
  std::vector<TupleId> sorted_true(true_top.begin(), true_top.end());
  std::sort(sorted_true.begin(), sorted_true.end());
  std::sort(pred.begin(), pred.end());
  pred.erase(std::unique(pred.begin(), pred.end()), pred.end());
  std::vector<TupleId> common;
  std::set_intersection(pred.begin(), pred.end(), sorted_true.begin(), sorted_true.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / static_cast<double>(k);
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Gnn: return "gnn";
    case Algorithm::Plod: return "plod";
    case Algorithm::Bod: return "bod";
    case Algorithm::TopK: return "topk";
    case Algorithm::Skyline: return "skyline";
    case Algorithm::MultiObjective: return "moo";
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view s) {
  for (auto a : all_algorithms())
    if (to_string(a) == s) return a;
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(s) + "' (expected gnn, plod, bod, topk, skyline or moo)");
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::Gnn, Algorithm::Plod, Algorithm::Bod, Algorithm::TopK, Algorithm::Skyline, Algorithm::MultiObjective};
}

std::span<const double> truth_of(const LabeledDataset& data) {
  if (data.truth) return *data.truth;
  if (data.labels) return *data.labels;
  throw Error(ErrorCode::InvalidArgument, "precision needs a label column or a known utility");
}

DiscoveryResult run_algorithm(Algorithm algorithm, const LabeledDataset& data,
                              const std::vector<std::string>& ranking, const BenchSettings& settings) {
  const std::size_t k = settings.train.k;
  if (algorithm == Algorithm::Gnn) {
    const TrainingRun run = train_pipeline(data, ranking, settings.train, settings.embedder);
    return discover(run.pipeline, run.normalized, run.post_gnn, k);
  }
  const AttributeRanking r = build_ranking(ranking, data.dataset);
  const NormalizedDataset nds = normalize(data.dataset, r);
  switch (algorithm) {
    case Algorithm::Plod: {
      if (data.labels) return run_plod(nds, *data.labels, settings.train, k);
      const auto pre = embed_text_attributes(data.dataset, HashedNgramEmbedder(settings.embedder));
      return run_plod(nds, synthesize_labels(nds, pre), settings.train, k);
    }
    case Algorithm::Bod: return run_bod_proxy(nds, k);
    case Algorithm::TopK: return run_topk(nds, k);
    case Algorithm::Skyline: return run_skyline_selection(nds, k);
    case Algorithm::MultiObjective: return run_multiobjective(nds, k);
    case Algorithm::Gnn: break;
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled algorithm");
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  // shifted by the first value so identical inputs give exactly zero spread
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  const double offset = sum / n;
  double var = 0.0;
  for (double v : values) var += (v - shift - offset) * (v - shift - offset);
  return {shift + offset, std::sqrt(var / n)};
}

StabilityResult stability(Algorithm algorithm, const LabeledDataset& data,
                          const std::vector<std::string>& ranking, const BenchSettings& settings) {
  if (settings.stability_runs < 2) throw Error(ErrorCode::InvalidArgument, "stability needs at least 2 runs");
  if (!(settings.subsample > 0.0 && settings.subsample <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "subsample must lie in (0, 1]");
  }
  const std::size_t n = data.dataset.row_count;
  const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(settings.subsample * static_cast<double>(n))));
  StabilityResult out;
  for (std::size_t r = 0; r < settings.stability_runs; ++r) {
    Rng rng(settings.base_seed + r);
    const LabeledDataset sub = data.subset(rng.sample_without_replacement(n, take));
    BenchSettings local = settings;
    local.train.k = std::min(settings.train.k, sub.dataset.row_count);
    const DiscoveryResult result = run_algorithm(algorithm, sub, ranking, local);
    out.precisions.push_back(precision_at_k(result, truth_of(sub), local.train.k));
  }
  std::tie(out.mean, out.std) = mean_std(out.precisions);
  return out;
}

const ReportRow* EvaluationReport::find(std::string_view algorithm) const {
  for (const auto& r : rows)
    if (r.algorithm == algorithm) return &r;
  return nullptr;
}

EvaluationReport run_benchmark(const LabeledDataset& data, const std::vector<std::string>& ranking,
                               const std::vector<Algorithm>& algorithms, const BenchSettings& settings) {
  EvaluationReport report;
  report.dataset = data.dataset.name;
  report.rows_in_dataset = data.dataset.row_count;
  report.settings = settings;
  report.settings.train.k = std::min(settings.train.k, data.dataset.row_count);
  report.k = report.settings.train.k;
  for (std::size_t r = 0; r < settings.stability_runs; ++r) report.seeds.push_back(settings.base_seed + r);

  const auto truth = truth_of(data);
  for (Algorithm algorithm : algorithms) {
    ReportRow row;
    row.algorithm = std::string(to_string(algorithm));
    if (algorithm == Algorithm::Bod) row.note = "dominance-count proxy";
    if (algorithm == Algorithm::TopK) row.note = "fixed equal-weight utility";
    if (algorithm == Algorithm::Skyline) row.note = "skyline members first, then by dominator count";
    try {
      run_algorithm(algorithm, data, ranking, report.settings);  // warm-up, not timed
      const auto start = std::chrono::steady_clock::now();
      const DiscoveryResult result = run_algorithm(algorithm, data, ranking, report.settings);
      const auto stop = std::chrono::steady_clock::now();
      row.runtime_seconds = std::chrono::duration<double>(stop - start).count();
      row.precision = precision_at_k(result, truth, report.k);
      const StabilityResult st = stability(algorithm, data, ranking, report.settings);
      row.stability_mean = st.mean;
      row.stability_std = st.std;
      if (algorithm == Algorithm::Skyline) {
        SkylineStats stats;
        run_skyline(normalize(data.dataset, build_ranking(ranking, data.dataset)), &stats);
        row.dominance_comparisons = stats.comparisons;
      }
    } catch (const Error& e) {
      row.precision.reset();
      row.stability_mean.reset();
      row.stability_std.reset();
      row.runtime_seconds.reset();
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<EvaluationReport> sweep_tuples(const SyntheticSpec& spec, const std::vector<std::size_t>& sizes,
                                           const std::vector<Algorithm>& algorithms,
                                           const BenchSettings& settings) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw Error(ErrorCode::InvalidArgument, "sweep sizes must be ascending");
  std::vector<EvaluationReport> reports;
  for (std::size_t n : sizes) {
    SyntheticSpec s = spec;
    s.n_rows = n;
    const LabeledDataset data = generate(s);
    reports.push_back(run_benchmark(data, synthetic_ranking(s, data.dataset), algorithms, settings));
  }
  return reports;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row = {{"algorithm", r.algorithm},
                          {"precision", optional_json(r.precision)},
                          {"stability_mean", optional_json(r.stability_mean)},
                          {"stability_std", optional_json(r.stability_std)},
                          {"runtime_seconds", optional_json(r.runtime_seconds)},
                          {"note", r.note},
                          {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr)}};
    if (r.dominance_comparisons) row["dominance_comparisons"] = *r.dominance_comparisons;
    rows.push_back(std::move(row));
  }
  const auto& s = report.settings;
  return {{"schema", kReportSchema},
          {"dataset", {{"name", report.dataset}, {"rows", report.rows_in_dataset}, {"k", report.k}}},
          {"config",
           {{"learning_rate", s.train.learning_rate},
            {"epochs", s.train.epochs},
            {"ridge_lambda", s.train.ridge_lambda},
            {"seed", s.train.seed},
            {"embed_dim", s.embedder.dim},
            {"ngram_min", s.embedder.ngram_min},
            {"ngram_max", s.embedder.ngram_max},
            {"stability_runs", s.stability_runs},
            {"subsample", s.subsample}}},
          {"seeds", report.seeds},
          {"precision_reference", "top-k under the known utility (synthetic data) or the label column"},
          {"rows", std::move(rows)}};
}

std::string report_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "algorithm,precision,stability_mean,stability_std,runtime_seconds,error\n";
  auto field = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : report.rows) {
    out << r.algorithm << ',' << field(r.precision) << ',' << field(r.stability_mean) << ','
        << field(r.stability_std) << ',' << field(r.runtime_seconds) << ','
        << csv::quote(r.error.value_or(""), ',') << '\n';
  }
  return out.str();
}

std::string plot_csv(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  out << "n,algorithm,precision,runtime_s\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      out << rep.rows_in_dataset << ',' << r.algorithm << ','
          << (r.precision ? format_double(*r.precision) : "") << ','
          << (r.runtime_seconds ? format_double(*r.runtime_seconds) : "") << '\n';
    }
  }
  return out.str();
}

std::vector<std::string> validate_report_json(const nlohmann::json& j) {
  std::vector<std::string> problems;
  auto require = [&](const nlohmann::json& obj, const char* key, auto check, const char* what) {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back(std::string("missing '") + key + "'");
      return false;
    }
    if (!check(obj.at(key))) {
      problems.push_back(std::string("'") + key + "' must be " + what);
      return false;
    }
    return true;
  };
  const auto is_string = [](const nlohmann::json& v) { return v.is_string(); };
  const auto is_count = [](const nlohmann::json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); };
  const auto is_number = [](const nlohmann::json& v) { return v.is_number(); };
  const auto is_object = [](const nlohmann::json& v) { return v.is_object(); };
  const auto is_array = [](const nlohmann::json& v) { return v.is_array(); };
  const auto unit_or_null = [](const nlohmann::json& v) { return v.is_null() || (v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0); };
  const auto nonneg_or_null = [](const nlohmann::json& v) { return v.is_null() || (v.is_number() && v.get<double>() >= 0.0); };
  const auto string_or_null = [](const nlohmann::json& v) { return v.is_null() || v.is_string(); };

  if (!j.is_object()) return {"report must be an object"};
  if (require(j, "schema", is_string, "a string") && j["schema"] != kReportSchema) {
    problems.push_back("'schema' must equal " + std::string(kReportSchema));
  }
  if (require(j, "dataset", is_object, "an object")) {
    require(j["dataset"], "name", is_string, "a string");
    require(j["dataset"], "rows", is_count, "a non-negative integer");
    require(j["dataset"], "k", is_count, "a non-negative integer");
  }
  if (require(j, "config", is_object, "an object")) {
    for (const char* key : {"learning_rate", "ridge_lambda", "subsample"}) require(j["config"], key, is_number, "a number");
    for (const char* key : {"epochs", "seed", "embed_dim", "ngram_min", "ngram_max", "stability_runs"})
      require(j["config"], key, is_count, "a non-negative integer");
  }
  if (require(j, "seeds", is_array, "an array")) {
    for (const auto& s : j["seeds"])
      if (!is_count(s)) problems.push_back("'seeds' entries must be non-negative integers");
  }
  require(j, "precision_reference", is_string, "a string");
  if (require(j, "rows", is_array, "an array")) {
    for (const auto& row : j["rows"]) {
      if (!row.is_object()) {
        problems.push_back("rows must be objects");
        continue;
      }
      require(row, "algorithm", is_string, "a string");
      require(row, "precision", unit_or_null, "null or a number in [0, 1]");
      require(row, "stability_mean", unit_or_null, "null or a number in [0, 1]");
      require(row, "stability_std", nonneg_or_null, "null or a non-negative number");
      require(row, "runtime_seconds", nonneg_or_null, "null or a non-negative number");
      require(row, "note", is_string, "a string");
      require(row, "error", string_or_null, "null or a string");
      if (row.contains("dominance_comparisons") && !is_count(row["dominance_comparisons"])) {
        problems.push_back("'dominance_comparisons' must be a non-negative integer");
      }
      static const std::vector<std::string> known{"algorithm", "precision", "stability_mean", "stability_std",
                                                  "runtime_seconds", "note", "error", "dominance_comparisons"};
      for (auto it = row.begin(); it != row.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
          problems.push_back("unknown row field '" + it.key() + "'");
        }
      }
    }
  }
  return problems;
}

std::uint64_t report_fingerprint(const EvaluationReport& report) {
  nlohmann::json j = to_json(report);
  for (auto& row : j["rows"]) row.erase("runtime_seconds");
  return fnv1a64(j.dump());
}

const std::vector<ReferenceTable>& reference_tables() {
  static const std::vector<ReferenceTable> tables{
      {"boston_housing",
       {{"plod", 0.5, 0.570, 0.110, 4.7114},
        {"gnn", 0.6, 0.610, 0.104, 5.0887},
        {"bod", 0.0, 0.000, 0.000, 3.1400},
        {"topk", 0.1, 0.030, 0.046, 2.4870},
        {"skyline", 0.0, 0.040, 0.066, 2.8929},
        {"moo", 0.4, 0.490, 0.054, 3.1718}}},
      {"kaggle_housing",
       {{"plod", 0.6, 0.580, 0.098, 3.3617},
        {"gnn", 0.7, 0.700, 0.063, 3.2283},
        {"bod", 0.0, 0.010, 0.030, 3.6452},
        {"topk", 0.0, 0.030, 0.046, 3.3517},
        {"skyline", 0.1, 0.010, 0.030, 3.0820},
        {"moo", 0.5, 0.240, 0.066, 3.0897}}},
  };
  return tables;
}

nlohmann::json reference_tables_json() {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : reference_tables()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
      rows.push_back({{"algorithm", r.algorithm},
                      {"precision", r.precision},
                      {"stability_mean", r.stability_mean},
                      {"stability_std", r.stability_std},
                      {"runtime_seconds", r.runtime_seconds}});
    }
    out.push_back({{"dataset", t.dataset}, {"rows", std::move(rows)}});
  }
  return out;
}

}  // namespace udisc
