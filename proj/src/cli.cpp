#include "udisc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "udisc/eval_bench.hpp"
#include "udisc/model_io.hpp"

namespace udisc::cli {

namespace {

struct Options {
  // paths
  std::string input;
  std::string output;
  std::string ranking_path;
  std::vector<std::string> rank;
  std::string model;
  std::string dump_graph;
  std::string dump_embeddings;
  std::string csv_path;
  std::string plot_path;
  std::string synthetic;
  std::string sweep;
  std::string format = "auto";
  std::string algos = "gnn,plod,bod,topk,skyline,moo";
  bool emit_fixture = false;

  // ingest
  char delimiter = ',';
  bool no_header = false;
  std::string label;
  std::vector<std::string> missing;
  std::vector<std::string> negate;
  std::size_t inference_sample = 0;

  // training / embedding
  double learning_rate = 0.01;
  int epochs = 500;
  double ridge = 1e-3;
  std::size_t k = 10;
  int embed_dim = 64;
  int ngram_min = 2;
  int ngram_max = 3;
  std::uint64_t seed = 42;

  // benchmark
  std::size_t runs = 10;
  double subsample = 0.8;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
}

IngestConfig ingest_config(const Options& o) {
  IngestConfig c;
  c.delimiter = o.delimiter;
  c.has_header = !o.no_header;
  if (!o.label.empty()) c.label_column = o.label;
  if (!o.missing.empty()) c.missing_tokens = {o.missing.begin(), o.missing.end()};
  if (o.inference_sample > 0) c.type_inference_sample = o.inference_sample;
  c.negate = o.negate;
  return c;
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.learning_rate = o.learning_rate;
  c.epochs = o.epochs;
  c.ridge_lambda = o.ridge;
  c.seed = o.seed;
  c.k = o.k;
  c.validate();
  return c;
}

EmbedderConfig embedder_config(const Options& o) {
  EmbedderConfig c;
  c.dim = o.embed_dim;
  c.ngram_min = o.ngram_min;
  c.ngram_max = o.ngram_max;
  c.validate();
  return c;
}

std::vector<std::string> ranking_order(const Options& o) {
  if (!o.ranking_path.empty()) return parse_ranking_text(read_file(o.ranking_path));
  return o.rank;
}

void add_ingest_flags(CLI::App* app, Options& o) {
  app->add_option("--delimiter", o.delimiter, "Field delimiter");
  app->add_flag("--no-header", o.no_header, "First row is data, columns are named c0, c1, ...");
  app->add_option("--label", o.label, "Numeric column holding observed utility labels");
  app->add_option("--missing", o.missing, "Missing-value token (repeatable; replaces the default set)");
  app->add_option("--negate", o.negate, "Numeric attribute where smaller is better (repeatable)");
  app->add_option("--inference-sample", o.inference_sample, "Rows used for type inference (0 = all)");
}

void add_train_flags(CLI::App* app, Options& o) {
  app->add_option("--lr", o.learning_rate, "Gradient-descent learning rate")->check(CLI::PositiveNumber);
  app->add_option("--epochs", o.epochs, "Gradient-descent epochs")->check(CLI::PositiveNumber);
  app->add_option("--ridge", o.ridge, "Ridge penalty on non-intercept coefficients")->check(CLI::NonNegativeNumber);
  app->add_option("--embed-dim", o.embed_dim, "Text embedding dimension");
  app->add_option("--ngram-min", o.ngram_min, "Shortest character n-gram");
  app->add_option("--ngram-max", o.ngram_max, "Longest character n-gram");
}

void add_ranking_flags(CLI::App* app, Options& o) {
  app->add_option("--ranking", o.ranking_path, "Ranking file: one attribute per line, best first");
  app->add_option("--rank", o.rank, "Ranked attribute, best first (repeatable)");
}

void print_summary(const TrainingRun& run, std::ostream& out) {
  const auto& p = run.pipeline;
  out << "attribute weights:\n";
  for (const auto& a : p.ranking.order) {
    out << "  " << std::left << std::setw(20) << a << ' ' << format_double(p.ranking.weight(a)) << '\n';
  }
  out << "labels: " << (p.user_labels ? "user-supplied" : "synthesized from ranking") << '\n';
  out << "SSE_num: " << format_double(p.sse_num) << '\n';
  out << "SSE_text: " << format_double(p.sse_text) << '\n';
  for (const UtilityModel* m : {&p.synthetic, &p.real}) {
    out << to_string(m->stage()) << " model: intercept " << format_double(m->intercept()) << ", "
        << m->numeric_count() << " numeric + " << m->text_count() << " text coefficients, training SSE "
        << format_double(m->training_sse()) << '\n';
    for (std::size_t j = 0; j < m->numeric_attributes().size(); ++j) {
      out << "    " << m->numeric_attributes()[j] << ": "
          << format_double(m->numeric_coeffs()[static_cast<Eigen::Index>(j)]) << '\n';
    }
    for (const auto& t : m->text_attributes()) {
      double norm = 0.0;
      for (int d = 0; d < m->text_dim(); ++d) norm += m->text_coeff(t, d) * m->text_coeff(t, d);
      out << "    " << t << ": |coeffs| " << format_double(std::sqrt(norm)) << '\n';
    }
  }
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const IngestConfig config = ingest_config(o);
  const LabeledDataset cleaned = clean(load_csv(o.input, config), config);
  nlohmann::json summary = {{"dataset", cleaned.dataset.name},
                            {"rows", cleaned.dataset.row_count},
                            {"label", cleaned.labels ? nlohmann::json(cleaned.label_name) : nlohmann::json(nullptr)}};
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : cleaned.dataset.columns) {
    const auto imputed = std::count(c.missing_mask.begin(), c.missing_mask.end(), true);
    cols.push_back({{"name", c.name}, {"kind", c.is_numeric() ? "numeric" : "text"}, {"imputed", imputed}});
  }
  summary["columns"] = std::move(cols);
  if (!o.output.empty()) {
    std::ostringstream buf;
    write_csv(cleaned, buf, config.delimiter);
    write_file(o.output, buf.str());
  }
  out << summary.dump(2) << '\n';
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const IngestConfig config = ingest_config(o);
  const LabeledDataset data = clean(load_csv(o.input, config), config);
  const auto order = ranking_order(o);
  if (order.empty()) throw Error(ErrorCode::NotAPermutation, "no ranking given (use --ranking or --rank)");
  const TrainingRun run = train_pipeline(data, order, train_config(o), embedder_config(o));
  save_pipeline(run.pipeline, o.model);
  if (!o.dump_graph.empty()) write_file(o.dump_graph, run.pipeline.graph.to_json().dump(2) + "\n");
  if (!o.dump_embeddings.empty()) {
    const HashedNgramEmbedder embedder(embedder_config(o));
    std::vector<TextEmbedding> all;
    for (const auto& c : data.dataset.columns) {
      if (!c.is_text()) continue;
      auto e = embed_column(c, embedder, data.dataset.tuple_ids);
      all.insert(all.end(), e.begin(), e.end());
    }
    write_file(o.dump_embeddings, embeddings_to_csv(all));
  }
  print_summary(run, out);
  out << "model written to " << o.model << '\n';
  return kOk;
}

int cmd_discover(const Options& o, std::ostream& out) {
  const TrainedPipeline pipeline = load_pipeline(o.model);
  const IngestConfig config = ingest_config(o);
  const LabeledDataset data = clean(load_csv(o.input, config), config);
  const DiscoveryResult result = discover(pipeline, data.dataset, o.k);
  std::string format = o.format;
  if (format == "auto") {
    format = (o.output.size() >= 4 && o.output.substr(o.output.size() - 4) == ".csv") ? "csv" : "json";
  }
  const std::string text = format == "csv" ? to_csv(result) : to_json(result).dump(2) + "\n";
  if (o.output.empty()) out << text;
  else write_file(o.output, text);
  return kOk;
}

std::vector<Algorithm> parse_algorithms(const std::string& list) {
  std::vector<Algorithm> algos;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Algorithm a = algorithm_from_string(item);
    if (std::find(algos.begin(), algos.end(), a) == algos.end()) algos.push_back(a);
  }
  if (algos.empty()) throw Error(ErrorCode::InvalidArgument, "no algorithms selected");
  return algos;
}

std::vector<std::size_t> parse_sizes(const std::string& list) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      sizes.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "sweep size '" + item + "' is not a positive integer");
    }
  }
  if (sizes.empty()) throw Error(ErrorCode::InvalidArgument, "no sweep sizes given");
  return sizes;
}

BenchSettings bench_settings(const Options& o) {
  BenchSettings s;
  s.train = train_config(o);
  s.embedder = embedder_config(o);
  s.stability_runs = o.runs;
  s.subsample = o.subsample;
  s.base_seed = o.seed;
  return s;
}

SyntheticSpec synthetic_spec(const Options& o) {
  SyntheticSpec spec = SyntheticSpec::parse(o.synthetic);
  if (o.synthetic.find("seed=") == std::string::npos) spec.seed = o.seed;
  return spec;
}

void print_side_by_side(const EvaluationReport& report, std::ostream& out) {
  const auto& tables = reference_tables();
  out << std::left << std::setw(10) << "algorithm" << std::right << std::setw(12) << "precision";
  for (const auto& t : tables) out << std::setw(18) << t.dataset;
  out << '\n';
  for (const auto& row : report.rows) {
    out << std::left << std::setw(10) << row.algorithm << std::right << std::setw(12)
        << (row.precision ? format_double(*row.precision) : "error");
    for (const auto& t : tables) {
      std::string ref = "-";
      for (const auto& r : t.rows)
        if (r.algorithm == row.algorithm) ref = format_double(r.precision);
      out << std::setw(18) << ref;
    }
    out << '\n';
  }
}

void check_gnn_vs_plod(const EvaluationReport& report, std::ostream& out) {
  const auto* gnn = report.find("gnn");
  const auto* plod = report.find("plod");
  if (!gnn || !plod || !gnn->precision || !plod->precision) return;
  if (*gnn->precision >= *plod->precision) {
    out << "OK: gnn precision " << format_double(*gnn->precision) << " >= plod precision "
        << format_double(*plod->precision) << '\n';
  } else {
    out << "WARN: gnn precision " << format_double(*gnn->precision) << " < plod precision "
        << format_double(*plod->precision) << " (deviation " << format_double(*plod->precision - *gnn->precision)
        << ")\n";
  }
}

int write_sweep(const Options& o, const std::vector<Algorithm>& algos, std::ostream& out) {
  const SyntheticSpec spec = synthetic_spec(o);
  const auto reports = sweep_tuples(spec, parse_sizes(o.sweep), algos, bench_settings(o));
  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : reports) all.push_back(to_json(r));
  const std::string plot = plot_csv(reports);
  if (!o.plot_path.empty()) write_file(o.plot_path, plot);
  if (!o.output.empty()) write_file(o.output, all.dump(2) + "\n");
  else out << all.dump(2) << '\n';
  if (o.plot_path.empty()) out << plot;
  return kOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const auto algos = parse_algorithms(o.algos);
  if (!o.sweep.empty()) {
    if (o.synthetic.empty()) throw Error(ErrorCode::InvalidArgument, "--sweep needs --synthetic");
    return write_sweep(o, algos, out);
  }

  LabeledDataset data;
  std::vector<std::string> order;
  if (!o.synthetic.empty()) {
    const SyntheticSpec spec = synthetic_spec(o);
    data = generate(spec);
    order = synthetic_ranking(spec, data.dataset);
  } else {
    if (o.input.empty()) throw Error(ErrorCode::InvalidArgument, "bench needs --input or --synthetic");
    const IngestConfig config = ingest_config(o);
    data = clean(load_csv(o.input, config), config);
    if (!data.labels) throw Error(ErrorCode::InvalidArgument, "bench on a CSV needs --label to measure precision");
    order = ranking_order(o);
    if (order.empty()) {
      order = data.dataset.column_names();
      out << "note: no ranking given, using column order\n";
    }
  }

  const EvaluationReport report = run_benchmark(data, order, algos, bench_settings(o));
  const nlohmann::json j = to_json(report);
  if (!o.output.empty()) write_file(o.output, j.dump(2) + "\n");
  if (!o.csv_path.empty()) write_file(o.csv_path, report_csv(report));
  if (o.emit_fixture) {
    const std::string path = o.output.empty() ? "reference_tables.json" : o.output + ".reference.json";
    write_file(path, reference_tables_json().dump(2) + "\n");
    print_side_by_side(report, out);
    out << "reference tables written to " << path << '\n';
  }
  if (o.output.empty()) out << j.dump(2) << '\n';
  for (const auto& row : report.rows)
    if (row.error) out << "ERROR: " << row.algorithm << ": " << *row.error << '\n';
  check_gnn_vs_plod(report, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  if (const char* env = std::getenv("UD_SEED")) {
    try {
      o.seed = std::stoull(env);
    } catch (const std::exception&) {
      err << "error: UD_SEED='" << env << "' is not an unsigned integer\n";
      return kUserError;
    }
  }

  CLI::App app{"Utility-driven data discovery from a one-shot attribute ranking", "udisc"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.add_option("--seed", o.seed, "Seed for every random draw (falls back to $UD_SEED)");

  auto* ingest = app.add_subcommand("ingest", "Load and clean a CSV, report column kinds");
  ingest->add_option("--input", o.input, "Input CSV")->required();
  ingest->add_option("--output", o.output, "Write the cleaned CSV here");
  add_ingest_flags(ingest, o);

  auto* train = app.add_subcommand("train", "Fit synthetic and real utility models, write a model file");
  train->add_option("--input", o.input, "Training CSV")->required();
  train->add_option("--model", o.model, "Model file to write")->required();
  add_ranking_flags(train, o);
  train->add_option("--dump-graph", o.dump_graph, "Write the attribute graph as JSON");
  train->add_option("--dump-embeddings", o.dump_embeddings, "Write text embeddings as CSV");
  add_ingest_flags(train, o);
  add_train_flags(train, o);
  train->add_option("--seed", o.seed, "Seed for every random draw (falls back to $UD_SEED)");

  auto* disc = app.add_subcommand("discover", "Score a CSV with a trained model and return the top-k tuples");
  disc->add_option("--model", o.model, "Model file")->required();
  disc->add_option("--input", o.input, "CSV to score")->required();
  disc->add_option("--k", o.k, "Number of tuples to return")->check(CLI::PositiveNumber);
  disc->add_option("--output", o.output, "Result file (.csv for CSV, otherwise JSON); stdout if omitted");
  disc->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"auto", "json", "csv"}));
  add_ingest_flags(disc, o);

  auto* bench = app.add_subcommand("bench", "Compare all algorithms: precision, stability, runtime");
  bench->add_option("--input", o.input, "Labeled CSV");
  bench->add_option("--synthetic", o.synthetic, "Synthetic spec, e.g. n=1000,numeric=5,noise=0.05");
  add_ranking_flags(bench, o);
  bench->add_option("--algos", o.algos, "Comma-separated subset of gnn,plod,bod,topk,skyline,moo");
  bench->add_option("--k", o.k, "Selection size for precision@k")->check(CLI::PositiveNumber);
  bench->add_option("--runs", o.runs, "Stability re-runs")->check(CLI::Range(2, 100000));
  bench->add_option("--subsample", o.subsample, "Row fraction per stability run")->check(CLI::Range(0.0, 1.0));
  bench->add_option("--output", o.output, "Report JSON file; stdout if omitted");
  bench->add_option("--csv", o.csv_path, "Report CSV file");
  bench->add_flag("--emit-fixture", o.emit_fixture, "Write the published reference tables alongside the report");
  bench->add_option("--sweep", o.sweep, "Comma-separated row counts (needs --synthetic)");
  bench->add_option("--plot", o.plot_path, "Plot-data CSV for --sweep");
  add_ingest_flags(bench, o);
  add_train_flags(bench, o);
  bench->add_option("--seed", o.seed, "Seed for every random draw (falls back to $UD_SEED)");

  auto* sweep = app.add_subcommand("sweep", "Benchmark synthetic data at increasing row counts");
  sweep->add_option("--synthetic", o.synthetic, "Synthetic spec (n is replaced by each size)");
  sweep->add_option("--sizes", o.sweep, "Comma-separated ascending row counts")->required();
  sweep->add_option("--algos", o.algos, "Comma-separated subset of gnn,plod,bod,topk,skyline,moo");
  sweep->add_option("--k", o.k, "Selection size for precision@k")->check(CLI::PositiveNumber);
  sweep->add_option("--runs", o.runs, "Stability re-runs")->check(CLI::Range(2, 100000));
  sweep->add_option("--subsample", o.subsample, "Row fraction per stability run")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--output", o.output, "Reports JSON file; stdout if omitted");
  sweep->add_option("--plot", o.plot_path, "Plot-data CSV (n,algorithm,precision,runtime_s)");
  add_train_flags(sweep, o);
  sweep->add_option("--seed", o.seed, "Seed for every random draw (falls back to $UD_SEED)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUserError;
  }

  try {
    if (*ingest) return cmd_ingest(o, out);
    if (*train) {
      if (o.ranking_path.empty() && o.rank.empty()) {
        throw Error(ErrorCode::InvalidArgument, "train needs --ranking or --rank");
      }
      return cmd_train(o, out);
    }
    if (*disc) return cmd_discover(o, out);
    if (*bench) return cmd_bench(o, out);
    if (*sweep) {
      if (o.synthetic.empty()) o.synthetic = "n=1000";
      return write_sweep(o, parse_algorithms(o.algos), out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_numeric_failure(e.code()) ? kNumericFailure : kUserError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  }
  return kUserError;
}

}  // namespace udisc::cli
