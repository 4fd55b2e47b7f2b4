#include "udisc/model_io.hpp"

#include <fstream>
#include <sstream>

namespace udisc {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Eigen::MatrixXd matrix_from(const json& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != cols) throw Error(ErrorCode::DimensionMismatch, "ragged matrix in model file");
    m.row(static_cast<Eigen::Index>(r)) = vector_from(rows[r]).transpose();
  }
  return m;
}

Eigen::VectorXd text_coeffs_from(const json& j, std::size_t attributes, int dim) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(attributes) * dim);
  const auto& rows = j.at("text_coeffs");
  if (rows.size() != attributes) throw Error(ErrorCode::DimensionMismatch, "text coefficient block size");
  for (std::size_t k = 0; k < attributes; ++k) {
    const auto& entry = rows[k].at("coeffs");
    if (static_cast<int>(entry.size()) != dim) throw Error(ErrorCode::DimensionMismatch, "text coefficient width");
    v.segment(static_cast<Eigen::Index>(k) * dim, dim) = vector_from(entry);
  }
  return v;
}

struct ModelParts {
  std::vector<std::string> numeric;
  Eigen::VectorXd numeric_coeffs;
  std::vector<std::string> text;
  int dim = 0;
  Eigen::VectorXd text_coeffs;
  double intercept = 0.0;
  double sse = 0.0;
};

ModelParts model_parts(const json& j) {
  ModelParts p;
  for (const auto& e : j.at("numeric_coeffs")) {
    p.numeric.push_back(e.at("attribute").get<std::string>());
  }
  p.numeric_coeffs.resize(static_cast<Eigen::Index>(p.numeric.size()));
  for (std::size_t i = 0; i < p.numeric.size(); ++i)
    p.numeric_coeffs[static_cast<Eigen::Index>(i)] = j["numeric_coeffs"][i].at("coeff").get<double>();
  for (const auto& e : j.at("text_coeffs")) p.text.push_back(e.at("attribute").get<std::string>());
  p.dim = j.at("text_dim").get<int>();
  p.text_coeffs = text_coeffs_from(j, p.text.size(), p.dim);
  p.intercept = j.at("intercept").get<double>();
  p.sse = j.at("training_sse").get<double>();
  return p;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

}  // namespace

json to_json(const UtilityModel& model) {
  json numeric = json::array();
  for (std::size_t i = 0; i < model.numeric_attributes().size(); ++i) {
    numeric.push_back({{"attribute", model.numeric_attributes()[i]},
                       {"coeff", model.numeric_coeffs()[static_cast<Eigen::Index>(i)]}});
  }
  json text = json::array();
  const int dim = model.text_dim();
  for (std::size_t k = 0; k < model.text_attributes().size(); ++k) {
    text.push_back({{"attribute", model.text_attributes()[k]},
                    {"coeffs", vector_json(model.text_coeffs().segment(static_cast<Eigen::Index>(k) * dim, dim))}});
  }
  json j = {{"stage", std::string(to_string(model.stage()))},
            {"numeric_coeffs", std::move(numeric)},
            {"text_dim", dim},
            {"text_coeffs", std::move(text)},
            {"intercept", model.intercept()},
            {"training_sse", model.training_sse()},
            {"fingerprint", hex64(model.fingerprint())}};
  if (model.provenance()) j["provenance"] = hex64(*model.provenance());
  return j;
}

json to_json(const TrainedPipeline& p) {
  json ranking_weights = json::array();
  for (const auto& a : p.ranking.order) ranking_weights.push_back({{"attribute", a}, {"weight", p.ranking.weight(a)}});
  json scale = json::array();
  for (const auto& [name, range] : p.scale_params) scale.push_back({{"attribute", name}, {"min", range.min}, {"max", range.max}});
  json schema = json::array();
  for (const auto& [name, kind] : p.schema)
    schema.push_back({{"attribute", name}, {"kind", kind == AttributeKind::Numeric ? "numeric" : "text"}});

  return {{"model_version", kModelVersion},
          {"schema", std::move(schema)},
          {"ranking", std::move(ranking_weights)},
          {"scale_params", std::move(scale)},
          {"embedder",
           {{"dim", p.embedder.dim},
            {"ngram_min", p.embedder.ngram_min},
            {"ngram_max", p.embedder.ngram_max},
            {"lowercase", p.embedder.lowercase}}},
          {"config",
           {{"learning_rate", p.config.learning_rate},
            {"epochs", p.config.epochs},
            {"ridge_lambda", p.config.ridge_lambda},
            {"k", p.config.k}}},
          {"seed", p.config.seed},
          {"user_labels", p.user_labels},
          {"sse_num", p.sse_num},
          {"sse_text", p.sse_text},
          {"graph", p.graph.to_json()},
          {"gnn", {{"seed", p.gnn_params.seed}, {"weight", matrix_json(p.gnn_params.weight)}, {"bias", vector_json(p.gnn_params.bias)}}},
          {"synthetic", to_json(p.synthetic)},
          {"real", to_json(p.real)}};
}

TrainedPipeline pipeline_from_json(const json& j) {
  try {
    const auto version = j.at("model_version").get<std::string>();
    if (version != kModelVersion) {
      throw Error(ErrorCode::UnsupportedVersion, "model version '" + version + "' is not supported (expected " +
                                                     kModelVersion + ")");
    }
    std::vector<std::pair<std::string, AttributeKind>> schema;
    for (const auto& e : j.at("schema")) {
      const auto kind = e.at("kind").get<std::string>();
      if (kind != "numeric" && kind != "text") throw Error(ErrorCode::ParseError, "unknown attribute kind '" + kind + "'");
      schema.emplace_back(e.at("attribute").get<std::string>(), kind == "numeric" ? AttributeKind::Numeric : AttributeKind::Text);
    }
    AttributeRanking ranking;
    for (const auto& e : j.at("ranking")) {
      const auto a = e.at("attribute").get<std::string>();
      ranking.order.push_back(a);
      ranking.weights[a] = e.at("weight").get<double>();
    }
    ScaleParams scale;
    for (const auto& e : j.at("scale_params"))
      scale[e.at("attribute").get<std::string>()] = {e.at("min").get<double>(), e.at("max").get<double>()};

    EmbedderConfig embedder;
    const auto& ej = j.at("embedder");
    embedder.dim = ej.at("dim").get<int>();
    embedder.ngram_min = ej.at("ngram_min").get<int>();
    embedder.ngram_max = ej.at("ngram_max").get<int>();
    embedder.lowercase = ej.at("lowercase").get<bool>();
    embedder.validate();

    TrainConfig config;
    const auto& cj = j.at("config");
    config.learning_rate = cj.at("learning_rate").get<double>();
    config.epochs = cj.at("epochs").get<int>();
    config.ridge_lambda = cj.at("ridge_lambda").get<double>();
    config.k = cj.at("k").get<std::size_t>();
    config.seed = j.at("seed").get<std::uint64_t>();

    GnnParams gnn;
    gnn.seed = j.at("gnn").at("seed").get<std::uint64_t>();
    gnn.bias = vector_from(j["gnn"].at("bias"));
    gnn.weight = matrix_from(j["gnn"].at("weight"), gnn.bias.size());

    const ModelParts sp = model_parts(j.at("synthetic"));
    UtilityModel synthetic = UtilityModel::synthetic(sp.numeric, sp.numeric_coeffs, sp.text, sp.dim,
                                                     sp.text_coeffs, sp.intercept, sp.sse);
    const ModelParts rp = model_parts(j.at("real"));
    if (rp.numeric != sp.numeric || rp.text != sp.text || rp.dim != sp.dim) {
      throw Error(ErrorCode::SchemaMismatch, "real and synthetic models cover different attributes");
    }
    UtilityModel real = UtilityModel::refined_from(synthetic, rp.numeric_coeffs, rp.text_coeffs, rp.intercept, rp.sse);
    if (j["real"].contains("provenance") &&
        j["real"]["provenance"].get<std::string>() != hex64(synthetic.fingerprint())) {
      throw Error(ErrorCode::SchemaMismatch, "real model was not refined from the stored synthetic model");
    }

    return TrainedPipeline{std::move(synthetic),
                           std::move(real),
                           std::move(gnn),
                           std::move(scale),
                           std::move(ranking),
                           AttributeGraph::from_json(j.at("graph")),
                           embedder,
                           config,
                           j.at("sse_num").get<double>(),
                           j.at("sse_text").get<double>(),
                           j.at("user_labels").get<bool>(),
                           std::move(schema)};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed model file: ") + e.what());
  }
}

std::string serialize_pipeline(const TrainedPipeline& pipeline) { return to_json(pipeline).dump(2) + "\n"; }

void save_pipeline(const TrainedPipeline& pipeline, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << serialize_pipeline(pipeline);
}

TrainedPipeline load_pipeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return pipeline_from_json(j);
}

}  // namespace udisc
