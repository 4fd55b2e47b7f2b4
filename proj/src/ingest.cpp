#include "udisc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace udisc {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string location(std::size_t record, std::size_t column) {
  return "row " + std::to_string(record) + ", column " + std::to_string(column);
}

}  // namespace

void IngestConfig::validate() const {
  if (delimiter == '"' || delimiter == '\n' || delimiter == '\r') {
    throw Error(ErrorCode::InvalidArgument, "delimiter may not be a quote or newline character");
  }
  if (type_inference_sample && *type_inference_sample == 0) {
    throw Error(ErrorCode::InvalidArgument, "type_inference_sample must be positive");
  }
}

namespace csv {

std::vector<std::vector<std::string>> parse(std::string_view text, char delimiter) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A blank line yields a single empty field; skip it.
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\n') {
      end_record();
      ++line;
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_record();
      ++line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::ParseError, "unterminated quoted field starting before line " + std::to_string(line));
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

std::string quote(std::string_view field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace csv

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& rows) const {
  LabeledDataset out;
  out.label_name = label_name;
  std::vector<AttributeColumn> cols;
  for (const auto& c : dataset.columns) {
    AttributeColumn nc;
    nc.name = c.name;
    nc.kind = c.kind;
    for (std::size_t r : rows) {
      if (c.is_numeric()) nc.numeric_values.push_back(c.numeric_values.at(r));
      else nc.text_values.push_back(c.text_values.at(r));
      nc.missing_mask.push_back(c.missing_mask.at(r));
    }
    cols.push_back(std::move(nc));
  }
  out.dataset = Dataset::make(dataset.name, std::move(cols));
  if (dataset.columns.empty()) {
    out.dataset.row_count = rows.size();
    out.dataset.tuple_ids.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out.dataset.tuple_ids[i] = static_cast<TupleId>(i);
  }
  auto pick = [&rows](const std::vector<double>& v) {
    std::vector<double> o;
    o.reserve(rows.size());
    for (std::size_t r : rows) o.push_back(v.at(r));
    return o;
  };
  if (labels) out.labels = pick(*labels);
  if (truth) out.truth = pick(*truth);
  for (std::size_t r : rows) out.source_rows.push_back(source_rows.empty() ? r : source_rows.at(r));
  return out;
}

LabeledDataset load_csv_string(std::string_view text, const IngestConfig& config, std::string name) {
  config.validate();
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);
  }
  auto records = csv::parse(text, config.delimiter);
  if (records.empty()) throw Error(ErrorCode::EmptyFile, "'" + name + "' contains no records");

  std::vector<std::string> header;
  std::size_t first_data = 0;
  const std::size_t width = records.front().size();
  if (config.has_header) {
    header = records.front();
    first_data = 1;
  } else {
    for (std::size_t j = 0; j < width; ++j) header.push_back("c" + std::to_string(j));
  }
  for (auto& h : header) h = std::string(trim(h));
  const std::size_t n = records.size() - first_data;
  if (n == 0) throw Error(ErrorCode::EmptyFile, "'" + name + "' has a header but no data rows");

  for (std::size_t r = first_data; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw Error(ErrorCode::ParseError, location(r + 1, records[r].size()) + ": expected " +
                                             std::to_string(width) + " fields, found " +
                                             std::to_string(records[r].size()));
    }
  }

  const std::size_t sample = std::min(n, config.type_inference_sample.value_or(n));
  auto is_missing = [&](const std::string& v) {
    return config.missing_tokens.count(v) > 0 || config.missing_tokens.count(std::string(trim(v))) > 0;
  };

  std::vector<AttributeColumn> columns;
  for (std::size_t j = 0; j < width; ++j) {
    bool numeric = true;
    for (std::size_t i = 0; i < sample && numeric; ++i) {
      const auto& v = records[first_data + i][j];
      if (!is_missing(v) && !parse_double(v)) numeric = false;
    }
    AttributeColumn col;
    col.name = header[j];
    col.kind = numeric ? AttributeKind::Numeric : AttributeKind::Text;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = records[first_data + i][j];
      const bool missing = is_missing(v);
      col.missing_mask.push_back(missing);
      if (!numeric) {
        col.text_values.push_back(missing ? std::string() : v);
        continue;
      }
      if (missing) {
        col.numeric_values.push_back(std::numeric_limits<double>::quiet_NaN());
      } else if (auto d = parse_double(v)) {
        col.numeric_values.push_back(*d);
      } else {
        throw Error(ErrorCode::ParseError, location(first_data + i + 1, j + 1) + ": '" + v +
                                               "' is not numeric in numeric column '" + col.name + "'");
      }
    }
    columns.push_back(std::move(col));
  }

  LabeledDataset out;
  if (config.label_column) {
    auto it = std::find_if(columns.begin(), columns.end(),
                           [&](const AttributeColumn& c) { return c.name == *config.label_column; });
    if (it == columns.end()) {
      throw Error(ErrorCode::UnknownAttribute, "label column '" + *config.label_column + "' not found");
    }
    if (!it->is_numeric()) {
      throw Error(ErrorCode::LabelNotNumeric, "label column '" + it->name + "' is not numeric");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (it->missing_mask[i]) {
        throw Error(ErrorCode::LabelNotNumeric,
                    "label column '" + it->name + "' is missing at " + location(first_data + i + 1, 0));
      }
    }
    out.labels = it->numeric_values;
    out.label_name = it->name;
    columns.erase(it);
  }

  for (const auto& attr : config.negate) {
    auto it = std::find_if(columns.begin(), columns.end(),
                           [&](const AttributeColumn& c) { return c.name == attr; });
    if (it == columns.end()) throw Error(ErrorCode::UnknownAttribute, "cannot negate unknown attribute '" + attr + "'");
    if (!it->is_numeric()) throw Error(ErrorCode::KindMismatch, "cannot negate text attribute '" + attr + "'");
    for (auto& v : it->numeric_values) v = -v;
  }

  out.dataset = Dataset::make(std::move(name), std::move(columns));
  out.source_rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.source_rows[i] = i;
  return out;
}

LabeledDataset load_csv(const std::filesystem::path& path, const IngestConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_csv_string(buf.str(), config, path.stem().string());
}

LabeledDataset clean(const LabeledDataset& ds, const IngestConfig& /*config*/) {
  const auto& d = ds.dataset;
  const std::size_t n = d.row_count;

  std::vector<std::size_t> keep;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    std::string key;
    for (const auto& c : d.columns) {
      if (c.missing_mask[i]) {
        key += "\x01M";
      } else if (c.is_numeric()) {
        key += "\x01N" + format_double(c.numeric_values[i]);
      } else {
        key += "\x01T" + std::to_string(c.text_values[i].size()) + ":" + c.text_values[i];
      }
    }
    if (ds.labels) key += "\x01L" + format_double((*ds.labels)[i]);
    if (seen.insert(std::move(key)).second) keep.push_back(i);
  }

  LabeledDataset out = ds.subset(keep);
  for (auto& c : out.dataset.columns) {
    if (c.is_numeric()) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < c.numeric_values.size(); ++i) {
        if (!c.missing_mask[i]) {
          sum += c.numeric_values[i];
          ++count;
        }
      }
      if (count == 0) {
        throw Error(ErrorCode::AllMissingColumn, "numeric column '" + c.name + "' has no values");
      }
      const double mean = sum / static_cast<double>(count);
      for (std::size_t i = 0; i < c.numeric_values.size(); ++i)
        if (c.missing_mask[i]) c.numeric_values[i] = mean;
    } else {
      for (std::size_t i = 0; i < c.text_values.size(); ++i)
        if (c.missing_mask[i]) c.text_values[i].clear();
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, static_cast<std::size_t>(end - buf));
}

void write_csv(const LabeledDataset& ds, std::ostream& out, char delimiter) {
  const auto& d = ds.dataset;
  bool first = true;
  auto sep = [&] {
    if (!first) out << delimiter;
    first = false;
  };
  for (const auto& c : d.columns) {
    sep();
    out << csv::quote(c.name, delimiter);
  }
  if (ds.labels) {
    sep();
    out << csv::quote(ds.label_name.empty() ? "label" : ds.label_name, delimiter);
  }
  out << '\n';
  for (std::size_t i = 0; i < d.row_count; ++i) {
    first = true;
    for (const auto& c : d.columns) {
      sep();
      if (c.missing_mask[i]) continue;
      if (c.is_numeric()) out << format_double(c.numeric_values[i]);
      else out << csv::quote(c.text_values[i], delimiter);
    }
    if (ds.labels) {
      sep();
      out << format_double((*ds.labels)[i]);
    }
    out << '\n';
  }
}

}  // namespace udisc
