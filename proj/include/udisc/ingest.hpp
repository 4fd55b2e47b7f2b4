#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "udisc/core_model.hpp"

namespace udisc {

struct IngestConfig {
  char delimiter = ',';
  bool has_header = true;
  std::optional<std::string> label_column;
  /// Rows inspected for type inference; nullopt means all rows.
  std::optional<std::size_t> type_inference_sample;
  std::set<std::string> missing_tokens{"", "NA", "NaN", "null"};
  /// Numeric attributes to negate after loading, so that every attribute is "larger is better".
  std::vector<std::string> negate;

  void validate() const;
};

struct LabeledDataset {
  Dataset dataset;
  std::optional<std::vector<double>> labels;
  std::string label_name;
  /// Row index in the source file for each tuple (after header).
  std::vector<std::size_t> source_rows;
  /// Reference utility used for evaluation when it is known (synthetic data).
  std::optional<std::vector<double>> truth;

  /// Keeps the given rows (in the given order) and reassigns dense tuple ids.
  LabeledDataset subset(const std::vector<std::size_t>& rows) const;
};

namespace csv {

/// RFC 4180 record splitter: quoted fields, doubled quotes, embedded delimiters and line breaks.
std::vector<std::vector<std::string>> parse(std::string_view text, char delimiter);

/// Quotes a field when it contains the delimiter, a quote or a line break.
std::string quote(std::string_view field, char delimiter);

}  // namespace csv

LabeledDataset load_csv(const std::filesystem::path& path, const IngestConfig& config);
LabeledDataset load_csv_string(std::string_view text, const IngestConfig& config,
                               std::string name = "inline");

/// Drops exact duplicate rows (first occurrence kept), imputes missing values
/// (numeric: column mean, text: empty string) and reassigns dense tuple ids.
/// missing_mask keeps marking cells that were missing at the source.
LabeledDataset clean(const LabeledDataset& ds, const IngestConfig& config = {});

/// Debug writer; missing cells are written as empty fields.
void write_csv(const LabeledDataset& ds, std::ostream& out, char delimiter = ',');

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace udisc
