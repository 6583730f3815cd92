#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "priorreg/csv.hpp"
#include "priorreg/errors.hpp"
#include "priorreg/linear.hpp"
#include "priorreg/rng.hpp"

namespace priorreg {

enum class DatasetKind { paired_comparison, classification };

/// Ternary-coded learning problem: cue entries in {-1, 0, +1}, labels in
/// {-1, +1}.
struct TernaryDataset {
  Matrix X;
  Vector y;
  std::vector<std::string> cue_names;
  DatasetKind kind = DatasetKind::paired_comparison;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index cue_count() const { return X.cols(); }
};

/// Numeric table as loaded from disk: one row per item, one designated
/// criterion / label column, the rest cues.
struct ItemTable {
  Matrix values;
  Vector criterion;
  std::vector<std::string> cue_names;
  std::size_t rows_dropped_missing = 0;
};

/// Loads a CSV of numeric columns, drops rows with missing values, and
/// splits off the named criterion column.
inline ItemTable load_item_table(const std::string& path,
                                 const std::string& criterion_column) {
  CsvTable csv = read_csv(path);
  std::size_t crit = csv.column_index(criterion_column);

  ItemTable table;
  for (std::size_t j = 0; j < csv.header.size(); ++j) {
    if (j != crit) table.cue_names.push_back(csv.header[j]);
  }
  if (table.cue_names.empty()) {
    throw data_error(path + ": no cue columns besides the criterion");
  }

  std::vector<std::vector<double>> kept;
  std::vector<double> criterion;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    bool missing = false;
    for (const auto& field : row) {
      if (is_missing_field(field)) {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++table.rows_dropped_missing;
      continue;
    }
    std::vector<double> vals;
    vals.reserve(table.cue_names.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      double v = parse_number(row[j], r + 2, csv.header[j]);
      if (j == crit) {
        criterion.push_back(v);
      } else {
        vals.push_back(v);
      }
    }
    kept.push_back(std::move(vals));
  }
  if (kept.empty()) throw data_error(path + ": no usable rows");

  table.values.resize(static_cast<Eigen::Index>(kept.size()),
                      static_cast<Eigen::Index>(table.cue_names.size()));
  table.criterion.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    table.criterion(static_cast<Eigen::Index>(i)) = criterion[i];
    for (std::size_t j = 0; j < kept[i].size(); ++j) {
      table.values(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>(j)) = kept[i][j];
    }
  }
  return table;
}

inline double column_median(Vector column) {
  std::sort(column.begin(), column.end());
  Eigen::Index n = column.size();
  if (n % 2 == 1) return column(n / 2);
  return 0.5 * (column(n / 2 - 1) + column(n / 2));
}

struct MedianSplitResult {
  Matrix coded;
  std::vector<bool> constant_columns;
};

/// Binary median split used ahead of pairwise encoding: above the column
/// median codes 1, at or below codes 0. When the median equals the column
/// maximum that rule would zero out a non-constant column (discrete data
/// with a majority at the top value), so the split falls back to
/// at-or-above for that column. Constant columns come out all zero and are
/// flagged.
inline MedianSplitResult median_split_binary(const Matrix& raw) {
  require_design(raw);
  MedianSplitResult out;
  out.coded.resize(raw.rows(), raw.cols());
  out.constant_columns.assign(static_cast<std::size_t>(raw.cols()), false);
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    double med = column_median(raw.col(j));
    bool constant = (raw.col(j).array() == raw(0, j)).all();
    out.constant_columns[static_cast<std::size_t>(j)] = constant;
    bool none_above = (raw.col(j).array() <= med).all();
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      bool high = none_above ? raw(i, j) >= med : raw(i, j) > med;
      out.coded(i, j) = (!constant && high) ? 1.0 : 0.0;
    }
  }
  return out;
}

/// Ternary median split used for classification problems: above the median
/// codes +1, below codes -1, and a value equal to the median codes 0.
inline MedianSplitResult median_split_ternary(const Matrix& raw) {
  require_design(raw);
  MedianSplitResult out;
  out.coded.resize(raw.rows(), raw.cols());
  out.constant_columns.assign(static_cast<std::size_t>(raw.cols()), false);
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    double med = column_median(raw.col(j));
    bool constant = (raw.col(j).array() == raw(0, j)).all();
    out.constant_columns[static_cast<std::size_t>(j)] = constant;
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      double v = raw(i, j);
      out.coded(i, j) = v > med ? 1.0 : (v < med ? -1.0 : 0.0);
    }
  }
  return out;
}

/// Signed-difference coding of one ordered pair: x = right - left per cue,
/// y = +1 when the right item carries the higher criterion.
inline std::pair<Vector, double> encode_pair(const Vector& left,
                                             const Vector& right,
                                             double crit_left,
                                             double crit_right) {
  if (left.size() != right.size()) {
    throw contract_error("encode_pair: item lengths differ");
  }
  if (crit_left == crit_right) {
    throw contract_error("encode_pair: tied criterion values carry no label");
  }
  Vector x = right - left;
  double y = crit_right > crit_left ? 1.0 : -1.0;
  return {std::move(x), y};
}

/// Builds the paired-comparison dataset from binary-coded items. Every
/// unordered pair with strictly ordered criterion values appears once; the
/// left/right assignment is a seeded coin flip so neither side is favored.
inline TernaryDataset pairwise_encode(const Matrix& items,
                                      const Vector& criterion, Rng& rng,
                                      std::vector<std::string> cue_names = {}) {
  if (items.rows() < 2) {
    throw input_error("pairwise_encode: need at least two items");
  }
  require_response(items, criterion);
  for (Eigen::Index i = 0; i < items.rows(); ++i) {
    for (Eigen::Index j = 0; j < items.cols(); ++j) {
      if (items(i, j) != 0.0 && items(i, j) != 1.0) {
        throw input_error("pairwise_encode: items must be binary coded");
      }
    }
  }

  std::vector<Vector> rows;
  std::vector<double> labels;
  for (Eigen::Index a = 0; a < items.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < items.rows(); ++b) {
      if (criterion(a) == criterion(b)) continue;  // tie: no decision
      bool a_left = rng.uniform() < 0.5;
      Eigen::Index l = a_left ? a : b;
      Eigen::Index r = a_left ? b : a;
      auto [x, y] = encode_pair(items.row(l), items.row(r), criterion(l),
                                criterion(r));
      rows.push_back(std::move(x));
      labels.push_back(y);
    }
  }
  if (rows.empty()) {
    throw input_error("pairwise_encode: all criterion values tied");
  }

  TernaryDataset data;
  data.kind = DatasetKind::paired_comparison;
  data.cue_names = std::move(cue_names);
  if (data.cue_names.empty()) {
    for (Eigen::Index j = 0; j < items.cols(); ++j) {
      data.cue_names.push_back("cue" + std::to_string(j));
    }
  }
  data.X.resize(static_cast<Eigen::Index>(rows.size()), items.cols());
  data.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.X.row(static_cast<Eigen::Index>(i)) = rows[i];
    data.y(static_cast<Eigen::Index>(i)) = labels[i];
  }
  return data;
}

/// Full preprocessing for the forced-choice task: binary median split, then
/// pairwise difference coding.
inline TernaryDataset make_paired_dataset(const ItemTable& table, Rng& rng) {
  MedianSplitResult split = median_split_binary(table.values);
  return pairwise_encode(split.coded, table.criterion, rng, table.cue_names);
}

/// Full preprocessing for the classification task: ternary median split,
/// labels mapped onto {-1, +1} (smaller raw label value to -1).
inline TernaryDataset make_classification_dataset(const ItemTable& table) {
  double lo = table.criterion.minCoeff();
  double hi = table.criterion.maxCoeff();
  if (lo == hi) throw input_error("classification label column is constant");
  for (Eigen::Index i = 0; i < table.criterion.size(); ++i) {
    double v = table.criterion(i);
    if (v != lo && v != hi) {
      throw input_error("classification label column is not binary");
    }
  }
  TernaryDataset data;
  data.kind = DatasetKind::classification;
  data.cue_names = table.cue_names;
  data.X = median_split_ternary(table.values).coded;
  data.y.resize(table.criterion.size());
  for (Eigen::Index i = 0; i < table.criterion.size(); ++i) {
    data.y(i) = table.criterion(i) == hi ? 1.0 : -1.0;
  }
  return data;
}

}  // namespace priorreg
