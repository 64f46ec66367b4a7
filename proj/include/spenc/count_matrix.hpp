#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "spenc/errors.hpp"

namespace spenc {

// Sparse non-negative integer matrix; rows are users, columns are items.
// Entries absent from the row lists are zero. After compress() the per-row
// lists are sorted by column with duplicates merged, and the matrix is
// treated as immutable (safe to share across concurrent readers).
class CountMatrix {
 public:
  struct Item {
    long col;
    long count;
  };

  CountMatrix(long n_rows, long n_cols) : n_rows_(n_rows), n_cols_(n_cols) {
    if (n_rows < 1 || n_cols < 1) {
      throw ValidationError("matrix dimensions must be >= 1, got " +
                            std::to_string(n_rows) + "x" +
                            std::to_string(n_cols));
    }
    rows_.resize(static_cast<std::size_t>(n_rows));
  }

  long rows() const { return n_rows_; }
  long cols() const { return n_cols_; }

  void add(long row, long col, long count) {
    if (row < 0 || row >= n_rows_ || col < 0 || col >= n_cols_) {
      throw ValidationError("entry (" + std::to_string(row) + ", " +
                            std::to_string(col) + ") outside " +
                            std::to_string(n_rows_) + "x" +
                            std::to_string(n_cols_) + " matrix");
    }
    if (count < 0) {
      throw ValidationError("negative count at (" + std::to_string(row) +
                            ", " + std::to_string(col) + ")");
    }
    if (count == 0) return;
    rows_[static_cast<std::size_t>(row)].push_back({col, count});
  }

  // Sort each row by column and merge duplicates (counts accumulate).
  void compress() {
    for (auto& row : rows_) {
      std::sort(row.begin(), row.end(),
                [](const Item& a, const Item& b) { return a.col < b.col; });
      std::size_t out = 0;
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (out > 0 && row[out - 1].col == row[i].col) {
          row[out - 1].count += row[i].count;
        } else {
          row[out++] = row[i];
        }
      }
      row.resize(out);
    }
  }

  const std::vector<Item>& row(long r) const {
    return rows_[static_cast<std::size_t>(r)];
  }

  long at(long r, long c) const {
    const auto& row = rows_[static_cast<std::size_t>(r)];
    const auto it = std::lower_bound(
        row.begin(), row.end(), c,
        [](const Item& item, long col) { return item.col < col; });
    return (it != row.end() && it->col == c) ? it->count : 0;
  }

  long nnz() const {
    long n = 0;
    for (const auto& row : rows_) n += static_cast<long>(row.size());
    return n;
  }

  long row_sum(long r) const {
    long s = 0;
    for (const auto& item : rows_[static_cast<std::size_t>(r)]) {
      s += item.count;
    }
    return s;
  }

  long total_sum() const {
    long s = 0;
    for (long r = 0; r < n_rows_; ++r) s += row_sum(r);
    return s;
  }

  bool operator==(const CountMatrix& other) const {
    if (n_rows_ != other.n_rows_ || n_cols_ != other.n_cols_) return false;
    for (long r = 0; r < n_rows_; ++r) {
      const auto& a = row(r);
      const auto& b = other.row(r);
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].col != b[i].col || a[i].count != b[i].count) return false;
      }
    }
    return true;
  }

 private:
  long n_rows_;
  long n_cols_;
  std::vector<std::vector<Item>> rows_;
};

}  // namespace spenc
