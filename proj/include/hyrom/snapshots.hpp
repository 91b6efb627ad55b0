#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "hyrom/linalg.hpp"

namespace hyrom {

/// Provenance of one snapshot column.
struct SnapshotMeta {
  std::vector<double> mu;
  std::uint32_t n = 0;  // time index
  std::uint32_t k = 0;  // Newton index
};

/// Column store that grows by appending whole columns.
class SnapshotMatrix {
 public:
  SnapshotMatrix() = default;
  explicit SnapshotMatrix(Eigen::Index rows) : rows_(rows) {}
  SnapshotMatrix(const DenseMatrix& data, std::vector<SnapshotMeta> meta);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(meta_.size()); }
  bool empty() const { return meta_.empty(); }

  void append(const Eigen::Ref<const Vector>& column, SnapshotMeta meta);
  /// Appends every column of `other` (rows must match).
  void append(const SnapshotMatrix& other);

  Eigen::Map<const DenseMatrix> data() const { return {values_.data(), rows_, cols()}; }
  Eigen::Map<const Vector> column(Eigen::Index j) const { return {values_.data() + j * rows_, rows_}; }
  const std::vector<SnapshotMeta>& meta() const { return meta_; }
  const SnapshotMeta& meta(Eigen::Index j) const { return meta_[static_cast<std::size_t>(j)]; }

  /// Parameter dimension recorded in the metadata (0 when empty).
  std::size_t parameter_dim() const { return meta_.empty() ? 0 : meta_.front().mu.size(); }

 private:
  Eigen::Index rows_ = 0;
  std::vector<double> values_;
  std::vector<SnapshotMeta> meta_;
};

}  // namespace hyrom
