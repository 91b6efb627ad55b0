#include "hyrom/snapshots.hpp"

#include <string>

#include "hyrom/errors.hpp"

namespace hyrom {

SnapshotMatrix::SnapshotMatrix(const DenseMatrix& data, std::vector<SnapshotMeta> meta)
    : rows_(data.rows()), values_(data.data(), data.data() + data.size()), meta_(std::move(meta)) {
  if (static_cast<Eigen::Index>(meta_.size()) != data.cols())
    throw InvalidArgument("snapshot matrix: metadata count differs from column count");
}

void SnapshotMatrix::append(const Eigen::Ref<const Vector>& column, SnapshotMeta meta) {
  if (meta_.empty() && rows_ == 0) rows_ = column.size();
  if (column.size() != rows_)
    throw InvalidArgument("snapshot matrix: column length " + std::to_string(column.size()) + " != " + std::to_string(rows_));
  if (!column.allFinite()) throw InvalidArgument("snapshot matrix: non-finite column");
  values_.insert(values_.end(), column.data(), column.data() + column.size());
  meta_.push_back(std::move(meta));
}

void SnapshotMatrix::append(const SnapshotMatrix& other) {
  if (other.empty()) return;
  if (meta_.empty() && rows_ == 0) rows_ = other.rows_;
  if (other.rows_ != rows_) throw InvalidArgument("snapshot matrix: row mismatch on merge");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  meta_.insert(meta_.end(), other.meta_.begin(), other.meta_.end());
}

}  // namespace hyrom
