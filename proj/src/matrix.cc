#include "segflow/matrix.h"

#include <utility>

#include "segflow/errors.h"

namespace segflow {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length does not match rows*cols");
  }
}

}  // namespace segflow
