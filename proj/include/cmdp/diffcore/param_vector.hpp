#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cmdp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

struct Segment {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

// Flat parameter storage with a named (rows x cols) segment layout. Segments
// are row-major and packed back to back in declaration order.
class ParamVector {
 public:
  ParamVector() = default;

  // Appends a zero-filled segment and returns its index.
  std::size_t add_segment(std::string name, Eigen::Index rows, Eigen::Index cols);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  MatrixMap segment(std::size_t index);
  ConstMatrixMap segment(std::size_t index) const;

  // Throws std::out_of_range for unknown names.
  std::size_t find(std::string_view name) const;

  ParamVector zeros_like() const;
  bool same_layout(const ParamVector& other) const;
  bool all_finite() const;

 private:
  std::vector<Segment> segments_;
  std::vector<double> values_;
};

}  // namespace cmdp
