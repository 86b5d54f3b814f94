#include "cmdp/diffcore/param_vector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cmdp/error.hpp"

namespace cmdp {

std::size_t ParamVector::add_segment(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (rows <= 0 || cols <= 0) throw ShapeError("segment '" + name + "' must have positive shape");
  for (const auto& s : segments_) {
    if (s.name == name) throw ShapeError("duplicate segment name '" + name + "'");
  }
  Segment seg{std::move(name), rows, cols, values_.size()};
  values_.resize(values_.size() + seg.size(), 0.0);
  segments_.push_back(std::move(seg));
  return segments_.size() - 1;
}

MatrixMap ParamVector::segment(std::size_t index) {
  const Segment& s = segments_.at(index);
  return MatrixMap(values_.data() + s.offset, s.rows, s.cols);
}

ConstMatrixMap ParamVector::segment(std::size_t index) const {
  const Segment& s = segments_.at(index);
  return ConstMatrixMap(values_.data() + s.offset, s.rows, s.cols);
}

std::size_t ParamVector::find(std::string_view name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].name == name) return i;
  }
  throw std::out_of_range("no parameter segment named '" + std::string(name) + "'");
}

ParamVector ParamVector::zeros_like() const {
  ParamVector out;
  out.segments_ = segments_;
  out.values_.assign(values_.size(), 0.0);
  return out;
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (segments_.size() != other.segments_.size()) return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& a = segments_[i];
    const auto& b = other.segments_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.offset != b.offset) return false;
  }
  return true;
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace cmdp
