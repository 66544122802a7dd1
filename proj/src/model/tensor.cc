#include <cmath>

#include "dsdst/error.h"
#include "dsdst/hash.h"
#include "dsdst/tensor.h"

namespace dsdst::model {

std::size_t ParameterSet::add(std::string name, Eigen::Index rows, Eigen::Index cols, bool decay) {
  if (find(name)) fail(ErrorKind::kShape, "duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(Matrix::Zero(rows, cols));
  decay_.push_back(decay);
  return values_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterSet::index(const std::string& name) const {
  auto i = find(name);
  if (!i) fail(ErrorKind::kShape, "no parameter named '" + name + "'");
  return *i;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (std::size_t i = 0; i < size(); ++i) {
    out.add(names_[i], values_[i].rows(), values_[i].cols(), decay_[i]);
  }
  return out;
}

void ParameterSet::set_zero() {
  for (auto& v : values_) v.setZero();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

void ParameterSet::round_to_float() {
  for (auto& v : values_) v = v.cast<float>().cast<double>();
}

std::uint64_t ParameterSet::fingerprint() const {
  Fnv1a h;
  for (std::size_t i = 0; i < size(); ++i) {
    h.update(names_[i]);
    h.update_pod(static_cast<std::int64_t>(values_[i].rows()));
    h.update_pod(static_cast<std::int64_t>(values_[i].cols()));
    h.update(std::as_bytes(std::span(values_[i].data(), static_cast<std::size_t>(values_[i].size()))));
  }
  return h.digest();
}

double ParameterSet::norm() const {
  double sq = 0.0;
  for (const auto& v : values_) sq += v.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace dsdst::model
