#ifndef DSDST_TENSOR_H_
#define DSDST_TENSOR_H_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dsdst::model {

// Activations and parameters are row-major so that checkpoint tensors can be
// written straight from storage. Arithmetic is double precision; parameter
// values are kept float32-representable (see ParameterSet::round_to_float).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Ordered collection of named parameter tensors. A second instance of the
// same shape (zeros_like) holds gradients.
class ParameterSet {
 public:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols, bool decay);

  std::size_t size() const { return values_.size(); }
  Matrix& operator[](std::size_t i) { return values_[i]; }
  const Matrix& operator[](std::size_t i) const { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  bool decays(std::size_t i) const { return decay_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t index(const std::string& name) const;  // throws kShape if absent

  ParameterSet zeros_like() const;
  void set_zero();
  std::size_t scalar_count() const;

  // Rounds every value to the nearest float32. Keeps the in-memory model
  // identical to what a float32 checkpoint stores.
  void round_to_float();

  // FNV-1a over names, shapes and raw value bytes.
  std::uint64_t fingerprint() const;

  // Euclidean norm over all tensors.
  double norm() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::vector<bool> decay_;
};

}  // namespace dsdst::model

#endif  // DSDST_TENSOR_H_
