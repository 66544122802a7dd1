#include <cmath>
#include <limits>

#include "dsdst/error.h"
#include "dsdst/log.h"
#include "dsdst/model.h"

namespace dsdst::model {

Vector gate_probs(const Vector& r_cls, const Matrix& weight, const Matrix& bias) {
  Vector logits = weight * r_cls + bias.row(0).transpose();
  Vector p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

double gate_loss(const Vector& probs, int target) {
  return -std::log(std::max(probs(target), kLogEpsilon));
}

SpanLogits span_logits(const Matrix& token_reps, const Matrix& weight, const Matrix& bias,
                       int context_begin, int context_end) {
  const Eigen::Index len = token_reps.rows();
  constexpr double kMasked = -std::numeric_limits<double>::infinity();
  SpanLogits out{Vector::Constant(len, kMasked), Vector::Constant(len, kMasked)};
  for (Eigen::Index i = std::max(0, context_begin); i < std::min<Eigen::Index>(context_end, len);
       ++i) {
    out.start(i) = weight.row(0).dot(token_reps.row(i)) + bias(0, 0);
    out.end(i) = weight.row(1).dot(token_reps.row(i)) + bias(0, 1);
  }
  return out;
}

Vector span_probs(const Vector& logits) {
  constexpr double kMasked = -std::numeric_limits<double>::infinity();
  double mx = kMasked;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (logits(i) == kMasked) continue;
    if (!std::isfinite(logits(i))) {
      return Vector::Constant(logits.size(), std::numeric_limits<double>::quiet_NaN());
    }
    mx = std::max(mx, logits(i));
  }
  if (mx == kMasked) fail(ErrorKind::kDecode, "span distribution has no unmasked position");
  Vector p(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    p(i) = std::isfinite(logits(i)) ? std::exp(logits(i) - mx) : 0.0;
  }
  return p / p.sum();
}

double span_loss(const Vector& p_start, const Vector& p_end, int y_start, int y_end) {
  return -std::log(std::max(p_start(y_start), kLogEpsilon)) -
         std::log(std::max(p_end(y_end), kLogEpsilon));
}

double cosine(const Vector& a, const Vector& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    logger()->warn("cosine of a zero-norm vector; scoring 0");
    return 0.0;
  }
  return a.dot(b) / (na * nb);
}

double picklist_loss(const Vector& r_cls, const Matrix& value_reps, int target, double margin) {
  if (value_reps.rows() <= 1) return 0.0;
  double positive = cosine(r_cls, value_reps.row(target).transpose());
  double negative = -std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < value_reps.rows(); ++l) {
    if (l == target) continue;
    negative = std::max(negative, cosine(r_cls, value_reps.row(l).transpose()));
  }
  return std::max(0.0, margin - positive + negative);
}

}  // namespace dsdst::model
