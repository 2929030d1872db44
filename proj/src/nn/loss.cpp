#include "hoidet/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "hoidet/errors.hpp"

namespace hoidet::nn {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename T>
double multilabel_loss(std::span<const T> scores, std::span<const T> labels, std::span<T> grad) {
  if (scores.size() != labels.size() || (!grad.empty() && grad.size() != scores.size())) {
    throw PreconditionError("multilabel_loss: size mismatch");
  }
  double loss = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double s = static_cast<double>(scores[k]);
    const double y = static_cast<double>(labels[k]);
    // max(s,0) - s*y + log(1 + exp(-|s|))
    loss += std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
    if (!grad.empty()) grad[k] = static_cast<T>(sigmoid(s) - y);
  }
  return loss;
}

template double multilabel_loss<float>(std::span<const float>, std::span<const float>, std::span<float>);
template double multilabel_loss<double>(std::span<const double>, std::span<const double>, std::span<double>);

}  // namespace hoidet::nn
