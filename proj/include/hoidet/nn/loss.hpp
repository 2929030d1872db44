#pragma once

#include <span>

namespace hoidet::nn {

/// Numerically stable logistic function.
[[nodiscard]] double sigmoid(double x);

/// Sum over classes of sigmoid cross-entropy:
///   sum_k  -y_k log s(x_k) - (1 - y_k) log(1 - s(x_k)).
/// Writes d(loss)/d(scores) = s(x_k) - y_k into `grad` when it is non-empty.
template <typename T>
double multilabel_loss(std::span<const T> scores, std::span<const T> labels, std::span<T> grad);

}  // namespace hoidet::nn
