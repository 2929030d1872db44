#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace hoidet::nn {

/// Allocates on 64-byte boundaries. Vectorized kernels peel unaligned heads
/// differently, so a buffer's address would otherwise leak into the rounding
/// and break bitwise reproducibility.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}  // NOLINT(google-explicit-constructor)

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

struct Shape {
  int c = 1;
  int h = 1;
  int w = 1;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class LayerKind : std::uint32_t {
  kConv2d = 0,
  kMaxPool = 1,
  kFullyConnected = 2,
  kReLU = 3,
  kFlatten = 4,
};

[[nodiscard]] const char* to_string(LayerKind kind);

/// conv2d: stride 1, "same" zero padding, odd kernel. maxpool: 2x2 stride 2.
struct LayerSpec {
  LayerKind kind = LayerKind::kReLU;
  int kernel = 0;
  int units = 0;  // conv filters or fc outputs

  static LayerSpec conv(int kernel, int filters) { return {LayerKind::kConv2d, kernel, filters}; }
  static LayerSpec maxpool() { return {LayerKind::kMaxPool, 0, 0}; }
  static LayerSpec fc(int units) { return {LayerKind::kFullyConnected, 0, units}; }
  static LayerSpec relu() { return {LayerKind::kReLU, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::kFlatten, 0, 0}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Sequential network with a flat parameter vector.
///
/// The network object holds only parameters and layout; activations live in
/// a caller-owned Trace so that one network can serve concurrent forward and
/// backward passes.
template <typename T>
class Network {
 public:
  struct Trace {
    std::vector<AlignedVector<T>> acts;  // acts[0] is the input
    AlignedVector<T> col;
    AlignedVector<T> grad_a;
    AlignedVector<T> grad_b;
  };

  Network() = default;
  /// Throws PreconditionError if a layer cannot consume its input shape.
  Network(Shape input, std::vector<LayerSpec> layers);

  [[nodiscard]] Shape input_shape() const { return shapes_.front(); }
  [[nodiscard]] Shape output_shape() const { return shapes_.back(); }
  [[nodiscard]] Shape shape_after(std::size_t layer) const { return shapes_.at(layer + 1); }
  [[nodiscard]] const std::vector<LayerSpec>& layers() const { return layers_; }
  [[nodiscard]] std::size_t param_count() const { return params_.size(); }
  [[nodiscard]] std::size_t layer_param_offset(std::size_t layer) const { return offsets_.at(layer); }
  [[nodiscard]] std::size_t layer_param_count(std::size_t layer) const {
    return offsets_.at(layer + 1) - offsets_.at(layer);
  }

  [[nodiscard]] std::span<T> params() { return params_; }
  [[nodiscard]] std::span<const T> params() const { return params_; }

  /// Centered uniform weights with bound sqrt(6 / fan_in); zero biases.
  void init(std::uint64_t seed);

  void forward(std::span<const T> input, Trace& trace) const;
  [[nodiscard]] std::span<const T> output(const Trace& trace) const { return trace.acts.back(); }

  /// Accumulates d(loss)/d(params) into grad_params given d(loss)/d(output).
  /// If grad_input is non-empty it receives d(loss)/d(input).
  void backward(Trace& trace, std::span<const T> grad_output, std::span<T> grad_params,
                std::span<T> grad_input = {}) const;

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_{Shape{}};
  std::vector<std::size_t> offsets_{0};
  AlignedVector<T> params_;
};

/// Parameter count of a layer stack without allocating parameters.
[[nodiscard]] std::size_t count_params(Shape input, const std::vector<LayerSpec>& layers);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace hoidet::nn
