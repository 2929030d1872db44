#include "hoidet/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "hoidet/errors.hpp"
#include "hoidet/rng.hpp"

namespace hoidet::nn {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kFullyConnected: return "fc";
    case LayerKind::kReLU: return "relu";
    case LayerKind::kFlatten: return "flatten";
  }
  return "?";
}

namespace {

Shape next_shape(Shape in, const LayerSpec& l, std::size_t& params) {
  params = 0;
  switch (l.kind) {
    case LayerKind::kConv2d:
      if (l.kernel < 1 || l.kernel % 2 == 0 || l.units < 1) {
        throw PreconditionError("conv2d needs an odd kernel and >= 1 filter");
      }
      params = static_cast<std::size_t>(l.units) * in.c * l.kernel * l.kernel + l.units;
      return {l.units, in.h, in.w};
    case LayerKind::kMaxPool:
      if (in.h % 2 != 0 || in.w % 2 != 0 || in.h < 2 || in.w < 2) {
        throw PreconditionError("maxpool needs even spatial dims, got " + std::to_string(in.h) +
                                "x" + std::to_string(in.w));
      }
      return {in.c, in.h / 2, in.w / 2};
    case LayerKind::kFullyConnected:
      if (l.units < 1) throw PreconditionError("fc needs >= 1 output");
      params = static_cast<std::size_t>(l.units) * in.size() + l.units;
      return {l.units, 1, 1};
    case LayerKind::kReLU:
      return in;
    case LayerKind::kFlatten:
      return {static_cast<int>(in.size()), 1, 1};
  }
  throw PreconditionError("unknown layer kind");
}

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
void im2col(const T* in, Shape s, int k, T* col) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  std::size_t row = 0;
  for (int c = 0; c < s.c; ++c) {
    const T* plane = in + static_cast<std::size_t>(c) * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        T* dst = col + row * hw;
        const int dy = ky - pad;
        const int dx = kx - pad;
        for (int y = 0; y < s.h; ++y) {
          const int iy = y + dy;
          T* drow = dst + static_cast<std::size_t>(y) * s.w;
          if (iy < 0 || iy >= s.h) {
            std::fill(drow, drow + s.w, T(0));
            continue;
          }
          const T* srow = plane + static_cast<std::size_t>(iy) * s.w;
          const int x_lo = std::min(s.w, std::max(0, -dx));
          const int x_hi = std::min(s.w, s.w - dx);
          std::fill(drow, drow + x_lo, T(0));
          for (int x = x_lo; x < x_hi; ++x) drow[x] = srow[x + dx];
          std::fill(drow + std::max(x_lo, x_hi), drow + s.w, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, Shape s, int k, T* out) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  std::size_t row = 0;
  for (int c = 0; c < s.c; ++c) {
    T* plane = out + static_cast<std::size_t>(c) * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        const T* src = col + row * hw;
        const int dy = ky - pad;
        const int dx = kx - pad;
        for (int y = 0; y < s.h; ++y) {
          const int iy = y + dy;
          if (iy < 0 || iy >= s.h) continue;
          T* orow = plane + static_cast<std::size_t>(iy) * s.w;
          const T* srow = src + static_cast<std::size_t>(y) * s.w;
          const int x_lo = std::max(0, -dx);
          const int x_hi = std::min(s.w, s.w - dx);
          for (int x = x_lo; x < x_hi; ++x) orow[x + dx] += srow[x];
        }
      }
    }
  }
}

}  // namespace

std::size_t count_params(Shape input, const std::vector<LayerSpec>& layers) {
  std::size_t total = 0;
  Shape s = input;
  for (const auto& l : layers) {
    std::size_t p = 0;
    s = next_shape(s, l, p);
    total += p;
  }
  return total;
}

template <typename T>
Network<T>::Network(Shape input, std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  shapes_ = {input};
  offsets_ = {0};
  for (const auto& l : layers_) {
    std::size_t p = 0;
    shapes_.push_back(next_shape(shapes_.back(), l, p));
    offsets_.push_back(offsets_.back() + p);
  }
  params_.assign(offsets_.back(), T(0));
}

template <typename T>
void Network<T>::init(std::uint64_t seed) {
  std::fill(params_.begin(), params_.end(), T(0));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const Shape in = shapes_[i];
    std::size_t fan_in = 0;
    std::size_t weights = 0;
    if (l.kind == LayerKind::kConv2d) {
      fan_in = static_cast<std::size_t>(in.c) * l.kernel * l.kernel;
      weights = fan_in * l.units;
    } else if (l.kind == LayerKind::kFullyConnected) {
      fan_in = in.size();
      weights = fan_in * l.units;
    } else {
      continue;
    }
    Rng rng(mix_seed(seed, i));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    T* w = params_.data() + offsets_[i];
    for (std::size_t j = 0; j < weights; ++j) w[j] = static_cast<T>(rng.uniform(-bound, bound));
  }
}

template <typename T>
void Network<T>::forward(std::span<const T> input, Trace& trace) const {
  if (input.size() != shapes_.front().size()) {
    throw PreconditionError("network input has " + std::to_string(input.size()) +
                            " values, expected " + std::to_string(shapes_.front().size()));
  }
  trace.acts.resize(layers_.size() + 1);
  trace.acts[0].assign(input.begin(), input.end());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const Shape in = shapes_[i];
    const Shape out = shapes_[i + 1];
    const AlignedVector<T>& x = trace.acts[i];
    AlignedVector<T>& y = trace.acts[i + 1];
    y.resize(out.size());
    const T* p = params_.data() + offsets_[i];
    switch (l.kind) {
      case LayerKind::kConv2d: {
        const std::size_t ckk = static_cast<std::size_t>(in.c) * l.kernel * l.kernel;
        const std::size_t hw = static_cast<std::size_t>(in.h) * in.w;
        trace.col.resize(ckk * hw);
        im2col(x.data(), in, l.kernel, trace.col.data());
        Eigen::Map<const MatR<T>> w(p, l.units, static_cast<Eigen::Index>(ckk));
        Eigen::Map<const Vec<T>> b(p + static_cast<std::size_t>(l.units) * ckk, l.units);
        Eigen::Map<const MatR<T>> col(trace.col.data(), static_cast<Eigen::Index>(ckk),
                                      static_cast<Eigen::Index>(hw));
        Eigen::Map<MatR<T>> o(y.data(), l.units, static_cast<Eigen::Index>(hw));
        o.noalias() = w * col;
        o.colwise() += b;
        break;
      }
      case LayerKind::kMaxPool: {
        for (int c = 0; c < in.c; ++c) {
          const T* src = x.data() + static_cast<std::size_t>(c) * in.h * in.w;
          T* dst = y.data() + static_cast<std::size_t>(c) * out.h * out.w;
          for (int oy = 0; oy < out.h; ++oy) {
            const T* r0 = src + static_cast<std::size_t>(2 * oy) * in.w;
            const T* r1 = r0 + in.w;
            for (int ox = 0; ox < out.w; ++ox) {
              dst[static_cast<std::size_t>(oy) * out.w + ox] =
                  std::max(std::max(r0[2 * ox], r0[2 * ox + 1]), std::max(r1[2 * ox], r1[2 * ox + 1]));
            }
          }
        }
        break;
      }
      case LayerKind::kFullyConnected: {
        const auto m = static_cast<Eigen::Index>(in.size());
        Eigen::Map<const MatR<T>> w(p, l.units, m);
        Eigen::Map<const Vec<T>> b(p + static_cast<std::size_t>(l.units) * m, l.units);
        Eigen::Map<const Vec<T>> xv(x.data(), m);
        Eigen::Map<Vec<T>> yv(y.data(), l.units);
        yv.noalias() = w * xv;
        yv += b;
        break;
      }
      case LayerKind::kReLU:
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] > T(0) ? x[j] : T(0);
        break;
      case LayerKind::kFlatten:
        std::copy(x.begin(), x.end(), y.begin());
        break;
    }
  }
}

template <typename T>
void Network<T>::backward(Trace& trace, std::span<const T> grad_output, std::span<T> grad_params,
                          std::span<T> grad_input) const {
  if (grad_output.size() != shapes_.back().size()) {
    throw PreconditionError("backward: gradient size does not match network output");
  }
  if (grad_params.size() != params_.size()) {
    throw PreconditionError("backward: parameter gradient buffer has the wrong size");
  }
  AlignedVector<T>* g_out = &trace.grad_a;
  AlignedVector<T>* g_in = &trace.grad_b;
  g_out->assign(grad_output.begin(), grad_output.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    const Shape in = shapes_[li];
    const Shape out = shapes_[li + 1];
    const AlignedVector<T>& x = trace.acts[li];
    const AlignedVector<T>& y = trace.acts[li + 1];
    const bool need_input_grad = li > 0 || !grad_input.empty();
    const T* p = params_.data() + offsets_[li];
    T* gp = grad_params.data() + offsets_[li];
    if (need_input_grad) g_in->assign(in.size(), T(0));
    switch (l.kind) {
      case LayerKind::kConv2d: {
        const std::size_t ckk = static_cast<std::size_t>(in.c) * l.kernel * l.kernel;
        const std::size_t hw = static_cast<std::size_t>(in.h) * in.w;
        trace.col.resize(ckk * hw);
        im2col(x.data(), in, l.kernel, trace.col.data());
        Eigen::Map<const MatR<T>> col(trace.col.data(), static_cast<Eigen::Index>(ckk),
                                      static_cast<Eigen::Index>(hw));
        Eigen::Map<const MatR<T>> go(g_out->data(), l.units, static_cast<Eigen::Index>(hw));
        Eigen::Map<MatR<T>> gw(gp, l.units, static_cast<Eigen::Index>(ckk));
        Eigen::Map<Vec<T>> gb(gp + static_cast<std::size_t>(l.units) * ckk, l.units);
        gw.noalias() += go * col.transpose();
        gb += go.rowwise().sum();
        if (need_input_grad) {
          Eigen::Map<const MatR<T>> w(p, l.units, static_cast<Eigen::Index>(ckk));
          Eigen::Map<MatR<T>> gcol(trace.col.data(), static_cast<Eigen::Index>(ckk),
                                   static_cast<Eigen::Index>(hw));
          gcol.noalias() = w.transpose() * go;
          col2im_add(trace.col.data(), in, l.kernel, g_in->data());
        }
        break;
      }
      case LayerKind::kMaxPool: {
        if (!need_input_grad) break;
        for (int c = 0; c < in.c; ++c) {
          const std::size_t in_off = static_cast<std::size_t>(c) * in.h * in.w;
          const std::size_t out_off = static_cast<std::size_t>(c) * out.h * out.w;
          for (int oy = 0; oy < out.h; ++oy) {
            for (int ox = 0; ox < out.w; ++ox) {
              const std::size_t o = out_off + static_cast<std::size_t>(oy) * out.w + ox;
              const std::size_t cand[4] = {
                  in_off + static_cast<std::size_t>(2 * oy) * in.w + 2 * ox,
                  in_off + static_cast<std::size_t>(2 * oy) * in.w + 2 * ox + 1,
                  in_off + static_cast<std::size_t>(2 * oy + 1) * in.w + 2 * ox,
                  in_off + static_cast<std::size_t>(2 * oy + 1) * in.w + 2 * ox + 1};
              for (std::size_t j : cand) {
                if (x[j] == y[o]) {
                  (*g_in)[j] += (*g_out)[o];
                  break;
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::kFullyConnected: {
        const auto m = static_cast<Eigen::Index>(in.size());
        Eigen::Map<const Vec<T>> xv(x.data(), m);
        Eigen::Map<const Vec<T>> go(g_out->data(), l.units);
        Eigen::Map<MatR<T>> gw(gp, l.units, m);
        Eigen::Map<Vec<T>> gb(gp + static_cast<std::size_t>(l.units) * m, l.units);
        gw.noalias() += go * xv.transpose();
        gb += go;
        if (need_input_grad) {
          Eigen::Map<const MatR<T>> w(p, l.units, m);
          Eigen::Map<Vec<T>> gi(g_in->data(), m);
          gi.noalias() = w.transpose() * go;
        }
        break;
      }
      case LayerKind::kReLU:
        if (!need_input_grad) break;
        for (std::size_t j = 0; j < x.size(); ++j) (*g_in)[j] = x[j] > T(0) ? (*g_out)[j] : T(0);
        break;
      case LayerKind::kFlatten:
        if (need_input_grad) std::copy(g_out->begin(), g_out->end(), g_in->begin());
        break;
    }
    if (!need_input_grad) break;
    std::swap(g_out, g_in);
  }
  if (!grad_input.empty()) {
    if (grad_input.size() != shapes_.front().size()) {
      throw PreconditionError("backward: input gradient buffer has the wrong size");
    }
    std::copy(g_out->begin(), g_out->end(), grad_input.begin());
  }
}

template class Network<float>;
template class Network<double>;

}  // namespace hoidet::nn
