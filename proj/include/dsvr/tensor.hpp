#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dsvr/error.hpp"

namespace dsvr {

// Dense channel-major C x H x W array. Single sample; batching is done by the
// caller.
template <class S>
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<S> data;

  Tensor() = default;
  Tensor(int channels, int height, int width, S fill = S(0))
      : c(channels), h(height), w(width),
        data(static_cast<std::size_t>(channels) * height * width, fill) {
    if (channels < 0 || height < 0 || width < 0) throw ShapeError("negative tensor dimension");
  }

  std::size_t size() const { return data.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }

  S& at(int ch, int y, int x) { return data[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  S at(int ch, int y, int x) const { return data[(static_cast<std::size_t>(ch) * h + y) * w + x]; }

  std::span<S> plane(int ch) { return {data.data() + ch * plane_size(), plane_size()}; }
  std::span<const S> plane(int ch) const { return {data.data() + ch * plane_size(), plane_size()}; }

  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
  std::string shape_string() const {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }
};

using Frame = Tensor<float>;

template <class To, class From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  Tensor<To> out;
  out.c = t.c;
  out.h = t.h;
  out.w = t.w;
  out.data.assign(t.data.begin(), t.data.end());
  return out;
}

inline void require_same_shape(const auto& a, const auto& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

}  // namespace dsvr
