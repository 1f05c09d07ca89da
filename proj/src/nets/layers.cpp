#include "dsvr/nets/layers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dsvr::nets {

namespace {

template <class S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MapMat = Eigen::Map<RowMat<S>>;
template <class S>
using ConstMapMat = Eigen::Map<const RowMat<S>>;
template <class S>
using MapVec = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>;

}  // namespace

template <class S>
Param<S>::Param(std::string n, ParamRole r, std::vector<int> dims, int fan)
    : name(std::move(n)), role(r), shape(std::move(dims)), fan_in(fan) {
  std::size_t count = 1;
  for (int d : shape) count *= static_cast<std::size_t>(d);
  value.assign(count, S(0));
  grad.assign(count, S(0));
}

template <class S>
void init_param(Param<S>& p, Rng& rng) {
  switch (p.role) {
    case ParamRole::Weight: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(p.fan_in));
      for (auto& v : p.value) v = static_cast<S>(rng.uniform(-bound, bound));
      break;
    }
    case ParamRole::Bias:
    case ParamRole::NormShift:
      std::fill(p.value.begin(), p.value.end(), S(0));
      break;
    case ParamRole::NormScale:
      std::fill(p.value.begin(), p.value.end(), S(1));
      break;
  }
}

Activation parse_activation(const std::string& name) {
  if (name == "gelu") return Activation::Gelu;
  if (name == "relu") return Activation::Relu;
  if (name == "silu") return Activation::Silu;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Gelu: return "gelu";
    case Activation::Relu: return "relu";
    case Activation::Silu: return "silu";
  }
  return "gelu";
}

// ---------------------------------------------------------------- Conv2d

template <class S>
Conv2d<S>::Conv2d(const std::string& name, int in_ch, int out_ch, int kernel, int stride, int pad,
                  bool propagate_input_grad)
    : in_(in_ch), out_(out_ch), k_(kernel), stride_(stride), pad_(pad),
      input_grad_(propagate_input_grad),
      weight_(name + ".weight", ParamRole::Weight, {out_ch, in_ch, kernel, kernel},
              in_ch * kernel * kernel),
      bias_(name + ".bias", ParamRole::Bias, {out_ch}, in_ch * kernel * kernel) {
  if (in_ch < 1 || out_ch < 1 || kernel < 1 || stride < 1 || pad < 0) {
    throw ConfigError("invalid convolution geometry for " + name);
  }
}

template <class S>
Tensor<S> Conv2d<S>::forward(const Tensor<S>& x) {
  if (x.c != in_) {
    throw ShapeError("conv expects " + std::to_string(in_) + " channels, got " + x.shape_string());
  }
  in_h_ = x.h;
  in_w_ = x.w;
  out_h_ = (x.h + 2 * pad_ - k_) / stride_ + 1;
  out_w_ = (x.w + 2 * pad_ - k_) / stride_ + 1;
  if (out_h_ < 1 || out_w_ < 1) throw ShapeError("conv input too small: " + x.shape_string());
  const int kk = in_ * k_ * k_;
  const int positions = out_h_ * out_w_;

  if (k_ == 1 && stride_ == 1 && pad_ == 0) {
    cols_ = x.data;
  } else {
    cols_.assign(static_cast<std::size_t>(kk) * positions, S(0));
    for (int ci = 0; ci < in_; ++ci) {
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          S* row = cols_.data() + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * positions;
          for (int oy = 0; oy < out_h_; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= x.h) continue;
            const S* src = x.data.data() + (static_cast<std::size_t>(ci) * x.h + iy) * x.w;
            S* dst = row + static_cast<std::size_t>(oy) * out_w_;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix >= 0 && ix < x.w) dst[ox] = src[ix];
            }
          }
        }
      }
    }
  }

  Tensor<S> y(out_, out_h_, out_w_);
  ConstMapMat<S> w(weight_.value.data(), out_, kk);
  ConstMapMat<S> cols(cols_.data(), kk, positions);
  MapMat<S> out(y.data.data(), out_, positions);
  out.noalias() = w * cols;
  for (int o = 0; o < out_; ++o) out.row(o).array() += bias_.value[o];
  return y;
}

template <class S>
Tensor<S> Conv2d<S>::backward(const Tensor<S>& dy) {
  const int kk = in_ * k_ * k_;
  const int positions = out_h_ * out_w_;
  if (dy.c != out_ || dy.h != out_h_ || dy.w != out_w_) throw ShapeError("conv backward shape mismatch");
  ConstMapMat<S> g(dy.data.data(), out_, positions);
  ConstMapMat<S> cols(cols_.data(), kk, positions);
  MapMat<S> dw(weight_.grad.data(), out_, kk);
  dw.noalias() += g * cols.transpose();
  // Plain loop: Eigen's vectorised reduction order depends on pointer
  // alignment, which would make training runs differ bit-wise.
  for (int o = 0; o < out_; ++o) {
    const S* row = dy.data.data() + static_cast<std::size_t>(o) * positions;
    S acc = 0;
    for (int p = 0; p < positions; ++p) acc += row[p];
    bias_.grad[o] += acc;
  }

  if (!input_grad_) return {};
  ConstMapMat<S> w(weight_.value.data(), out_, kk);
  Tensor<S> dx(in_, in_h_, in_w_);
  if (k_ == 1 && stride_ == 1 && pad_ == 0) {
    MapMat<S> dxm(dx.data.data(), in_, positions);
    dxm.noalias() = w.transpose() * g;
    return dx;
  }
  RowMat<S> dcols = w.transpose() * g;
  for (int ci = 0; ci < in_; ++ci) {
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const S* row = dcols.data() + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * positions;
        for (int oy = 0; oy < out_h_; ++oy) {
          const int iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= in_h_) continue;
          S* dst = dx.data.data() + (static_cast<std::size_t>(ci) * in_h_ + iy) * in_w_;
          const S* src = row + static_cast<std::size_t>(oy) * out_w_;
          for (int ox = 0; ox < out_w_; ++ox) {
            const int ix = ox * stride_ - pad_ + kx;
            if (ix >= 0 && ix < in_w_) dst[ix] += src[ox];
          }
        }
      }
    }
  }
  return dx;
}

template <class S>
void Conv2d<S>::collect(std::vector<Param<S>*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ------------------------------------------------------- DepthwiseConv2d

template <class S>
DepthwiseConv2d<S>::DepthwiseConv2d(const std::string& name, int channels, int kernel, int pad)
    : ch_(channels), k_(kernel), pad_(pad),
      weight_(name + ".weight", ParamRole::Weight, {channels, 1, kernel, kernel}, kernel * kernel),
      bias_(name + ".bias", ParamRole::Bias, {channels}, kernel * kernel) {}

template <class S>
Tensor<S> DepthwiseConv2d<S>::forward(const Tensor<S>& x) {
  if (x.c != ch_) throw ShapeError("depthwise conv channel mismatch: " + x.shape_string());
  input_ = x;
  Tensor<S> y(x.c, x.h, x.w);
  for (int c = 0; c < ch_; ++c) {
    const S* wk = weight_.value.data() + static_cast<std::size_t>(c) * k_ * k_;
    const S* src = x.data.data() + c * x.plane_size();
    S* dst = y.data.data() + c * y.plane_size();
    std::fill(dst, dst + y.plane_size(), bias_.value[c]);
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const S wv = wk[ky * k_ + kx];
        const int dy = ky - pad_;
        const int dx = kx - pad_;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(x.w, x.w - dx);
        for (int yy = std::max(0, -dy); yy < std::min(x.h, x.h - dy); ++yy) {
          const S* s = src + static_cast<std::size_t>(yy + dy) * x.w + dx;
          S* d = dst + static_cast<std::size_t>(yy) * x.w;
          for (int xx = x0; xx < x1; ++xx) d[xx] += wv * s[xx];
        }
      }
    }
  }
  return y;
}

template <class S>
Tensor<S> DepthwiseConv2d<S>::backward(const Tensor<S>& g) {
  const Tensor<S>& x = input_;
  Tensor<S> dx(x.c, x.h, x.w);
  for (int c = 0; c < ch_; ++c) {
    const S* wk = weight_.value.data() + static_cast<std::size_t>(c) * k_ * k_;
    S* dwk = weight_.grad.data() + static_cast<std::size_t>(c) * k_ * k_;
    const S* src = x.data.data() + c * x.plane_size();
    const S* gp = g.data.data() + c * g.plane_size();
    S* dxp = dx.data.data() + c * dx.plane_size();
    S bias_grad = 0;
    for (std::size_t i = 0; i < g.plane_size(); ++i) bias_grad += gp[i];
    bias_.grad[c] += bias_grad;
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const int dy = ky - pad_;
        const int dxo = kx - pad_;
        const int x0 = std::max(0, -dxo);
        const int x1 = std::min(x.w, x.w - dxo);
        const S wv = wk[ky * k_ + kx];
        S acc = 0;
        for (int yy = std::max(0, -dy); yy < std::min(x.h, x.h - dy); ++yy) {
          const S* s = src + static_cast<std::size_t>(yy + dy) * x.w + dxo;
          S* d = dxp + static_cast<std::size_t>(yy + dy) * x.w + dxo;
          const S* gr = gp + static_cast<std::size_t>(yy) * x.w;
          for (int xx = x0; xx < x1; ++xx) {
            acc += gr[xx] * s[xx];
            d[xx] += wv * gr[xx];
          }
        }
        dwk[ky * k_ + kx] += acc;
      }
    }
  }
  return dx;
}

template <class S>
void DepthwiseConv2d<S>::collect(std::vector<Param<S>*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ------------------------------------------------------ ChannelLayerNorm

template <class S>
ChannelLayerNorm<S>::ChannelLayerNorm(const std::string& name, int channels, double eps)
    : ch_(channels), eps_(eps),
      scale_(name + ".scale", ParamRole::NormScale, {channels}, 1),
      shift_(name + ".shift", ParamRole::NormShift, {channels}, 1) {}

template <class S>
Tensor<S> ChannelLayerNorm<S>::forward(const Tensor<S>& x) {
  if (x.c != ch_) throw ShapeError("layer norm channel mismatch: " + x.shape_string());
  const std::size_t n = x.plane_size();
  std::vector<S> mean(n, S(0)), var(n, S(0));
  for (int c = 0; c < ch_; ++c) {
    const S* p = x.data.data() + c * n;
    for (std::size_t i = 0; i < n; ++i) mean[i] += p[i];
  }
  for (auto& m : mean) m /= static_cast<S>(ch_);
  for (int c = 0; c < ch_; ++c) {
    const S* p = x.data.data() + c * n;
    for (std::size_t i = 0; i < n; ++i) {
      const S d = p[i] - mean[i];
      var[i] += d * d;
    }
  }
  inv_std_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_std_[i] = S(1) / std::sqrt(var[i] / static_cast<S>(ch_) + static_cast<S>(eps_));
  }
  xhat_ = Tensor<S>(x.c, x.h, x.w);
  Tensor<S> y(x.c, x.h, x.w);
  for (int c = 0; c < ch_; ++c) {
    const S* p = x.data.data() + c * n;
    S* xh = xhat_.data.data() + c * n;
    S* out = y.data.data() + c * n;
    const S a = scale_.value[c];
    const S b = shift_.value[c];
    for (std::size_t i = 0; i < n; ++i) {
      xh[i] = (p[i] - mean[i]) * inv_std_[i];
      out[i] = a * xh[i] + b;
    }
  }
  return y;
}

template <class S>
Tensor<S> ChannelLayerNorm<S>::backward(const Tensor<S>& dy) {
  const std::size_t n = xhat_.plane_size();
  std::vector<S> mean_g(n, S(0)), mean_gx(n, S(0));
  for (int c = 0; c < ch_; ++c) {
    const S* g = dy.data.data() + c * n;
    const S* xh = xhat_.data.data() + c * n;
    const S a = scale_.value[c];
    S dscale = 0, dshift = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dscale += g[i] * xh[i];
      dshift += g[i];
      mean_g[i] += a * g[i];
      mean_gx[i] += a * g[i] * xh[i];
    }
    scale_.grad[c] += dscale;
    shift_.grad[c] += dshift;
  }
  const S inv_c = S(1) / static_cast<S>(ch_);
  Tensor<S> dx(dy.c, dy.h, dy.w);
  for (int c = 0; c < ch_; ++c) {
    const S* g = dy.data.data() + c * n;
    const S* xh = xhat_.data.data() + c * n;
    S* out = dx.data.data() + c * n;
    const S a = scale_.value[c];
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = inv_std_[i] * (a * g[i] - mean_g[i] * inv_c - xh[i] * mean_gx[i] * inv_c);
    }
  }
  return dx;
}

template <class S>
void ChannelLayerNorm<S>::collect(std::vector<Param<S>*>& out) {
  out.push_back(&scale_);
  out.push_back(&shift_);
}

// ------------------------------------------------------- ActivationLayer

template <class S>
Tensor<S> ActivationLayer<S>::forward(const Tensor<S>& x) {
  input_ = x;
  Tensor<S> y = x;
  switch (act_) {
    case Activation::Gelu:
      for (auto& v : y.data) v = S(0.5) * v * (S(1) + std::erf(v * S(std::numbers::sqrt2 / 2)));
      break;
    case Activation::Relu:
      for (auto& v : y.data) v = v > S(0) ? v : S(0);
      break;
    case Activation::Silu:
      for (auto& v : y.data) v = v / (S(1) + std::exp(-v));
      break;
  }
  return y;
}

template <class S>
Tensor<S> ActivationLayer<S>::backward(const Tensor<S>& dy) {
  Tensor<S> dx = dy;
  const auto& x = input_.data;
  switch (act_) {
    case Activation::Gelu: {
      const S inv_sqrt2 = S(std::numbers::sqrt2 / 2);
      const S inv_sqrt2pi = S(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const S v = x[i];
        const S cdf = S(0.5) * (S(1) + std::erf(v * inv_sqrt2));
        const S pdf = inv_sqrt2pi * std::exp(S(-0.5) * v * v);
        dx.data[i] *= cdf + v * pdf;
      }
      break;
    }
    case Activation::Relu:
      for (std::size_t i = 0; i < x.size(); ++i) dx.data[i] *= x[i] > S(0) ? S(1) : S(0);
      break;
    case Activation::Silu:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const S sig = S(1) / (S(1) + std::exp(-x[i]));
        dx.data[i] *= sig * (S(1) + x[i] * (S(1) - sig));
      }
      break;
  }
  return dx;
}

// ---------------------------------------------------------- PixelShuffle

template <class S>
Tensor<S> PixelShuffle<S>::forward(const Tensor<S>& x) {
  const int ss = s_ * s_;
  if (x.c % ss != 0) throw ShapeError("pixel shuffle needs channels divisible by s^2");
  Tensor<S> y(x.c / ss, x.h * s_, x.w * s_);
  for (int c = 0; c < y.c; ++c) {
    for (int i = 0; i < s_; ++i) {
      for (int j = 0; j < s_; ++j) {
        const S* src = x.data.data() + static_cast<std::size_t>(c * ss + i * s_ + j) * x.plane_size();
        for (int yy = 0; yy < x.h; ++yy) {
          S* dst = y.data.data() + (static_cast<std::size_t>(c) * y.h + yy * s_ + i) * y.w + j;
          const S* row = src + static_cast<std::size_t>(yy) * x.w;
          for (int xx = 0; xx < x.w; ++xx) dst[xx * s_] = row[xx];
        }
      }
    }
  }
  return y;
}

template <class S>
Tensor<S> PixelShuffle<S>::backward(const Tensor<S>& dy) {
  const int ss = s_ * s_;
  Tensor<S> dx(dy.c * ss, dy.h / s_, dy.w / s_);
  for (int c = 0; c < dy.c; ++c) {
    for (int i = 0; i < s_; ++i) {
      for (int j = 0; j < s_; ++j) {
        S* dst = dx.data.data() + static_cast<std::size_t>(c * ss + i * s_ + j) * dx.plane_size();
        for (int yy = 0; yy < dx.h; ++yy) {
          const S* src = dy.data.data() + (static_cast<std::size_t>(c) * dy.h + yy * s_ + i) * dy.w + j;
          S* row = dst + static_cast<std::size_t>(yy) * dx.w;
          for (int xx = 0; xx < dx.w; ++xx) row[xx] = src[xx * s_];
        }
      }
    }
  }
  return dx;
}

// --------------------------------------------------------------- Reshape

template <class S>
Tensor<S> Reshape<S>::forward(const Tensor<S>& x) {
  if (x.size() != static_cast<std::size_t>(c_) * h_ * w_) throw ShapeError("reshape size mismatch");
  in_c_ = x.c;
  in_h_ = x.h;
  in_w_ = x.w;
  Tensor<S> y = x;
  y.c = c_;
  y.h = h_;
  y.w = w_;
  return y;
}

template <class S>
Tensor<S> Reshape<S>::backward(const Tensor<S>& dy) {
  Tensor<S> dx = dy;
  dx.c = in_c_;
  dx.h = in_h_;
  dx.w = in_w_;
  return dx;
}

// ------------------------------------------------------------ Sequential

template <class S>
Tensor<S> Sequential<S>::forward(const Tensor<S>& x) {
  Tensor<S> h = x;
  for (auto& layer : layers_) h = layer->forward(h);
  return h;
}

template <class S>
Tensor<S> Sequential<S>::backward(const Tensor<S>& dy) {
  Tensor<S> g = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <class S>
void Sequential<S>::collect(std::vector<Param<S>*>& out) {
  for (auto& layer : layers_) layer->collect(out);
}

// --------------------------------------------------------- ConvNeXtBlock

template <class S>
ConvNeXtBlock<S>::ConvNeXtBlock(const std::string& name, int dim, Activation act) {
  branch_.template add<DepthwiseConv2d<S>>(name + ".dwconv", dim, 7, 3);
  branch_.template add<ChannelLayerNorm<S>>(name + ".norm", dim);
  branch_.template add<Conv2d<S>>(name + ".pwconv1", dim, 4 * dim, 1, 1, 0);
  branch_.template add<ActivationLayer<S>>(act);
  branch_.template add<Conv2d<S>>(name + ".pwconv2", 4 * dim, dim, 1, 1, 0);
}

template <class S>
Tensor<S> ConvNeXtBlock<S>::forward(const Tensor<S>& x) {
  Tensor<S> y = branch_.forward(x);
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += x.data[i];
  return y;
}

template <class S>
Tensor<S> ConvNeXtBlock<S>::backward(const Tensor<S>& dy) {
  Tensor<S> dx = branch_.backward(dy);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dy.data[i];
  return dx;
}

#define DSVR_INSTANTIATE_LAYERS(S)                 \
  template struct Param<S>;                        \
  template void init_param<S>(Param<S>&, Rng&);    \
  template class Conv2d<S>;                        \
  template class DepthwiseConv2d<S>;               \
  template class ChannelLayerNorm<S>;              \
  template class ActivationLayer<S>;               \
  template class PixelShuffle<S>;                  \
  template class Reshape<S>;                       \
  template class Sequential<S>;                    \
  template class ConvNeXtBlock<S>;

DSVR_INSTANTIATE_LAYERS(float)
DSVR_INSTANTIATE_LAYERS(double)

}  // namespace dsvr::nets
