#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dsvr/rng.hpp"
#include "dsvr/tensor.hpp"

namespace dsvr::nets {

enum class ParamRole { Weight, Bias, NormScale, NormShift };

template <class S>
struct Param {
  std::string name;
  ParamRole role = ParamRole::Weight;
  std::vector<int> shape;
  int fan_in = 1;
  std::vector<S> value;
  std::vector<S> grad;

  Param() = default;
  Param(std::string n, ParamRole r, std::vector<int> dims, int fan);
  std::size_t size() const { return value.size(); }
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases and norm shifts 0;
// norm scales 1.
template <class S>
void init_param(Param<S>& p, Rng& rng);

enum class Activation { Gelu, Relu, Silu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

// Forward caches whatever backward needs; backward must follow the matching
// forward and accumulates into parameter gradients.
template <class S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<S> forward(const Tensor<S>& x) = 0;
  virtual Tensor<S> backward(const Tensor<S>& dy) = 0;
  virtual void collect(std::vector<Param<S>*>&) {}
};

template <class S>
class Conv2d final : public Layer<S> {
 public:
  Conv2d(const std::string& name, int in_ch, int out_ch, int kernel, int stride, int pad,
         bool propagate_input_grad = true);
  Tensor<S> forward(const Tensor<S>& x) override;
  Tensor<S> backward(const Tensor<S>& dy) override;
  void collect(std::vector<Param<S>*>& out) override;

  Param<S>& weight() { return weight_; }
  Param<S>& bias() { return bias_; }

 private:
  int in_, out_, k_, stride_, pad_;
  bool input_grad_;
  Param<S> weight_, bias_;
  int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
  std::vector<S> cols_;
};

// Per-channel k x k convolution, stride 1, symmetric padding.
template <class S>
class DepthwiseConv2d final : public Layer<S> {
 public:
  DepthwiseConv2d(const std::string& name, int channels, int kernel, int pad);
  Tensor<S> forward(const Tensor<S>& x) override;
  Tensor<S> backward(const Tensor<S>& dy) override;
  void collect(std::vector<Param<S>*>& out) override;

 private:
  int ch_, k_, pad_;
  Param<S> weight_, bias_;
  Tensor<S> input_;
};

// Normalises across channels independently at every spatial position.
template <class S>
class ChannelLayerNorm final : public Layer<S> {
 public:
  ChannelLayerNorm(const std::string& name, int channels, double eps = 1e-6);
  Tensor<S> forward(const Tensor<S>& x) override;
  Tensor<S> backward(const Tensor<S>& dy) override;
  void collect(std::vector<Param<S>*>& out) override;

 private:
  int ch_;
  double eps_;
  Param<S> scale_, shift_;
  Tensor<S> xhat_;
  std::vector<S> inv_std_;
};

template <class S>
class ActivationLayer final : public Layer<S> {
 public:
  explicit ActivationLayer(Activation a) : act_(a) {}
  Tensor<S> forward(const Tensor<S>& x) override;
  Tensor<S> backward(const Tensor<S>& dy) override;

 private:
  Activation act_;
  Tensor<S> input_;
};

// (C*s*s, H, W) -> (C, H*s, W*s); input channel c*s*s + i*s + j lands at
// output offset (i, j) inside each s x s cell.
template <class S>
class PixelShuffle final : public Layer<S> {
 public:
  explicit PixelShuffle(int scale) : s_(scale) {}
  Tensor<S> forward(const Tensor<S>& x) override;
  Tensor<S> backward(const Tensor<S>& dy) override;

 private:
  int s_;
};

template <class S>
class Reshape final : public Layer<S> {
 public:
  Reshape(int c, int h, int w) : c_(c), h_(h), w_(w) {}
  Tensor<S> forward(const Tensor<S>& x) override;
  Tensor<S> backward(const Tensor<S>& dy) override;

 private:
  int c_, h_, w_;
  int in_c_ = 0, in_h_ = 0, in_w_ = 0;
};

template <class S>
class Sequential : public Layer<S> {
 public:
  template <class L, class... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }
  Tensor<S> forward(const Tensor<S>& x) override;
  Tensor<S> backward(const Tensor<S>& dy) override;
  void collect(std::vector<Param<S>*>& out) override;
  std::size_t depth() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
};

// Depthwise 7x7 -> channel norm -> 1x1 expand x4 -> activation -> 1x1
// contract, plus identity shortcut.
template <class S>
class ConvNeXtBlock final : public Layer<S> {
 public:
  ConvNeXtBlock(const std::string& name, int dim, Activation act);
  Tensor<S> forward(const Tensor<S>& x) override;
  Tensor<S> backward(const Tensor<S>& dy) override;
  void collect(std::vector<Param<S>*>& out) override { branch_.collect(out); }

 private:
  Sequential<S> branch_;
};

}  // namespace dsvr::nets
