#pragma once

#include <string>
#include <vector>

#include "dsvr/nets/layers.hpp"
#include "dsvr/posenc/posenc.hpp"

namespace dsvr::nets {

// Geometry shared by encoder and decoders. The product of `strides` maps the
// embedding grid (embed_h, embed_w) onto the frame size.
struct ArchConfig {
  int embed_c = 16;
  int embed_h = 2;
  int embed_w = 4;
  std::vector<int> strides{4, 4, 2};
  double reduction = 1.2;
  Activation activation = Activation::Gelu;
  int kernel = 3;
  int min_width = 4;
  std::vector<int> encoder_dims{32, 32, 32};

  int stride_product() const;
  int frame_h() const { return embed_h * stride_product(); }
  int frame_w() const { return embed_w * stride_product(); }
  // Encoder width at stage i (a single entry is broadcast).
  int encoder_dim(std::size_t stage) const;
  void validate() const;

  // 64 x 128 frames, strides (4,4,2).
  static ArchConfig desk();
  // 640 x 1280 frames, strides (5,4,4,2,2).
  static ArchConfig full();
};

// Solver-tuned widths of one decoder. mlp_hidden is used only by the
// index-driven decoders.
struct DecoderWidth {
  int base_width = 32;
  int mlp_hidden = 0;
};

// Output width of each upsampling stage: max(min_width, floor(base / r^i)).
std::vector<int> stage_widths(const ArchConfig& arch, int base_width);

// Exact trainable-parameter counts (weights + biases) of the blocks built by
// build_encoder / build_hfd / build_lfd.
long long count_encoder_params(const ArchConfig& arch);
long long count_hfd_params(const ArchConfig& arch, const DecoderWidth& width);
long long count_lfd_params(const ArchConfig& arch, int input_dim, const DecoderWidth& width);
long long count_linear_params(int in, int out);

// Strided patch conv + ConvNeXt block per stride, then 1x1 projection to
// embed_c channels: 3 x H x W -> embed_c x embed_h x embed_w.
template <class S>
std::unique_ptr<Sequential<S>> build_encoder(const ArchConfig& arch);

// conv -> pixel shuffle -> activation per stride, then a conv head to RGB:
// embed_c x embed_h x embed_w -> 3 x H x W.
template <class S>
std::unique_ptr<Sequential<S>> build_hfd(const ArchConfig& arch, const DecoderWidth& width,
                                         bool propagate_input_grad = true);

// MLP (input_dim -> mlp_hidden -> base * embed_h * embed_w) reshaped to a
// base x embed_h x embed_w grid, then the same upsampling stages and head.
template <class S>
std::unique_ptr<Sequential<S>> build_lfd(const ArchConfig& arch, int input_dim,
                                         const DecoderWidth& width);

}  // namespace dsvr::nets
