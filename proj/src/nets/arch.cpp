#include "dsvr/nets/arch.hpp"

#include <cmath>

namespace dsvr::nets {

int ArchConfig::stride_product() const {
  int p = 1;
  for (int s : strides) p *= s;
  return p;
}

int ArchConfig::encoder_dim(std::size_t stage) const {
  if (encoder_dims.empty()) throw ConfigError("encoder_dims must not be empty");
  return encoder_dims.size() == 1 ? encoder_dims[0] : encoder_dims.at(stage);
}

void ArchConfig::validate() const {
  if (embed_c < 1 || embed_h < 1 || embed_w < 1) throw ConfigError("embedding shape must be positive");
  if (strides.empty()) throw ConfigError("at least one stride is required");
  for (int s : strides) {
    if (s < 1) throw ConfigError("strides must be positive");
  }
  if (!(reduction >= 1.0)) throw ConfigError("reduction must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("decoder kernel must be odd and positive");
  if (min_width < 1) throw ConfigError("min_width must be positive");
  if (encoder_dims.size() != 1 && encoder_dims.size() != strides.size()) {
    throw ConfigError("encoder_dims needs one entry or one per stride");
  }
  for (int d : encoder_dims) {
    if (d < 1) throw ConfigError("encoder_dims must be positive");
  }
}

ArchConfig ArchConfig::desk() { return ArchConfig{}; }

ArchConfig ArchConfig::full() {
  ArchConfig a;
  a.strides = {5, 4, 4, 2, 2};
  a.encoder_dims = {64};
  return a;
}

std::vector<int> stage_widths(const ArchConfig& arch, int base_width) {
  std::vector<int> widths;
  double w = base_width;
  for (std::size_t i = 0; i < arch.strides.size(); ++i) {
    widths.push_back(std::max(arch.min_width, static_cast<int>(std::floor(w + 1e-9))));
    w /= arch.reduction;
  }
  return widths;
}

long long count_linear_params(int in, int out) {
  return static_cast<long long>(in) * out + out;
}

namespace {

long long conv_params(int in, int out, int k) {
  return static_cast<long long>(in) * out * k * k + out;
}

long long upsample_stack_params(const ArchConfig& arch, int in, const std::vector<int>& widths) {
  long long total = 0;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int s = arch.strides[i];
    total += conv_params(in, widths[i] * s * s, arch.kernel);
    in = widths[i];
  }
  return total + conv_params(in, 3, arch.kernel);
}

void require_width(const DecoderWidth& width) {
  if (width.base_width < 4) throw ConfigError("decoder base_width must be >= 4");
}

template <class S>
void add_upsample_stack(Sequential<S>& net, const ArchConfig& arch, int in,
                        const std::vector<int>& widths, const std::string& prefix,
                        bool first_input_grad) {
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int s = arch.strides[i];
    net.template add<Conv2d<S>>(prefix + ".stage" + std::to_string(i) + ".conv", in,
                                widths[i] * s * s, arch.kernel, 1, arch.kernel / 2,
                                i > 0 || first_input_grad);
    net.template add<PixelShuffle<S>>(s);
    net.template add<ActivationLayer<S>>(arch.activation);
    in = widths[i];
  }
  net.template add<Conv2d<S>>(prefix + ".head", in, 3, arch.kernel, 1, arch.kernel / 2);
}

}  // namespace

long long count_encoder_params(const ArchConfig& arch) {
  long long total = 0;
  int in = 3;
  for (std::size_t i = 0; i < arch.strides.size(); ++i) {
    const int d = arch.encoder_dim(i);
    total += conv_params(in, d, arch.strides[i]);
    total += conv_params(1, d, 7);              // depthwise
    total += 2LL * d;                           // norm
    total += conv_params(d, 4 * d, 1) + conv_params(4 * d, d, 1);
    in = d;
  }
  return total + conv_params(in, arch.embed_c, 1);
}

long long count_hfd_params(const ArchConfig& arch, const DecoderWidth& width) {
  require_width(width);
  return upsample_stack_params(arch, arch.embed_c, stage_widths(arch, width.base_width));
}

long long count_lfd_params(const ArchConfig& arch, int input_dim, const DecoderWidth& width) {
  require_width(width);
  if (input_dim < 1 || width.mlp_hidden < 1) throw ConfigError("LFD needs positive input and hidden widths");
  const int grid = width.base_width * arch.embed_h * arch.embed_w;
  return count_linear_params(input_dim, width.mlp_hidden) +
         count_linear_params(width.mlp_hidden, grid) +
         upsample_stack_params(arch, width.base_width, stage_widths(arch, width.base_width));
}

template <class S>
std::unique_ptr<Sequential<S>> build_encoder(const ArchConfig& arch) {
  arch.validate();
  auto net = std::make_unique<Sequential<S>>();
  int in = 3;
  for (std::size_t i = 0; i < arch.strides.size(); ++i) {
    const int d = arch.encoder_dim(i);
    const int s = arch.strides[i];
    const std::string prefix = "encoder.stage" + std::to_string(i);
    net->template add<Conv2d<S>>(prefix + ".down", in, d, s, s, 0, i > 0);
    net->template add<ConvNeXtBlock<S>>(prefix + ".block", d, arch.activation);
    in = d;
  }
  net->template add<Conv2d<S>>("encoder.proj", in, arch.embed_c, 1, 1, 0);
  return net;
}

template <class S>
std::unique_ptr<Sequential<S>> build_hfd(const ArchConfig& arch, const DecoderWidth& width,
                                         bool propagate_input_grad) {
  arch.validate();
  require_width(width);
  auto net = std::make_unique<Sequential<S>>();
  add_upsample_stack(*net, arch, arch.embed_c, stage_widths(arch, width.base_width), "hfd",
                     propagate_input_grad);
  return net;
}

template <class S>
std::unique_ptr<Sequential<S>> build_lfd(const ArchConfig& arch, int input_dim,
                                         const DecoderWidth& width) {
  arch.validate();
  require_width(width);
  if (input_dim < 1 || width.mlp_hidden < 1) throw ConfigError("LFD needs positive input and hidden widths");
  auto net = std::make_unique<Sequential<S>>();
  const int grid = width.base_width * arch.embed_h * arch.embed_w;
  net->template add<Conv2d<S>>("lfd.mlp0", input_dim, width.mlp_hidden, 1, 1, 0, false);
  net->template add<ActivationLayer<S>>(arch.activation);
  net->template add<Conv2d<S>>("lfd.mlp1", width.mlp_hidden, grid, 1, 1, 0);
  net->template add<ActivationLayer<S>>(arch.activation);
  net->template add<Reshape<S>>(width.base_width, arch.embed_h, arch.embed_w);
  add_upsample_stack(*net, arch, width.base_width, stage_widths(arch, width.base_width), "lfd", true);
  return net;
}

template std::unique_ptr<Sequential<float>> build_encoder<float>(const ArchConfig&);
template std::unique_ptr<Sequential<double>> build_encoder<double>(const ArchConfig&);
template std::unique_ptr<Sequential<float>> build_hfd<float>(const ArchConfig&, const DecoderWidth&, bool);
template std::unique_ptr<Sequential<double>> build_hfd<double>(const ArchConfig&, const DecoderWidth&, bool);
template std::unique_ptr<Sequential<float>> build_lfd<float>(const ArchConfig&, int, const DecoderWidth&);
template std::unique_ptr<Sequential<double>> build_lfd<double>(const ArchConfig&, int, const DecoderWidth&);

}  // namespace dsvr::nets
