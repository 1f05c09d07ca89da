#include "dsvr/nets/model.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace dsvr::nets {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <class S>
void init_all(Sequential<S>& net, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Param<S>*> params;
  net.collect(params);
  for (auto* p : params) init_param(*p, rng);
}

template <class S>
long long param_count(Sequential<S>& net) {
  std::vector<Param<S>*> params;
  net.collect(params);
  long long n = 0;
  for (auto* p : params) n += static_cast<long long>(p->size());
  return n;
}

template <class S>
Tensor<S> gamma_tensor(const std::vector<double>& values) {
  Tensor<S> t(static_cast<int>(values.size()), 1, 1);
  for (std::size_t i = 0; i < values.size(); ++i) t.data[i] = static_cast<S>(values[i]);
  return t;
}

const freq::SpectralMask& cached_mask(int h, int w, double keep_ratio) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, double>, freq::SpectralMask> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_tuple(h, w, keep_ratio);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, freq::build_mask(h, w, keep_ratio)).first;
  return it->second;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "dual") return Method::Dual;
  if (name == "nerv") return Method::Nerv;
  if (name == "hnerv") return Method::Hnerv;
  throw ConfigError("unknown method '" + name + "' (expected dual, nerv or hnerv)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Dual: return "dual";
    case Method::Nerv: return "nerv";
    case Method::Hnerv: return "hnerv";
  }
  return "dual";
}

std::vector<std::string> decoder_names(Method m) {
  if (m == Method::Dual) return {"hfd", "lfd1", "lfd2"};
  return {"decoder"};
}

std::vector<int> default_budget_ratio(Method m) {
  if (m == Method::Dual) return {20, 1, 5};
  return {1};
}

void ModelConfig::validate() const {
  arch.validate();
  posenc.validate();
  if (!(keep_ratio > 0.0 && keep_ratio < 1.0)) throw ConfigError("keep_ratio must lie in (0, 1)");
  if (decoders.size() != decoder_names(method).size()) {
    throw ConfigError("method " + to_string(method) + " needs " +
                      std::to_string(decoder_names(method).size()) + " decoder widths");
  }
  for (const auto& d : decoders) {
    if (d.base_width < 4) throw ConfigError("decoder base_width must be >= 4");
  }
  const bool index_decoders = method != Method::Hnerv;
  if (index_decoders) {
    const auto first = method == Method::Dual ? decoders.begin() + 1 : decoders.begin();
    for (auto it = first; it != decoders.end(); ++it) {
      if (it->mlp_hidden < 1) throw ConfigError("index decoders need mlp_hidden >= 1");
    }
  }
}

long long ParamLedger::get(const std::string& name) const {
  for (const auto& [n, c] : components) {
    if (n == name) return c;
  }
  return 0;
}

long long ParamLedger::total() const {
  long long t = 0;
  for (const auto& [n, c] : components) t += c;
  return t;
}

template <class S>
InrModel<S>::InrModel(const ModelConfig& cfg, std::uint64_t seed, bool with_encoder) : cfg_(cfg) {
  cfg_.validate();
  const auto names = decoder_names(cfg_.method);
  if (uses_embedding() && with_encoder) {
    encoder_ = build_encoder<S>(cfg_.arch);
    init_all(*encoder_, mix_seed(seed, 0));
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    Decoder d;
    d.name = names[i];
    const DecoderWidth& width = cfg_.decoders[i];
    if (cfg_.method == Method::Nerv) {
      d.input = Input::GammaAll;
      d.net = build_lfd<S>(cfg_.arch, cfg_.posenc.encoded_length(), width);
    } else if (cfg_.method == Method::Hnerv || i == 0) {
      d.input = Input::Embedding;
      d.net = build_hfd<S>(cfg_.arch, width, true);
    } else {
      d.input = i == 1 ? Input::GammaLow : Input::GammaHigh;
      const int dim = i == 1 ? cfg_.posenc.low_length() : cfg_.posenc.high_length();
      d.net = build_lfd<S>(cfg_.arch, dim, width);
    }
    init_all(*d.net, mix_seed(seed, i + 1));
    decoders_.push_back(std::move(d));
  }
}

template <class S>
Tensor<S> InrModel<S>::embed(const Tensor<S>& encoder_input) {
  if (!encoder_) throw ConfigError("model was built without an encoder");
  if (encoder_input.c != 3 || encoder_input.h != cfg_.frame_h() || encoder_input.w != cfg_.frame_w()) {
    throw ShapeError("encoder input " + encoder_input.shape_string() + " does not match 3x" +
                     std::to_string(cfg_.frame_h()) + "x" + std::to_string(cfg_.frame_w()));
  }
  return encoder_->forward(encoder_input);
}

template <class S>
StreamOutput<S> InrModel<S>::forward(const Tensor<S>* encoder_input, int index, int frames) {
  if (!uses_embedding()) return decode(nullptr, index, frames);
  if (!encoder_input) throw ShapeError("this method needs an encoder input");
  Tensor<S> embedding = embed(*encoder_input);
  StreamOutput<S> out = decode(&embedding, index, frames);
  encoder_in_graph_ = true;
  return out;
}

template <class S>
StreamOutput<S> InrModel<S>::decode(const Tensor<S>* embedding, int index, int frames) {
  encoder_in_graph_ = false;
  const int h = cfg_.frame_h();
  const int w = cfg_.frame_w();
  StreamOutput<S> out{Tensor<S>(3, h, w), Tensor<S>(3, h, w), Tensor<S>(3, h, w), {}};

  std::vector<double> low, high, all;
  if (cfg_.method != Method::Hnerv) {
    const auto gamma = posenc::encode(posenc::normalize_index(index, frames), cfg_.posenc);
    std::tie(low, high) = posenc::split(gamma, cfg_.posenc);
    all = gamma.values;
  }
  if (uses_embedding()) {
    if (!embedding) throw ShapeError("this method needs an embedding");
    if (embedding->c != cfg_.arch.embed_c || embedding->h != cfg_.arch.embed_h ||
        embedding->w != cfg_.arch.embed_w) {
      throw ShapeError("embedding " + embedding->shape_string() + " does not match the architecture");
    }
    out.embedding = *embedding;
  }

  for (auto& d : decoders_) {
    Tensor<S> y;
    switch (d.input) {
      case Input::Embedding: y = d.net->forward(*embedding); break;
      case Input::GammaLow: y = d.net->forward(gamma_tensor<S>(low)); break;
      case Input::GammaHigh: y = d.net->forward(gamma_tensor<S>(high)); break;
      case Input::GammaAll: y = d.net->forward(gamma_tensor<S>(all)); break;
    }
    auto& part = d.input == Input::Embedding ? out.hf_part : out.lf_part;
    for (std::size_t i = 0; i < y.size(); ++i) part.data[i] += y.data[i];
  }
  for (std::size_t i = 0; i < out.recon.size(); ++i) {
    out.recon.data[i] = out.hf_part.data[i] + out.lf_part.data[i];
  }
  return out;
}

template <class S>
void InrModel<S>::backward(const Tensor<S>& d_recon) {
  for (auto& d : decoders_) {
    Tensor<S> d_in = d.net->backward(d_recon);
    if (d.input == Input::Embedding && encoder_in_graph_) encoder_->backward(d_in);
  }
}

template <class S>
std::vector<std::string> InrModel<S>::components() const {
  std::vector<std::string> names;
  if (encoder_) names.push_back("encoder");
  for (const auto& d : decoders_) names.push_back(d.name);
  return names;
}

template <class S>
std::vector<Param<S>*> InrModel<S>::component_parameters(const std::string& component) {
  std::vector<Param<S>*> params;
  if (component == "encoder") {
    if (encoder_) encoder_->collect(params);
    return params;
  }
  for (auto& d : decoders_) {
    if (d.name == component) {
      d.net->collect(params);
      return params;
    }
  }
  throw ConfigError("unknown model component '" + component + "'");
}

template <class S>
std::vector<Param<S>*> InrModel<S>::parameters() {
  std::vector<Param<S>*> params;
  if (encoder_) encoder_->collect(params);
  for (auto& d : decoders_) d.net->collect(params);
  return params;
}

template <class S>
ParamLedger InrModel<S>::ledger() {
  ParamLedger l;
  l.components.emplace_back("encoder", encoder_ ? param_count(*encoder_) : 0);
  for (auto& d : decoders_) l.components.emplace_back(d.name, param_count(*d.net));
  return l;
}

template <class S>
void InrModel<S>::reinitialize(const std::string& component, std::uint64_t seed) {
  Rng rng(seed);
  for (auto* p : component_parameters(component)) init_param(*p, rng);
}

Frame encoder_input_for(const ModelConfig& cfg, const Frame& frame) {
  switch (cfg.method) {
    case Method::Dual:
      return freq::high_pass(frame, cached_mask(frame.h, frame.w, cfg.keep_ratio));
    case Method::Hnerv:
      return frame;
    case Method::Nerv:
      return {};
  }
  return {};
}

template <class S>
StreamOutput<S> forward_dual(InrModel<S>& model, const Frame& frame, int index, int frames) {
  if (model.method() != Method::Dual) throw ConfigError("forward_dual needs a dual-stream model");
  const Tensor<S> input = tensor_cast<S>(encoder_input_for(model.config(), frame));
  return model.forward(&input, index, frames);
}

template <class S>
Tensor<S> forward_nerv_baseline(InrModel<S>& model, int index, int frames) {
  if (model.method() != Method::Nerv) throw ConfigError("forward_nerv_baseline needs a NeRV model");
  return model.forward(nullptr, index, frames).recon;
}

template <class S>
Tensor<S> forward_hnerv_baseline(InrModel<S>& model, const Frame& frame) {
  if (model.method() != Method::Hnerv) throw ConfigError("forward_hnerv_baseline needs an HNeRV model");
  const Tensor<S> input = tensor_cast<S>(frame);
  return model.forward(&input, 0, 1).recon;
}

template class InrModel<float>;
template class InrModel<double>;
template StreamOutput<float> forward_dual(InrModel<float>&, const Frame&, int, int);
template StreamOutput<double> forward_dual(InrModel<double>&, const Frame&, int, int);
template Tensor<float> forward_nerv_baseline(InrModel<float>&, int, int);
template Tensor<double> forward_nerv_baseline(InrModel<double>&, int, int);
template Tensor<float> forward_hnerv_baseline(InrModel<float>&, const Frame&);
template Tensor<double> forward_hnerv_baseline(InrModel<double>&, const Frame&);

}  // namespace dsvr::nets
