#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dsvr/freqsplit/freqsplit.hpp"
#include "dsvr/nets/arch.hpp"

namespace dsvr::nets {

// Dual: HF encoder on the high-passed frame + HFD, plus LFD1/LFD2 on the two
// halves of the split positional encoding. Nerv: one index-driven decoder on
// the whole encoding. Hnerv: encoder on the full frame + one upsampling
// decoder.
enum class Method { Dual, Nerv, Hnerv };

Method parse_method(const std::string& name);
std::string to_string(Method m);

struct ModelConfig {
  Method method = Method::Dual;
  ArchConfig arch;
  posenc::PosEncConfig posenc;
  double keep_ratio = 0.2;
  // One entry per decoder, in decoder_names() order.
  std::vector<DecoderWidth> decoders;

  int frame_h() const { return arch.frame_h(); }
  int frame_w() const { return arch.frame_w(); }
  void validate() const;
};

// Dual: {hfd, lfd1, lfd2}; single-decoder baselines: {decoder}.
std::vector<std::string> decoder_names(Method m);
// The default split of the transmitted budget: 20:1:5 for dual.
std::vector<int> default_budget_ratio(Method m);

// Per-component parameter counts. The encoder is listed but is not part of
// the transmitted total.
struct ParamLedger {
  std::vector<std::pair<std::string, long long>> components;

  long long get(const std::string& name) const;
  long long total() const;
  long long transmitted() const { return total() - get("encoder"); }
};

template <class S>
struct StreamOutput {
  Tensor<S> recon;      // hf_part + lf_part, unclipped
  Tensor<S> hf_part;
  Tensor<S> lf_part;
  Tensor<S> embedding;  // empty for NeRV
};

template <class S>
class InrModel {
 public:
  InrModel(const ModelConfig& cfg, std::uint64_t seed, bool with_encoder = true);

  const ModelConfig& config() const { return cfg_; }
  Method method() const { return cfg_.method; }
  bool uses_embedding() const { return cfg_.method != Method::Nerv; }
  bool has_encoder() const { return encoder_ != nullptr; }

  // Encoder only; caches activations for backward.
  Tensor<S> embed(const Tensor<S>& encoder_input);

  // Encoder (when the method has one) followed by every decoder. The
  // encoder input is the high-passed frame for Dual and the frame itself for
  // Hnerv; it is ignored for Nerv.
  StreamOutput<S> forward(const Tensor<S>* encoder_input, int index, int frames);

  // Decoders only, from a given embedding (ignored for Nerv).
  StreamOutput<S> decode(const Tensor<S>* embedding, int index, int frames);

  // Back-propagates d(loss)/d(recon) through the last forward or decode.
  void backward(const Tensor<S>& d_recon);

  std::vector<Param<S>*> parameters();
  std::vector<Param<S>*> component_parameters(const std::string& component);
  std::vector<std::string> components() const;
  ParamLedger ledger();

  // Redraws one component's weights from the initialiser.
  void reinitialize(const std::string& component, std::uint64_t seed);

 private:
  enum class Input { Embedding, GammaLow, GammaHigh, GammaAll };
  struct Decoder {
    std::string name;
    Input input;
    std::unique_ptr<Sequential<S>> net;
  };

  ModelConfig cfg_;
  std::unique_ptr<Sequential<S>> encoder_;
  std::vector<Decoder> decoders_;
  bool encoder_in_graph_ = false;
};

// Encoder input for a raw frame: the high-pass component for Dual, the frame
// for Hnerv, empty for Nerv.
Frame encoder_input_for(const ModelConfig& cfg, const Frame& frame);

template <class S>
StreamOutput<S> forward_dual(InrModel<S>& model, const Frame& frame, int index, int frames);
template <class S>
Tensor<S> forward_nerv_baseline(InrModel<S>& model, int index, int frames);
template <class S>
Tensor<S> forward_hnerv_baseline(InrModel<S>& model, const Frame& frame);

// Exact counts of weights and biases per component.
template <class S>
ParamLedger count_params(InrModel<S>& model) {
  return model.ledger();
}

}  // namespace dsvr::nets
