#include <doctest.h>

#include <cmath>
#include <random>

#include "dsvr/core/synth.hpp"
#include "dsvr/nets/arch.hpp"
#include "dsvr/nets/model.hpp"
#include "dsvr/train/train.hpp"
#include "helpers.hpp"

using namespace dsvr;
using namespace dsvr::nets;

namespace {

ModelConfig small_config(Method m) {
  ModelConfig c;
  c.method = m;
  c.arch = ArchConfig::desk();
  if (m == Method::Dual) c.decoders = {{12, 0}, {4, 16}, {6, 16}};
  else if (m == Method::Nerv) c.decoders = {{12, 24}};
  else c.decoders = {{12, 0}};
  return c;
}

// Independent count: conv k x k from `in` to `out` has in*out*k*k + out.
long long conv_count(long long in, long long out, long long k) { return in * out * k * k + out; }

long long instantiated(std::vector<Param<float>*> params) {
  long long n = 0;
  for (auto* p : params) n += static_cast<long long>(p->size());
  return n;
}

void zero_heads(InrModel<float>& model) {
  for (auto* p : model.parameters()) {
    if (p->name.find(".head.") != std::string::npos) std::fill(p->value.begin(), p->value.end(), 0.0f);
  }
}

}  // namespace

TEST_CASE("stride products map the embedding grid onto the frame") {
  CHECK(ArchConfig::desk().stride_product() == 32);
  CHECK(ArchConfig::desk().frame_h() == 64);
  CHECK(ArchConfig::desk().frame_w() == 128);
  CHECK(ArchConfig::full().stride_product() == 320);
  CHECK(ArchConfig::full().frame_h() == 640);
  CHECK(ArchConfig::full().frame_w() == 1280);
}

TEST_CASE("encoder maps frames onto a 16x2x4 embedding") {
  for (const auto& arch : {ArchConfig::desk(), ArchConfig::full()}) {
    auto enc = build_encoder<float>(arch);
    const auto x = testutil::random_frame(3, arch.frame_h(), arch.frame_w(), 1);
    const auto e = enc->forward(x);
    CHECK(e.c == 16);
    CHECK(e.h == 2);
    CHECK(e.w == 4);
    std::vector<Param<float>*> ps;
    enc->collect(ps);
    CHECK(instantiated(ps) == count_encoder_params(arch));
  }
  InrModel<float> m(small_config(Method::Hnerv), 1);
  CHECK_THROWS_AS(m.embed(Tensor<float>(3, 60, 128)), ShapeError);
}

TEST_CASE("decoders produce 3xHxW frames") {
  const auto arch = ArchConfig::desk();
  auto hfd = build_hfd<float>(arch, {12, 0});
  CHECK(hfd->forward(Tensor<float>(16, 2, 4, 0.1f)).shape_string() == "3x64x128");
  for (int d : {22, 40}) {
    auto lfd = build_lfd<float>(arch, d, {8, 16});
    CHECK(lfd->forward(Tensor<float>(d, 1, 1, 0.3f)).shape_string() == "3x64x128");
  }
}

TEST_CASE("parameter counts match an independent tally and the instantiated layers") {
  const auto arch = ArchConfig::desk();
  for (int base : {4, 12, 33, 60}) {
    // Stage widths floor(base / 1.2^i), at least 4.
    std::vector<long long> w;
    double x = base;
    for (int i = 0; i < 3; ++i, x /= 1.2) w.push_back(std::max(4, static_cast<int>(std::floor(x + 1e-9))));
    const long long hfd = conv_count(16, w[0] * 16, 3) + conv_count(w[0], w[1] * 16, 3) +
                          conv_count(w[1], w[2] * 4, 3) + conv_count(w[2], 3, 3);
    CHECK(count_hfd_params(arch, {base, 0}) == hfd);
    auto net = build_hfd<float>(arch, {base, 0});
    std::vector<Param<float>*> ps;
    net->collect(ps);
    CHECK(instantiated(ps) == hfd);

    const int hidden = 20;
    const long long mlp = (22LL * hidden + hidden) + (hidden * base * 8LL + base * 8LL);
    const long long lfd = mlp + conv_count(base, w[0] * 16, 3) + conv_count(w[0], w[1] * 16, 3) +
                          conv_count(w[1], w[2] * 4, 3) + conv_count(w[2], 3, 3);
    CHECK(count_lfd_params(arch, 22, {base, hidden}) == lfd);
    auto l = build_lfd<float>(arch, 22, {base, hidden});
    std::vector<Param<float>*> lp;
    l->collect(lp);
    CHECK(instantiated(lp) == lfd);
  }
  CHECK(count_linear_params(22, 64) == 22 * 64 + 64);
  CHECK(count_linear_params(1, 1) == 2);
}

TEST_CASE("HFD count strictly increases with base width") {
  const auto arch = ArchConfig::desk();
  long long prev = 0;
  for (int base = 4; base <= 80; ++base) {
    const long long c = count_hfd_params(arch, {base, 0});
    CHECK(c > prev);
    prev = c;
  }
}

TEST_CASE("ledger is additive and independent of the seed") {
  for (auto m : {Method::Dual, Method::Nerv, Method::Hnerv}) {
    InrModel<float> a(small_config(m), 1), b(small_config(m), 99);
    const auto la = a.ledger(), lb = b.ledger();
    CHECK(la.components == lb.components);
    long long sum = 0;
    for (const auto& [name, n] : la.components) {
      sum += n;
      CHECK(n == instantiated(a.component_parameters(name)));
    }
    CHECK(la.total() == sum);
    CHECK(la.transmitted() == la.total() - la.get("encoder"));
    CHECK(la.total() == instantiated(a.parameters()));
  }
  InrModel<float> d(small_config(Method::Dual), 1);
  const auto l = d.ledger();
  CHECK(l.total() == l.get("hfd") + l.get("lfd1") + l.get("lfd2") + l.get("encoder"));
}

TEST_CASE("same seed gives identical weights and outputs") {
  const auto video = core::synth_video({});
  const Frame f = video.frame(3);
  InrModel<float> a(small_config(Method::Dual), 5), b(small_config(Method::Dual), 5), c(small_config(Method::Dual), 6);
  const auto oa = forward_dual(a, f, 3, 16);
  const auto ob = forward_dual(b, f, 3, 16);
  CHECK(oa.recon.data == ob.recon.data);
  CHECK(oa.embedding.data == ob.embedding.data);
  const auto oc = forward_dual(c, f, 3, 16);
  CHECK(oa.recon.data != oc.recon.data);
}

TEST_CASE("dual output is the exact sum of the streams") {
  const auto video = core::synth_video({});
  InrModel<float> m(small_config(Method::Dual), 2);
  for (int i : {0, 7, 15}) {
    const auto out = forward_dual(m, video.frame(i), i, 16);
    CHECK(out.recon.shape_string() == "3x64x128");
    for (std::size_t k = 0; k < out.recon.size(); ++k) {
      CHECK(out.recon.data[k] == out.hf_part.data[k] + out.lf_part.data[k]);
    }
  }
  zero_heads(m);
  const auto z = forward_dual(m, video.frame(4), 4, 16);
  for (float v : z.recon.data) CHECK(v == 0.0f);
}

TEST_CASE("zeroed head gives a zero frame for the baselines too") {
  const auto video = core::synth_video({});
  InrModel<float> n(small_config(Method::Nerv), 3), h(small_config(Method::Hnerv), 3);
  zero_heads(n);
  zero_heads(h);
  for (float v : forward_nerv_baseline(n, 2, 16).data) CHECK(v == 0.0f);
  for (float v : forward_hnerv_baseline(h, video.frame(2)).data) CHECK(v == 0.0f);
}

TEST_CASE("identical HF content at different indices: same hf_part, different lf_part") {
  core::SynthSpec spec;
  spec.hf_flicker = 0.0;
  const auto video = core::synth_video(spec);
  InrModel<float> m(small_config(Method::Dual), 4);
  const auto a = forward_dual(m, video.frame(2), 2, 16);
  const auto b = forward_dual(m, video.frame(9), 9, 16);
  CHECK(testutil::max_abs_diff(a.hf_part, b.hf_part) <= 1e-5);
  CHECK(testutil::max_abs_diff(a.lf_part, b.lf_part) > 1e-4);
}

TEST_CASE("baselines: shapes and NeRV ignores pixels") {
  const auto video = core::synth_video({});
  InrModel<float> n(small_config(Method::Nerv), 3), h(small_config(Method::Hnerv), 3);
  CHECK(forward_nerv_baseline(n, 5, 16).shape_string() == "3x64x128");
  CHECK(forward_hnerv_baseline(h, video.frame(5)).shape_string() == "3x64x128");
  const Frame noise = testutil::random_frame(3, 64, 128, 9);
  const auto a = n.forward(&noise, 5, 16).recon;
  const auto b = n.forward(nullptr, 5, 16).recon;
  CHECK(a.data == b.data);
  CHECK_FALSE(n.has_encoder());
  CHECK(n.ledger().get("encoder") == 0);
}

TEST_CASE("reinitialize only touches the named component") {
  InrModel<float> m(small_config(Method::Dual), 1);
  auto snapshot = [&](const std::string& c) {
    std::vector<float> v;
    for (auto* p : m.component_parameters(c)) v.insert(v.end(), p->value.begin(), p->value.end());
    return v;
  };
  const auto hfd = snapshot("hfd"), lfd1 = snapshot("lfd1");
  m.reinitialize("hfd", 1234);
  CHECK(snapshot("hfd") != hfd);
  CHECK(snapshot("lfd1") == lfd1);
}

TEST_CASE("pixel shuffle follows the depth-to-space channel order") {
  const int s = 2, c = 3, h = 2, w = 3;
  Tensor<double> x(c * s * s, h, w);
  for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = static_cast<double>(i);
  PixelShuffle<double> ps(s);
  const auto y = ps.forward(x);
  CHECK(y.c == c);
  CHECK(y.h == h * s);
  CHECK(y.w == w * s);
  for (int ch = 0; ch < c; ++ch) {
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        for (int i = 0; i < s; ++i) {
          for (int j = 0; j < s; ++j) CHECK(y.at(ch, yy * s + i, xx * s + j) == x.at(ch * s * s + i * s + j, yy, xx));
        }
      }
    }
  }
  const auto back = ps.backward(y);
  CHECK(back.data == x.data);
}

TEST_CASE("strided convolution matches a direct loop") {
  Conv2d<double> conv("c", 2, 3, 3, 2, 1);
  Rng rng(3);
  std::vector<Param<double>*> ps;
  conv.collect(ps);
  for (auto* p : ps) {
    for (auto& v : p->value) v = rng.uniform(-1, 1);
  }
  Tensor<double> x(2, 7, 6);
  for (auto& v : x.data) v = rng.uniform(-1, 1);
  const auto y = conv.forward(x);
  REQUIRE(y.h == 4);
  REQUIRE(y.w == 3);
  const auto& W = conv.weight().value;
  for (int o = 0; o < 3; ++o) {
    for (int oy = 0; oy < 4; ++oy) {
      for (int ox = 0; ox < 3; ++ox) {
        double acc = conv.bias().value[o];
        for (int i = 0; i < 2; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = oy * 2 - 1 + ky, ix = ox * 2 - 1 + kx;
              if (iy < 0 || iy >= 7 || ix < 0 || ix >= 6) continue;
              acc += W[((o * 2 + i) * 3 + ky) * 3 + kx] * x.at(i, iy, ix);
            }
          }
        }
        CHECK(std::abs(y.at(o, oy, ox) - acc) < 1e-12);
      }
    }
  }
}

TEST_CASE("initialisation bounds") {
  InrModel<float> m(small_config(Method::Dual), 8);
  for (auto* p : m.parameters()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p->fan_in));
    for (float v : p->value) {
      switch (p->role) {
        case ParamRole::Weight: CHECK(std::abs(v) <= bound + 1e-7); break;
        case ParamRole::Bias:
        case ParamRole::NormShift: CHECK(v == 0.0f); break;
        case ParamRole::NormScale: CHECK(v == 1.0f); break;
      }
    }
  }
}

TEST_CASE("model config validation") {
  auto c = small_config(Method::Dual);
  c.decoders.pop_back();
  CHECK_THROWS_AS(InrModel<float>(c, 0), ConfigError);
  c = small_config(Method::Dual);
  c.decoders[0].base_width = 3;
  CHECK_THROWS_AS(InrModel<float>(c, 0), ConfigError);
  c = small_config(Method::Dual);
  c.keep_ratio = 1.0;
  CHECK_THROWS_AS(InrModel<float>(c, 0), ConfigError);
  CHECK_THROWS_AS(parse_method("vnerv"), ConfigError);
  CHECK(parse_method(to_string(Method::Hnerv)) == Method::Hnerv);
}
