#include "dsvr/codec/bitstream.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include "dsvr/codec/bitio.hpp"
#include "dsvr/codec/huffman.hpp"
#include "dsvr/error.hpp"
#include "dsvr/train/train.hpp"

namespace dsvr::codec {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'V', 'R'};
constexpr std::size_t kPreamble = 4 + 1 + 8;  // magic, version, total_bytes

std::uint32_t checksum(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

void put_header(ByteWriter& w, const Bitstream& bs) {
  const auto& m = bs.model;
  const auto& a = m.arch;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.method));
  w.put<std::uint32_t>(bs.frames);
  w.put<std::uint32_t>(m.frame_h());
  w.put<std::uint32_t>(m.frame_w());
  w.put<double>(m.posenc.base);
  w.put<std::uint32_t>(m.posenc.n);
  w.put<std::uint32_t>(m.posenc.m);
  w.put<std::uint32_t>(a.embed_c);
  w.put<std::uint32_t>(a.embed_h);
  w.put<std::uint32_t>(a.embed_w);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(a.strides.size()));
  for (int s : a.strides) w.put<std::uint32_t>(s);
  w.put<double>(a.reduction);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(a.activation));
  w.put<std::uint32_t>(a.kernel);
  w.put<std::uint32_t>(a.min_width);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(a.encoder_dims.size()));
  for (int d : a.encoder_dims) w.put<std::uint32_t>(d);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.decoders.size()));
  for (const auto& d : m.decoders) {
    w.put<std::uint32_t>(d.base_width);
    w.put<std::uint32_t>(d.mlp_hidden);
  }
  w.put<double>(m.keep_ratio);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(bs.bits_embed));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(bs.bits_weights));
}

void get_header(ByteReader& r, Bitstream& bs) {
  auto& m = bs.model;
  auto& a = m.arch;
  const auto method = r.get<std::uint8_t>();
  if (method > static_cast<std::uint8_t>(nets::Method::Hnerv)) throw ContainerError("unknown method id");
  m.method = static_cast<nets::Method>(method);
  bs.frames = static_cast<int>(r.get<std::uint32_t>());
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  m.posenc.base = r.get<double>();
  m.posenc.n = static_cast<int>(r.get<std::uint32_t>());
  m.posenc.m = static_cast<int>(r.get<std::uint32_t>());
  a.embed_c = static_cast<int>(r.get<std::uint32_t>());
  a.embed_h = static_cast<int>(r.get<std::uint32_t>());
  a.embed_w = static_cast<int>(r.get<std::uint32_t>());
  a.strides.resize(r.get<std::uint8_t>());
  for (auto& s : a.strides) s = static_cast<int>(r.get<std::uint32_t>());
  a.reduction = r.get<double>();
  const auto act = r.get<std::uint8_t>();
  if (act > static_cast<std::uint8_t>(nets::Activation::Silu)) throw ContainerError("unknown activation id");
  a.activation = static_cast<nets::Activation>(act);
  a.kernel = static_cast<int>(r.get<std::uint32_t>());
  a.min_width = static_cast<int>(r.get<std::uint32_t>());
  a.encoder_dims.resize(r.get<std::uint8_t>());
  for (auto& d : a.encoder_dims) d = static_cast<int>(r.get<std::uint32_t>());
  m.decoders.resize(r.get<std::uint8_t>());
  for (auto& d : m.decoders) {
    d.base_width = static_cast<int>(r.get<std::uint32_t>());
    d.mlp_hidden = static_cast<int>(r.get<std::uint32_t>());
  }
  m.keep_ratio = r.get<double>();
  bs.bits_embed = r.get<std::uint8_t>();
  bs.bits_weights = r.get<std::uint8_t>();
  try {
    m.validate();
  } catch (const Error& e) {
    throw ContainerError(std::string("invalid model header: ") + e.what());
  }
  if (bs.frames < 1) throw ContainerError("header has no frames");
  if (static_cast<int>(h) != m.frame_h() || static_cast<int>(w) != m.frame_w()) {
    throw ContainerError("header frame size disagrees with the architecture");
  }
}

void put_table(ByteWriter& w, const HuffmanTable& t) {
  std::vector<std::pair<std::uint16_t, std::uint8_t>> used;
  for (std::size_t s = 0; s < t.lengths.size(); ++s) {
    if (t.lengths[s]) used.emplace_back(static_cast<std::uint16_t>(s), t.lengths[s]);
  }
  const std::size_t dense = t.lengths.size();
  const std::size_t sparse = 4 + 3 * used.size();
  if (dense <= sparse) {
    w.put<std::uint8_t>(0);
    w.put_bytes(t.lengths);
  } else {
    w.put<std::uint8_t>(1);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(used.size()));
    for (auto [s, l] : used) {
      w.put<std::uint16_t>(s);
      w.put<std::uint8_t>(l);
    }
  }
}

HuffmanTable get_table(ByteReader& r, int bits) {
  HuffmanTable t;
  t.alphabet_bits = bits;
  t.lengths.assign(std::size_t{1} << bits, 0);
  const auto mode = r.get<std::uint8_t>();
  if (mode == 0) {
    auto b = r.get_bytes(t.lengths.size());
    std::copy(b.begin(), b.end(), t.lengths.begin());
  } else if (mode == 1) {
    const auto n = r.get<std::uint32_t>();
    if (n > t.lengths.size()) throw ContainerError("sparse Huffman table too long");
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto s = r.get<std::uint16_t>();
      const auto l = r.get<std::uint8_t>();
      if (s >= t.lengths.size()) throw ContainerError("Huffman table symbol outside the alphabet");
      t.lengths[s] = l;
    }
  } else {
    throw ContainerError("unknown Huffman table mode");
  }
  return t;
}

void put_section(ByteWriter& w, const Section& s, SizeBreakdown* sizes) {
  const std::size_t start = w.size();
  w.put<std::uint8_t>(static_cast<std::uint8_t>(s.kind));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(s.index));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(s.bits));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.tensor_count()));
  const bool raw = s.bits == kRawBits;
  for (std::size_t i = 0; i < s.tensor_count(); ++i) {
    const auto& shape = raw ? s.shapes[i] : s.quant[i].shape;
    w.put<std::uint8_t>(static_cast<std::uint8_t>(shape.size()));
    for (int d : shape) w.put<std::uint32_t>(d);
    if (!raw) {
      w.put<float>(s.quant[i].min_val);
      w.put<float>(s.quant[i].scale);
    }
  }
  const std::size_t meta_end = w.size();
  std::uint64_t payload_bits = 0;
  std::vector<std::uint8_t> payload;
  if (raw) {
    ByteWriter pw;
    for (const auto& t : s.raw) {
      for (float v : t) pw.put<float>(v);
    }
    payload = std::move(pw.bytes());
    payload_bits = 8ull * payload.size();
  } else {
    std::vector<std::uint32_t> codes;
    for (const auto& q : s.quant) codes.insert(codes.end(), q.codes.begin(), q.codes.end());
    auto hc = huffman_encode(codes, s.bits);
    put_table(w, hc.table);
    payload = std::move(hc.payload);
    payload_bits = hc.payload_bits;
  }
  const std::size_t table_end = w.size();
  w.put<std::uint64_t>(payload_bits);
  w.put_bytes(payload);
  if (sizes) {
    sizes->section_meta_bytes.push_back(meta_end - start);
    sizes->section_table_bytes.push_back(table_end - meta_end);
    sizes->section_payload_bytes.push_back(w.size() - table_end);
  }
}

Section get_section(ByteReader& r) {
  Section s;
  const auto kind = r.get<std::uint8_t>();
  if (kind > static_cast<std::uint8_t>(SectionKind::Encoder)) throw ContainerError("unknown section kind");
  s.kind = static_cast<SectionKind>(kind);
  s.index = r.get<std::uint8_t>();
  s.bits = r.get<std::uint8_t>();
  if (s.bits != kRawBits && (s.bits < 1 || s.bits > 16)) throw ContainerError("invalid section bit width");
  const bool raw = s.bits == kRawBits;
  const auto count = r.get<std::uint32_t>();
  if (count > r.remaining()) throw ContainerError("section tensor count exceeds the stream");
  std::uint64_t total = 0;
  std::vector<std::vector<int>> shapes(count);
  std::vector<std::pair<float, float>> affine(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    shapes[i].resize(r.get<std::uint8_t>());
    std::uint64_t n = 1;
    for (auto& d : shapes[i]) {
      d = static_cast<int>(r.get<std::uint32_t>());
      n *= static_cast<std::uint64_t>(d);
      if (n > (1ull << 40)) throw ContainerError("tensor too large");
    }
    total += n;
    if (!raw) affine[i] = {r.get<float>(), r.get<float>()};
  }
  HuffmanTable table;
  if (!raw) table = get_table(r, s.bits);
  const auto payload_bits = r.get<std::uint64_t>();
  if (payload_bits > 8ull * r.remaining()) throw ContainerError("payload longer than the stream");
  const auto payload = r.get_bytes((payload_bits + 7) / 8);
  if (raw) {
    if (payload_bits != 32 * total) throw ContainerError("raw section size mismatch");
    ByteReader pr(payload);
    for (std::uint32_t i = 0; i < count; ++i) {
      std::vector<float> v(std::accumulate(shapes[i].begin(), shapes[i].end(), std::size_t{1},
                                           std::multiplies<>()));
      for (auto& x : v) x = pr.get<float>();
      s.raw.push_back(std::move(v));
    }
    s.shapes = std::move(shapes);
  } else {
    if (total > payload_bits) throw ContainerError("payload shorter than its symbol count");
    const auto codes = huffman_decode(table, payload, payload_bits, total);
    std::size_t pos = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
      QuantTensor q;
      q.shape = shapes[i];
      q.bits = s.bits;
      q.min_val = affine[i].first;
      q.scale = affine[i].second;
      const std::size_t n = std::accumulate(q.shape.begin(), q.shape.end(), std::size_t{1}, std::multiplies<>());
      q.codes.assign(codes.begin() + pos, codes.begin() + pos + n);
      pos += n;
      s.quant.push_back(std::move(q));
    }
  }
  return s;
}

Section quantize_component(nets::InrModel<float>& model, const std::string& name, SectionKind kind, int index,
                           int bits) {
  Section s;
  s.kind = kind;
  s.index = index;
  s.bits = bits;
  for (auto* p : model.component_parameters(name)) {
    if (bits == kRawBits) {
      s.shapes.push_back(p->shape);
      s.raw.push_back(p->value);
    } else {
      s.quant.push_back(quantize(p->value, p->shape, bits));
    }
  }
  return s;
}

void load_component(nets::InrModel<float>& model, const std::string& name, const Section& s) {
  auto params = model.component_parameters(name);
  if (params.size() != s.tensor_count()) {
    throw ContainerError("section for " + name + " has " + std::to_string(s.tensor_count()) + " tensors, model has " +
                         std::to_string(params.size()));
  }
  auto values = s.values();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].size() != params[i]->size()) throw ContainerError("tensor size mismatch in " + name);
    params[i]->value = std::move(values[i]);
  }
}

void check_bits(int bits) {
  if (bits != kRawBits && (bits < 1 || bits > 16)) {
    throw ConfigError("bit width must be in [1, 16] (or 32 for raw), got " + std::to_string(bits));
  }
}

}  // namespace

std::vector<std::vector<float>> Section::values() const {
  if (bits == kRawBits) return raw;
  std::vector<std::vector<float>> out;
  for (const auto& q : quant) out.push_back(dequantize(q));
  return out;
}

const Section* Bitstream::find(SectionKind kind, int index) const {
  for (const auto& s : sections) {
    if (s.kind == kind && s.index == index) return &s;
  }
  return nullptr;
}

Bitstream build_bitstream(nets::InrModel<float>& model, const core::VideoTensor& video, const EncodeOptions& opt) {
  check_bits(opt.bits_embed);
  check_bits(opt.bits_weights);
  Bitstream bs;
  bs.model = model.config();
  bs.frames = video.frames();
  bs.bits_embed = opt.bits_embed;
  bs.bits_weights = opt.bits_weights;
  if (model.uses_embedding()) {
    if (!model.has_encoder()) throw ConfigError("model has no encoder to produce embeddings");
    Section s;
    s.kind = SectionKind::Embeddings;
    s.bits = opt.bits_embed;
    for (int i = 0; i < video.frames(); ++i) {
      const auto e = model.embed(nets::encoder_input_for(bs.model, video.frame(i)));
      const std::vector<int> shape{e.c, e.h, e.w};
      if (s.bits == kRawBits) {
        s.shapes.push_back(shape);
        s.raw.push_back(e.data);
      } else {
        s.quant.push_back(quantize(e.data, shape, s.bits));
      }
    }
    bs.sections.push_back(std::move(s));
  }
  const auto names = nets::decoder_names(bs.model.method);
  for (std::size_t i = 0; i < names.size(); ++i) {
    bs.sections.push_back(quantize_component(model, names[i], SectionKind::Decoder, static_cast<int>(i),
                                             opt.bits_weights));
  }
  return bs;
}

std::vector<std::uint8_t> serialize(const Bitstream& bs, SizeBreakdown* sizes) {
  ByteWriter w;
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
  w.put<std::uint8_t>(kVersion);
  w.put<std::uint64_t>(0);  // patched below
  ByteWriter header;
  put_header(header, bs);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
  w.put_bytes(header.bytes());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(bs.sections.size()));
  if (sizes) {
    *sizes = {};
    sizes->header_bytes = w.size();
  }
  for (const auto& s : bs.sections) put_section(w, s, sizes);
  auto& bytes = w.bytes();
  const std::uint64_t total = bytes.size() + 4;
  std::memcpy(bytes.data() + 5, &total, 8);
  const std::uint32_t crc = checksum(bytes);
  w.put<std::uint32_t>(crc);
  if (sizes) {
    sizes->trailer_bytes = 4;
    sizes->total_bytes = total;
  }
  return std::move(w.bytes());
}

Bitstream deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreamble + 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ContainerError("not a DSVR bitstream (bad magic)");
  }
  if (bytes[4] != kVersion) {
    throw ContainerError("unsupported bitstream version " + std::to_string(bytes[4]));
  }
  std::uint64_t total = 0;
  std::memcpy(&total, bytes.data() + 5, 8);
  if (total != bytes.size()) {
    throw ContainerError("length field says " + std::to_string(total) + " bytes, stream has " +
                         std::to_string(bytes.size()));
  }
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (checksum(bytes.first(bytes.size() - 4)) != stored) throw ContainerError("checksum mismatch");

  ByteReader r(bytes.first(bytes.size() - 4));
  r.get_bytes(kPreamble);
  const auto header_len = r.get<std::uint32_t>();
  ByteReader hr(r.get_bytes(header_len));
  Bitstream bs;
  get_header(hr, bs);
  if (hr.remaining() != 0) throw ContainerError("trailing bytes in the config header");
  const auto count = r.get<std::uint32_t>();
  if (count > 64) throw ContainerError("too many sections");
  for (std::uint32_t i = 0; i < count; ++i) bs.sections.push_back(get_section(r));
  if (r.remaining() != 0) throw ContainerError("trailing bytes after the last section");
  return bs;
}

void write_file(const std::filesystem::path& file, std::span<const std::uint8_t> bytes) {
  std::ofstream os(file, std::ios::binary);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("cannot write " + file.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw DataError("cannot read " + file.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::unique_ptr<nets::InrModel<float>> build_decoder_model(const Bitstream& bs) {
  auto model = std::make_unique<nets::InrModel<float>>(bs.model, 0, false);
  const auto names = nets::decoder_names(bs.model.method);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Section* s = bs.find(SectionKind::Decoder, static_cast<int>(i));
    if (!s) throw ContainerError("missing section for decoder " + names[i]);
    load_component(*model, names[i], *s);
  }
  return model;
}

std::vector<Frame> decoded_embeddings(const Bitstream& bs) {
  std::vector<Frame> out;
  if (bs.model.method == nets::Method::Nerv) return out;
  const Section* s = bs.find(SectionKind::Embeddings);
  if (!s) throw ContainerError("missing embedding section");
  if (static_cast<int>(s->tensor_count()) != bs.frames) throw ContainerError("embedding count differs from T");
  const auto& a = bs.model.arch;
  auto values = s->values();
  for (auto& v : values) {
    Frame e(a.embed_c, a.embed_h, a.embed_w);
    if (v.size() != e.size()) throw ContainerError("embedding has the wrong size");
    e.data = std::move(v);
    out.push_back(std::move(e));
  }
  return out;
}

core::VideoTensor decode_video(const Bitstream& bs) {
  auto model = build_decoder_model(bs);
  const auto embeddings = decoded_embeddings(bs);
  std::vector<Frame> frames;
  for (int i = 0; i < bs.frames; ++i) {
    Frame f = model->decode(embeddings.empty() ? nullptr : &embeddings[i], i, bs.frames).recon;
    train::clip_unit(f);
    frames.push_back(std::move(f));
  }
  return core::VideoTensor::from_frames(frames);
}

std::vector<Frame> quantized_reconstruction(nets::InrModel<float>& model, const core::VideoTensor& video,
                                            const EncodeOptions& opt) {
  check_bits(opt.bits_embed);
  check_bits(opt.bits_weights);
  std::vector<std::vector<float>> saved;
  std::vector<nets::Param<float>*> params;
  for (const auto& name : nets::decoder_names(model.method())) {
    for (auto* p : model.component_parameters(name)) params.push_back(p);
  }
  for (auto* p : params) {
    saved.push_back(p->value);
    if (opt.bits_weights != kRawBits) p->value = dequantize(quantize(p->value, p->shape, opt.bits_weights));
  }
  std::vector<Frame> out;
  try {
    for (int i = 0; i < video.frames(); ++i) {
      Frame f;
      if (model.uses_embedding()) {
        auto e = model.embed(nets::encoder_input_for(model.config(), video.frame(i)));
        if (opt.bits_embed != kRawBits) e.data = dequantize(quantize(e.data, {e.c, e.h, e.w}, opt.bits_embed));
        f = model.decode(&e, i, video.frames()).recon;
      } else {
        f = model.decode(nullptr, i, video.frames()).recon;
      }
      train::clip_unit(f);
      out.push_back(std::move(f));
    }
  } catch (...) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = std::move(saved[k]);
    throw;
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = std::move(saved[k]);
  return out;
}

double bpp(std::uint64_t total_bits, int frames, int height, int width) {
  return static_cast<double>(total_bits) /
         (static_cast<double>(frames) * static_cast<double>(height) * static_cast<double>(width));
}

double bpp(std::span<const std::uint8_t> stream, const Bitstream& bs) {
  return bpp(8ull * stream.size(), bs.frames, bs.model.frame_h(), bs.model.frame_w());
}

void save_checkpoint(nets::InrModel<float>& model, int frames, const std::filesystem::path& file) {
  Bitstream bs;
  bs.model = model.config();
  bs.frames = frames;
  bs.bits_embed = kRawBits;
  bs.bits_weights = kRawBits;
  const auto names = nets::decoder_names(bs.model.method);
  for (std::size_t i = 0; i < names.size(); ++i) {
    bs.sections.push_back(
        quantize_component(model, names[i], SectionKind::Decoder, static_cast<int>(i), kRawBits));
  }
  if (model.has_encoder()) {
    bs.sections.push_back(quantize_component(model, "encoder", SectionKind::Encoder, 0, kRawBits));
  }
  write_file(file, serialize(bs));
}

std::unique_ptr<nets::InrModel<float>> load_checkpoint(const std::filesystem::path& file, int* frames) {
  const auto bs = deserialize(read_file(file));
  const Section* enc = bs.find(SectionKind::Encoder);
  auto model = std::make_unique<nets::InrModel<float>>(bs.model, 0, enc != nullptr);
  const auto names = nets::decoder_names(bs.model.method);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Section* s = bs.find(SectionKind::Decoder, static_cast<int>(i));
    if (!s) throw ContainerError("checkpoint lacks decoder " + names[i]);
    load_component(*model, names[i], *s);
  }
  if (enc) load_component(*model, "encoder", *enc);
  if (frames) *frames = bs.frames;
  return model;
}

}  // namespace dsvr::codec
