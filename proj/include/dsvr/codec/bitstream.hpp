#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "dsvr/codec/quant.hpp"
#include "dsvr/core/video.hpp"
#include "dsvr/nets/model.hpp"

namespace dsvr::codec {

inline constexpr std::uint8_t kVersion = 1;
// Section bit width meaning "raw float32, no quantisation or entropy coding".
inline constexpr int kRawBits = 32;

enum class SectionKind : std::uint8_t { Embeddings = 0, Decoder = 1, Encoder = 2 };

struct Section {
  SectionKind kind = SectionKind::Decoder;
  int index = 0;  // decoder position in decoder_names()
  int bits = 8;
  std::vector<QuantTensor> quant;        // bits <= 16
  std::vector<std::vector<int>> shapes;  // raw sections
  std::vector<std::vector<float>> raw;

  std::size_t tensor_count() const { return bits == kRawBits ? raw.size() : quant.size(); }
  std::vector<std::vector<float>> values() const;
};

struct Bitstream {
  nets::ModelConfig model;
  int frames = 0;
  int bits_embed = 6;
  int bits_weights = 8;
  std::vector<Section> sections;  // embeddings, decoders in order, then the encoder if present

  const Section* find(SectionKind kind, int index = 0) const;
};

struct EncodeOptions {
  int bits_embed = 6;
  int bits_weights = 8;
};

// Byte counts of one serialised stream; total = 8 * file size.
struct SizeBreakdown {
  std::uint64_t header_bytes = 0;   // magic, version, length, config header, section count
  std::vector<std::uint64_t> section_meta_bytes;   // kind/bits/shapes/min/scale
  std::vector<std::uint64_t> section_table_bytes;  // Huffman table
  std::vector<std::uint64_t> section_payload_bytes;
  std::uint64_t trailer_bytes = 0;
  std::uint64_t total_bytes = 0;
};

// Runs the encoder on every frame and quantises embeddings and decoder
// weights. The encoder itself is not included.
Bitstream build_bitstream(nets::InrModel<float>& model, const core::VideoTensor& video,
                          const EncodeOptions& opt = {});

std::vector<std::uint8_t> serialize(const Bitstream& bs, SizeBreakdown* sizes = nullptr);
// Throws ContainerError on bad magic, version, length or checksum.
Bitstream deserialize(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& file, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& file);

// Decoder-only model holding the dequantised weights.
std::unique_ptr<nets::InrModel<float>> build_decoder_model(const Bitstream& bs);
// Dequantised per-frame embeddings (empty for NeRV).
std::vector<Frame> decoded_embeddings(const Bitstream& bs);

// Standalone reconstruction, clipped to [0, 1].
core::VideoTensor decode_video(const Bitstream& bs);

// Same output decode_video produces, computed from a live model by fake
// quantisation.
std::vector<Frame> quantized_reconstruction(nets::InrModel<float>& model, const core::VideoTensor& video,
                                            const EncodeOptions& opt = {});

double bpp(std::uint64_t total_bits, int frames, int height, int width);
double bpp(std::span<const std::uint8_t> stream, const Bitstream& bs);

// Full-precision checkpoint, encoder included, in the same container.
void save_checkpoint(nets::InrModel<float>& model, int frames, const std::filesystem::path& file);
std::unique_ptr<nets::InrModel<float>> load_checkpoint(const std::filesystem::path& file, int* frames = nullptr);

}  // namespace dsvr::codec
