#include "dsvr/core/video.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace dsvr::core {

namespace fs = std::filesystem;

FrameIndexNorm::FrameIndexNorm(double t) : t_(t) {
  if (!(t > 0.0 && t <= 1.0)) throw DataError("normalised frame index must lie in (0, 1]");
}

VideoTensor::VideoTensor(int frames, int height, int width, std::vector<float> data,
                         std::string name, std::optional<Rational> fps)
    : t_(frames), h_(height), w_(width), data_(std::move(data)), name_(std::move(name)),
      fps_(fps) {
  if (t_ < 1) throw DataError("video needs at least one frame");
  if (h_ < 1 || w_ < 1) throw DataError("video frames must be non-empty");
  if (data_.size() != static_cast<std::size_t>(t_) * frame_size()) {
    throw ShapeError("video data size does not match T x 3 x H x W");
  }
  for (float v : data_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw DataError("video values must be finite and within [0, 1]");
    }
  }
}

VideoTensor VideoTensor::from_frames(const std::vector<Frame>& frames, std::string name) {
  if (frames.empty()) throw DataError("video needs at least one frame");
  const Frame& first = frames.front();
  if (first.c != kChannels) throw ShapeError("frames must have 3 channels");
  std::vector<float> data;
  data.reserve(frames.size() * first.size());
  for (const Frame& f : frames) {
    require_same_shape(f, first, "VideoTensor::from_frames");
    data.insert(data.end(), f.data.begin(), f.data.end());
  }
  return VideoTensor(static_cast<int>(frames.size()), first.h, first.w, std::move(data),
                     std::move(name));
}

std::span<const float> VideoTensor::frame_span(int i) const {
  if (i < 0 || i >= t_) throw DataError("frame index out of range");
  return std::span<const float>(data_).subspan(static_cast<std::size_t>(i) * frame_size(),
                                               frame_size());
}

Frame VideoTensor::frame(int i) const {
  auto s = frame_span(i);
  Frame f;
  f.c = kChannels;
  f.h = h_;
  f.w = w_;
  f.data.assign(s.begin(), s.end());
  return f;
}

void VideoTensor::require_divisible(int factor_h, int factor_w) const {
  if (factor_h <= 0 || factor_w <= 0 || h_ % factor_h != 0 || w_ % factor_w != 0) {
    throw ShapeError("frame size " + std::to_string(h_) + "x" + std::to_string(w_) +
                     " is not divisible by " + std::to_string(factor_h) + "x" +
                     std::to_string(factor_w));
  }
}

Frame read_png(const fs::path& file) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, file.string().c_str())) {
    throw DataError("cannot read " + file.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode " + file.string() + ": " + image.message);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  Frame f(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        f.at(c, y, x) = buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0f;
      }
    }
  }
  return f;
}

void write_png(const fs::path& file, const Frame& frame) {
  if (frame.c != 3 && frame.c != 1) throw ShapeError("PNG output needs 1 or 3 channels");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.w);
  image.height = static_cast<png_uint_32>(frame.h);
  image.format = frame.c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  for (int y = 0; y < frame.h; ++y) {
    for (int x = 0; x < frame.w; ++x) {
      for (int c = 0; c < frame.c; ++c) {
        const float v = std::clamp(frame.at(c, y, x), 0.0f, 1.0f);
        buffer[(static_cast<std::size_t>(y) * frame.w + x) * frame.c + c] =
            static_cast<png_byte>(std::lround(v * 255.0f));
      }
    }
  }
  if (!png_image_write_to_file(&image, file.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    throw DataError("cannot write " + file.string() + ": " + image.message);
  }
}

namespace {

Frame crop_frame(const Frame& src, const CropSpec& crop) {
  if (crop.height <= 0 || crop.width <= 0) throw ConfigError("crop size must be positive");
  if (crop.height > src.h || crop.width > src.w) {
    throw DataError("crop " + std::to_string(crop.height) + "x" + std::to_string(crop.width) +
                    " is larger than source " + std::to_string(src.h) + "x" +
                    std::to_string(src.w));
  }
  const int oy = crop.offset_y.value_or((src.h - crop.height) / 2);
  const int ox = crop.offset_x.value_or((src.w - crop.width) / 2);
  if (oy < 0 || ox < 0 || oy + crop.height > src.h || ox + crop.width > src.w) {
    throw DataError("crop window falls outside the source frame");
  }
  Frame out(src.c, crop.height, crop.width);
  for (int c = 0; c < src.c; ++c) {
    for (int y = 0; y < crop.height; ++y) {
      const float* row = &src.data[(static_cast<std::size_t>(c) * src.h + oy + y) * src.w + ox];
      std::copy(row, row + crop.width, &out.at(c, y, 0));
    }
  }
  return out;
}

}  // namespace

VideoTensor load_video_dir(const fs::path& dir, const std::optional<CropSpec>& crop,
                           std::optional<int> limit) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("no PNG frames in " + dir.string());
  std::sort(files.begin(), files.end());
  if (limit) {
    if (*limit < 1) throw ConfigError("frame limit must be at least 1");
    if (static_cast<std::size_t>(*limit) < files.size()) files.resize(*limit);
  }

  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& file : files) {
    frames.push_back(read_png(file));
  }
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!frames[i].same_shape(frames[0])) {
      throw DataError("inconsistent frame size in " + files[i].string() + ": " +
                      frames[i].shape_string() + " vs " + frames[0].shape_string());
    }
  }
  if (crop) {
    for (auto& f : frames) f = crop_frame(f, *crop);
  }
  return VideoTensor::from_frames(frames, dir.filename().string());
}

int save_frames(const VideoTensor& video, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  for (int i = 0; i < video.frames(); ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "%05d.png", i);
    try {
      write_png(dir / name, video.frame(i));
    } catch (const DataError& e) {
      throw DataError("frame " + std::to_string(i) + ": " + e.what());
    }
  }
  return video.frames();
}

namespace {

constexpr char kCacheMagic[8] = {'D', 'S', 'V', 'R', 'V', 'I', 'D', '0'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw DataError("truncated video cache");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_video_cache(const VideoTensor& video, const fs::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw DataError("cannot open " + file.string());
  os.write(kCacheMagic, sizeof kCacheMagic);
  put_u32(os, video.frames());
  put_u32(os, video.channels());
  put_u32(os, video.height());
  put_u32(os, video.width());
  for (float v : video.data()) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
  }
  if (!os) throw DataError("write failed for " + file.string());
}

VideoTensor load_video_cache(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw DataError("cannot open " + file.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCacheMagic, 8) != 0) {
    throw DataError(file.string() + " is not a video cache");
  }
  const auto t = get_u32(is);
  const auto c = get_u32(is);
  const auto h = get_u32(is);
  const auto w = get_u32(is);
  if (c != 3) throw DataError("video cache must have 3 channels");
  std::vector<float> data(static_cast<std::size_t>(t) * c * h * w);
  for (auto& v : data) {
    const std::uint32_t bits = get_u32(is);
    std::memcpy(&v, &bits, 4);
  }
  return VideoTensor(static_cast<int>(t), static_cast<int>(h), static_cast<int>(w),
                     std::move(data), file.stem().string());
}

}  // namespace dsvr::core
