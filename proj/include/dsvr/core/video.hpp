#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsvr/tensor.hpp"

namespace dsvr::core {

struct Rational {
  int num = 0;
  int den = 1;
};

// Normalised frame time t = (i+1)/T, always in (0, 1].
class FrameIndexNorm {
 public:
  explicit FrameIndexNorm(double t);
  double value() const { return t_; }

 private:
  double t_;
};

// T x C x H x W frames with values in [0, 1]. Immutable after construction.
class VideoTensor {
 public:
  static constexpr int kChannels = 3;

  VideoTensor(int frames, int height, int width, std::vector<float> data, std::string name = {},
              std::optional<Rational> fps = std::nullopt);
  static VideoTensor from_frames(const std::vector<Frame>& frames, std::string name = {});

  int frames() const { return t_; }
  int channels() const { return kChannels; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::size_t frame_size() const { return static_cast<std::size_t>(kChannels) * h_ * w_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(t_) * h_ * w_; }

  std::span<const float> data() const { return data_; }
  std::span<const float> frame_span(int i) const;
  Frame frame(int i) const;

  const std::string& name() const { return name_; }
  const std::optional<Rational>& fps() const { return fps_; }

  // Throws ShapeError unless H and W are multiples of `factor`.
  void require_divisible(int factor_h, int factor_w) const;

 private:
  int t_;
  int h_;
  int w_;
  std::vector<float> data_;
  std::string name_;
  std::optional<Rational> fps_;
};

struct CropSpec {
  int height = 0;
  int width = 0;
  // Top-left corner; centre crop when unset.
  std::optional<int> offset_y;
  std::optional<int> offset_x;
};

// Loads every PNG in `dir` in lexicographic order.
VideoTensor load_video_dir(const std::filesystem::path& dir,
                           const std::optional<CropSpec>& crop = std::nullopt,
                           std::optional<int> limit = std::nullopt);

// Writes frames as 8-bit PNG named %05d.png. Returns the number written.
int save_frames(const VideoTensor& video, const std::filesystem::path& dir);

// Raw float32 cache: "DSVRVID0", T C H W as u32 LE, then row-major data.
void save_video_cache(const VideoTensor& video, const std::filesystem::path& file);
VideoTensor load_video_cache(const std::filesystem::path& file);

// 8-bit RGB PNG <-> [0,1] frame.
Frame read_png(const std::filesystem::path& file);
void write_png(const std::filesystem::path& file, const Frame& frame);

}  // namespace dsvr::core
