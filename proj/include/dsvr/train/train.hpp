#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "dsvr/core/video.hpp"
#include "dsvr/nets/model.hpp"

namespace dsvr::train {

struct TrainConfig {
  int epochs = 300;
  int batch = 1;            // frames per optimiser step
  double lr = 1e-3;
  double warmup = 0.1;      // fraction of steps with linear warmup
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int eval_every = 10;      // the last epoch is always evaluated
  bool shuffle = true;
  std::uint64_t seed = 0;   // frame order; model init is seeded separately

  void validate() const;
};

inline constexpr double kDivergencePsnr = 15.0;

struct TrainReport {
  std::vector<double> loss;   // mean training MSE per epoch
  std::vector<double> psnr;   // evaluation PSNR, NaN on epochs without evaluation
  std::vector<double> final_frame_psnr;
  double final_psnr = 0.0;    // max over evaluated epochs
  int best_epoch = -1;
  double wall_seconds = 0.0;
  bool diverged = false;      // final_psnr < kDivergencePsnr

  // epoch,loss,psnr
  void write_csv(const std::filesystem::path& file) const;
  void write_summary(const std::filesystem::path& file) const;
};

// Mean of squared differences. Throws TrainError on a non-finite result.
template <class S>
double l2_loss(const Tensor<S>& pred, const Tensor<S>& target);
double l2_loss(std::span<const Tensor<float>> pred, std::span<const Tensor<float>> target);

// Adam with linear warmup then cosine decay to zero.
class LearningRateSchedule {
 public:
  LearningRateSchedule(double lr, long long total_steps, double warmup_fraction);
  double at(long long step) const;

 private:
  double lr_;
  long long total_;
  long long warmup_;
};

template <class S>
class Adam {
 public:
  Adam(std::vector<nets::Param<S>*> params, double beta1, double beta2, double eps);
  void step(double lr);
  void zero_grad();

 private:
  std::vector<nets::Param<S>*> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  long long t_ = 0;
};

using EpochCallback = std::function<void(int epoch, double loss, double psnr)>;

// Overfits `model` to `video`; on return the model holds the weights of the
// best evaluated epoch.
TrainReport train(nets::InrModel<float>& model, const core::VideoTensor& video,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct FrameMetrics {
  int frame = 0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
};

struct EvalTable {
  std::vector<FrameMetrics> rows;
  double mean_psnr = 0.0;
  double mean_ms_ssim = 0.0;

  // frame,psnr,ms_ssim
  void write_csv(const std::filesystem::path& file) const;
};

EvalTable evaluate_frames(const std::vector<Frame>& recon, const core::VideoTensor& reference,
                          bool with_ms_ssim = true);

// Runs the model on every frame, clips to [0, 1] and scores it.
EvalTable evaluate(nets::InrModel<float>& model, const core::VideoTensor& video,
                   bool with_ms_ssim = true);

// Clipped reconstructions of every frame.
std::vector<Frame> reconstruct(nets::InrModel<float>& model, const core::VideoTensor& video);

void clip_unit(Frame& f);

}  // namespace dsvr::train
