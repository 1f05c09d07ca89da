#include "dsvr/train/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "dsvr/error.hpp"
#include "dsvr/metrics/metrics.hpp"
#include "dsvr/rng.hpp"

namespace dsvr::train {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be > 0");
  if (!(warmup >= 0.0 && warmup < 1.0)) throw ConfigError("train.warmup must be in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train betas must be in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("train.eps must be > 0");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
}

void TrainReport::write_csv(const std::filesystem::path& file) const {
  std::ofstream os(file);
  if (!os) throw DataError("cannot write " + file.string());
  os << "epoch,loss,psnr\n" << std::setprecision(10);
  for (std::size_t e = 0; e < loss.size(); ++e) {
    os << e + 1 << ',' << loss[e] << ',';
    if (e < psnr.size() && std::isfinite(psnr[e])) os << psnr[e];
    os << '\n';
  }
}

void TrainReport::write_summary(const std::filesystem::path& file) const {
  std::ofstream os(file);
  if (!os) throw DataError("cannot write " + file.string());
  os << std::setprecision(6) << std::fixed;
  os << "epochs: " << loss.size() << '\n';
  os << "final_loss: " << (loss.empty() ? 0.0 : loss.back()) << '\n';
  os << "final_psnr: " << final_psnr << '\n';
  os << "best_epoch: " << best_epoch + 1 << '\n';
  os << "wall_seconds: " << wall_seconds << '\n';
  os << "diverged: " << (diverged ? "true" : "false") << '\n';
  os << "frame_psnr:";
  for (double p : final_frame_psnr) os << ' ' << p;
  os << '\n';
}

template <class S>
double l2_loss(const Tensor<S>& pred, const Tensor<S>& target) {
  require_same_shape(pred, target, "l2_loss");
  if (pred.size() == 0) throw ShapeError("l2_loss on empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
    acc += d * d;
  }
  const double loss = acc / static_cast<double>(pred.size());
  if (!std::isfinite(loss)) throw TrainError("non-finite L2 loss");
  return loss;
}

template double l2_loss<float>(const Tensor<float>&, const Tensor<float>&);
template double l2_loss<double>(const Tensor<double>&, const Tensor<double>&);

double l2_loss(std::span<const Tensor<float>> pred, std::span<const Tensor<float>> target) {
  if (pred.size() != target.size()) throw ShapeError("l2_loss: batch size mismatch");
  if (pred.empty()) throw ShapeError("l2_loss on an empty batch");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double l = l2_loss(pred[i], target[i]);
    acc += l * static_cast<double>(pred[i].size());
    n += pred[i].size();
  }
  return acc / static_cast<double>(n);
}

LearningRateSchedule::LearningRateSchedule(double lr, long long total_steps, double warmup_fraction)
    : lr_(lr), total_(std::max(1LL, total_steps)),
      warmup_(static_cast<long long>(std::llround(warmup_fraction * static_cast<double>(total_steps)))) {}

double LearningRateSchedule::at(long long step) const {
  if (step < warmup_) return lr_ * static_cast<double>(step + 1) / static_cast<double>(warmup_);
  const long long span = total_ - warmup_;
  if (span <= 0) return lr_;
  const double progress = static_cast<double>(step - warmup_) / static_cast<double>(span);
  return 0.5 * lr_ * (1.0 + std::cos(std::numbers::pi * std::clamp(progress, 0.0, 1.0)));
}

template <class S>
Adam<S>::Adam(std::vector<nets::Param<S>*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

template <class S>
void Adam<S>::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = *params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double upd = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      p.value[i] = static_cast<S>(p.value[i] - upd);
    }
  }
}

template <class S>
void Adam<S>::zero_grad() {
  for (auto* p : params_) std::fill(p->grad.begin(), p->grad.end(), S(0));
}

template class Adam<float>;
template class Adam<double>;

namespace {

std::vector<Frame> encoder_inputs(const nets::InrModel<float>& model, const core::VideoTensor& video) {
  std::vector<Frame> out;
  if (!model.uses_embedding()) return out;
  out.reserve(video.frames());
  for (int i = 0; i < video.frames(); ++i) {
    out.push_back(nets::encoder_input_for(model.config(), video.frame(i)));
  }
  return out;
}

void check_shapes(const nets::InrModel<float>& model, const core::VideoTensor& video) {
  if (model.config().frame_h() != video.height() || model.config().frame_w() != video.width()) {
    throw ShapeError("model produces " + std::to_string(model.config().frame_h()) + "x" +
                     std::to_string(model.config().frame_w()) + " frames but the video is " +
                     std::to_string(video.height()) + "x" + std::to_string(video.width()));
  }
}

std::vector<Frame> reconstruct_with(nets::InrModel<float>& model, const core::VideoTensor& video,
                                    const std::vector<Frame>& inputs) {
  std::vector<Frame> out;
  out.reserve(video.frames());
  for (int i = 0; i < video.frames(); ++i) {
    const Frame* in = inputs.empty() ? nullptr : &inputs[i];
    Frame r = model.forward(in, i, video.frames()).recon;
    clip_unit(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

TrainReport train(nets::InrModel<float>& model, const core::VideoTensor& video, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  check_shapes(model, video);
  const auto start = std::chrono::steady_clock::now();
  const int frames = video.frames();
  const int batch = std::min(cfg.batch, frames);
  const long long steps_per_epoch = (frames + batch - 1) / batch;
  const LearningRateSchedule schedule(cfg.lr, steps_per_epoch * cfg.epochs, cfg.warmup);

  auto params = model.parameters();
  Adam<float> opt(params, cfg.beta1, cfg.beta2, cfg.eps);
  const auto inputs = encoder_inputs(model, video);
  std::vector<Frame> targets;
  targets.reserve(frames);
  for (int i = 0; i < frames; ++i) targets.push_back(video.frame(i));

  TrainReport report;
  report.loss.assign(cfg.epochs, 0.0);
  report.psnr.assign(cfg.epochs, std::numeric_limits<double>::quiet_NaN());
  report.final_psnr = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<float>> best;

  Rng rng(cfg.seed);
  std::vector<int> order(frames);
  long long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    if (cfg.shuffle) rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (int b0 = 0; b0 < frames; b0 += batch) {
      const int b1 = std::min(frames, b0 + batch);
      opt.zero_grad();
      for (int k = b0; k < b1; ++k) {
        const int i = order[k];
        const Frame* in = inputs.empty() ? nullptr : &inputs[i];
        auto out = model.forward(in, i, frames);
        const Frame& gt = targets[i];
        double acc = 0.0;
        Frame grad(gt.c, gt.h, gt.w);
        const double scale = 2.0 / (static_cast<double>(gt.size()) * (b1 - b0));
        for (std::size_t j = 0; j < gt.size(); ++j) {
          const double d = static_cast<double>(out.recon.data[j]) - gt.data[j];
          acc += d * d;
          grad.data[j] = static_cast<float>(scale * d);
        }
        const double loss = acc / static_cast<double>(gt.size());
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch + 1 << ", step " << step + 1 << " (frame " << i << ")";
          throw TrainError(msg.str());
        }
        epoch_loss += loss;
        model.backward(grad);
      }
      opt.step(schedule.at(step));
      ++step;
    }
    report.loss[epoch] = epoch_loss / frames;

    const bool last = epoch + 1 == cfg.epochs;
    if (last || (epoch + 1) % cfg.eval_every == 0) {
      const auto recon = reconstruct_with(model, video, inputs);
      const auto table = evaluate_frames(recon, video, false);
      report.psnr[epoch] = table.mean_psnr;
      if (!std::isfinite(table.mean_psnr)) {
        throw TrainError("non-finite evaluation PSNR at epoch " + std::to_string(epoch + 1));
      }
      if (table.mean_psnr > report.final_psnr) {
        report.final_psnr = table.mean_psnr;
        report.best_epoch = epoch;
        report.final_frame_psnr.clear();
        for (const auto& row : table.rows) report.final_frame_psnr.push_back(row.psnr);
        best.clear();
        for (auto* p : params) best.push_back(p->value);
      }
    }
    if (on_epoch) on_epoch(epoch, report.loss[epoch], report.psnr[epoch]);
  }

  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
  report.diverged = report.final_psnr < kDivergencePsnr;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void EvalTable::write_csv(const std::filesystem::path& file) const {
  std::ofstream os(file);
  if (!os) throw DataError("cannot write " + file.string());
  os << "frame,psnr,ms_ssim\n" << std::setprecision(10);
  for (const auto& r : rows) os << r.frame << ',' << r.psnr << ',' << r.ms_ssim << '\n';
}

EvalTable evaluate_frames(const std::vector<Frame>& recon, const core::VideoTensor& reference,
                          bool with_ms_ssim) {
  if (static_cast<int>(recon.size()) != reference.frames()) {
    throw ShapeError("evaluate: " + std::to_string(recon.size()) + " frames vs " +
                     std::to_string(reference.frames()));
  }
  EvalTable table;
  for (int i = 0; i < reference.frames(); ++i) {
    const Frame gt = reference.frame(i);
    FrameMetrics row;
    row.frame = i;
    row.psnr = metrics::psnr(recon[i], gt);
    row.ms_ssim = with_ms_ssim ? metrics::ms_ssim(recon[i], gt) : 0.0;
    table.mean_psnr += row.psnr;
    table.mean_ms_ssim += row.ms_ssim;
    table.rows.push_back(row);
  }
  if (!table.rows.empty()) {
    table.mean_psnr /= static_cast<double>(table.rows.size());
    table.mean_ms_ssim /= static_cast<double>(table.rows.size());
  }
  return table;
}

std::vector<Frame> reconstruct(nets::InrModel<float>& model, const core::VideoTensor& video) {
  check_shapes(model, video);
  return reconstruct_with(model, video, encoder_inputs(model, video));
}

EvalTable evaluate(nets::InrModel<float>& model, const core::VideoTensor& video, bool with_ms_ssim) {
  return evaluate_frames(reconstruct(model, video), video, with_ms_ssim);
}

void clip_unit(Frame& f) {
  for (auto& v : f.data) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace dsvr::train
