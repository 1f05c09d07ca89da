#include "dsvr/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "dsvr/codec/bitstream.hpp"
#include "dsvr/error.hpp"
#include "dsvr/metrics/metrics.hpp"

namespace dsvr::cli {

namespace fs = std::filesystem;

core::VideoTensor load_input(const RunConfig& rc) {
  if (rc.input.dir.empty()) {
    auto video = core::synth_video(rc.input.synth);
    if (rc.input.limit > 0 && rc.input.limit < video.frames()) {
      std::vector<Frame> frames;
      for (int i = 0; i < rc.input.limit; ++i) frames.push_back(video.frame(i));
      return core::VideoTensor::from_frames(frames, video.name());
    }
    return video;
  }
  core::CropSpec crop{rc.model.arch.frame_h(), rc.model.arch.frame_w(), std::nullopt, std::nullopt};
  std::optional<int> limit;
  if (rc.input.limit > 0) limit = rc.input.limit;
  return core::load_video_dir(rc.input.dir, crop, limit);
}

nets::ModelConfig sized_model(const RunConfig& rc, nets::BudgetSolution* solution) {
  auto sol = nets::solve_budget(rc.size, rc.ratio, rc.model, rc.tolerance);
  if (solution) *solution = sol;
  return nets::apply_budget(sol, rc.model);
}

namespace {

void log_budget(const nets::BudgetSolution& sol, std::ostream& log) {
  log << "budget " << sol.target_total << " -> " << sol.realized_total() << " params";
  for (std::size_t i = 0; i < sol.names.size(); ++i) {
    log << "  " << sol.names[i] << "=" << sol.realized[i] << " (base " << sol.widths[i].base_width;
    if (sol.widths[i].mlp_hidden) log << ", mlp " << sol.widths[i].mlp_hidden;
    log << ")";
  }
  log << '\n';
}

struct Trained {
  std::unique_ptr<nets::InrModel<float>> model;
  train::TrainReport report;
};

Trained train_model(const RunConfig& rc, const core::VideoTensor& video, const fs::path& out, std::ostream& log) {
  nets::BudgetSolution sol;
  const auto cfg = sized_model(rc, &sol);
  log_budget(sol, log);
  auto model = std::make_unique<nets::InrModel<float>>(cfg, rc.seed);
  const int every = std::max(1, rc.train.epochs / 10);
  auto report = train::train(*model, video, rc.train, [&](int epoch, double loss, double psnr) {
    if ((epoch + 1) % every == 0 || epoch + 1 == rc.train.epochs) {
      log << "epoch " << epoch + 1 << "/" << rc.train.epochs << "  loss " << std::setprecision(6) << loss;
      if (std::isfinite(psnr)) log << "  psnr " << std::setprecision(4) << std::fixed << psnr << std::defaultfloat;
      log << '\n';
    }
  });
  report.write_csv(out / "train.csv");
  report.write_summary(out / "train_summary.txt");
  codec::save_checkpoint(*model, video.frames(), out / "checkpoint.bin");
  log << "best psnr " << std::fixed << std::setprecision(3) << report.final_psnr << std::defaultfloat
      << " dB at epoch " << report.best_epoch + 1 << (report.diverged ? "  [diverged]" : "") << '\n';
  return {std::move(model), std::move(report)};
}

}  // namespace

train::TrainReport cmd_train(const RunConfig& rc, const fs::path& out, std::ostream& log) {
  rc.write(out);
  const auto video = load_input(rc);
  return train_model(rc, video, out, log).report;
}

EncodeResult cmd_encode(const RunConfig& rc, const fs::path& out, std::ostream& log) {
  rc.write(out);
  const auto video = load_input(rc);
  auto trained = train_model(rc, video, out, log);
  const auto bs = codec::build_bitstream(*trained.model, video, rc.codec);
  codec::SizeBreakdown sizes;
  const auto bytes = codec::serialize(bs, &sizes);
  EncodeResult r;
  r.stream = out / "video.dsvr";
  codec::write_file(r.stream, bytes);
  r.params = trained.model->ledger().transmitted();
  r.bpp = codec::bpp(bytes, bs);
  r.report = std::move(trained.report);
  log << "wrote " << r.stream.string() << "  " << bytes.size() << " bytes, " << std::setprecision(5) << r.bpp
      << " bpp\n";
  return r;
}

core::VideoTensor cmd_decode(const fs::path& stream, const fs::path& out, std::ostream& log) {
  const auto bs = codec::deserialize(codec::read_file(stream));
  auto video = codec::decode_video(bs);
  fs::create_directories(out);
  const int n = core::save_frames(video, out);
  log << "decoded " << n << " frames of " << video.height() << "x" << video.width() << " into " << out.string()
      << '\n';
  return video;
}

train::EvalTable cmd_eval(const RunConfig& rc, const fs::path& decoded, const fs::path& out, std::ostream& log) {
  const auto reference = load_input(rc);
  std::vector<Frame> frames;
  if (fs::is_directory(decoded)) {
    const auto v = core::load_video_dir(decoded);
    for (int i = 0; i < v.frames(); ++i) frames.push_back(v.frame(i));
  } else {
    const auto v = codec::decode_video(codec::deserialize(codec::read_file(decoded)));
    for (int i = 0; i < v.frames(); ++i) frames.push_back(v.frame(i));
  }
  if (!frames.empty() && (frames[0].h != reference.height() || frames[0].w != reference.width())) {
    throw ShapeError("decoded frames are " + frames[0].shape_string() + ", reference frames are 3x" +
                     std::to_string(reference.height()) + "x" + std::to_string(reference.width()));
  }
  const auto table = train::evaluate_frames(frames, reference);
  fs::create_directories(out);
  table.write_csv(out / "eval.csv");
  log << std::fixed << std::setprecision(4) << "mean psnr " << table.mean_psnr << " dB  mean ms-ssim "
      << table.mean_ms_ssim << std::defaultfloat << '\n';
  return table;
}

metrics::RDCurve cmd_rd(const RunConfig& rc, const std::vector<long long>& sizes, const fs::path& out,
                        std::ostream& log, int workers) {
  if (sizes.empty()) throw ConfigError("rd needs at least one size");
  rc.write(out);
  const auto video = load_input(rc);

  struct Outcome {
    std::optional<metrics::RDPoint> point;
    std::string log;
    std::string error;
  };
  auto run_one = [&](long long size) {
    Outcome o;
    std::ostringstream slog;
    try {
      RunConfig sub = rc;
      sub.size = size;
      const fs::path dir = out / ("size_" + std::to_string(size));
      sub.write(dir);
      auto trained = train_model(sub, video, dir, slog);
      const auto bs = codec::build_bitstream(*trained.model, video, sub.codec);
      const auto bytes = codec::serialize(bs);
      codec::write_file(dir / "video.dsvr", bytes);
      const auto decoded = codec::decode_video(codec::deserialize(bytes));
      std::vector<Frame> frames;
      for (int i = 0; i < decoded.frames(); ++i) frames.push_back(decoded.frame(i));
      const auto table = train::evaluate_frames(frames, video);
      table.write_csv(dir / "eval.csv");
      o.point = metrics::RDPoint{trained.model->ledger().transmitted(), codec::bpp(bytes, bs), table.mean_psnr,
                                 table.mean_ms_ssim};
      slog << "size " << size << ": " << o.point->bpp << " bpp, " << o.point->psnr << " dB, ms-ssim "
           << o.point->ms_ssim << '\n';
    } catch (const std::exception& e) {
      o.error = e.what();
      slog << "size " << size << " failed: " << e.what() << '\n';
    }
    o.log = slog.str();
    return o;
  };

  std::vector<Outcome> outcomes(sizes.size());
  workers = std::max(1, workers);
  for (std::size_t b = 0; b < sizes.size(); b += workers) {
    std::vector<std::future<Outcome>> jobs;
    const std::size_t e = std::min(sizes.size(), b + workers);
    for (std::size_t i = b; i < e; ++i) {
      jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run_one, sizes[i]));
    }
    for (std::size_t i = b; i < e; ++i) {
      outcomes[i] = jobs[i - b].get();
      log << outcomes[i].log << std::flush;
    }
  }

  std::vector<metrics::RDPoint> points;
  std::ofstream failures(out / "failures.txt");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (outcomes[i].point) points.push_back(*outcomes[i].point);
    else failures << sizes[i] << ": " << outcomes[i].error << '\n';
  }
  metrics::RDCurve curve;
  if (points.size() >= 2) {
    curve = metrics::aggregate_rd(points);
  } else {
    curve.points = points;
  }
  curve.write_csv(out / "rd.csv");
  metrics::write_rd_svg(curve.points, out / "rd.svg", "PSNR vs bpp (" + nets::to_string(rc.method) + ")");
  log << curve.summary() << '\n';
  return curve;
}

void cmd_plot(const fs::path& rd_csv, const fs::path& svg, std::ostream& log) {
  const auto points = metrics::read_rd_csv(rd_csv);
  metrics::write_rd_svg(points, svg, "PSNR vs bpp");
  log << "wrote " << svg.string() << " (" << points.size() << " points)\n";
}

void cmd_synth(const RunConfig& rc, const fs::path& out, std::ostream& log) {
  rc.write(out);
  const auto video = core::synth_video(rc.input.synth);
  const int n = core::save_frames(video, out);
  log << "wrote " << n << " synthetic frames into " << out.string() << '\n';
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: size mismatch");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0.0 && bb == 0.0) return 1.0;
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

std::vector<Frame> frame_embeddings(nets::InrModel<float>& model, const core::VideoTensor& video) {
  if (!model.has_encoder()) throw ConfigError("model has no encoder");
  std::vector<Frame> out;
  for (int i = 0; i < video.frames(); ++i) {
    out.push_back(model.embed(nets::encoder_input_for(model.config(), video.frame(i))));
  }
  return out;
}

std::vector<double> adjacent_cosines(const std::vector<Frame>& embeddings) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < embeddings.size(); ++i) {
    out.push_back(cosine_similarity(embeddings[i].data, embeddings[i + 1].data));
  }
  return out;
}

FeatureStats cmd_viz_features(const RunConfig& rc, const fs::path& out, std::ostream& log,
                              const std::optional<fs::path>& hnerv_checkpoint,
                              const std::optional<fs::path>& dual_checkpoint) {
  rc.write(out);
  const auto video = load_input(rc);
  auto obtain = [&](nets::Method m, const std::optional<fs::path>& ckpt) {
    if (ckpt) {
      auto model = codec::load_checkpoint(*ckpt);
      if (model->method() != m) throw ConfigError(ckpt->string() + " is not a " + nets::to_string(m) + " checkpoint");
      return model;
    }
    RunConfig sub = rc;
    sub.method = m;
    sub.model.method = m;
    sub.ratio = nets::default_budget_ratio(m);
    const fs::path dir = out / nets::to_string(m);
    fs::create_directories(dir);
    log << "training " << nets::to_string(m) << '\n';
    return train_model(sub, video, dir, log).model;
  };
  auto hnerv = obtain(nets::Method::Hnerv, hnerv_checkpoint);
  auto dual = obtain(nets::Method::Dual, dual_checkpoint);
  const auto eh = frame_embeddings(*hnerv, video);
  const auto ed = frame_embeddings(*dual, video);
  const auto ch = adjacent_cosines(eh);
  const auto cd = adjacent_cosines(ed);

  std::ofstream csv(out / "cosine.csv");
  csv << "frame_a,frame_b,hnerv,dual\n" << std::setprecision(10);
  FeatureStats stats;
  for (std::size_t i = 0; i < ch.size(); ++i) {
    csv << i << ',' << i + 1 << ',' << ch[i] << ',' << cd[i] << '\n';
    stats.hnerv_mean_cosine += ch[i] / static_cast<double>(ch.size());
    stats.dual_mean_cosine += cd[i] / static_cast<double>(cd.size());
  }

  // Tiles: one row per frame, HNeRV left and dual right, each embedding
  // reshaped to 8x16 and min-max normalised per method.
  constexpr int kTileH = 8, kTileW = 16, kZoom = 4, kGap = 4;
  const int rows = video.frames();
  Frame grid(3, rows * (kTileH * kZoom + kGap) + kGap, 2 * (kTileW * kZoom + kGap) + kGap, 1.0f);
  auto draw = [&](const std::vector<Frame>& emb, int column) {
    float lo = emb[0].data[0], hi = lo;
    for (const auto& e : emb) {
      for (float v : e.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const float span = hi > lo ? hi - lo : 1.0f;
    for (int r = 0; r < rows; ++r) {
      const auto& d = emb[r].data;
      const int n = std::min<int>(static_cast<int>(d.size()), kTileH * kTileW);
      for (int k = 0; k < n; ++k) {
        const float v = (d[k] - lo) / span;
        const int y0 = kGap + r * (kTileH * kZoom + kGap) + (k / kTileW) * kZoom;
        const int x0 = kGap + column * (kTileW * kZoom + kGap) + (k % kTileW) * kZoom;
        for (int c = 0; c < 3; ++c) {
          for (int dy = 0; dy < kZoom; ++dy) {
            for (int dx = 0; dx < kZoom; ++dx) grid.at(c, y0 + dy, x0 + dx) = v;
          }
        }
      }
    }
  };
  draw(eh, 0);
  draw(ed, 1);
  core::write_png(out / "features.png", grid);
  log << std::fixed << std::setprecision(4) << "mean adjacent cosine: hnerv " << stats.hnerv_mean_cosine
      << "  dual " << stats.dual_mean_cosine << std::defaultfloat << '\n';
  return stats;
}

int thread_budget() {
  const char* env = std::getenv("DSVR_NUM_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError(std::string("DSVR_NUM_THREADS must be a positive integer, got '") + env + "'");
  return static_cast<int>(n);
}

}  // namespace dsvr::cli
