#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dsvr/cli/config.hpp"
#include "dsvr/metrics/rd.hpp"

namespace dsvr::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDataError = 3,
  kContainerError = 4,
  kDiverged = 5,
};

// Source video named by the [input] section: a PNG directory (centre-cropped
// to the model frame size) or the synthetic clip.
core::VideoTensor load_input(const RunConfig& rc);

// Budget solve for rc.size; returns the model config with widths filled in.
nets::ModelConfig sized_model(const RunConfig& rc, nets::BudgetSolution* solution = nullptr);

struct EncodeResult {
  std::filesystem::path stream;
  long long params = 0;  // transmitted parameter count
  double bpp = 0.0;
  train::TrainReport report;
};

// Solve, build, train, serialise. Writes video.dsvr, train.csv,
// train_summary.txt, checkpoint.bin and config.resolved.ini into `out`.
EncodeResult cmd_encode(const RunConfig& rc, const std::filesystem::path& out, std::ostream& log);

// Same without serialisation: checkpoint.bin, train.csv, train_summary.txt.
train::TrainReport cmd_train(const RunConfig& rc, const std::filesystem::path& out, std::ostream& log);

// Writes T PNG frames into `out`; returns the decoded video.
core::VideoTensor cmd_decode(const std::filesystem::path& stream, const std::filesystem::path& out,
                             std::ostream& log);

// Scores a .dsvr file or a directory of PNG frames against the configured
// input; writes eval.csv into `out`.
train::EvalTable cmd_eval(const RunConfig& rc, const std::filesystem::path& decoded,
                          const std::filesystem::path& out, std::ostream& log);

// One encode/decode/eval pipeline per size, then rd.csv and rd.svg. Failed
// sizes are listed in failures.txt and skipped.
metrics::RDCurve cmd_rd(const RunConfig& rc, const std::vector<long long>& sizes,
                        const std::filesystem::path& out, std::ostream& log, int workers = 1);

// rd.csv -> SVG chart.
void cmd_plot(const std::filesystem::path& rd_csv, const std::filesystem::path& svg, std::ostream& log);

// Writes the configured synthetic clip as PNG frames.
void cmd_synth(const RunConfig& rc, const std::filesystem::path& out, std::ostream& log);

// Per-frame embeddings reshaped to 8x16 tiles, HNeRV baseline next to the
// dual-stream encoder. Models come from checkpoints when given, otherwise
// both are trained at rc.size. Writes features.png and cosine.csv.
struct FeatureStats {
  double hnerv_mean_cosine = 0.0;
  double dual_mean_cosine = 0.0;
};
FeatureStats cmd_viz_features(const RunConfig& rc, const std::filesystem::path& out, std::ostream& log,
                              const std::optional<std::filesystem::path>& hnerv_checkpoint = std::nullopt,
                              const std::optional<std::filesystem::path>& dual_checkpoint = std::nullopt);

// Cosine similarity of flattened tensors; 1 when both are zero.
double cosine_similarity(std::span<const float> a, std::span<const float> b);
// Encoder output for every frame.
std::vector<Frame> frame_embeddings(nets::InrModel<float>& model, const core::VideoTensor& video);
// cos(e_i, e_{i+1}) for i = 0..T-2.
std::vector<double> adjacent_cosines(const std::vector<Frame>& embeddings);

// DSVR_NUM_THREADS, default 1.
int thread_budget();

}  // namespace dsvr::cli
