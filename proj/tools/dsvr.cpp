// dsvr: train, encode, decode and evaluate dual-stream video representations.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsvr/cli/commands.hpp"
#include "dsvr/error.hpp"

namespace fs = std::filesystem;
using namespace dsvr;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> method;
  std::optional<std::string> size;
  std::optional<std::string> epochs;
  std::optional<std::string> seed;
  std::optional<std::string> keep_ratio;
  std::optional<std::string> bits_embed;
  std::optional<std::string> bits_weights;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool need_out = true) {
  cmd->add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "Override, section.key=value (repeatable)");
  cmd->add_option("--method", c.method, "dual | nerv | hnerv");
  cmd->add_option("--size", c.size, "Transmitted parameter budget");
  cmd->add_option("--epochs", c.epochs, "Training epochs");
  cmd->add_option("--seed", c.seed, "Seed for initialisation and frame order");
  cmd->add_option("--keep-ratio", c.keep_ratio, "High-frequency keep ratio of the spectral split");
  cmd->add_option("--bits-embed", c.bits_embed, "Embedding quantisation bits");
  cmd->add_option("--bits-weights", c.bits_weights, "Decoder weight quantisation bits");
  auto* o = cmd->add_option("--out", c.out, "Output directory");
  if (need_out) o->required();
}

cli::RunConfig resolve(const Common& c) {
  cli::ConfigStore store;
  if (!c.config.empty()) store.load_file(c.config);
  for (const auto& s : c.sets) store.set_assignment(s);
  auto flag = [&](const std::optional<std::string>& v, const char* section, const char* key) {
    if (v) store.set(section, key, *v);
  };
  flag(c.method, "run", "method");
  flag(c.size, "run", "size");
  flag(c.epochs, "train", "epochs");
  flag(c.seed, "run", "seed");
  flag(c.keep_ratio, "freqsplit", "keep_ratio");
  flag(c.bits_embed, "codec", "bits_embed");
  flag(c.bits_weights, "codec", "bits_weights");
  return cli::resolve(store);
}

std::vector<long long> parse_sizes(const std::string& text) {
  std::vector<long long> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad size '" + item + "'");
    }
    if (pos != item.size() || v < 1) throw ConfigError("bad size '" + item + "'");
    sizes.push_back(static_cast<long long>(std::llround(v)));
  }
  return sizes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-stream neural video representation codec"};
  app.require_subcommand(1);

  Common enc, trn, dec, ev, rd, viz, syn, plt;
  auto* c_encode = app.add_subcommand("encode", "Train on a video and write a .dsvr bitstream");
  add_common(c_encode, enc);
  auto* c_train = app.add_subcommand("train", "Train and write a full-precision checkpoint");
  add_common(c_train, trn);

  std::string dec_in;
  auto* c_decode = app.add_subcommand("decode", "Decode a .dsvr bitstream into PNG frames");
  c_decode->add_option("input", dec_in, ".dsvr file")->required();
  c_decode->add_option("--out", dec.out, "Output frame directory")->required();

  std::string ev_in;
  auto* c_eval = app.add_subcommand("eval", "Score a .dsvr file or frame directory against the configured input");
  c_eval->add_option("input", ev_in, ".dsvr file or PNG directory")->required();
  add_common(c_eval, ev);

  std::string rd_sizes = "0.3e6,0.5e6,0.8e6,1.0e6,1.5e6,2.0e6";
  auto* c_rd = app.add_subcommand("rd", "Rate-distortion sweep over model sizes");
  c_rd->add_option("--sizes", rd_sizes, "Comma-separated parameter budgets");
  add_common(c_rd, rd);

  std::string viz_hnerv, viz_dual;
  auto* c_viz = app.add_subcommand("viz-features", "Visualise per-frame embeddings of both encoders");
  c_viz->add_option("--hnerv-checkpoint", viz_hnerv, "Trained HNeRV checkpoint")->check(CLI::ExistingFile);
  c_viz->add_option("--dual-checkpoint", viz_dual, "Trained dual-stream checkpoint")->check(CLI::ExistingFile);
  add_common(c_viz, viz);

  auto* c_synth = app.add_subcommand("synth", "Write the synthetic test clip as PNG frames");
  add_common(c_synth, syn);

  std::string plot_in;
  auto* c_plot = app.add_subcommand("plot", "Render rd.csv as an SVG chart");
  c_plot->add_option("input", plot_in, "rd.csv")->required()->check(CLI::ExistingFile);
  c_plot->add_option("--out", plt.out, "Output .svg file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kConfigError;
  }

  try {
    auto& log = std::cout;
    if (c_encode->parsed()) {
      const auto r = cli::cmd_encode(resolve(enc), enc.out, log);
      if (r.report.diverged) {
        std::cerr << "training diverged (best PSNR " << r.report.final_psnr << " dB); bitstream written anyway\n";
        return cli::kDiverged;
      }
    } else if (c_train->parsed()) {
      const auto report = cli::cmd_train(resolve(trn), trn.out, log);
      if (report.diverged) {
        std::cerr << "training diverged (best PSNR " << report.final_psnr << " dB); checkpoint written anyway\n";
        return cli::kDiverged;
      }
    } else if (c_decode->parsed()) {
      cli::cmd_decode(dec_in, dec.out, log);
    } else if (c_eval->parsed()) {
      cli::cmd_eval(resolve(ev), ev_in, ev.out.empty() ? fs::path(".") : fs::path(ev.out), log);
    } else if (c_rd->parsed()) {
      cli::cmd_rd(resolve(rd), parse_sizes(rd_sizes), rd.out, log, cli::thread_budget());
    } else if (c_viz->parsed()) {
      std::optional<fs::path> h, d;
      if (!viz_hnerv.empty()) h = viz_hnerv;
      if (!viz_dual.empty()) d = viz_dual;
      cli::cmd_viz_features(resolve(viz), viz.out, log, h, d);
    } else if (c_synth->parsed()) {
      cli::cmd_synth(resolve(syn), syn.out, log);
    } else if (c_plot->parsed()) {
      cli::cmd_plot(plot_in, plt.out, log);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kConfigError;
  } catch (const ContainerError& e) {
    std::cerr << "container error: " << e.what() << '\n';
    return cli::kContainerError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return cli::kDataError;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return cli::kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kFailure;
  }
  return cli::kOk;
}
