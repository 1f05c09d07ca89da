#include "dsvr/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "dsvr/error.hpp"

namespace dsvr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& section, const std::string& key) { return section + "." + key; }

long long to_int(const std::string& v, const std::string& what) {
  // Accept "3e5"-style sizes as long as they are integral.
  std::size_t pos = 0;
  double d = 0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(what + ": expected an integer, got '" + v + "'");
  }
  if (pos != v.size() || d != std::floor(d) || std::abs(d) > 9e15) {
    throw ConfigError(what + ": expected an integer, got '" + v + "'");
  }
  return static_cast<long long>(d);
}

double to_real(const std::string& v, const std::string& what) {
  std::size_t pos = 0;
  double d = 0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(what + ": expected a number, got '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(d)) throw ConfigError(what + ": expected a number, got '" + v + "'");
  return d;
}

bool to_bool(const std::string& v, const std::string& what) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(what + ": expected true/false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& v, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(to_int(trim(item), what)));
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

const std::map<std::string, std::vector<std::string>>& ConfigStore::schema() {
  static const std::map<std::string, std::vector<std::string>> s{
      {"run", {"method", "size", "seed"}},
      {"input", {"dir", "limit"}},
      {"synth", {"frames", "height", "width", "lf_motion", "hf_texture_period", "hf_flicker", "lf_amplitude",
                 "hf_amplitude", "seed"}},
      {"nets", {"arch", "embed_c", "embed_h", "embed_w", "strides", "reduction", "activation", "kernel",
                "min_width", "encoder_dims", "ratio", "tol_total", "tol_component"}},
      {"posenc", {"base", "n", "m"}},
      {"freqsplit", {"keep_ratio"}},
      {"train", {"epochs", "batch", "lr", "warmup", "beta1", "beta2", "eps", "eval_every", "shuffle"}},
      {"codec", {"bits_embed", "bits_weights"}},
  };
  return s;
}

ConfigStore::ConfigStore() = default;

void ConfigStore::set(const std::string& section, const std::string& key, const std::string& value) {
  const auto& s = schema();
  auto it = s.find(section);
  if (it == s.end()) throw ConfigError("unknown config section [" + section + "]");
  if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
    throw ConfigError("unknown config key " + where(section, key));
  }
  values_[section][key] = value;
}

void ConfigStore::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("expected section.key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
      trim(assignment.substr(eq + 1)));
}

void ConfigStore::load_string(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string loc = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(loc + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().contains(section)) throw ConfigError(loc + "unknown config section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(loc + "expected key = value");
    if (section.empty()) throw ConfigError(loc + "key outside of a section");
    try {
      set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(loc + e.what());
    }
  }
}

void ConfigStore::load_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  load_string(ss.str(), file.string());
}

bool ConfigStore::is_set(const std::string& section, const std::string& key) const {
  auto it = values_.find(section);
  return it != values_.end() && it->second.contains(key);
}

std::optional<std::string> ConfigStore::get(const std::string& section, const std::string& key) const {
  if (!is_set(section, key)) return std::nullopt;
  return values_.at(section).at(key);
}

RunConfig resolve(const ConfigStore& store) {
  RunConfig rc;
  auto str = [&](const char* s, const char* k) { return store.get(s, k); };
  auto integer = [&](const char* s, const char* k, auto& out) {
    if (auto v = str(s, k)) out = static_cast<std::remove_reference_t<decltype(out)>>(to_int(*v, where(s, k)));
  };
  auto real = [&](const char* s, const char* k, double& out) {
    if (auto v = str(s, k)) out = to_real(*v, where(s, k));
  };

  if (auto v = str("run", "method")) rc.method = nets::parse_method(*v);
  integer("run", "size", rc.size);
  if (auto v = str("run", "seed")) {
    const long long s = to_int(*v, "run.seed");
    if (s < 0) throw ConfigError("run.seed must be >= 0");
    rc.seed = static_cast<std::uint64_t>(s);
  }

  if (auto v = str("nets", "arch")) rc.arch_preset = *v;
  if (rc.arch_preset == "desk") {
    rc.model.arch = nets::ArchConfig::desk();
  } else if (rc.arch_preset == "full") {
    rc.model.arch = nets::ArchConfig::full();
  } else {
    throw ConfigError("nets.arch must be desk or full, got '" + rc.arch_preset + "'");
  }
  auto& a = rc.model.arch;
  integer("nets", "embed_c", a.embed_c);
  integer("nets", "embed_h", a.embed_h);
  integer("nets", "embed_w", a.embed_w);
  if (auto v = str("nets", "strides")) a.strides = to_int_list(*v, "nets.strides");
  real("nets", "reduction", a.reduction);
  if (auto v = str("nets", "activation")) a.activation = nets::parse_activation(*v);
  integer("nets", "kernel", a.kernel);
  integer("nets", "min_width", a.min_width);
  if (auto v = str("nets", "encoder_dims")) a.encoder_dims = to_int_list(*v, "nets.encoder_dims");
  rc.ratio = nets::default_budget_ratio(rc.method);
  if (auto v = str("nets", "ratio")) rc.ratio = to_int_list(*v, "nets.ratio");
  real("nets", "tol_total", rc.tolerance.total);
  real("nets", "tol_component", rc.tolerance.per_decoder);
  a.validate();

  rc.model.method = rc.method;
  real("posenc", "base", rc.model.posenc.base);
  integer("posenc", "n", rc.model.posenc.n);
  integer("posenc", "m", rc.model.posenc.m);
  rc.model.posenc.validate();
  real("freqsplit", "keep_ratio", rc.model.keep_ratio);
  if (!(rc.model.keep_ratio > 0.0 && rc.model.keep_ratio < 1.0)) throw ConfigError("freqsplit.keep_ratio must be in (0, 1)");

  auto& t = rc.train;
  integer("train", "epochs", t.epochs);
  integer("train", "batch", t.batch);
  real("train", "lr", t.lr);
  real("train", "warmup", t.warmup);
  real("train", "beta1", t.beta1);
  real("train", "beta2", t.beta2);
  real("train", "eps", t.eps);
  integer("train", "eval_every", t.eval_every);
  if (auto v = str("train", "shuffle")) t.shuffle = to_bool(*v, "train.shuffle");
  t.seed = rc.seed;
  t.validate();

  integer("codec", "bits_embed", rc.codec.bits_embed);
  integer("codec", "bits_weights", rc.codec.bits_weights);
  for (int b : {rc.codec.bits_embed, rc.codec.bits_weights}) {
    if (b < 1 || b > 16) throw ConfigError("codec bit widths must be in [1, 16]");
  }

  if (auto v = str("input", "dir")) rc.input.dir = *v;
  integer("input", "limit", rc.input.limit);
  if (rc.input.limit < 0) throw ConfigError("input.limit must be >= 0");
  auto& s = rc.input.synth;
  s.height = a.embed_h * a.stride_product();
  s.width = a.embed_w * a.stride_product();
  integer("synth", "frames", s.frames);
  integer("synth", "height", s.height);
  integer("synth", "width", s.width);
  real("synth", "lf_motion", s.lf_motion);
  integer("synth", "hf_texture_period", s.hf_texture_period);
  real("synth", "hf_flicker", s.hf_flicker);
  real("synth", "lf_amplitude", s.lf_amplitude);
  real("synth", "hf_amplitude", s.hf_amplitude);
  if (auto v = str("synth", "seed")) s.seed = static_cast<std::uint64_t>(to_int(*v, "synth.seed"));
  if (rc.input.dir.empty()) s.validate();

  if (rc.size < 1) throw ConfigError("run.size must be positive");
  if (rc.ratio.size() != nets::decoder_names(rc.method).size()) {
    throw ConfigError("nets.ratio needs " + std::to_string(nets::decoder_names(rc.method).size()) +
                      " entries for method " + nets::to_string(rc.method));
  }
  return rc;
}

std::string RunConfig::to_ini() const {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  const auto& a = model.arch;
  os << "[run]\nmethod = " << nets::to_string(method) << "\nsize = " << size << "\nseed = " << seed << "\n\n";
  os << "[input]\n";
  if (!input.dir.empty()) os << "dir = " << input.dir.string() << '\n';
  os << "limit = " << input.limit << "\n\n";
  const auto& s = input.synth;
  os << "[synth]\nframes = " << s.frames << "\nheight = " << s.height << "\nwidth = " << s.width
     << "\nlf_motion = " << s.lf_motion << "\nhf_texture_period = " << s.hf_texture_period
     << "\nhf_flicker = " << s.hf_flicker << "\nlf_amplitude = " << s.lf_amplitude
     << "\nhf_amplitude = " << s.hf_amplitude << "\nseed = " << s.seed << "\n\n";
  os << "[nets]\narch = " << arch_preset << "\nembed_c = " << a.embed_c << "\nembed_h = " << a.embed_h
     << "\nembed_w = " << a.embed_w << "\nstrides = " << join(a.strides) << "\nreduction = " << a.reduction
     << "\nactivation = " << nets::to_string(a.activation) << "\nkernel = " << a.kernel
     << "\nmin_width = " << a.min_width << "\nencoder_dims = " << join(a.encoder_dims)
     << "\nratio = " << join(ratio) << "\ntol_total = " << tolerance.total
     << "\ntol_component = " << tolerance.per_decoder << "\n\n";
  os << "[posenc]\nbase = " << model.posenc.base << "\nn = " << model.posenc.n << "\nm = " << model.posenc.m
     << "\n\n";
  os << "[freqsplit]\nkeep_ratio = " << model.keep_ratio << "\n\n";
  os << "[train]\nepochs = " << train.epochs << "\nbatch = " << train.batch << "\nlr = " << train.lr
     << "\nwarmup = " << train.warmup << "\nbeta1 = " << train.beta1 << "\nbeta2 = " << train.beta2
     << "\neps = " << train.eps << "\neval_every = " << train.eval_every
     << "\nshuffle = " << (train.shuffle ? "true" : "false") << "\n\n";
  os << "[codec]\nbits_embed = " << codec.bits_embed << "\nbits_weights = " << codec.bits_weights << '\n';
  return os.str();
}

void RunConfig::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "config.resolved.ini");
  os << to_ini();
  if (!os) throw DataError("cannot write " + (dir / "config.resolved.ini").string());
}

}  // namespace dsvr::cli
