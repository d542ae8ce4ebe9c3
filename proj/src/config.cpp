#include "lrnerv/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <type_traits>

namespace lrnerv {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    throw std::invalid_argument("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<StageSpec>& stages, F field) {
  std::string out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, double>) {
      out += format_double(field(stages[i]));
    } else {
      out += std::to_string(field(stages[i]));
    }
  }
  return out;
}

}  // namespace

std::string activation_name(Activation a) { return a == Activation::kGelu ? "gelu" : "relu"; }

Activation parse_activation(std::string_view name) {
  if (name == "gelu") return Activation::kGelu;
  if (name == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::size_t DecoderConfig::head_channels() const {
  if (stages.empty()) return stem_channels;
  const StageSpec& last = stages.back();
  return last.c_out / (last.upscale * last.upscale);
}

double DecoderConfig::stage_rho(std::size_t i) const {
  const double r = stages.at(i).rho;
  return r > 0.0 ? r : plan.rho;
}

std::pair<std::size_t, std::size_t> DecoderConfig::stage_input_size(std::size_t i) const {
  std::size_t h = stem_height, w = stem_width;
  for (std::size_t s = 0; s < i && s < stages.size(); ++s) {
    h *= stages[s].upscale;
    w *= stages[s].upscale;
  }
  return {h, w};
}

void DecoderConfig::validate() const {
  auto fail = [this](const std::string& msg) {
    throw std::invalid_argument("config '" + name + "': " + msg);
  };
  if (height == 0 || width == 0) fail("frame height and width must be positive");
  if (embed_levels == 0) fail("embed_levels must be >= 1");
  if (stem_hidden == 0 || stem_channels == 0 || stem_height == 0 || stem_width == 0) {
    fail("stem dimensions must be positive");
  }
  if (stages.empty()) fail("at least one stage is required");
  if (kernel % 2 == 0 || head_kernel % 2 == 0) fail("kernel sizes must be odd");
  std::size_t channels = stem_channels;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const StageSpec& s = stages[i];
    const std::string tag = "stage " + std::to_string(i);
    if (s.upscale == 0) fail(tag + " upscale must be >= 1");
    if (s.c_in != channels) {
      fail(tag + " expects " + std::to_string(s.c_in) + " input channels but receives " +
           std::to_string(channels));
    }
    if (s.c_out == 0 || s.c_out % (s.upscale * s.upscale) != 0) {
      fail(tag + " output channels " + std::to_string(s.c_out) + " not divisible by upscale^2");
    }
    if (s.rho < 0.0 || s.rho > 1.0) fail(tag + " rho must lie in (0, 1]");
    channels = s.c_out / (s.upscale * s.upscale);
  }
  const auto [h, w] = stage_input_size(stages.size());
  if (h != height || w != width) {
    fail("stem " + std::to_string(stem_height) + "x" + std::to_string(stem_width) +
         " upscaled by the stage factors gives " + std::to_string(h) + "x" + std::to_string(w) +
         ", expected " + std::to_string(height) + "x" + std::to_string(width));
  }
  if (!(plan.rho > 0.0 && plan.rho <= 1.0)) fail("rho must lie in (0, 1]");
  for (std::size_t s : plan.stages) {
    if (s >= stages.size()) {
      fail("factorized stage " + std::to_string(s) + " does not exist (S = " +
           std::to_string(stages.size()) + ")");
    }
  }
}

DecoderConfig DecoderConfig::with_plan(FactorizationPlan p) const {
  DecoderConfig c = *this;
  c.plan = std::move(p);
  return c;
}

std::map<std::string, std::string> parse_key_values(std::string_view text, std::string_view what) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(std::string(what) + " line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument(std::string(what) + " line " + std::to_string(lineno) +
                                  ": empty key");
    }
    if (!kv.emplace(key, trim(std::string_view(t).substr(eq + 1))).second) {
      throw std::invalid_argument(std::string(what) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

ConfigFile parse_config(std::string_view text) {
  auto kv = parse_key_values(text, "config");
  ConfigFile file;
  DecoderConfig& c = file.decoder;
  TrainOptions& t = file.train;
  std::vector<std::size_t> ins, outs, ups;
  std::vector<double> rhos;
  std::string plan_text;

  for (const auto& [key, v] : kv) {
    if (key == "name") c.name = v;
    else if (key == "height") c.height = to_size(key, v);
    else if (key == "width") c.width = to_size(key, v);
    else if (key == "frames") c.frames = to_size(key, v);
    else if (key == "embed_levels") c.embed_levels = to_size(key, v);
    else if (key == "embed_base") c.embed_base = to_double(key, v);
    else if (key == "stem_hidden") c.stem_hidden = to_size(key, v);
    else if (key == "stem_channels") c.stem_channels = to_size(key, v);
    else if (key == "stem_height") c.stem_height = to_size(key, v);
    else if (key == "stem_width") c.stem_width = to_size(key, v);
    else if (key == "kernel") c.kernel = to_size(key, v);
    else if (key == "head_kernel") c.head_kernel = to_size(key, v);
    else if (key == "activation") c.activation = parse_activation(v);
    else if (key == "rho") c.plan.rho = to_double(key, v);
    else if (key == "stages_lr") plan_text = v;
    else if (key == "stage_in") for (const auto& s : split_list(v)) ins.push_back(to_size(key, s));
    else if (key == "stage_out") for (const auto& s : split_list(v)) outs.push_back(to_size(key, s));
    else if (key == "stage_upscale") for (const auto& s : split_list(v)) ups.push_back(to_size(key, s));
    else if (key == "stage_rho") for (const auto& s : split_list(v)) rhos.push_back(to_double(key, s));
    else if (key == "steps") t.steps = static_cast<std::int64_t>(to_size(key, v));
    else if (key == "seed") t.seed = to_size(key, v);
    else if (key == "lr") t.lr = to_double(key, v);
    else if (key == "lr_floor") t.lr_floor = to_double(key, v);
    else if (key == "loss_alpha") t.loss_alpha = to_double(key, v);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (ins.size() != outs.size() || ins.size() != ups.size()) {
    throw std::invalid_argument("config: stage_in, stage_out and stage_upscale must have equal length");
  }
  if (!rhos.empty() && rhos.size() != ins.size()) {
    throw std::invalid_argument("config: stage_rho must list one value per stage");
  }
  for (std::size_t i = 0; i < ins.size(); ++i) {
    c.stages.push_back(StageSpec{ins[i], outs[i], ups[i], rhos.empty() ? 0.0 : rhos[i]});
  }
  c.plan = FactorizationPlan::parse(plan_text, c.plan.rho);
  c.validate();
  return file;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const DecoderConfig& c) {
  std::ostringstream os;
  os << "name = " << c.name << '\n'
     << "height = " << c.height << '\n'
     << "width = " << c.width << '\n'
     << "frames = " << c.frames << '\n'
     << "embed_levels = " << c.embed_levels << '\n'
     << "embed_base = " << format_double(c.embed_base) << '\n'
     << "stem_hidden = " << c.stem_hidden << '\n'
     << "stem_channels = " << c.stem_channels << '\n'
     << "stem_height = " << c.stem_height << '\n'
     << "stem_width = " << c.stem_width << '\n'
     << "stage_in = " << join<std::size_t>(c.stages, [](const StageSpec& s) { return s.c_in; }) << '\n'
     << "stage_out = " << join<std::size_t>(c.stages, [](const StageSpec& s) { return s.c_out; }) << '\n'
     << "stage_upscale = " << join<std::size_t>(c.stages, [](const StageSpec& s) { return s.upscale; }) << '\n';
  bool any_rho = false;
  for (const auto& s : c.stages) any_rho = any_rho || s.rho > 0.0;
  if (any_rho) os << "stage_rho = " << join<double>(c.stages, [](const StageSpec& s) { return s.rho; }) << '\n';
  os << "kernel = " << c.kernel << '\n'
     << "head_kernel = " << c.head_kernel << '\n'
     << "activation = " << activation_name(c.activation) << '\n'
     << "stages_lr = " << c.plan.label() << '\n'
     << "rho = " << format_double(c.plan.rho) << '\n';
  return os.str();
}

}  // namespace lrnerv
