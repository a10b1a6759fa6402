#include "msinet/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace msinet {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: '" + key + "' expects an integer, got '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, std::string value) {
  std::transform(value.begin(), value.end(), value.begin(), [](unsigned char c) { return std::tolower(c); });
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<LskaBranch> parse_branches(const std::string& value) {
  std::vector<LskaBranch> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t fields[3] = {0, 0, 0};
    std::stringstream fs(item);
    std::string f;
    int i = 0;
    while (std::getline(fs, f, ':')) {
      if (i == 3) throw ConfigError("config: lska branch '" + item + "' must be base:dilated:dilation");
      fields[i++] = parse_size("lska_branches", trim(f));
    }
    if (i != 3) throw ConfigError("config: lska branch '" + item + "' must be base:dilated:dilation");
    out.push_back(LskaBranch{fields[0], fields[1], fields[2]});
  }
  return out;
}

}  // namespace

void LskaBranch::validate() const {
  if (base_k == 0 || base_k % 2 == 0) throw ConfigError("lska branch: base_k must be odd");
  if (dilated_k == 0 || dilated_k % 2 == 0) throw ConfigError("lska branch: dilated_k must be odd");
  if (dilation == 0) throw ConfigError("lska branch: dilation must be >= 1");
}

std::vector<LskaBranch> default_lska_branches() { return {{3, 3, 2}, {5, 7, 3}, {5, 11, 3}}; }

void ModelConfig::validate() const {
  if (n_blocks < 1) throw ConfigError("config: n_blocks must be >= 1");
  if (width < 4 || width % 2 != 0) throw ConfigError("config: width must be even and >= 4");
  if (scale != 2 && scale != 4) throw ConfigError("config: scale must be 2 or 4");
  if (sinkhorn_iters < 1) throw ConfigError("config: sinkhorn_iters must be >= 1");
  if (lska_branches.empty()) throw ConfigError("config: at least one lska branch is required");
  for (const auto& b : lska_branches) b.validate();
}

std::uint32_t ModelConfig::flags() const {
  return (share_view_weights ? 1u : 0u) | (single_interaction ? 2u : 0u) | (global_residual ? 4u : 0u);
}

void ModelConfig::set_flags(std::uint32_t f) {
  if (f & ~7u) throw ConfigError("config: unknown flag bits " + std::to_string(f));
  share_view_weights = f & 1u;
  single_interaction = f & 2u;
  global_residual = f & 4u;
}

ModelConfig parse_model_config(std::string_view text) {
  ModelConfig cfg;
  std::stringstream ss{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "n_blocks") cfg.n_blocks = parse_size(key, value);
    else if (key == "width") cfg.width = parse_size(key, value);
    else if (key == "scale") cfg.scale = parse_size(key, value);
    else if (key == "sinkhorn_iters") cfg.sinkhorn_iters = parse_size(key, value);
    else if (key == "lska_branches") cfg.lska_branches = parse_branches(value);
    else if (key == "share_view_weights") cfg.share_view_weights = parse_bool(key, value);
    else if (key == "single_interaction") cfg.single_interaction = parse_bool(key, value);
    else if (key == "global_residual") cfg.global_residual = parse_bool(key, value);
    else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_config(ss.str());
}

std::string format_model_config(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "n_blocks = " << cfg.n_blocks << "\n"
     << "width = " << cfg.width << "\n"
     << "scale = " << cfg.scale << "\n"
     << "lska_branches = ";
  for (std::size_t i = 0; i < cfg.lska_branches.size(); ++i) {
    const auto& b = cfg.lska_branches[i];
    os << (i ? ", " : "") << b.base_k << ":" << b.dilated_k << ":" << b.dilation;
  }
  os << "\n"
     << "sinkhorn_iters = " << cfg.sinkhorn_iters << "\n"
     << "share_view_weights = " << (cfg.share_view_weights ? "true" : "false") << "\n"
     << "single_interaction = " << (cfg.single_interaction ? "true" : "false") << "\n"
     << "global_residual = " << (cfg.global_residual ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace msinet
