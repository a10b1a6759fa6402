#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace msinet {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One large-separable-kernel branch: a 1xk / kx1 depthwise pair, then a dilated
/// 1xk' / k'x1 depthwise pair.
struct LskaBranch {
  std::size_t base_k = 3;
  std::size_t dilated_k = 3;
  std::size_t dilation = 1;

  std::size_t receptive_field() const { return base_k + (dilated_k - 1) * dilation; }
  void validate() const;

  friend bool operator==(const LskaBranch&, const LskaBranch&) = default;
};

/// Fields 7, 23 and 35.
std::vector<LskaBranch> default_lska_branches();

inline constexpr double kLayerNormEps = 1e-6;

struct ModelConfig {
  std::size_t n_blocks = 32;
  std::size_t width = 48;
  std::size_t scale = 4;
  std::vector<LskaBranch> lska_branches = default_lska_branches();
  std::size_t sinkhorn_iters = 10;
  bool share_view_weights = true;
  bool single_interaction = false;
  bool global_residual = true;

  void validate() const;

  /// Bit 0 share_view_weights, bit 1 single_interaction, bit 2 global_residual.
  std::uint32_t flags() const;
  void set_flags(std::uint32_t flags);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// `key = value` lines; '#' starts a comment. Unknown keys are rejected.
/// lska_branches is written as `base:dilated:dilation` triples separated by commas.
ModelConfig parse_model_config(std::string_view text);
ModelConfig load_model_config(const std::filesystem::path& path);
std::string format_model_config(const ModelConfig& cfg);

}  // namespace msinet
