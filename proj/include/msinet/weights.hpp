#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "msinet/config.hpp"
#include "msinet/tape.hpp"
#include "msinet/tensor.hpp"

namespace msinet {

enum class ParamInit { kUniformFanIn, kZero, kOne };

/// Declaration of one model parameter: canonical name, shape and initializer.
struct ParamSpec {
  std::string name;
  Shape shape;
  ParamInit init = ParamInit::kZero;
  std::size_t fan_in = 1;
};

/// Named parameters in canonical (insertion) order.
class WeightStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  /// Throws std::invalid_argument on a duplicate name.
  void insert(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::size_t size() const { return entries_.size(); }
  std::span<const Entry> entries() const { return entries_; }
  std::span<Entry> entries() { return entries_; }
  std::size_t param_count() const;

  bool bit_equal(const WeightStore& other) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Draws every parameter in spec order: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// zeros or ones per its initializer.
WeightStore init_params(const std::vector<ParamSpec>& specs, std::uint64_t seed);

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kWeightMagic[4] = {'M', 'S', 'I', 'N'};
inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct LoadedWeights {
  ModelConfig config;
  WeightStore weights;
};

/// Little-endian layout: magic "MSIN", u32 version, config block, u32 tensor
/// count, then per tensor u16 name length, name bytes, u8 rank, u32 dims, f32 data.
void save_weights(const WeightStore& weights, const ModelConfig& cfg, const std::filesystem::path& path);
std::vector<unsigned char> serialize_weights(const WeightStore& weights, const ModelConfig& cfg);
LoadedWeights load_weights(const std::filesystem::path& path);
LoadedWeights deserialize_weights(std::span<const unsigned char> bytes);

/// Puts every stored tensor on a tape (as leaves when trainable, else constants)
/// and resolves them by name.
template <class T>
class ParamBinding {
 public:
  ParamBinding(ad::GradTape<T>& tape, const WeightStore& weights, bool trainable);
  ParamBinding(std::span<const std::string> names, std::span<const ad::Var<T>> vars);

  ad::Var<T> operator[](std::string_view name) const;
  bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }
  std::span<const ad::Var<T>> vars() const { return vars_; }

 private:
  std::vector<ad::Var<T>> vars_;
  std::unordered_map<std::string, std::size_t> index_;
};

extern template class ParamBinding<float>;
extern template class ParamBinding<double>;

}  // namespace msinet
