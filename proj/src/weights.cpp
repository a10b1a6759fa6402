#include "msinet/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "msinet/rng.hpp"

namespace msinet {

void WeightStore::insert(std::string name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("weight store: duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(value)});
}

WeightStore init_params(const std::vector<ParamSpec>& specs, std::uint64_t seed) {
  Rng rng(seed);
  WeightStore store;
  for (const auto& spec : specs) {
    Tensor t(spec.shape);
    switch (spec.init) {
      case ParamInit::kUniformFanIn: {
        const double k = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-k, k));
        break;
      }
      case ParamInit::kOne:
        for (auto& v : t.data()) v = 1.0f;
        break;
      case ParamInit::kZero:
        break;
    }
    store.insert(spec.name, std::move(t));
  }
  return store;
}

bool WeightStore::contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

const Tensor& WeightStore::at(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("weight store: no parameter named '" + std::string(name) + "'");
  return entries_[it->second].value;
}

Tensor& WeightStore::at(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const WeightStore&>(*this).at(name));
}

std::size_t WeightStore::param_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

bool WeightStore::bit_equal(const WeightStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (!entries_[i].value.bit_equal(other.entries_[i].value)) return false;
  }
  return true;
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<unsigned char> take() { return std::move(bytes_); }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::uint8_t u8(const char* what) { return need(1, what)[0]; }
  std::uint16_t u16(const char* what) {
    const auto* p = need(2, what);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32(const char* what) {
    const auto* p = need(4, what);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(std::size_t n, const char* what) {
    const auto* p = need(n, what);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  const unsigned char* need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("weight file truncated while reading ") + what + " at byte " +
                        std::to_string(pos_));
    }
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> serialize_weights(const WeightStore& weights, const ModelConfig& cfg) {
  Writer w;
  w.raw(std::string_view(kWeightMagic, 4));
  w.u32(kWeightFormatVersion);
  w.u32(static_cast<std::uint32_t>(cfg.n_blocks));
  w.u32(static_cast<std::uint32_t>(cfg.width));
  w.u32(static_cast<std::uint32_t>(cfg.scale));
  w.u32(static_cast<std::uint32_t>(cfg.lska_branches.size()));
  for (const auto& b : cfg.lska_branches) {
    w.u32(static_cast<std::uint32_t>(b.base_k));
    w.u32(static_cast<std::uint32_t>(b.dilated_k));
    w.u32(static_cast<std::uint32_t>(b.dilation));
  }
  w.u32(static_cast<std::uint32_t>(cfg.sinkhorn_iters));
  w.u32(cfg.flags());
  w.u32(static_cast<std::uint32_t>(weights.size()));
  for (const auto& e : weights.entries()) {
    if (e.name.size() > 0xFFFF) throw FormatError("parameter name too long: " + e.name);
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.raw(e.name);
    const Shape& s = e.value.shape();
    w.u8(4);
    for (std::size_t axis = 0; axis < 4; ++axis) w.u32(static_cast<std::uint32_t>(s[axis]));
    for (float v : e.value.data()) w.f32(v);
  }
  return w.take();
}

void save_weights(const WeightStore& weights, const ModelConfig& cfg, const std::filesystem::path& path) {
  const auto bytes = serialize_weights(weights, cfg);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::ios_base::failure("failed writing " + path.string());
}

LoadedWeights deserialize_weights(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != std::string_view(kWeightMagic, 4)) throw FormatError("weight file: bad magic bytes");
  const auto version = r.u32("version");
  if (version != kWeightFormatVersion) {
    throw FormatError("weight file: unsupported format version " + std::to_string(version) + " (expected " +
                      std::to_string(kWeightFormatVersion) + ")");
  }
  LoadedWeights out;
  ModelConfig& cfg = out.config;
  cfg.n_blocks = r.u32("n_blocks");
  cfg.width = r.u32("width");
  cfg.scale = r.u32("scale");
  const auto branches = r.u32("branch count");
  if (branches > r.remaining() / 12) throw FormatError("weight file: branch count exceeds file size");
  cfg.lska_branches.clear();
  for (std::uint32_t i = 0; i < branches; ++i) {
    LskaBranch b;
    b.base_k = r.u32("branch base_k");
    b.dilated_k = r.u32("branch dilated_k");
    b.dilation = r.u32("branch dilation");
    cfg.lska_branches.push_back(b);
  }
  cfg.sinkhorn_iters = r.u32("sinkhorn_iters");
  try {
    cfg.set_flags(r.u32("flags"));
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("weight file: invalid config block: ") + e.what());
  }

  const auto count = r.u32("tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = r.u16("name length");
    std::string name = r.str(len, "name");
    const auto rank = r.u8("rank");
    if (rank > 4) throw FormatError("weight file: tensor '" + name + "' has rank " + std::to_string(rank) + " > 4");
    std::size_t dims[4] = {1, 1, 1, 1};
    for (std::size_t i = 0; i < rank; ++i) dims[4 - rank + i] = r.u32("dims");
    const Shape shape{dims[0], dims[1], dims[2], dims[3]};
    if (shape.numel() > r.remaining() / 4) {
      throw FormatError("weight file truncated in tensor '" + name + "' payload");
    }
    std::vector<float> data(shape.numel());
    for (auto& v : data) v = r.f32("tensor data");
    if (out.weights.contains(name)) throw FormatError("weight file: duplicate tensor name '" + name + "'");
    out.weights.insert(std::move(name), Tensor(shape, std::move(data)));
  }
  if (r.remaining() != 0) {
    throw FormatError("weight file: " + std::to_string(r.remaining()) + " trailing bytes after last tensor");
  }
  return out;
}

LoadedWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open weight file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_weights(bytes);
}

template <class T>
ParamBinding<T>::ParamBinding(ad::GradTape<T>& tape, const WeightStore& weights, bool trainable) {
  vars_.reserve(weights.size());
  for (const auto& e : weights.entries()) {
    BasicTensor<T> value = e.value.template cast<T>();
    index_.emplace(e.name, vars_.size());
    vars_.push_back(trainable ? tape.leaf(std::move(value)) : tape.constant(std::move(value)));
  }
}

template <class T>
ParamBinding<T>::ParamBinding(std::span<const std::string> names, std::span<const ad::Var<T>> vars)
    : vars_(vars.begin(), vars.end()) {
  if (names.size() != vars.size()) throw std::invalid_argument("ParamBinding: names and vars differ in length");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!index_.emplace(names[i], i).second) {
      throw std::invalid_argument("ParamBinding: duplicate name '" + names[i] + "'");
    }
  }
}

template <class T>
ad::Var<T> ParamBinding<T>::operator[](std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("missing parameter '" + std::string(name) + "'");
  return vars_[it->second];
}

template class ParamBinding<float>;
template class ParamBinding<double>;

}  // namespace msinet
