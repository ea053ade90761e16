#include "cet/model/param_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "cet/errors.hpp"

namespace cet::model {

namespace {

bool name_has_prefix(const std::string& name, const std::string& prefix) {
  return name.size() >= prefix.size() &&
         name.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

num::Tensor ParamStore::add(const std::string& name, num::Shape shape,
                            bool requires_grad) {
  return add(name, std::move(shape), {}, requires_grad);
}

num::Tensor ParamStore::add(const std::string& name, num::Shape shape,
                            std::vector<double> values, bool requires_grad) {
  if (arrays_.count(name) != 0) {
    throw ContractError("param store: duplicate array " + name);
  }
  if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ContractError("param store: bad array name length");
  }
  num::Tensor t;
  if (values.empty()) {
    t = num::Tensor::zeros(std::move(shape), requires_grad);
  } else {
    if (values.size() != num::numel(shape)) {
      throw ShapeError("param store: " + name + " expects " +
                       std::to_string(num::numel(shape)) + " values");
    }
    t = num::Tensor::from_values(std::move(shape), std::move(values),
                                 requires_grad);
  }
  names_.push_back(name);
  arrays_.emplace(name, t);
  return t;
}

bool ParamStore::has(const std::string& name) const {
  return arrays_.count(name) != 0;
}

num::Tensor ParamStore::get(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) {
    throw ContractError("param store: unknown array " + name);
  }
  return it->second;
}

std::span<double> ParamStore::mutable_values(const std::string& name) {
  if (is_frozen(name)) {
    throw ContractError("param store: write to frozen array " + name);
  }
  auto it = arrays_.find(name);
  if (it == arrays_.end()) {
    throw ContractError("param store: unknown array " + name);
  }
  return it->second.values_mut();
}

void ParamStore::freeze_prefix(const std::string& prefix) {
  frozen_prefixes_.push_back(prefix);
  for (const std::string& name : names_) {
    if (name_has_prefix(name, prefix)) {
      arrays_.at(name).set_requires_grad(false);
    }
  }
}

bool ParamStore::is_frozen(const std::string& name) const {
  for (const std::string& prefix : frozen_prefixes_) {
    if (name_has_prefix(name, prefix)) return true;
  }
  return false;
}

std::vector<num::Tensor> ParamStore::trainable_params() const {
  std::vector<num::Tensor> out;
  for (const std::string& name : names_) {
    const num::Tensor& t = arrays_.at(name);
    if (!is_frozen(name) && t.requires_grad()) out.push_back(t);
  }
  return out;
}

std::vector<num::Tensor> ParamStore::params_with_prefix(
    const std::string& prefix) const {
  std::vector<num::Tensor> out;
  for (const std::string& name : names_) {
    if (name_has_prefix(name, prefix)) out.push_back(arrays_.at(name));
  }
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void put_bytes(std::vector<std::uint8_t>& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  out.insert(out.end(), b, b + n);
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  put_bytes(out, &v, sizeof(T));
}

struct ByteReader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void read(void* p, std::size_t n) {
    if (pos + n > buf.size()) {
      throw DataError("checkpoint: truncated stream");
    }
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  }
  template <typename T>
  T get() {
    T v;
    read(&v, sizeof(T));
    return v;
  }
};

}  // namespace

std::vector<std::uint8_t> serialize_params(const ParamStore& store) {
  std::vector<std::uint8_t> out;
  put_bytes(out, "CET1", 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const std::string& name : store.names()) {
    num::Tensor t = store.get(name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    put_bytes(out, name.data(), name.size());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (double v : t.values()) {
      put<float>(out, static_cast<float>(v));
    }
  }
  return out;
}

ParamStore deserialize_params(const std::vector<std::uint8_t>& bytes) {
  ByteReader r{bytes};
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, "CET1", 4) != 0) {
    throw DataError("checkpoint: bad magic");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " +
                    std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>();
    std::string name(name_len, '\0');
    r.read(name.data(), name_len);
    const auto rank = r.get<std::uint8_t>();
    num::Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint32_t>();
    std::vector<double> values(num::numel(shape));
    for (double& v : values) v = static_cast<double>(r.get<float>());
    const bool trainable = !name_has_prefix(name, "meta.");
    store.add(name, std::move(shape), std::move(values), trainable);
  }
  if (r.pos != bytes.size()) {
    throw DataError("checkpoint: trailing bytes after last array");
  }
  return store;
}

ParamStore clone_params(const ParamStore& store) {
  return deserialize_params(serialize_params(store));
}

void save_checkpoint(const ParamStore& store, const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize_params(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot open " + path + " for write");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("checkpoint: write failed for " + path);
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  const std::streamsize n = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n));
  in.read(reinterpret_cast<char*>(bytes.data()), n);
  if (!in) throw DataError("checkpoint: read failed for " + path);
  return deserialize_params(bytes);
}

}  // namespace cet::model
