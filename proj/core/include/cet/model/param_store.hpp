#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cet/numerics/tensor.hpp"

namespace cet::model {

// Named parameter arrays with insertion-ordered, bit-exact serialization.
//
// Ownership: one store per model instance; the training loop is the single
// writer. Freezing is by name prefix ("enc.", "ar.", "ae.") and makes the
// covered arrays invisible to trainable_params() and illegal to write
// through mutable_values().
class ParamStore {
 public:
  // Adds a zero-initialized parameter. Duplicate names are a contract
  // violation; shapes are fixed at creation.
  num::Tensor add(const std::string& name, num::Shape shape,
                  bool requires_grad = true);
  num::Tensor add(const std::string& name, num::Shape shape,
                  std::vector<double> values, bool requires_grad = true);

  bool has(const std::string& name) const;
  num::Tensor get(const std::string& name) const;  // missing name throws

  // Write access for optimizer-independent edits (loading, manual init).
  // Throws ContractError when the array is frozen.
  std::span<double> mutable_values(const std::string& name);

  void freeze_prefix(const std::string& prefix);
  bool is_frozen(const std::string& name) const;
  const std::vector<std::string>& frozen_prefixes() const {
    return frozen_prefixes_;
  }

  // Non-frozen arrays, insertion order. Frozen arrays also have
  // requires_grad cleared so they never join an autodiff graph.
  std::vector<num::Tensor> trainable_params() const;
  std::vector<num::Tensor> params_with_prefix(const std::string& prefix) const;

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, num::Tensor> arrays_;
  std::vector<std::string> frozen_prefixes_;
};

// Checkpoint format, fixed for interchange:
//   magic "CET1", version u32, array count u32, then per array:
//   name length u16 + UTF-8 name, rank u8, dims as u32s, payload as
//   little-endian 32-bit floats, row-major.
// Values are held as f32 at rest: load widens exactly, so load -> save
// reproduces the input file byte for byte.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore& store, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

// In-memory variants backing the file ones; used by tests and by the
// freeze-contract audit (byte comparison of enc/ar/ae regions).
std::vector<std::uint8_t> serialize_params(const ParamStore& store);
ParamStore deserialize_params(const std::vector<std::uint8_t>& bytes);

// Deep copy through the serialized form: values land at checkpoint (f32)
// precision and all freeze marks are dropped, exactly like a fresh load.
ParamStore clone_params(const ParamStore& store);

}  // namespace cet::model
