// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary container shared by every fitted model:
//   magic "SEQRCKPT", u32 version, JSON header (string), u64 tensor count,
//   then per tensor: name, u8 dtype, u64 rank, u64 dims..., raw little-endian data.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "seqrec/baselines.hpp"
#include "seqrec/model.hpp"
#include "seqrec/params.hpp"

namespace seqrec {

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::variant<std::vector<double>, std::vector<float>, std::vector<std::uint64_t>> data;

  std::uint64_t element_count() const;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
  nlohmann::json header;
  std::vector<NamedTensor> tensors;

  const NamedTensor& get(const std::string& name) const;  // FormatError when absent
  ModelKind kind() const;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

template <class T>
Checkpoint model_checkpoint(const SequenceModel<T>& model, ModelKind kind, const nlohmann::json& extra = {});
/// Rebuilds the model; throws FormatError on precision or shape mismatch.
template <class T>
SequenceModel<T> restore_model(const Checkpoint& ckpt);
/// "f32" or "f64" for neural checkpoints.
std::string checkpoint_precision(const Checkpoint& ckpt);

Checkpoint pop_checkpoint(const PopModel& model, const nlohmann::json& extra = {});
PopModel restore_pop(const Checkpoint& ckpt);
Checkpoint knn_checkpoint(const ItemKnnModel& model, const nlohmann::json& extra = {});
ItemKnnModel restore_knn(const Checkpoint& ckpt);

}  // namespace seqrec
