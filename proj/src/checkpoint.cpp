// SPDX-License-Identifier: Apache-2.0
#include "seqrec/checkpoint.hpp"

#include <fstream>

#include <fmt/format.h>

#include "seqrec/binio.hpp"
#include "seqrec/errors.hpp"

namespace seqrec {

using namespace binio;

namespace {

constexpr char kMagic[9] = "SEQRCKPT";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

enum : std::uint8_t { dtype_f64 = 0, dtype_f32 = 1, dtype_u64 = 2 };

template <class T>
constexpr const char* precision_name() {
  return std::is_same_v<T, float> ? "f32" : "f64";
}

}  // namespace

std::uint64_t NamedTensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const NamedTensor& Checkpoint::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw FormatError("checkpoint has no tensor named " + name);
}

ModelKind Checkpoint::kind() const {
  if (!header.contains("kind") || !header["kind"].is_string()) throw FormatError("checkpoint header lacks a model kind");
  try {
    return parse_model_kind(header["kind"].get<std::string>());
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  put_magic(out, kMagic, kVersion);
  put_string(out, ckpt.header.dump());
  put_u64(out, ckpt.tensors.size());
  for (const auto& t : ckpt.tensors) {
    put_string(out, t.name);
    if (std::visit([](const auto& v) { return v.size(); }, t.data) != t.element_count()) {
      throw ContractError("tensor " + t.name + " data does not match its shape");
    }
    put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(t.data.index()));
    put_u64(out, t.shape.size());
    for (auto d : t.shape) put_u64(out, d);
    std::visit(
        [&](const auto& v) {
          for (auto x : v) {
            using X = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<X, double>) put_f64(out, x);
            else if constexpr (std::is_same_v<X, float>) put_f32(out, x);
            else put_u64(out, x);
          }
        },
        t.data);
  }
  if (!out) throw Error("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint ckpt;
  try {
    expect_magic(in, kMagic, kVersion);
    try {
      ckpt.header = nlohmann::json::parse(get_string(in));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("checkpoint header is not JSON: ") + e.what());
    }
    const std::uint64_t count = get_u64(in);
    for (std::uint64_t i = 0; i < count; ++i) {
      NamedTensor t;
      t.name = get_string(in, 4096);
      const auto dtype = get_uint<std::uint8_t>(in);
      const std::uint64_t rank = get_u64(in);
      if (rank > 8) throw FormatError("tensor rank too large in " + t.name);
      for (std::uint64_t r = 0; r < rank; ++r) t.shape.push_back(get_u64(in));
      const std::uint64_t n = t.element_count();
      if (n > kMaxElements) throw FormatError("tensor too large: " + t.name);
      switch (dtype) {
        case dtype_f64: {
          std::vector<double> v(n);
          for (auto& x : v) x = get_f64(in);
          t.data = std::move(v);
          break;
        }
        case dtype_f32: {
          std::vector<float> v(n);
          for (auto& x : v) x = get_f32(in);
          t.data = std::move(v);
          break;
        }
        case dtype_u64: {
          std::vector<std::uint64_t> v(n);
          for (auto& x : v) x = get_u64(in);
          t.data = std::move(v);
          break;
        }
        default: throw FormatError(fmt::format("unknown dtype {} for tensor {}", dtype, t.name));
      }
      ckpt.tensors.push_back(std::move(t));
    }
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("truncated or corrupt checkpoint: ") + e.what());
  }
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"cell", to_string(c.cell)},         {"layers", c.layers},
          {"layer_norm", c.layer_norm},         {"tied_output", c.tied_output},
          {"embedding_dim", c.embedding_dim},   {"hidden_dim", c.hidden_dim},
          {"num_items", c.num_items}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.cell = parse_cell_kind(j.at("cell").get<std::string>());
    c.layers = j.at("layers").get<std::size_t>();
    c.layer_norm = j.at("layer_norm").get<bool>();
    c.tied_output = j.at("tied_output").get<bool>();
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.num_items = j.at("num_items").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model config in checkpoint: ") + e.what());
  }
  c.validate();
  return c;
}

template <class T>
Checkpoint model_checkpoint(const SequenceModel<T>& model, ModelKind kind, const nlohmann::json& extra) {
  Checkpoint ckpt;
  ckpt.header = {{"kind", to_string(kind)}, {"precision", precision_name<T>()}, {"config", to_json(model.config())}};
  if (!extra.is_null()) ckpt.header["extra"] = extra;
  for (const auto* p : model.parameters()) {
    NamedTensor t;
    t.name = p->name;
    t.shape = {p->value.rows(), p->value.cols()};
    const auto v = p->value.values();
    t.data = std::vector<T>(v.begin(), v.end());
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

std::string checkpoint_precision(const Checkpoint& ckpt) {
  if (!ckpt.header.contains("precision")) throw FormatError("checkpoint has no precision");
  return ckpt.header["precision"].get<std::string>();
}

template <class T>
SequenceModel<T> restore_model(const Checkpoint& ckpt) {
  if (!is_neural(ckpt.kind())) throw FormatError("checkpoint does not hold a neural model");
  if (checkpoint_precision(ckpt) != precision_name<T>()) {
    throw FormatError(fmt::format("checkpoint precision {} does not match requested {}", checkpoint_precision(ckpt),
                                  precision_name<T>()));
  }
  SequenceModel<T> model(model_config_from_json(ckpt.header.at("config")), 0);
  const auto params = model.parameters();
  if (params.size() != ckpt.tensors.size()) throw FormatError("checkpoint tensor count does not match the model");
  for (auto* p : params) {
    const NamedTensor& t = ckpt.get(p->name);
    const auto* data = std::get_if<std::vector<T>>(&t.data);
    if (!data || t.shape != std::vector<std::uint64_t>{p->value.rows(), p->value.cols()}) {
      throw FormatError("tensor " + t.name + " has the wrong type or shape");
    }
    std::copy(data->begin(), data->end(), p->value.values().begin());
  }
  return model;
}

template Checkpoint model_checkpoint(const SequenceModel<float>&, ModelKind, const nlohmann::json&);
template Checkpoint model_checkpoint(const SequenceModel<double>&, ModelKind, const nlohmann::json&);
template SequenceModel<float> restore_model<float>(const Checkpoint&);
template SequenceModel<double> restore_model<double>(const Checkpoint&);

Checkpoint pop_checkpoint(const PopModel& model, const nlohmann::json& extra) {
  Checkpoint ckpt;
  ckpt.header = {{"kind", to_string(ModelKind::pop)}, {"num_items", model.num_items()}};
  if (!extra.is_null()) ckpt.header["extra"] = extra;
  ckpt.tensors.push_back({"counts", {model.num_items()}, model.counts()});
  return ckpt;
}

PopModel restore_pop(const Checkpoint& ckpt) {
  if (ckpt.kind() != ModelKind::pop) throw FormatError("checkpoint does not hold a POP model");
  const auto* counts = std::get_if<std::vector<std::uint64_t>>(&ckpt.get("counts").data);
  if (!counts) throw FormatError("POP counts have the wrong type");
  return PopModel(*counts);
}

Checkpoint knn_checkpoint(const ItemKnnModel& model, const nlohmann::json& extra) {
  Checkpoint ckpt;
  ckpt.header = {{"kind", to_string(ModelKind::item_knn)}, {"num_items", model.num_items()}};
  if (!extra.is_null()) ckpt.header["extra"] = extra;
  std::vector<std::uint64_t> offsets{0}, items, cooc;
  for (const auto& row : model.neighbors()) {
    for (const auto& n : row) {
      items.push_back(n.item);
      cooc.push_back(n.cooc);
    }
    offsets.push_back(items.size());
  }
  const std::uint64_t nnz = items.size();
  ckpt.tensors.push_back({"freq", {model.num_items()}, model.freq()});
  ckpt.tensors.push_back({"offsets", {offsets.size()}, std::move(offsets)});
  ckpt.tensors.push_back({"neighbor_items", {nnz}, std::move(items)});
  ckpt.tensors.push_back({"neighbor_cooc", {nnz}, std::move(cooc)});
  return ckpt;
}

ItemKnnModel restore_knn(const Checkpoint& ckpt) {
  if (ckpt.kind() != ModelKind::item_knn) throw FormatError("checkpoint does not hold an item-KNN model");
  auto u64 = [&](const char* name) -> const std::vector<std::uint64_t>& {
    const auto* v = std::get_if<std::vector<std::uint64_t>>(&ckpt.get(name).data);
    if (!v) throw FormatError(std::string("item-KNN tensor has the wrong type: ") + name);
    return *v;
  };
  const auto& freq = u64("freq");
  const auto& offsets = u64("offsets");
  const auto& items = u64("neighbor_items");
  const auto& cooc = u64("neighbor_cooc");
  if (offsets.size() != freq.size() + 1 || items.size() != cooc.size() || offsets.back() != items.size()) {
    throw FormatError("item-KNN tables are inconsistent");
  }
  std::vector<std::vector<ItemKnnModel::Neighbor>> rows(freq.size());
  for (std::size_t i = 0; i < freq.size(); ++i) {
    if (offsets[i] > offsets[i + 1]) throw FormatError("item-KNN offsets are not monotone");
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) {
      if (items[k] >= freq.size()) throw FormatError("item-KNN neighbour out of range");
      rows[i].push_back({static_cast<ItemIndex>(items[k]), cooc[k]});
    }
  }
  return ItemKnnModel(freq, std::move(rows));
}

}  // namespace seqrec
