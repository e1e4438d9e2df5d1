// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqrec/batch.hpp"

namespace seqrec {

struct Event {
  std::string session_id;
  std::int64_t timestamp = 0;  // epoch milliseconds
  std::string item_id;

  friend bool operator==(const Event&, const Event&) = default;
};

struct CsvOptions {
  char delimiter = ',';
  std::size_t session_column = 0;
  std::size_t timestamp_column = 1;
  std::size_t item_column = 2;
  bool header = false;
};

/// Integer epoch milliseconds, or ISO-8601 UTC such as 2014-04-07T10:51:09.277Z.
std::int64_t parse_timestamp(std::string_view text);

/// Events grouped by session (sessions in order of first appearance), each
/// group stably sorted by timestamp.
std::vector<Event> parse_events(std::istream& in, const CsvOptions& options);
std::vector<Event> ingest(const std::filesystem::path& path, const CsvOptions& options);

class Vocabulary {
 public:
  /// Returns the index of `id`, inserting it if new.
  ItemIndex add(const std::string& id);
  std::optional<ItemIndex> find(const std::string& id) const;
  ItemIndex index(const std::string& id) const;  // VocabularyError when absent
  const std::string& id(ItemIndex index) const;
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  /// Identity vocabulary "0", "1", ... used for synthetic data.
  static Vocabulary identity(std::size_t n);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, ItemIndex> lookup_;
};

enum class Split { train, valid, test };
std::string to_string(Split split);

struct SessionDataset {
  Split split = Split::train;
  std::vector<Sequence> sequences;
  std::vector<std::string> session_ids;

  std::size_t event_count() const;
  friend bool operator==(const SessionDataset&, const SessionDataset&) = default;
};

enum class SplitPolicy { yoochoose_like, internal_like };
std::string to_string(SplitPolicy policy);
SplitPolicy parse_split_policy(const std::string& name);

struct PreprocessConfig {
  SplitPolicy policy = SplitPolicy::yoochoose_like;
  std::uint64_t seed = 0;
  /// Keep only the last `max_length` items of every sequence; 0 keeps all.
  std::size_t max_length = 0;
  std::int64_t period_ms = 7LL * 24 * 3600 * 1000;

  /// Flavour defaults: internal_like truncates to 40, yoochoose_like keeps all.
  static PreprocessConfig defaults(SplitPolicy policy);
};

struct PreprocessCounters {
  std::size_t sessions = 0;
  std::size_t dropped_boundary = 0;
  std::size_t dropped_short = 0;
  std::size_t dropped_unknown_items = 0;
};

struct PreparedData {
  Vocabulary vocabulary;
  SessionDataset train, valid, test;
  PreprocessCounters counters;

  const SessionDataset& split(Split s) const;
  friend bool operator==(const PreparedData& a, const PreparedData& b) {
    return a.vocabulary == b.vocabulary && a.train == b.train && a.valid == b.valid && a.test == b.test;
  }
};

/// Splits sessions, builds the vocabulary from the training split and maps
/// valid/test onto it. Throws ConfigError when the training split is empty.
PreparedData preprocess(const std::vector<Event>& events, const PreprocessConfig& config);

struct DatasetStats {
  std::size_t sequences = 0;
  std::size_t events = 0;
  std::size_t distinct_items = 0;
  std::map<std::size_t, std::size_t> length_histogram;
  /// Point k-1: share of events covered by the k most frequent items.
  std::vector<double> cumulative_item_share;
};

DatasetStats compute_stats(std::span<const Sequence> sequences);

/// Versioned binary cache with embedded vocabulary. Byte-identical for equal
/// inputs.
void save_prepared(const std::filesystem::path& path, const PreparedData& data);
PreparedData load_prepared(const std::filesystem::path& path);

}  // namespace seqrec
