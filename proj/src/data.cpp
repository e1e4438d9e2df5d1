// SPDX-License-Identifier: Apache-2.0
#include "seqrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "seqrec/binio.hpp"
#include "seqrec/random.hpp"

namespace seqrec {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  std::int64_t v = 0;
  if (!parse_int(s.substr(pos, len), v)) return false;
  out = static_cast<int>(v);
  return true;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
  text = trim(text);
  std::int64_t ms = 0;
  if (parse_int(text, ms)) return ms;
  // YYYY-MM-DDTHH:MM:SS[.fff][Z]
  int y, mo, d, h, mi, s;
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':' || !parse_fixed(text, 0, 4, y) || !parse_fixed(text, 5, 2, mo) ||
      !parse_fixed(text, 8, 2, d) || !parse_fixed(text, 11, 2, h) || !parse_fixed(text, 14, 2, mi) ||
      !parse_fixed(text, 17, 2, s)) {
    throw ParseError(fmt::format("unrecognised timestamp '{}'", text));
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw ParseError(fmt::format("invalid timestamp '{}'", text));
  std::int64_t frac = 0;
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (digits < 3) frac = frac * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) throw ParseError(fmt::format("invalid timestamp '{}'", text));
    for (; digits < 3; ++digits) frac *= 10;
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) throw ParseError(fmt::format("invalid timestamp '{}'", text));
  const auto days = sys_days(ymd).time_since_epoch().count();
  return ((static_cast<std::int64_t>(days) * 24 + h) * 60 + mi) * 60000 + static_cast<std::int64_t>(s) * 1000 + frac;
}

std::vector<Event> parse_events(std::istream& in, const CsvOptions& options) {
  const std::size_t needed =
      std::max({options.session_column, options.timestamp_column, options.item_column}) + 1;
  std::vector<std::vector<Event>> groups;
  std::unordered_map<std::string, std::size_t> group_of;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> fields;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && options.header) continue;
    if (trim(line).empty()) continue;
    fields.clear();
    std::string_view rest(line);
    while (true) {
      const auto cut = rest.find(options.delimiter);
      fields.push_back(trim(rest.substr(0, cut)));
      if (cut == std::string_view::npos) break;
      rest.remove_prefix(cut + 1);
    }
    if (fields.size() < needed) {
      throw ParseError(fmt::format("line {}: expected at least {} columns, found {}", line_no, needed, fields.size()));
    }
    Event e;
    e.session_id = std::string(fields[options.session_column]);
    e.item_id = std::string(fields[options.item_column]);
    if (e.session_id.empty()) throw ParseError(fmt::format("line {}: missing session id", line_no));
    if (e.item_id.empty()) throw ParseError(fmt::format("line {}: missing item id", line_no));
    try {
      e.timestamp = parse_timestamp(fields[options.timestamp_column]);
    } catch (const ParseError& err) {
      throw ParseError(fmt::format("line {}: {}", line_no, err.what()));
    }
    auto [it, inserted] = group_of.try_emplace(e.session_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(std::move(e));
    any = true;
  }
  if (!any) throw IngestError("input contains no events");
  std::vector<Event> out;
  for (auto& g : groups) {
    std::stable_sort(g.begin(), g.end(), [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    std::move(g.begin(), g.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<Event> ingest(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IngestError(fmt::format("cannot open input file {}", path.string()));
  try {
    return parse_events(in, options);
  } catch (const IngestError&) {
    throw IngestError(fmt::format("input file {} contains no events", path.string()));
  }
}

// ---------------------------------------------------------------------------

ItemIndex Vocabulary::add(const std::string& id) {
  auto [it, inserted] = lookup_.try_emplace(id, static_cast<ItemIndex>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::optional<ItemIndex> Vocabulary::find(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

ItemIndex Vocabulary::index(const std::string& id) const {
  auto found = find(id);
  if (!found) throw VocabularyError("unknown item id " + id);
  return *found;
}

const std::string& Vocabulary::id(ItemIndex index) const {
  if (index >= ids_.size()) throw VocabularyError(fmt::format("item index {} outside vocabulary", index));
  return ids_[index];
}

Vocabulary Vocabulary::identity(std::size_t n) {
  Vocabulary v;
  for (std::size_t i = 0; i < n; ++i) v.add(std::to_string(i));
  return v;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

std::size_t SessionDataset::event_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.size();
  return n;
}

std::string to_string(SplitPolicy policy) {
  return policy == SplitPolicy::yoochoose_like ? "yoochoose_like" : "internal_like";
}

SplitPolicy parse_split_policy(const std::string& name) {
  if (name == "yoochoose_like" || name == "yoochoose") return SplitPolicy::yoochoose_like;
  if (name == "internal_like" || name == "internal") return SplitPolicy::internal_like;
  throw ConfigError("unknown split policy: " + name);
}

PreprocessConfig PreprocessConfig::defaults(SplitPolicy policy) {
  PreprocessConfig c;
  c.policy = policy;
  c.max_length = policy == SplitPolicy::internal_like ? 40 : 0;
  return c;
}

const SessionDataset& PreparedData::split(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::valid: return valid;
    case Split::test: return test;
  }
  return train;
}

namespace {

struct RawSession {
  std::string id;
  std::vector<const Event*> events;
};

void keep_last(std::vector<std::string>& items, std::size_t max_length) {
  if (max_length > 0 && items.size() > max_length) {
    items.erase(items.begin(), items.end() - static_cast<std::ptrdiff_t>(max_length));
  }
}

}  // namespace

PreparedData preprocess(const std::vector<Event>& events, const PreprocessConfig& config) {
  if (events.empty()) throw ConfigError("no events to preprocess");
  std::vector<RawSession> sessions;
  std::unordered_map<std::string, std::size_t> index_of;
  for (const auto& e : events) {
    auto [it, inserted] = index_of.try_emplace(e.session_id, sessions.size());
    if (inserted) sessions.push_back({e.session_id, {}});
    sessions[it->second].events.push_back(&e);
  }
  for (auto& s : sessions) {
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event* a, const Event* b) { return a->timestamp < b->timestamp; });
  }

  PreparedData out;
  out.train.split = Split::train;
  out.valid.split = Split::valid;
  out.test.split = Split::test;
  out.counters.sessions = sessions.size();

  std::vector<std::pair<std::string, std::vector<std::string>>> raw[3];
  const std::int64_t max_ts =
      std::max_element(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return a.timestamp < b.timestamp;
      })->timestamp;
  const std::int64_t test_start = max_ts - config.period_ms;
  const std::int64_t valid_start = max_ts - 2 * config.period_ms;
  for (const auto& s : sessions) {
    int bucket;
    if (config.policy == SplitPolicy::yoochoose_like) {
      const auto first = s.events.front()->timestamp, last = s.events.back()->timestamp;
      auto period = [&](std::int64_t t) { return t >= test_start ? 2 : (t >= valid_start ? 1 : 0); };
      if (period(first) != period(last)) {
        ++out.counters.dropped_boundary;
        continue;
      }
      bucket = period(first);
    } else {
      const auto h = stable_hash(s.id, config.seed) % 100;
      bucket = h < 80 ? 0 : (h < 90 ? 1 : 2);
    }
    std::vector<std::string> items;
    items.reserve(s.events.size());
    for (const auto* e : s.events) items.push_back(e->item_id);
    raw[bucket].emplace_back(s.id, std::move(items));
  }

  for (auto& [id, items] : raw[0]) {
    keep_last(items, config.max_length);
    if (items.size() < 2) {
      ++out.counters.dropped_short;
      continue;
    }
    Sequence seq;
    seq.reserve(items.size());
    for (const auto& item : items) seq.push_back(out.vocabulary.add(item));
    out.train.sequences.push_back(std::move(seq));
    out.train.session_ids.push_back(id);
  }
  if (out.train.sequences.empty()) throw ConfigError("training split is empty after preprocessing");

  for (int b = 1; b <= 2; ++b) {
    SessionDataset& ds = b == 1 ? out.valid : out.test;
    for (auto& [id, items] : raw[b]) {
      std::vector<std::string> known;
      for (auto& item : items) {
        if (out.vocabulary.find(item)) {
          known.push_back(std::move(item));
        } else {
          ++out.counters.dropped_unknown_items;
        }
      }
      keep_last(known, config.max_length);
      if (known.size() < 2) {
        ++out.counters.dropped_short;
        continue;
      }
      Sequence seq;
      for (const auto& item : known) seq.push_back(out.vocabulary.index(item));
      ds.sequences.push_back(std::move(seq));
      ds.session_ids.push_back(id);
    }
  }
  return out;
}

DatasetStats compute_stats(std::span<const Sequence> sequences) {
  DatasetStats st;
  std::unordered_map<ItemIndex, std::size_t> freq;
  for (const auto& s : sequences) {
    ++st.sequences;
    st.events += s.size();
    ++st.length_histogram[s.size()];
    for (auto i : s) ++freq[i];
  }
  st.distinct_items = freq.size();
  std::vector<std::size_t> counts;
  counts.reserve(freq.size());
  for (const auto& [item, c] : freq) counts.push_back(c);
  std::sort(counts.begin(), counts.end(), std::greater<>());
  std::size_t running = 0;
  for (auto c : counts) {
    running += c;
    st.cumulative_item_share.push_back(static_cast<double>(running) / static_cast<double>(st.events));
  }
  return st;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kDataMagic[9] = "SEQRDATA";
constexpr std::uint32_t kDataVersion = 1;

void write_split(std::ostream& out, const SessionDataset& ds) {
  binio::put_u64(out, ds.sequences.size());
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    binio::put_string(out, ds.session_ids[i]);
    binio::put_u64(out, ds.sequences[i].size());
    for (auto item : ds.sequences[i]) binio::put_uint<std::uint32_t>(out, item);
  }
}

SessionDataset read_split(std::istream& in, Split split, std::size_t vocab) {
  SessionDataset ds;
  ds.split = split;
  const auto n = binio::get_u64(in);
  for (std::uint64_t i = 0; i < n; ++i) {
    ds.session_ids.push_back(binio::get_string(in));
    const auto len = binio::get_u64(in);
    if (len > (std::uint64_t{1} << 32)) throw FormatError("sequence length out of range");
    Sequence s(len);
    for (auto& item : s) {
      item = binio::get_uint<std::uint32_t>(in);
      if (item >= vocab) throw FormatError("item index outside the embedded vocabulary");
    }
    ds.sequences.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

void save_prepared(const std::filesystem::path& path, const PreparedData& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestError("cannot write dataset cache " + path.string());
  binio::put_magic(out, kDataMagic, kDataVersion);
  binio::put_u64(out, data.vocabulary.size());
  for (const auto& id : data.vocabulary.ids()) binio::put_string(out, id);
  write_split(out, data.train);
  write_split(out, data.valid);
  write_split(out, data.test);
  if (!out) throw IngestError("failed writing dataset cache " + path.string());
}

PreparedData load_prepared(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open dataset cache " + path.string());
  binio::expect_magic(in, kDataMagic, kDataVersion);
  PreparedData data;
  const auto n = binio::get_u64(in);
  for (std::uint64_t i = 0; i < n; ++i) data.vocabulary.add(binio::get_string(in));
  if (data.vocabulary.size() != n) throw FormatError("duplicate ids in embedded vocabulary");
  data.train = read_split(in, Split::train, n);
  data.valid = read_split(in, Split::valid, n);
  data.test = read_split(in, Split::test, n);
  return data;
}

}  // namespace seqrec
