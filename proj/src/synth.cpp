// SPDX-License-Identifier: Apache-2.0
#include "seqrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "seqrec/errors.hpp"
#include "seqrec/random.hpp"

namespace seqrec {

std::string to_string(SynthOrder order) {
  switch (order) {
    case SynthOrder::markov1: return "markov1";
    case SynthOrder::markov2: return "markov2";
    case SynthOrder::cycle: return "cycle";
    case SynthOrder::uniform: return "uniform";
  }
  return "?";
}

SynthOrder parse_synth_order(const std::string& name) {
  if (name == "markov1") return SynthOrder::markov1;
  if (name == "markov2") return SynthOrder::markov2;
  if (name == "cycle") return SynthOrder::cycle;
  if (name == "uniform") return SynthOrder::uniform;
  throw ConfigError("unknown synthetic order: " + name);
}

void SynthConfig::validate() const {
  if (n_items < 2) throw ConfigError("synthetic data needs at least 2 items");
  if (min_length < 2 || max_length < min_length) {
    throw ConfigError(fmt::format("invalid length range [{}, {}]", min_length, max_length));
  }
  if (order == SynthOrder::markov1) {
    if (strong == 0 || strong + weak > n_items) throw ConfigError("markov1 fanout must be in [1, n_items]");
    if (!(decay > 0.0 && decay <= 1.0) || !(weak_scale > 0.0 && weak_scale <= 1.0)) {
      throw ConfigError("markov1 decay and weak_scale must lie in (0, 1]");
    }
  }
  if (order == SynthOrder::markov2) {
    if (labels == 0 || successors == 0) throw ConfigError("markov2 needs positive labels and successors");
    if (n_items % labels != 0) throw ConfigError("markov2 needs n_items divisible by the label count");
    if (labels * successors > n_items) throw ConfigError("markov2 needs labels * successors <= n_items");
  }
}

TransitionTable::TransitionTable(const SynthConfig& config) : order_(config.order), n_(config.n_items) {
  config.validate();
  Rng rng(config.seed);
  std::vector<ItemIndex> ring(n_);
  std::iota(ring.begin(), ring.end(), ItemIndex{0});
  switch (order_) {
    case SynthOrder::uniform:
      break;
    case SynthOrder::cycle: {
      shuffle(std::span(ring), rng);
      rows_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) rows_[ring[i]] = {{ring[(i + 1) % n_], 1.0}};
      break;
    }
    case SynthOrder::markov1: {
      shuffle(std::span(ring), rng);
      const std::size_t fan = config.strong + config.weak;
      const std::size_t blocks = (n_ + fan - 1) / fan;
      std::vector<double> profile(fan);
      double total = 0.0;
      for (std::size_t k = 0; k < fan; ++k) {
        profile[k] = std::pow(config.decay, static_cast<double>(k)) * (k < config.strong ? 1.0 : config.weak_scale);
        total += profile[k];
      }
      for (auto& w : profile) w /= total;
      std::vector<ItemIndex> source(n_);
      std::iota(source.begin(), source.end(), ItemIndex{0});
      shuffle(std::span(source), rng);
      rows_.resize(n_);
      for (std::size_t s = 0; s < n_; ++s) {
        const std::size_t block = s % blocks;
        ItemDistribution row;
        for (std::size_t k = 0; k < fan; ++k) row.emplace_back(ring[(block * fan + k) % n_], profile[k]);
        std::sort(row.begin(), row.end());
        rows_[source[s]] = std::move(row);
      }
      break;
    }
    case SynthOrder::markov2: {
      labels_ = config.labels;
      const std::size_t g_count = labels_, succ = config.successors;
      rows_.resize(g_count * n_);
      for (std::size_t cls = 0; cls < g_count; ++cls) {
        std::vector<ItemIndex> perm(n_);
        std::iota(perm.begin(), perm.end(), ItemIndex{0});
        shuffle(std::span(perm), rng);
        for (std::size_t a = cls; a < n_; a += g_count) {
          const std::size_t j = a / g_count;
          for (std::size_t g = 0; g < g_count; ++g) {
            ItemDistribution row;
            for (std::size_t k = 0; k < succ; ++k) {
              row.emplace_back(perm[(j * g_count * succ + g * succ + k) % n_], 1.0 / static_cast<double>(succ));
            }
            std::sort(row.begin(), row.end());
            rows_[g * n_ + a] = std::move(row);
          }
        }
      }
      break;
    }
  }
}

ItemDistribution TransitionTable::successors_of(ItemIndex current, std::size_t label) const {
  if (order_ == SynthOrder::uniform) {
    ItemDistribution all;
    all.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) all.emplace_back(static_cast<ItemIndex>(i), 1.0 / static_cast<double>(n_));
    return all;
  }
  return rows_[label * n_ + current];
}

ItemDistribution TransitionTable::next(std::span<const ItemIndex> prefix, std::size_t max_history) const {
  if (prefix.empty()) throw ContractError("transition lookup needs at least the current item");
  const ItemIndex current = prefix.back();
  if (current >= n_) throw VocabularyError(fmt::format("item {} outside synthetic vocabulary", current));
  if (order_ != SynthOrder::markov2) return successors_of(current, 0);
  if (prefix.size() >= 2 && max_history >= 2) return successors_of(current, prefix[prefix.size() - 2] % labels_);
  std::map<ItemIndex, double> mix;
  for (std::size_t g = 0; g < labels_; ++g) {
    for (auto [item, p] : successors_of(current, g)) mix[item] += p / static_cast<double>(labels_);
  }
  return {mix.begin(), mix.end()};
}

namespace {

ItemIndex draw(const ItemDistribution& dist, Rng& rng) {
  const double u = uniform_unit(rng);
  double acc = 0.0;
  for (auto [item, p] : dist) {
    acc += p;
    if (u < acc) return item;
  }
  return dist.back().first;
}

}  // namespace

std::vector<Sequence> TransitionTable::sample(std::size_t count, std::size_t min_length, std::size_t max_length,
                                              std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<Sequence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = min_length + uniform_index(rng, max_length - min_length + 1);
    Sequence s;
    s.reserve(len);
    s.push_back(static_cast<ItemIndex>(uniform_index(rng, n_)));
    while (s.size() < len) {
      if (order_ == SynthOrder::markov2) {
        const std::size_t label = s.size() >= 2 ? s[s.size() - 2] % labels_ : uniform_index(rng, labels_);
        s.push_back(draw(successors_of(s.back(), label), rng));
      } else {
        s.push_back(draw(successors_of(s.back(), 0), rng));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

PreparedData synth_generate(const SynthConfig& config) {
  TransitionTable table(config);
  PreparedData data;
  data.vocabulary = Vocabulary::identity(config.n_items);
  const std::size_t counts[3] = {config.n_sequences, config.n_valid, config.n_test};
  SessionDataset* splits[3] = {&data.train, &data.valid, &data.test};
  const Split tags[3] = {Split::train, Split::valid, Split::test};
  for (int s = 0; s < 3; ++s) {
    splits[s]->split = tags[s];
    splits[s]->sequences =
        table.sample(counts[s], config.min_length, config.max_length, mix64(config.seed * 4 + 1 + s));
    for (std::size_t i = 0; i < counts[s]; ++i) splits[s]->session_ids.push_back(fmt::format("{}-{}", to_string(tags[s]), i));
  }
  data.counters.sessions = counts[0] + counts[1] + counts[2];
  return data;
}

std::vector<ItemIndex> distribution_top_k(const ItemDistribution& dist, std::size_t k, std::size_t n) {
  k = std::min(k, n);
  std::vector<std::pair<ItemIndex, double>> ranked(dist.begin(), dist.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<ItemIndex> out;
  std::vector<char> used(n, 0);
  for (const auto& [item, p] : ranked) {
    if (out.size() == k) break;
    if (p <= 0.0) break;
    out.push_back(item);
    used[item] = 1;
  }
  for (std::size_t i = 0; i < n && out.size() < k; ++i) {
    if (!used[i]) out.push_back(static_cast<ItemIndex>(i));
  }
  return out;
}

double expected_optimal_recall(const TransitionTable& table, std::span<const Sequence> sequences, std::size_t k,
                               std::size_t max_history) {
  double total = 0.0;
  std::size_t points = 0;
  for (const auto& s : sequences) {
    for (std::size_t t = 1; t < s.size(); ++t) {
      const auto dist = table.next(std::span(s).first(t), max_history);
      const auto top = distribution_top_k(dist, k, table.num_items());
      double mass = 0.0;
      for (auto [item, p] : dist) {
        if (std::find(top.begin(), top.end(), item) != top.end()) mass += p;
      }
      total += mass;
      ++points;
    }
  }
  return points ? total / static_cast<double>(points) : 0.0;
}

}  // namespace seqrec
