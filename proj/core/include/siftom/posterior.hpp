#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace siftom {

// Normalized probability map with deterministic (sorted) key order.
template <class Key>
class PosteriorTable {
 public:
  using Entry = std::pair<Key, double>;

  PosteriorTable() = default;

  // Sorts by key, sums duplicate keys and normalizes. Returns an empty table
  // when the total mass is zero or not finite.
  static PosteriorTable from_weights(std::vector<Entry> weights) {
    std::sort(weights.begin(), weights.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    PosteriorTable t;
    for (auto& [key, w] : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("negative or NaN weight");
      if (!t.entries_.empty() && !(t.entries_.back().first < key)) {
        t.entries_.back().second += w;
      } else {
        t.entries_.emplace_back(std::move(key), w);
      }
    }
    double total = 0.0;
    for (const auto& e : t.entries_) total += e.second;
    if (!(total > 0.0) || !std::isfinite(total)) return {};
    for (auto& e : t.entries_) e.second /= total;
    return t;
  }

  // Same as from_weights with natural-log weights; -inf means zero mass.
  static PosteriorTable from_log_weights(std::vector<Entry> log_weights) {
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& e : log_weights) peak = std::max(peak, e.second);
    if (!std::isfinite(peak)) return {};
    for (auto& e : log_weights) e.second = std::exp(e.second - peak);
    return from_weights(std::move(log_weights));
  }

  static PosteriorTable uniform(std::vector<Key> keys) {
    std::vector<Entry> w;
    w.reserve(keys.size());
    for (auto& k : keys) w.emplace_back(std::move(k), 1.0);
    return from_weights(std::move(w));
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double probability(const Key& key) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& e, const Key& k) { return e.first < k; });
    if (it == entries_.end() || key < it->first) return 0.0;
    return it->second;
  }

  bool contains(const Key& key) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& e, const Key& k) { return e.first < k; });
    return it != entries_.end() && !(key < it->first);
  }

  // Highest-probability entries first; ties keep key order.
  std::vector<Entry> ranked() const {
    std::vector<Entry> out = entries_;
    std::stable_sort(out.begin(), out.end(),
                     [](const Entry& a, const Entry& b) { return a.second > b.second; });
    return out;
  }

  std::vector<Entry> top_k(std::size_t k) const {
    if (k == 0) throw std::invalid_argument("top_k requires k >= 1");
    auto out = ranked();
    if (out.size() > k) out.resize(k);
    return out;
  }

  const Key& argmax() const {
    if (entries_.empty()) throw std::logic_error("argmax of an empty posterior");
    const Entry* best = &entries_.front();
    for (const auto& e : entries_) {
      if (e.second > best->second) best = &e;
    }
    return best->first;
  }

  double total() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.second;
    return s;
  }

 private:
  std::vector<Entry> entries_;
};

}  // namespace siftom
