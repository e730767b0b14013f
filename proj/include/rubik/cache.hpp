#pragma once

#include <cstdint>
#include <list>
#include <unordered_map>
#include <vector>

#include "rubik/errors.hpp"

namespace rubik {

/// Fully-associative LRU cache over fixed-size entries (one feature vector
/// or one partial-aggregate vector per entry). Tags are opaque 64-bit keys:
/// a node id for the G-D cache, a packed (min, max) node pair for G-C.
///
/// probe() updates recency and fills on miss, which is the behavior the
/// stack-based reference oracle models; an in-flight fill is represented by
/// the entry's ready_cycle.
class LruCacheModel {
 public:
  LruCacheModel() = default;
  LruCacheModel(std::uint64_t capacity_bytes, std::uint64_t entry_bytes) { reset(capacity_bytes, entry_bytes); }

  void reset(std::uint64_t capacity_bytes, std::uint64_t entry_bytes) {
    if (entry_bytes == 0) throw ArgumentError("LruCacheModel: entry size must be positive");
    capacity_entries_ = capacity_bytes / entry_bytes;
    flush();
  }

  void flush() {
    lru_.clear();
    index_.clear();
  }

  std::uint64_t capacity_entries() const { return capacity_entries_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::size_t resident() const { return lru_.size(); }

  struct ProbeResult {
    bool hit = false;
    std::uint64_t ready_cycle = 0;  // when the data backing a hit is usable
  };

  /// Looks up a tag, refreshing recency. On a miss the tag is inserted
  /// immediately (evicting the LRU entry) and marked ready at `fill_ready`,
  /// so a second probe before the fill completes is a hit that waits.
  ProbeResult probe(std::uint64_t tag, std::uint64_t fill_ready) {
    if (trace_) trace_->push_back(tag);
    auto it = index_.find(tag);
    if (it != index_.end()) {
      hits_++;
      lru_.splice(lru_.begin(), lru_, it->second);
      if (decisions_) decisions_->push_back(true);
      return {true, it->second->ready_cycle};
    }
    misses_++;
    if (decisions_) decisions_->push_back(false);
    if (capacity_entries_ == 0) return {false, fill_ready};
    if (lru_.size() >= capacity_entries_) {
      index_.erase(lru_.back().tag);
      lru_.pop_back();
    }
    lru_.push_front(Entry{tag, fill_ready});
    index_[tag] = lru_.begin();
    return {false, fill_ready};
  }

  bool contains(std::uint64_t tag) const { return index_.count(tag) != 0; }

  /// Optional recording hooks used by the conformance tests.
  void record_into(std::vector<std::uint64_t>* trace, std::vector<bool>* decisions) {
    trace_ = trace;
    decisions_ = decisions;
  }

 private:
  struct Entry {
    std::uint64_t tag;
    std::uint64_t ready_cycle;
  };
  std::uint64_t capacity_entries_ = 0;
  std::list<Entry> lru_;
  std::unordered_map<std::uint64_t, std::list<Entry>::iterator> index_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::vector<std::uint64_t>* trace_ = nullptr;
  std::vector<bool>* decisions_ = nullptr;
};

/// Textbook stack-based LRU simulation, kept deliberately independent of
/// LruCacheModel: the stack is a plain vector scanned linearly. Returns the
/// hit/miss decision per access.
inline std::vector<bool> lru_reference_oracle(const std::vector<std::uint64_t>& accesses,
                                              std::size_t capacity_entries) {
  if (capacity_entries < 1) throw ArgumentError("lru_reference_oracle: capacity must be >= 1");
  std::vector<bool> decisions;
  decisions.reserve(accesses.size());
  std::vector<std::uint64_t> stack;  // front = most recently used
  for (std::uint64_t tag : accesses) {
    bool hit = false;
    for (std::size_t i = 0; i < stack.size(); ++i) {
      if (stack[i] == tag) {
        hit = i < capacity_entries;
        stack.erase(stack.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
    stack.insert(stack.begin(), tag);
    if (stack.size() > capacity_entries) stack.resize(capacity_entries);
    decisions.push_back(hit);
  }
  return decisions;
}

/// Packs a canonical (min, max) node pair into a 64-bit G-C tag.
inline std::uint64_t pair_tag(std::uint32_t lo, std::uint32_t hi) {
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

}  // namespace rubik
