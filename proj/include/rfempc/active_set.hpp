#pragma once

/**
 * @file
 * @brief Candidate active set as a fixed-width bitmask over the p~ constraints.
 */

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rfempc {

class ActiveSet
{
public:
  using Word = std::uint64_t;

  ActiveSet() = default;
  explicit ActiveSet(int size);
  ActiveSet(int size, const std::vector<int> & indices);

  int size() const { return size_; }
  int count() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool test(int k) const { return (words_[k >> 6] >> (k & 63)) & 1u; }
  void set(int k);
  void reset(int k);
  ActiveSet with(int k) const;
  ActiveSet without(int k) const;

  /// this ⊆ other
  bool subset_of(const ActiveSet & other) const;

  std::vector<int> indices() const;

  /// Lowest 64 bits; exact when size() <= 64.
  Word low_word() const { return words_.empty() ? 0 : words_[0]; }
  const std::vector<Word> & words() const { return words_; }

  /// Hex bitmask, bit 0 is constraint 0, e.g. "0x5" for {0, 2}.
  std::string hex() const;
  /// Inverse of hex(); throws std::invalid_argument on malformed input or bits beyond size.
  static ActiveSet from_hex(const std::string & text, int size);

  /// Subsets of the same cardinality ordered by numeric value; false after the last one.
  bool next_combination();

  friend bool operator==(const ActiveSet & a, const ActiveSet & b)
  {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

  struct Hash
  {
    std::size_t operator()(const ActiveSet & a) const;
  };

private:
  int size_  = 0;
  int count_ = 0;
  std::vector<Word> words_;
};

}  // namespace rfempc
