#include "rfempc/active_set.hpp"

#include <bit>
#include <stdexcept>

namespace rfempc {

ActiveSet::ActiveSet(int size) : size_(size), words_(static_cast<std::size_t>((size + 63) / 64), 0)
{
  if (size < 0) { throw std::invalid_argument("ActiveSet: negative size"); }
}

ActiveSet::ActiveSet(int size, const std::vector<int> & indices) : ActiveSet(size)
{
  for (int k : indices) { set(k); }
}

void ActiveSet::set(int k)
{
  if (k < 0 || k >= size_) { throw std::out_of_range("ActiveSet::set: index out of range"); }
  Word & w = words_[k >> 6];
  const Word bit = Word{1} << (k & 63);
  if (!(w & bit)) {
    w |= bit;
    ++count_;
  }
}

void ActiveSet::reset(int k)
{
  if (k < 0 || k >= size_) { throw std::out_of_range("ActiveSet::reset: index out of range"); }
  Word & w = words_[k >> 6];
  const Word bit = Word{1} << (k & 63);
  if (w & bit) {
    w &= ~bit;
    --count_;
  }
}

ActiveSet ActiveSet::with(int k) const
{
  ActiveSet a = *this;
  a.set(k);
  return a;
}

ActiveSet ActiveSet::without(int k) const
{
  ActiveSet a = *this;
  a.reset(k);
  return a;
}

bool ActiveSet::subset_of(const ActiveSet & other) const
{
  if (count_ > other.count_) { return false; }
  const std::size_t n = std::min(words_.size(), other.words_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (words_[i] & ~other.words_[i]) { return false; }
  }
  for (std::size_t i = n; i < words_.size(); ++i) {
    if (words_[i]) { return false; }
  }
  return true;
}

std::vector<int> ActiveSet::indices() const
{
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count_));
  for (std::size_t i = 0; i < words_.size(); ++i) {
    Word w = words_[i];
    while (w) {
      out.push_back(static_cast<int>(i * 64) + std::countr_zero(w));
      w &= w - 1;
    }
  }
  return out;
}

std::string ActiveSet::hex() const
{
  static const char digits[] = "0123456789abcdef";
  std::string s;
  const int nibbles = (size_ + 3) / 4;
  for (int n = nibbles - 1; n >= 0; --n) {
    const int bit = 4 * n;
    const unsigned v = static_cast<unsigned>((words_[bit >> 6] >> (bit & 63)) & 0xF);
    if (s.empty() && v == 0) { continue; }
    s.push_back(digits[v]);
  }
  return "0x" + (s.empty() ? std::string("0") : s);
}

ActiveSet ActiveSet::from_hex(const std::string & text, int size)
{
  std::string body = text;
  if (body.size() >= 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) { body = body.substr(2); }
  if (body.empty()) { throw std::invalid_argument("ActiveSet::from_hex: empty mask"); }
  ActiveSet a(size);
  int bit = 0;
  for (auto it = body.rbegin(); it != body.rend(); ++it, bit += 4) {
    const char c = *it;
    int v;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      v = c - 'A' + 10;
    } else {
      throw std::invalid_argument("ActiveSet::from_hex: bad digit in " + text);
    }
    for (int j = 0; j < 4; ++j) {
      if (!((v >> j) & 1)) { continue; }
      if (bit + j >= size) { throw std::invalid_argument("ActiveSet::from_hex: bit beyond constraint count"); }
      a.set(bit + j);
    }
  }
  return a;
}

// Colex successor: move the lowest movable bit up one, pack the bits below it to the bottom.
bool ActiveSet::next_combination()
{
  if (count_ == 0) { return false; }
  const auto idx = indices();
  std::size_t j = 0;
  while (j + 1 < idx.size() && idx[j] + 1 == idx[j + 1]) { ++j; }
  const int top = idx[j] + 1;
  if (top >= size_) { return false; }
  for (std::size_t i = 0; i <= j; ++i) { reset(idx[i]); }
  set(top);
  for (std::size_t i = 0; i < j; ++i) { set(static_cast<int>(i)); }
  return true;
}

std::size_t ActiveSet::Hash::operator()(const ActiveSet & a) const
{
  std::size_t h = static_cast<std::size_t>(a.size_);
  for (Word w : a.words_) { h ^= std::hash<Word>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); }
  return h;
}

}  // namespace rfempc
