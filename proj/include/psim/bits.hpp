#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace psim {

// Variable-length bit string. Bits are addressed 0..size()-1; multi-bit
// fields are stored LSB-first so append_uint/read round-trip values.
class Bits {
 public:
  Bits() = default;

  int size() const { return n_; }
  bool empty() const { return n_ == 0; }

  void clear() {
    words_.clear();
    n_ = 0;
  }

  void append_bit(bool b) {
    int w = n_ >> 6, o = n_ & 63;
    if (w >= (int)words_.size()) words_.push_back(0);
    if (b) words_[w] |= (1ull << o);
    ++n_;
  }

  void append_uint(uint64_t value, int width) {
    if (width < 0 || width > 64) throw std::invalid_argument("Bits: bad width");
    if (width < 64 && value >> width)
      throw std::invalid_argument("Bits: value does not fit width");
    for (int i = 0; i < width; ++i) append_bit((value >> i) & 1);
  }

  void append(const Bits& other) {
    for (int i = 0; i < other.n_; ++i) append_bit(other.bit(i));
  }

  bool bit(int i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

  uint64_t read_uint(int pos, int width) const {
    if (pos < 0 || width < 0 || width > 64 || pos + width > n_)
      throw std::out_of_range("Bits: read out of range");
    uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      if (bit(pos + i)) v |= (1ull << i);
    return v;
  }

  Bits slice(int pos, int width) const {
    Bits out;
    for (int i = 0; i < width; ++i) out.append_bit(bit(pos + i));
    return out;
  }

  void set_bit(int i, bool b) {
    if (i < 0 || i >= n_) throw std::out_of_range("Bits: set out of range");
    uint64_t m = 1ull << (i & 63);
    if (b)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }

  static Bits of_uint(uint64_t value, int width) {
    Bits b;
    b.append_uint(value, width);
    return b;
  }

  bool operator==(const Bits& o) const {
    if (n_ != o.n_) return false;
    for (int i = 0; i < n_; ++i)
      if (bit(i) != o.bit(i)) return false;
    return true;
  }
  bool operator!=(const Bits& o) const { return !(*this == o); }

  // Hex dump, low bit first per nibble group; used for seed traces.
  std::string to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (int p = 0; p < n_; p += 4) {
      int w = std::min(4, n_ - p);
      s.push_back(digits[read_uint(p, w)]);
    }
    return s;
  }

 private:
  std::vector<uint64_t> words_;
  int n_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const Bits& b) : b_(&b) {}
  uint64_t take(int width) {
    uint64_t v = b_->read_uint(pos_, width);
    pos_ += width;
    return v;
  }
  Bits take_bits(int width) {
    Bits out = b_->slice(pos_, width);
    pos_ += width;
    return out;
  }
  int remaining() const { return b_->size() - pos_; }
  bool done() const { return remaining() == 0; }

 private:
  const Bits* b_;
  int pos_ = 0;
};

inline int ceil_log2(uint64_t x) {
  int b = 0;
  while ((1ull << b) < x) ++b;
  return b;
}

}  // namespace psim
