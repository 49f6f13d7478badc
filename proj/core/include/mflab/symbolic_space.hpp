#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace mflab {

// Longest word representable; letter i lives in bit i.
inline constexpr int kMaxWordLength = 64;

class Word {
 public:
  Word() = default;

  static Word from_string(std::string_view s);  // "0101", or "e" for the empty word
  static Word from_bits(std::uint64_t bits, int length);
  static Word repeat(int letter, int length);

  int length() const { return length_; }
  bool empty() const { return length_ == 0; }
  int letter(int i) const { return static_cast<int>((bits_ >> i) & 1u); }
  std::uint64_t bits() const { return bits_; }

  Word child(int letter) const;
  Word concat(const Word& tail) const;
  Word prefix(int n) const;
  bool is_prefix_of(const Word& other) const;

  // index of the first differing letter within the common length, or -1
  int first_mismatch(const Word& other) const;

  int zero_count() const { return length_ - std::popcount(bits_); }
  std::string to_string() const;

  friend bool operator==(const Word&, const Word&) = default;
  friend std::strong_ordering operator<=>(const Word& a, const Word& b);

 private:
  std::uint64_t bits_ = 0;
  int length_ = 0;
};

int zero_count(const Word& w);

enum class TailRule { RepeatOne, RepeatZero };

class Point {
 public:
  Point() = default;
  explicit Point(Word prefix, TailRule tail = TailRule::RepeatOne)
      : prefix_(prefix), tail_(tail) {}
  static Point from_string(std::string_view s, TailRule tail = TailRule::RepeatOne) {
    return Point(Word::from_string(s), tail);
  }

  const Word& prefix() const { return prefix_; }
  TailRule tail() const { return tail_; }
  int letter(int i) const;
  Word prefix_word(int n) const;  // n <= kMaxWordLength

 private:
  Word prefix_;
  TailRule tail_ = TailRule::RepeatOne;
};

class DyadicRadius {
 public:
  explicit DyadicRadius(int exponent);
  int exponent() const { return m_; }
  double value() const;

 private:
  int m_;
};

class Cylinder {
 public:
  Cylinder() = default;
  explicit Cylinder(Word w) : word_(w) {}
  static Cylinder from_string(std::string_view s) { return Cylinder(Word::from_string(s)); }

  const Word& word() const { return word_; }
  int depth() const { return word_.length(); }
  double diameter() const;
  bool contains(const Cylinder& other) const { return word_.is_prefix_of(other.word_); }
  bool contains(const Point& x) const;
  std::string to_string() const { return word_.to_string(); }

  friend bool operator==(const Cylinder&, const Cylinder&) = default;
  friend auto operator<=>(const Cylinder&, const Cylinder&) = default;

 private:
  Word word_;
};

struct CylinderRelation {
  enum class Kind { Nested, Disjoint };
  Kind kind = Kind::Nested;
  int split_depth = -1;  // first mismatch index when disjoint
  double gap = 0.0;      // 2^-split_depth when disjoint
};

CylinderRelation cylinder_relation(const Cylinder& a, const Cylinder& b);

Cylinder ball_of(const Point& x, const DyadicRadius& r);

double distance(const Point& x, const Point& y);

// all 2^n words of length n in lexicographic order
std::vector<Word> words_of_length(int n);

}  // namespace mflab

template <>
struct std::hash<mflab::Word> {
  std::size_t operator()(const mflab::Word& w) const noexcept {
    std::uint64_t h = w.bits() * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(w.length()) + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};
