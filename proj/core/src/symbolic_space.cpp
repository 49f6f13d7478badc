#include "mflab/symbolic_space.hpp"

#include <algorithm>
#include <cmath>

#include "mflab/errors.hpp"

namespace mflab {

namespace {
std::uint64_t low_mask(int n) {
  return n >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
}
}  // namespace

Word Word::from_string(std::string_view s) {
  if (s == "e") return Word{};
  if (s.size() > static_cast<std::size_t>(kMaxWordLength))
    throw DepthExceeded("word longer than 64 letters: " + std::string(s));
  Word w;
  for (char ch : s) {
    if (ch != '0' && ch != '1') throw InvalidArgument("not a binary word: " + std::string(s));
    w = w.child(ch - '0');
  }
  return w;
}

Word Word::from_bits(std::uint64_t bits, int length) {
  if (length < 0 || length > kMaxWordLength) throw DepthExceeded("word length out of range");
  Word w;
  w.bits_ = bits & low_mask(length);
  w.length_ = length;
  return w;
}

Word Word::repeat(int letter, int length) {
  return from_bits(letter ? ~std::uint64_t{0} : 0, length);
}

Word Word::child(int letter) const {
  if (length_ >= kMaxWordLength) throw DepthExceeded("cannot extend a 64-letter word");
  Word w = *this;
  if (letter) w.bits_ |= std::uint64_t{1} << length_;
  ++w.length_;
  return w;
}

Word Word::concat(const Word& tail) const {
  if (length_ + tail.length_ > kMaxWordLength) throw DepthExceeded("concatenation exceeds 64 letters");
  Word w = *this;
  if (tail.length_ > 0) w.bits_ |= tail.bits_ << length_;
  w.length_ += tail.length_;
  return w;
}

Word Word::prefix(int n) const {
  if (n < 0 || n > length_) throw InvalidArgument("prefix length out of range");
  return from_bits(bits_, n);
}

bool Word::is_prefix_of(const Word& other) const {
  return length_ <= other.length_ && ((bits_ ^ other.bits_) & low_mask(length_)) == 0;
}

int Word::first_mismatch(const Word& other) const {
  const int n = std::min(length_, other.length_);
  const std::uint64_t diff = (bits_ ^ other.bits_) & low_mask(n);
  return diff == 0 ? -1 : std::countr_zero(diff);
}

std::string Word::to_string() const {
  if (length_ == 0) return "e";
  std::string s(static_cast<std::size_t>(length_), '0');
  for (int i = 0; i < length_; ++i) s[static_cast<std::size_t>(i)] = letter(i) ? '1' : '0';
  return s;
}

std::strong_ordering operator<=>(const Word& a, const Word& b) {
  const int i = a.first_mismatch(b);
  if (i >= 0) return a.letter(i) <=> b.letter(i);
  return a.length_ <=> b.length_;
}

int zero_count(const Word& w) { return w.zero_count(); }

int Point::letter(int i) const {
  if (i < prefix_.length()) return prefix_.letter(i);
  return tail_ == TailRule::RepeatOne ? 1 : 0;
}

Word Point::prefix_word(int n) const {
  if (n > kMaxWordLength) throw DepthExceeded("point prefix deeper than 64 letters");
  if (n <= prefix_.length()) return prefix_.prefix(n);
  return prefix_.concat(Word::repeat(tail_ == TailRule::RepeatOne ? 1 : 0, n - prefix_.length()));
}

DyadicRadius::DyadicRadius(int exponent) : m_(exponent) {
  if (exponent < 1) throw InvalidArgument("dyadic radius exponent must be >= 1");
  if (exponent > kMaxWordLength) throw DepthExceeded("dyadic radius finer than 2^-64");
}

double DyadicRadius::value() const { return std::ldexp(1.0, -m_); }

double Cylinder::diameter() const { return std::ldexp(1.0, -depth()); }

bool Cylinder::contains(const Point& x) const {
  return x.prefix_word(depth()) == word_;
}

CylinderRelation cylinder_relation(const Cylinder& a, const Cylinder& b) {
  CylinderRelation rel;
  const int i = a.word().first_mismatch(b.word());
  if (i < 0) return rel;
  rel.kind = CylinderRelation::Kind::Disjoint;
  rel.split_depth = i;
  rel.gap = std::ldexp(1.0, -i);
  return rel;
}

Cylinder ball_of(const Point& x, const DyadicRadius& r) {
  return Cylinder(x.prefix_word(r.exponent()));
}

double distance(const Point& x, const Point& y) {
  // beyond both prefixes the letters are constant, so one extra index settles it
  const int horizon = std::max(x.prefix().length(), y.prefix().length());
  for (int i = 0; i <= horizon; ++i)
    if (x.letter(i) != y.letter(i)) return std::ldexp(1.0, -i);
  return 0.0;
}

std::vector<Word> words_of_length(int n) {
  if (n < 0 || n > 24) throw BudgetExceeded("refusing to enumerate words longer than 24");
  std::vector<Word> out{Word{}};
  for (int d = 0; d < n; ++d) {
    std::vector<Word> next;
    next.reserve(out.size() * 2);
    for (const Word& w : out) {
      next.push_back(w.child(0));
      next.push_back(w.child(1));
    }
    out.swap(next);
  }
  return out;
}

}  // namespace mflab
