#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "teichlab/errors.hpp"

namespace teichlab {

/**
 * @brief Freely reduced word in the free group <a,b>; capitals are inverses.
 */
class Word {
 public:
  Word() = default;

  /// accepts a, b, A, B and the suffixes ^-1 / ⁻¹; the result is freely reduced
  static Word parse(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
      char ch = text[i];
      if (ch == ' ') {
        ++i;
        continue;
      }
      if (ch != 'a' && ch != 'b' && ch != 'A' && ch != 'B') throw PreconditionError("word: unexpected character in '" + std::string(text) + "'");
      ++i;
      bool inv = false;
      if (text.substr(i, 3) == "^-1") {
        inv = true;
        i += 3;
      } else if (text.substr(i, 5) == "⁻¹") {
        inv = true;
        i += 5;
      }
      out.push_back(inv ? flip(ch) : ch);
    }
    return Word(free_reduce(out));
  }

  static Word from_letters(std::string letters) { return Word(free_reduce(letters)); }

  const std::string& str() const { return s_; }
  std::size_t size() const { return s_.size(); }
  bool empty() const { return s_.empty(); }
  char operator[](std::size_t i) const { return s_[i]; }

  Word inverse() const {
    std::string r(s_.rbegin(), s_.rend());
    for (char& c : r) c = flip(c);
    return Word(std::move(r));
  }

  Word reversed() const { return Word(std::string(s_.rbegin(), s_.rend())); }

  Word operator*(const Word& o) const { return Word(free_reduce(s_ + o.s_)); }

  Word cyclically_reduced() const {
    std::size_t i = 0, j = s_.size();
    while (j - i >= 2 && s_[i] == flip(s_[j - 1])) {
      ++i;
      --j;
    }
    return Word(s_.substr(i, j - i));
  }

  /// exponent sums (homology class) in the basis a, b
  std::pair<long long, long long> homology() const {
    long long p = 0, q = 0;
    for (char c : s_) {
      if (c == 'a') ++p;
      if (c == 'A') --p;
      if (c == 'b') ++q;
      if (c == 'B') --q;
    }
    return {p, q};
  }

  /// substitute a -> pa, b -> pb
  Word substitute(const Word& pa, const Word& pb) const {
    Word ia = pa.inverse(), ib = pb.inverse();
    std::string out;
    for (char c : s_) {
      const std::string& img = c == 'a' ? pa.s_ : c == 'A' ? ia.s_ : c == 'b' ? pb.s_ : ib.s_;
      out += img;
    }
    return Word(free_reduce(out));
  }

  bool operator==(const Word& o) const { return s_ == o.s_; }
  bool operator<(const Word& o) const { return s_ < o.s_; }

  static char flip(char c) {
    switch (c) {
      case 'a': return 'A';
      case 'A': return 'a';
      case 'b': return 'B';
      default: return 'b';
    }
  }

 private:
  explicit Word(std::string s) : s_(std::move(s)) {}

  static std::string free_reduce(const std::string& in) {
    std::string st;
    st.reserve(in.size());
    for (char c : in) {
      if (!st.empty() && st.back() == flip(c))
        st.pop_back();
      else
        st.push_back(c);
    }
    return st;
  }

  std::string s_;
};

/// index of the lexicographically least rotation (Booth)
inline std::size_t least_rotation(const std::string& s) {
  const std::size_t n = s.size();
  if (n == 0) return 0;
  std::string d = s + s;
  std::vector<long> f(2 * n, -1);
  std::size_t k = 0;
  for (std::size_t j = 1; j < 2 * n; ++j) {
    char sj = d[j];
    long i = f[j - k - 1];
    while (i != -1 && sj != d[k + i + 1]) {
      if (sj < d[k + i + 1]) k = j - i - 1;
      i = f[i];
    }
    if (sj != d[k + i + 1]) {
      if (sj < d[k]) k = j;
      f[j - k] = -1;
    } else {
      f[j - k] = i + 1;
    }
  }
  return k;
}

inline std::string least_rotation_string(const std::string& s) {
  std::size_t k = least_rotation(s);
  return s.substr(k) + s.substr(0, k);
}

/// conjugacy class of the oriented loop
inline std::string canonical_oriented(const Word& w) { return least_rotation_string(w.cyclically_reduced().str()); }

/// free homotopy class of the unoriented closed curve
inline std::string canonical_curve(const Word& w) {
  Word c = w.cyclically_reduced();
  return std::min(least_rotation_string(c.str()), least_rotation_string(c.inverse().str()));
}

}  // namespace teichlab
