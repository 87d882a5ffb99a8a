#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "liftchar/numlin.hpp"

namespace liftchar {

/// A word over the alphabet {1..d}, letters stored in written order
/// (first letter first).  The empty word indexes the vacuum vector.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<int> letters) : letters_(std::move(letters)) {}
  Word(std::initializer_list<int> letters) : letters_(letters) {}

  std::size_t length() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }
  int operator[](std::size_t i) const { return letters_[i]; }
  const std::vector<int>& letters() const { return letters_; }

  Word reversed() const { return Word(std::vector<int>(letters_.rbegin(), letters_.rend())); }

  Word operator+(const Word& tail) const {
    std::vector<int> l = letters_;
    l.insert(l.end(), tail.letters_.begin(), tail.letters_.end());
    return Word(std::move(l));
  }

  /// The word with the first `k` letters removed.
  Word drop_front(std::size_t k) const {
    return Word(std::vector<int>(letters_.begin() + static_cast<std::ptrdiff_t>(k), letters_.end()));
  }
  Word prefix(std::size_t k) const {
    return Word(std::vector<int>(letters_.begin(), letters_.begin() + static_cast<std::ptrdiff_t>(k)));
  }

  /// Digit-string form, e.g. "12"; the empty word prints as "".
  std::string str() const {
    std::string s;
    for (int l : letters_) s.push_back(static_cast<char>('0' + l));
    return s;
  }

  static Word parse(const std::string& s, int d) {
    if (d > 9) throw Error(ErrorKind::ParseError, "digit-string words need d <= 9");
    std::vector<int> l;
    for (char c : s) {
      const int v = c - '0';
      if (v < 1 || v > d)
        throw Error(ErrorKind::ParseError, "letter '" + std::string(1, c) + "' out of range in word \"" + s + "\"");
      l.push_back(v);
    }
    return Word(std::move(l));
  }

  void check_alphabet(int d) const {
    for (int l : letters_)
      if (l < 1 || l > d) throw Error(ErrorKind::IndexOutOfRange, "letter out of range");
  }

  /// Graded lexicographic order: shorter words first, then letter by letter.
  friend bool operator<(const Word& a, const Word& b) {
    if (a.length() != b.length()) return a.length() < b.length();
    return a.letters_ < b.letters_;
  }
  friend bool operator==(const Word& a, const Word& b) { return a.letters_ == b.letters_; }
  friend bool operator!=(const Word& a, const Word& b) { return !(a == b); }

 private:
  std::vector<int> letters_;
};

}  // namespace liftchar
