#pragma once

#include <stdexcept>

namespace cep {

// Boundary of a conformal set in score space. A set is either every score
// below a finite cut, all scores (Unbounded), or no score at all (Empty).
// Whether the cut itself belongs to the set depends on the construction:
// e-value sets are strict (s < value), rank-based sets are inclusive
// (s <= value). Callers pick via contains_strict / contains_inclusive.
class Threshold {
 public:
  enum class Kind { Finite, Unbounded, Empty };

  static Threshold finite(double value) { return Threshold(Kind::Finite, value); }
  static Threshold unbounded() { return Threshold(Kind::Unbounded, 0.0); }
  static Threshold empty() { return Threshold(Kind::Empty, 0.0); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_unbounded() const { return kind_ == Kind::Unbounded; }
  bool is_empty() const { return kind_ == Kind::Empty; }

  double value() const {
    if (kind_ != Kind::Finite) throw std::logic_error("Threshold::value() on a non-finite threshold");
    return value_;
  }

  bool contains_strict(double score) const {
    switch (kind_) {
      case Kind::Finite: return score < value_;
      case Kind::Unbounded: return true;
      case Kind::Empty: return false;
    }
    return false;
  }

  bool contains_inclusive(double score) const {
    switch (kind_) {
      case Kind::Finite: return score <= value_;
      case Kind::Unbounded: return true;
      case Kind::Empty: return false;
    }
    return false;
  }

 private:
  Threshold(Kind kind, double value) : kind_(kind), value_(value) {}

  Kind kind_;
  double value_;
};

}  // namespace cep
