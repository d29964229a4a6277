#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spmp {

/// Thrown when an argument violates a documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A finite real vector of fixed length, the object being approximated.
class Signal {
 public:
  Signal() = default;
  explicit Signal(std::vector<double> samples) : samples_(std::move(samples)) { validate(); }
  Signal(std::initializer_list<double> init) : samples_(init) { validate(); }
  static Signal zeros(std::size_t n) { return Signal(std::vector<double>(n, 0.0)); }

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double operator[](std::size_t i) const { return samples_[i]; }
  std::span<const double> span() const noexcept { return samples_; }
  const std::vector<double>& values() const noexcept { return samples_; }

 private:
  void validate() const {
    for (double v : samples_) {
      if (!std::isfinite(v)) throw PreconditionError("Signal: non-finite sample");
    }
  }
  std::vector<double> samples_;
};

/// 1-based atom index into a dictionary of M atoms.
class AtomIndex {
 public:
  constexpr AtomIndex() = default;
  constexpr explicit AtomIndex(std::size_t one_based) : value_(one_based) {}
  static constexpr AtomIndex from_zero_based(std::size_t i) { return AtomIndex(i + 1); }

  constexpr std::size_t value() const noexcept { return value_; }
  constexpr std::size_t zero_based() const noexcept { return value_ - 1; }

  friend constexpr bool operator==(AtomIndex, AtomIndex) = default;
  friend constexpr auto operator<=>(AtomIndex, AtomIndex) = default;

 private:
  std::size_t value_ = 0;
};

inline void check_index(AtomIndex idx, std::size_t size) {
  if (idx.value() < 1 || idx.value() > size) {
    throw std::out_of_range("atom index " + std::to_string(idx.value()) + " outside [1, " +
                            std::to_string(size) + "]");
  }
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<Eigen::Index>(a.size());
  return Eigen::Map<const Eigen::VectorXd>(a.data(), n).dot(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
}

inline double norm2(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm2(a)); }

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace detail
}  // namespace spmp
