#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace phasecorr {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// The one canonical reduction used project-wide. Maps any finite real onto
// (-pi, pi]; IEEE remainder is exact, so reduced inputs reproduce bit-for-bit.
inline double wrap_angle(double x) noexcept {
  double r = std::remainder(x, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

// A phase on the circle, always stored as its canonical representative.
class Angle {
 public:
  constexpr Angle() noexcept = default;
  explicit Angle(double radians) : value_(wrap_angle(radians)) {
    if (!std::isfinite(radians))
      throw std::invalid_argument("Angle: non-finite value");
  }

  [[nodiscard]] double value() const noexcept { return value_; }

  Angle operator+(Angle rhs) const { return Angle(value_ + rhs.value_); }
  Angle operator-(Angle rhs) const { return Angle(value_ - rhs.value_); }
  Angle operator-() const { return Angle(-value_); }
  bool operator==(const Angle&) const noexcept = default;

 private:
  double value_ = 0.0;
};

// Wrapped distance |a - b| on the circle, in [0, pi].
inline double angular_distance(Angle a, Angle b) noexcept {
  return std::abs(wrap_angle(a.value() - b.value()));
}

}  // namespace phasecorr
