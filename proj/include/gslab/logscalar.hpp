#pragma once
// Nonnegative reals stored by natural log, for times and queue masses that
// outgrow double range.  Zero is encoded as -inf.

#include <cmath>
#include <limits>

namespace gslab {

// log(e^a + e^b) without overflow; handles +/-inf operands.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  if (std::isinf(a) || std::isinf(b)) {
    return std::numeric_limits<double>::infinity();
  }
  const double hi = (a > b) ? a : b;
  const double lo = (a > b) ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

class LogScalar {
 public:
  constexpr LogScalar() : log_value_(-std::numeric_limits<double>::infinity()) {}

  static LogScalar from_log(double log_value) {
    LogScalar s;
    s.log_value_ = log_value;
    return s;
  }

  static LogScalar from_linear(double v) {
    LogScalar s;
    s.log_value_ = (v == 0.0) ? -std::numeric_limits<double>::infinity()
                              : std::log(v);
    return s;
  }

  double log() const { return log_value_; }
  double to_linear() const { return std::exp(log_value_); }  // may overflow
  bool is_zero() const {
    return log_value_ == -std::numeric_limits<double>::infinity();
  }

  LogScalar operator+(LogScalar o) const {
    return from_log(log_add_exp(log_value_, o.log_value_));
  }
  LogScalar& operator+=(LogScalar o) {
    log_value_ = log_add_exp(log_value_, o.log_value_);
    return *this;
  }
  LogScalar operator*(LogScalar o) const {
    if (is_zero() || o.is_zero()) return LogScalar();
    return from_log(log_value_ + o.log_value_);
  }

  friend bool operator<(LogScalar a, LogScalar b) {
    return a.log_value_ < b.log_value_;
  }
  friend bool operator>(LogScalar a, LogScalar b) { return b < a; }
  friend bool operator==(LogScalar a, LogScalar b) {
    return a.log_value_ == b.log_value_;
  }

 private:
  double log_value_;
};

}  // namespace gslab
