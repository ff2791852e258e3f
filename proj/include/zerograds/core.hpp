#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zg {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Optimization variable. Unit-agnostic reals, fixed dimension per task.
using ParameterVector = VectorX<double>;
using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

enum class ErrorKind {
  kDimension,
  kNonFinite,
  kInvalidArgument,
  kUnknownName,
  kIo,
};

/// All library failures. The message always starts with a short tag
/// ("dimension", "non-finite", ...) so callers can match on text as well.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require_dim(std::ptrdiff_t got, std::ptrdiff_t want,
                        const char* where) {
  if (got != want) {
    throw Error(ErrorKind::kDimension,
                std::string("dimension mismatch in ") + where + ": got " +
                    std::to_string(got) + ", expected " + std::to_string(want));
  }
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& v) {
  return v.allFinite();
}

/// Axis-aligned box. lower[i] < upper[i] for every i.
struct Domain {
  Vector lower;
  Vector upper;

  Domain() = default;
  Domain(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    require_dim(upper.size(), lower.size(), "Domain");
    if (lower.size() < 1) {
      throw Error(ErrorKind::kDimension, "dimension: domain must be >= 1-D");
    }
    if (!(lower.array() < upper.array()).all()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "invalid domain: lower must be < upper element-wise");
    }
  }

  static Domain box(std::ptrdiff_t n, double lo, double hi) {
    return Domain(Vector::Constant(n, lo), Vector::Constant(n, hi));
  }

  std::ptrdiff_t dim() const { return lower.size(); }
  Vector extent() const { return upper - lower; }
  double mean_extent() const { return extent().mean(); }
  double volume() const { return extent().prod(); }

  Vector clamp(const Vector& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }
  bool contains(const Vector& x) const {
    return (x.array() >= lower.array()).all() &&
           (x.array() <= upper.array()).all();
  }
};

}  // namespace zg
