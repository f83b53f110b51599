#pragma once

#include <bergman/error.hpp>

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <iomanip>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bergman {

using Complex = std::complex<double>;

enum class DomainKind { UnitDisk, Annulus, Product };

/// Symbolic model domain: the unit disk, the annulus r < |z| < 1, or a finite
/// product of those planar factors.
class DomainSpec {
 public:
  static DomainSpec unit_disk() { return DomainSpec(DomainKind::UnitDisk, 0.0, {}); }

  static DomainSpec annulus(double r) {
    require(r > 0.0 && r < 1.0, ErrorCode::InvalidArgument,
            "annulus parameter must satisfy 0 < r < 1, got " + std::to_string(r));
    return DomainSpec(DomainKind::Annulus, r, {});
  }

  static DomainSpec product(std::vector<DomainSpec> factors) {
    require(!factors.empty(), ErrorCode::InvalidArgument, "product needs at least one factor");
    for (const auto& f : factors) {
      require(f.is_planar(), ErrorCode::InvalidArgument, "product factors must be one-dimensional");
    }
    return DomainSpec(DomainKind::Product, 0.0, std::move(factors));
  }

  DomainKind kind() const noexcept { return kind_; }
  bool is_planar() const noexcept { return kind_ != DomainKind::Product; }
  bool is_annulus() const noexcept { return kind_ == DomainKind::Annulus; }

  /// Inner radius; zero for the disk.
  double r() const noexcept { return r_; }

  std::size_t dim() const noexcept { return is_planar() ? 1 : factors_.size(); }

  /// Planar factor i. For a planar domain, factor(0) is the domain itself.
  const DomainSpec& factor(std::size_t i) const { return is_planar() ? *this : factors_.at(i); }

  std::span<const DomainSpec> factors() const noexcept { return factors_; }

  std::string describe() const {
    switch (kind_) {
      case DomainKind::UnitDisk: return "UnitDisk";
      case DomainKind::Annulus: {
        std::ostringstream os;
        os << std::setprecision(6) << r_;
        return "Annulus(r=" + os.str() + ")";
      }
      case DomainKind::Product: {
        std::string out = "Product(";
        for (std::size_t i = 0; i < factors_.size(); ++i) {
          if (i) out += ", ";
          out += factors_[i].describe();
        }
        return out + ")";
      }
    }
    return "?";
  }

 private:
  DomainSpec(DomainKind kind, double r, std::vector<DomainSpec> factors)
      : kind_(kind), r_(r), factors_(std::move(factors)) {}

  DomainKind kind_;
  double r_;
  std::vector<DomainSpec> factors_;
};

/// A point of C^n.
class Point {
 public:
  Point() = default;
  Point(Complex z) : coords_{z} {}  // NOLINT: planar points convert implicitly
  Point(std::initializer_list<Complex> coords) : coords_(coords) {}
  explicit Point(std::vector<Complex> coords) : coords_(std::move(coords)) {}

  std::size_t dim() const noexcept { return coords_.size(); }
  Complex operator[](std::size_t i) const { return coords_[i]; }
  Complex& operator[](std::size_t i) { return coords_[i]; }
  std::span<const Complex> coords() const noexcept { return coords_; }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::vector<Complex> coords_;
};

inline bool planar_contains(const DomainSpec& planar, Complex z) {
  const double m = std::abs(z);
  if (!(m < 1.0)) return false;
  return planar.kind() == DomainKind::UnitDisk || m > planar.r();
}

/// True iff z lies in the open domain.
inline bool admissible_point(const DomainSpec& domain, const Point& z) {
  if (z.dim() != domain.dim()) return false;
  for (std::size_t i = 0; i < z.dim(); ++i) {
    if (!planar_contains(domain.factor(i), z[i])) return false;
  }
  return true;
}

inline void require_admissible(const DomainSpec& domain, const Point& z, const char* what) {
  if (!admissible_point(domain, z)) {
    std::string coords;
    for (std::size_t i = 0; i < z.dim(); ++i) {
      if (i) coords += ", ";
      coords += "(" + std::to_string(z[i].real()) + "," + std::to_string(z[i].imag()) + ")";
    }
    fail(ErrorCode::NotInDomain,
         std::string(what) + " [" + coords + "] is not in " + domain.describe());
  }
}

}  // namespace bergman
