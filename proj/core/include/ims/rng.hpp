#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace ims {

// Deterministic random numbers. mt19937_64 has a standardized output
// sequence; the value mappings below avoid std::uniform_real_distribution,
// whose results are implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // uniform over the closed complex unit disk
  std::complex<double> unitDisk() {
    while (true) {
      double x = uniform(-1.0, 1.0);
      double y = uniform(-1.0, 1.0);
      if (x * x + y * y <= 1.0) return {x, y};
    }
  }

  std::complex<double> unitCircle() {
    double t = uniform(0.0, 2.0 * 3.14159265358979323846);
    return {std::cos(t), std::sin(t)};
  }

  // gaussian via Box-Muller (deterministic)
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  int uniformInt(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

private:
  std::mt19937_64 gen_;
};

} // namespace ims
