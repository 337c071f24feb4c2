// Shared error types, scalar aliases, and a deterministic RNG.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace vk {

template <class S>
using DenseMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
using Mat = DenseMat<double>;
using Vec = Eigen::VectorXd;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StencilError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LinearSolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverStallError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CertificateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a nodal tensor that must stay positive definite is not; carries
// the offending node and its eigenvalue range.
struct BStarViolation : std::runtime_error {
  int i = -1, j = -1, k = -1;
  double eig_min = 0.0, eig_max = 0.0;
  BStarViolation(const std::string& msg, int i_, int j_, double lo, double hi,
                 int k_ = -1)
      : std::runtime_error(msg), i(i_), j(j_), k(k_), eig_min(lo), eig_max(hi) {}
};

// mt19937_64 with an explicit bit-to-double mapping so sampled sequences are
// identical on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    const int span = hi - lo + 1;
    int k = static_cast<int>(uniform01() * span);
    if (k >= span) k = span - 1;
    return lo + k;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vk
