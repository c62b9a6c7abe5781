#pragma once
// Shared aliases, error types, and seeded randomness.
//
// All numeric work is done in 64-bit floats. Randomness never touches
// std::*_distribution (their outputs are implementation-defined); every
// draw goes through the Rng wrapper below so identical seeds give
// identical streams.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace kgalign {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A line in an input file could not be parsed.
struct ParseError : Error {
    using Error::Error;
};
// Structurally inconsistent data (duplicate ids, dangling references, ...).
struct IntegrityError : Error {
    using Error::Error;
};
// Matrix/vector shape mismatch.
struct DimensionError : Error {
    using Error::Error;
};
// Invalid argument values supplied by a caller.
struct InvalidInputError : Error {
    using Error::Error;
};
// Entity or key not present where required.
struct LookupError : Error {
    using Error::Error;
};
// Bad configuration (unknown key, out-of-range value).
struct ConfigError : Error {
    using Error::Error;
};
// Non-finite number encountered during optimization.
struct NumericError : Error {
    using Error::Error;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derive an independent stream seed from a base seed and a tag
// (entity id, epoch number, purpose constant).
inline uint64_t derive_seed(uint64_t base, uint64_t tag) {
    return splitmix64(base ^ splitmix64(tag));
}

namespace seed_tag {
constexpr uint64_t kSplit = 0x53504c49;
constexpr uint64_t kInit = 0x494e4954;
constexpr uint64_t kValidation = 0x56414c49;
constexpr uint64_t kEpoch = 0x45504f43;
constexpr uint64_t kSampling = 0x53414d50;
constexpr uint64_t kSynthetic = 0x53594e54;
}  // namespace seed_tag

// Deterministic random source. Uniform doubles are built directly from
// the top 53 bits of the mt19937_64 output; gaussians use Box-Muller.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) throw InvalidInputError("Rng::below: n must be positive");
        uint64_t threshold = (~n + 1) % n;  // rejection sampling, no modulo bias
        for (;;) {
            uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Chunked parallel loop with deterministic per-index output slots.
// fn(i) must only write to state owned by index i.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
        std::size_t lo = t * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Glorot-uniform initialization: U(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
inline Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
    return m;
}

inline void require_finite(double x, const std::string& what) {
    if (!std::isfinite(x)) throw NumericError("non-finite value in " + what);
}

}  // namespace kgalign
