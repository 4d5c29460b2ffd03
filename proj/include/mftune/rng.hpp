#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mftune {

// splitmix64; used to derive independent seeds from a master seed so that
// parallel execution never changes which stream a consumer sees.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    return mix_seed(mix_seed(master ^ 0x6a09e667f3bcc909ULL) ^ mix_seed(stream) ^ (index * 0x9e3779b97f4a7c15ULL));
}

// mt19937_64 with explicit uniform/normal transforms. The standard generator is
// bit-reproducible everywhere; std:: distributions are not, so we avoid them.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
        return mean + stddev * z;
    }

    // unbiased integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = gen_();
            if (r >= threshold) return r % n;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

  private:
    std::mt19937_64 gen_;
};

// Beasley-Springer-Moro approximation of the standard normal quantile.
inline double normal_quantile(double u) {
    static const double a[4] = {2.50662823884, -18.61500062529, 41.39119773534, -25.44106049637};
    static const double b[4] = {-8.47351093090, 23.08336743743, -21.06224101826, 3.13082909833};
    static const double c[9] = {0.3374754822726147, 0.9761690190917186, 0.1607979714918209,
                                0.0276438810333863, 0.0038405729373609, 0.0003951896511919,
                                0.0000321767881768, 0.0000002888167364, 0.0000003960315187};
    double y = u - 0.5;
    if (std::fabs(y) < 0.42) {
        double r = y * y;
        return y * (((a[3] * r + a[2]) * r + a[1]) * r + a[0]) / ((((b[3] * r + b[2]) * r + b[1]) * r + b[0]) * r + 1.0);
    }
    double r = u > 0.5 ? 1.0 - u : u;
    r = std::log(-std::log(r));
    double x = c[0];
    double rp = 1.0;
    for (int i = 1; i < 9; ++i) {
        rp *= r;
        x += c[i] * rp;
    }
    return y < 0.0 ? -x : x;
}

// One Latin-hypercube sample of n points in [0,1]^d: each coordinate stratified
// into n cells with a random offset inside its cell.
inline std::vector<std::vector<double>> latin_hypercube(int n, int d, Rng& rng) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    std::vector<int> perm(n);
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(perm);
        for (int i = 0; i < n; ++i) pts[i][k] = (perm[i] + rng.uniform01()) / n;
    }
    return pts;
}

// Maximin LHS: best of `candidates` designs by minimum pairwise distance.
inline std::vector<std::vector<double>> maximin_latin_hypercube(int n, int d, Rng& rng, int candidates = 64) {
    auto min_dist2 = [](const std::vector<std::vector<double>>& pts) {
        double best = 1e300;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < pts[i].size(); ++k) {
                    double diff = pts[i][k] - pts[j][k];
                    s += diff * diff;
                }
                if (s < best) best = s;
            }
        return best;
    };
    std::vector<std::vector<double>> best_pts = latin_hypercube(n, d, rng);
    double best = n > 1 ? min_dist2(best_pts) : 1.0;
    for (int c = 1; c < candidates && n > 1; ++c) {
        auto pts = latin_hypercube(n, d, rng);
        double m = min_dist2(pts);
        if (m > best) {
            best = m;
            best_pts = std::move(pts);
        }
    }
    return best_pts;
}

// Halton sequence point (1-based index), used for deterministic dense candidate sets.
inline double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

inline std::vector<double> halton_point(std::uint64_t index, int d) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    std::vector<double> p(d);
    for (int k = 0; k < d; ++k) p[k] = halton(index, primes[k % 8]);
    return p;
}

} // namespace mftune
