#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace portml::rng {

// Thin wrapper over mt19937_64 with hand-rolled draw helpers so generated
// streams do not depend on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    double u01() { return (eng_() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below(0)");
        return static_cast<uint64_t>(u01() * static_cast<double>(n)) % n;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    bool bernoulli(double p) { return u01() < p; }

    // Index into a (not necessarily normalized) weight vector.
    size_t categorical(const std::vector<double>& w) {
        double total = 0;
        for (double x : w) total += x;
        double r = u01() * total;
        double acc = 0;
        for (size_t i = 0; i < w.size(); ++i) {
            acc += w[i];
            if (r < acc) return i;
        }
        return w.size() - 1;
    }

    int poisson(double lambda) {
        // Knuth inversion; lambdas here are small.
        double l = std::exp(-lambda), p = 1.0;
        int k = 0;
        do {
            ++k;
            p *= u01();
        } while (p > l);
        return k - 1;
    }

    // Derives an independent stream, e.g. per-tree seeds.
    uint64_t fork_seed() { return eng_() ^ 0x9e3779b97f4a7c15ULL; }

private:
    std::mt19937_64 eng_;
};

}  // namespace portml::rng
