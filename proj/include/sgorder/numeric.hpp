#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <span>
#include <thread>
#include <vector>

namespace sgorder {

/// log Σ exp(v_i) with a max shift. Empty input gives -inf.
inline double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// Sum in a fixed balanced binary tree, so the rounding pattern depends only
/// on the length of the input.
inline double pairwise_sum(std::span<const double> v) {
    if (v.empty()) return 0.0;
    if (v.size() == 1) return v[0];
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Neumaier-compensated running sum.
class KahanSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }
    double raw_sum() const noexcept { return sum_; }
    double compensation() const noexcept { return comp_; }
    void restore(double sum, double comp) noexcept {
        sum_ = sum;
        comp_ = comp;
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Mean and standard error of independent samples.
struct ObservableEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

/// Sample mean and standard error (n-1 variance); n == 1 gives stderr 0.
inline ObservableEstimate summarize(std::span<const double> xs) {
    ObservableEstimate est;
    est.n = xs.size();
    if (xs.empty()) return est;
    est.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
    if (xs.size() < 2) return est;
    std::vector<double> dev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = (xs[i] - est.mean) * (xs[i] - est.mean);
    const double var = pairwise_sum(dev) / static_cast<double>(xs.size() - 1);
    est.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
    return est;
}

/// Sample covariance of paired samples (n-1 normalisation).
inline double sample_covariance(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n < 2) return 0.0;
    const double ma = pairwise_sum(a) / static_cast<double>(n);
    const double mb = pairwise_sum(b) / static_cast<double>(n);
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = (a[i] - ma) * (b[i] - mb);
    return pairwise_sum(prod) / static_cast<double>(n - 1);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers with a static
/// contiguous split. fn must only write to slot i of its outputs.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t lo = n * t / threads;
            const std::size_t hi = n * (t + 1) / threads;
            pool.emplace_back([lo, hi, &fn, &err = errors[t]] {
                try {
                    for (std::size_t i = lo; i < hi; ++i) fn(i);
                } catch (...) {
                    err = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace sgorder
