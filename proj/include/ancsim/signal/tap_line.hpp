#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace ancsim {

/// Fixed-length history of the most recent samples, newest first.
///
/// Every sample is stored twice (at `head` and `head + N`) so the window is
/// always one contiguous span and dot products need no wrap handling.
class TapLine {
public:
    TapLine() = default;
    explicit TapLine(std::size_t length) : n_(length), buf_(2 * length, 0.0) {}

    std::size_t size() const noexcept { return n_; }

    void push(double x) noexcept {
        if (n_ == 0) return;
        head_ = (head_ == 0) ? n_ - 1 : head_ - 1;
        buf_[head_] = x;
        buf_[head_ + n_] = x;
    }

    /// view()[k] is the sample pushed k steps ago (k = 0 is the newest).
    std::span<const double> view() const noexcept { return {buf_.data() + head_, n_}; }

    double operator[](std::size_t k) const noexcept { return buf_[head_ + k]; }

    void clear() noexcept {
        std::fill(buf_.begin(), buf_.end(), 0.0);
        head_ = 0;
    }

private:
    std::size_t n_ = 0;
    std::size_t head_ = 0;
    std::vector<double> buf_;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

inline double energy(std::span<const double> a) noexcept { return dot(a, a); }

} // namespace ancsim
