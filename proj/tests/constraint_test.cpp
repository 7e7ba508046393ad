#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "ancsim/control/constraint.hpp"
#include "ancsim/control/controller.hpp"
#include "support.hpp"

using namespace ancsim;
using namespace ancsim::testing;

namespace {

// Written independently of the library: alpha = max(sqrt(gs) * rms / rho - gs, 0)
// in extended precision, which is the same expression rearranged.
long double alpha_oracle(const std::vector<double>& d, double gs, double rho) {
    long double s = 0;
    for (double v : d) s += static_cast<long double>(v) * v;
    const long double rms = std::sqrt(s / d.size());
    const long double a = std::sqrt(static_cast<long double>(gs)) * rms / rho - gs;
    return a > 0 ? a : 0;
}

} // namespace

TEST(PenaltyFactor, ZeroWindowGivesZero) {
    EXPECT_EQ(penalty_factor(std::vector<double>(64, 0.0), 1.0, 0.5), 0.0);
}

TEST(PenaltyFactor, HandEvaluation) {
    EXPECT_DOUBLE_EQ(penalty_factor(std::vector<double>{2.0}, 1.0, 1.0), 1.0);
}

TEST(PenaltyFactor, BoundaryIsZero) {
    // sum d^2 = M * gs * rho^2 exactly
    const double gs = 0.25, rho = 2.0;
    std::vector<double> d(16, 1.0);  // sum = 16 = 16 * 0.25 * 4
    EXPECT_EQ(penalty_factor(d, gs, rho), 0.0);
}

TEST(PenaltyFactor, UnconstrainedIsZero) {
    EXPECT_EQ(penalty_factor(std::vector<double>{1e6, -1e6}, 2.0, std::numeric_limits<double>::infinity()), 0.0);
}

TEST(PenaltyFactor, InvalidArgumentsAreConfigErrors) {
    const std::vector<double> d{1.0};
    EXPECT_THROW(penalty_factor(d, 0.0, 1.0), ConfigError);
    EXPECT_THROW(penalty_factor(d, -1.0, 1.0), ConfigError);
    EXPECT_THROW(penalty_factor(d, 1.0, 0.0), ConfigError);
    EXPECT_THROW(penalty_factor(d, 1.0, -0.5), ConfigError);
    EXPECT_THROW(penalty_factor_from_power(1.0, 0, 1.0, 1.0), ConfigError);
}

TEST(PenaltyFactor, MatchesOracleOnRandomInputs) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_real_distribution<double> lg(-2.0, 1.0);
    int active = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t m = 1 + rng() % 128;
        std::vector<double> d(m);
        for (auto& v : d) v = u(rng);
        const double gs = std::pow(10.0, lg(rng));
        const double rho = std::pow(10.0, lg(rng));
        const double got = penalty_factor(d, gs, rho);
        const double want = static_cast<double>(alpha_oracle(d, gs, rho));
        ASSERT_GE(got, 0.0);
        if (want == 0.0) {
            ASSERT_EQ(got, 0.0) << "case " << i;
        } else {
            ++active;
            ASSERT_LE(rel_err(got, want), 1e-12) << "case " << i;
        }
    }
    EXPECT_GT(active, 300);  // both branches exercised
}

TEST(MovUpdate, HandEvaluation) {
    std::vector<double> w{0.0, 0.0};
    mov_fxlms_update(w, 0.5, 1.0, std::vector<double>{1.0, 0.0}, 1.0, 2.0, std::vector<double>{1.0, 1.0});
    EXPECT_EQ(w, (std::vector<double>{-0.5, -1.0}));
}

TEST(MovUpdate, ZeroStepLeavesWeights) {
    std::vector<double> w{0.3, -0.7, 1.1};
    const auto before = w;
    mov_fxlms_update(w, 0.0, 5.0, std::vector<double>{1, 2, 3}, 4.0, 2.0, std::vector<double>{3, 2, 1});
    EXPECT_EQ(w, before);
}

TEST(MovUpdate, ZeroAlphaIsPlainFxlms) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> w(16), xf(16), x(16);
        for (std::size_t k = 0; k < 16; ++k) w[k] = u(rng), xf[k] = u(rng), x[k] = u(rng);
        const double mu = std::abs(u(rng)), e = u(rng), y = u(rng);
        auto plain = w;
        for (std::size_t k = 0; k < 16; ++k) plain[k] = w[k] + mu * e * xf[k];
        mov_fxlms_update(w, mu, e, xf, 0.0, y, x);
        ASSERT_EQ(std::memcmp(w.data(), plain.data(), 16 * sizeof(double)), 0);
    }
}

TEST(MovUpdate, MatchesOracleOnRandomInputs) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng() % 64;
        std::vector<double> w(n), xf(n), x(n);
        for (std::size_t k = 0; k < n; ++k) w[k] = u(rng), xf[k] = u(rng), x[k] = u(rng);
        const double mu = std::abs(u(rng)) * 0.1, e = u(rng), alpha = std::abs(u(rng)), y = u(rng);
        std::vector<long double> want(n);
        for (std::size_t k = 0; k < n; ++k) {
            want[k] = static_cast<long double>(w[k]) +
                      static_cast<long double>(mu) * (static_cast<long double>(e) * xf[k] -
                                                      static_cast<long double>(alpha) * y * x[k]);
        }
        mov_fxlms_update(w, mu, e, xf, alpha, y, x);
        for (std::size_t k = 0; k < n; ++k) {
            ASSERT_LE(rel_err(w[k], static_cast<double>(want[k])), 1e-12) << "case " << i << " tap " << k;
        }
    }
}

TEST(MovUpdate, NonFiniteUpdateLeavesWeightsAndThrows) {
    std::vector<double> w{1.0, 2.0};
    const auto before = w;
    EXPECT_THROW(mov_fxlms_update(w, 1.0, INFINITY, std::vector<double>{1, 1}, 0.0, 0.0, std::vector<double>{1, 1}),
                 NumericFault);
    EXPECT_EQ(w, before);
    EXPECT_THROW(mov_fxlms_update(w, 1.0, 1.0, std::vector<double>{1}, 0.0, 0.0, std::vector<double>{1, 1}), ConfigError);
}

// The update direction e*x' - alpha*y*x is -1/2 the gradient of
// J(w) = (d - w'x')^2 + alpha (w'x)^2 at fixed signals.
TEST(MovUpdate, SurrogateGradientProperty) {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 2 + rng() % 30;
        std::vector<double> w(n), xf(n), x(n);
        for (std::size_t k = 0; k < n; ++k) w[k] = u(rng), xf[k] = u(rng), x[k] = u(rng);
        const double d = 2.0 * u(rng), alpha = 2.0 * std::abs(u(rng));
        auto cost = [&](const std::vector<double>& v) {
            const double r = d - dot(v, xf);
            const double y = dot(v, x);
            return r * r + alpha * y * y;
        };
        const double e = d - dot(w, xf), y = dot(w, x);
        auto w1 = w;
        mov_fxlms_update(w1, 1.0, e, xf, alpha, y, x);

        double num = 0.0, den = 0.0;
        const double h = 1e-4;
        for (std::size_t k = 0; k < n; ++k) {
            auto p = w, m = w;
            p[k] += h;
            m[k] -= h;
            const double g = (cost(p) - cost(m)) / (2.0 * h);
            const double step = w1[k] - w[k];
            num += (step + 0.5 * g) * (step + 0.5 * g);
            den += 0.25 * g * g;
        }
        ASSERT_LT(std::sqrt(num / den), 1e-6) << "state " << i;
    }
}

TEST(PathGain, Examples) {
    EXPECT_EQ(secondary_path_gain(std::vector<double>{1.0}).gs, 1.0);
    EXPECT_NEAR(secondary_path_gain(std::vector<double>{0.6, 0.8}).gs, 1.0, 1e-15);
    const auto z = secondary_path_gain(std::vector<double>{0.0, 0.0, 0.0});
    EXPECT_EQ(z.gs, 1e-12);
    EXPECT_TRUE(z.degenerate);
}
