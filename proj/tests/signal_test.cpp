#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "ancsim/metrics/spectrum.hpp"
#include "ancsim/signal/audio_io.hpp"
#include "ancsim/signal/delay.hpp"
#include "ancsim/signal/fir.hpp"
#include "ancsim/signal/generator.hpp"
#include "support.hpp"

using namespace ancsim;
using namespace ancsim::testing;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

} // namespace

TEST(Fir, IdentityImpulse) {
    FirFilter f({1.0});
    SampleFrame in({0.3, -1.2, 4.0, 0.0}, 8000);
    EXPECT_EQ(f.process(in).samples, in.samples);
}

TEST(Fir, UnitDelay) {
    FirFilter f({0.0, 1.0});
    const auto out = f.process(SampleFrame({1.5, 2.5, 3.5}, 8000));
    EXPECT_EQ(out.samples, (std::vector<double>{0.0, 1.5, 2.5}));
}

TEST(Fir, TwoTapAverage) {
    FirFilter f({0.5, 0.5});
    const auto out = f.process(SampleFrame({1, 1, 1, 1}, 8000));
    EXPECT_EQ(out.samples, (std::vector<double>{0.5, 1, 1, 1}));
}

TEST(Fir, NonFiniteFrameRejectedAndHistoryKept) {
    FirFilter f({0.0, 1.0});
    f.process(SampleFrame(std::vector<double>{7.0}, 8000));
    EXPECT_THROW(f.process(SampleFrame({1.0, NAN}, 8000)), NumericFault);
    EXPECT_THROW(f.process(SampleFrame(std::vector<double>{INFINITY}, 8000)), NumericFault);
    const auto out = f.process(SampleFrame(std::vector<double>{2.0}, 8000));
    EXPECT_EQ(out[0], 7.0);
}

TEST(Fir, EmptyCoefficientsRejected) { EXPECT_THROW(FirFilter(std::vector<double>{}), ConfigError); }

// Any segmentation of the input gives the one-shot convolution.
TEST(Fir, StreamingMatchesBatchProperty) {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t taps = 1 + rng() % 40;
        const std::size_t n = 1 + rng() % 500;
        const auto h = random_vec(rng, taps);
        const auto x = random_vec(rng, n);
        const auto ref = convolve(h, x);

        FirFilter f(h);
        std::vector<double> got;
        for (std::size_t i = 0; i < n;) {
            const std::size_t len = std::min<std::size_t>(1 + rng() % 64, n - i);
            SampleFrame fr(std::vector<double>(x.begin() + i, x.begin() + i + len), 8000);
            const auto o = f.process(fr);
            got.insert(got.end(), o.samples.begin(), o.samples.end());
            i += len;
        }
        ASSERT_EQ(got.size(), ref.size());
        for (std::size_t i = 0; i < n; ++i) {
            ASSERT_LE(std::abs(got[i] - ref[i]), 1e-12 * std::max(1.0, std::abs(ref[i]))) << "trial " << trial;
        }
    }
}

// Independent oracle: brute-force double loop written out here.
TEST(Fir, ConvolveMatchesDirectSum) {
    std::mt19937_64 rng(9);
    const auto h = random_vec(rng, 7);
    const auto x = random_vec(rng, 30);
    const auto y = convolve(h, x);
    for (std::size_t n = 0; n < x.size(); ++n) {
        long double acc = 0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (n >= i) acc += static_cast<long double>(h[i]) * x[n - i];
        }
        EXPECT_NEAR(y[n], static_cast<double>(acc), 1e-14);
    }
}

TEST(Fir, LinearityProperty) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto h = random_vec(rng, 1 + rng() % 32);
        const std::size_t n = 1 + rng() % 300;
        const auto u = random_vec(rng, n);
        const auto v = random_vec(rng, n);
        const double a = coef(rng), b = coef(rng);
        std::vector<double> mix(n);
        for (std::size_t i = 0; i < n; ++i) mix[i] = a * u[i] + b * v[i];

        FirFilter f(h);
        const auto ym = f.process(SampleFrame(mix, 8000));
        f.reset();
        const auto yu = f.process(SampleFrame(u, 8000));
        f.reset();
        const auto yv = f.process(SampleFrame(v, 8000));
        for (std::size_t i = 0; i < n; ++i) {
            const double expect = a * yu[i] + b * yv[i];
            ASSERT_LE(std::abs(ym[i] - expect), 1e-12 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST(Delay, ZeroIsIdentity) {
    DelayLine d(0);
    SampleFrame in({1, 2, 3}, 8000);
    EXPECT_EQ(d.process(in).samples, in.samples);
}

TEST(Delay, ShiftByThree) {
    DelayLine d(3);
    EXPECT_EQ(d.process(SampleFrame({1, 2, 3, 4}, 8000)).samples, (std::vector<double>{0, 0, 0, 1}));
}

TEST(Delay, CascadeComposes) {
    std::mt19937_64 rng(5);
    for (std::size_t d1 : {0u, 1u, 4u, 17u}) {
        for (std::size_t d2 : {0u, 2u, 9u}) {
            const auto x = random_vec(rng, 200);
            DelayLine a(d1), b(d2), c(d1 + d2);
            std::vector<double> two, one;
            for (const auto& fr : split(x, 13, 8000)) {
                const auto o2 = b.process(a.process(fr));
                const auto o1 = c.process(fr);
                two.insert(two.end(), o2.samples.begin(), o2.samples.end());
                one.insert(one.end(), o1.samples.begin(), o1.samples.end());
            }
            EXPECT_EQ(two, one) << d1 << "+" << d2;
        }
    }
}

TEST(Generator, ToneMatchesSineTable) {
    SignalGen g(SignalParams::tone(150.0, 1.0), 8000);
    const auto fr = g.generate(400);
    EXPECT_EQ(fr[0], 0.0);
    for (std::size_t k = 0; k < fr.size(); ++k) {
        EXPECT_NEAR(fr[k], std::sin(2.0 * std::numbers::pi * 150.0 * k / 8000.0), 1e-12);
    }
}

TEST(Generator, ContinuesAcrossCalls) {
    SignalGen a(SignalParams::white(1.0, 3), 8000), b(SignalParams::white(1.0, 3), 8000);
    auto x = a.generate(100).samples;
    const auto y = a.generate(57).samples;
    x.insert(x.end(), y.begin(), y.end());
    EXPECT_EQ(x, b.generate(157).samples);
}

TEST(Generator, DeterministicBytes) {
    for (auto p : {SignalParams::white(0.7, 42), SignalParams::genset(2.0, 11)}) {
        SignalGen a(p, 8000), b(p, 8000);
        const auto x = a.generate(5000), y = b.generate(5000);
        EXPECT_EQ(std::memcmp(x.samples.data(), y.samples.data(), x.size() * sizeof(double)), 0);
    }
    SignalGen c(SignalParams::white(0.7, 42), 8000), d(SignalParams::white(0.7, 43), 8000);
    EXPECT_NE(c.generate(64).samples, d.generate(64).samples);
}

TEST(Generator, WhiteNoiseRangeAndMoments) {
    SignalGen g(SignalParams::white(0.5, 8), 8000);
    const auto x = g.generate(200000);
    double mean = 0.0;
    for (double v : x.samples) {
        ASSERT_GE(v, -0.5);
        ASSERT_LT(v, 0.5);
        mean += v;
    }
    mean /= x.size();
    EXPECT_NEAR(mean, 0.0, 0.005);
    EXPECT_NEAR(mean_sq(x.samples), 0.25 / 3.0, 0.002);
}

TEST(Generator, AliasingRejected) {
    EXPECT_THROW(SignalGen(SignalParams::tone(4000.0, 1.0), 8000), AliasingError);
    EXPECT_THROW(SignalGen(SignalParams::tone(5000.0, 1.0), 8000), AliasingError);
    EXPECT_NO_THROW(SignalGen(SignalParams::tone(3999.0, 1.0), 8000));
    // A genset fundamental whose 3rd harmonic aliases is rejected too.
    EXPECT_THROW(SignalGen(SignalParams::genset(1.0, 0, 1500.0), 8000), AliasingError);
}

TEST(Generator, ZeroLengthRejected) {
    SignalGen g(SignalParams::tone(100.0, 1.0), 8000);
    EXPECT_THROW(g.generate(0), ConfigError);
}

TEST(Generator, GensetSpectrumShape) {
    SignalGen g(SignalParams::genset(1.0, 21), 8000);
    const auto x = g.generate(8000 * 20);
    const auto s = welch_psd(x.samples, 8000, 4096);
    std::size_t peak = 1;
    for (std::size_t k = 1; k < s.psd.size(); ++k) {
        if (s.psd[k] > s.psd[peak]) peak = k;
    }
    EXPECT_NEAR(s.freqs[peak], 77.0, s.df);
    auto tone_db = [&](double f) {
        const auto c = s.bin_of(f);
        return 10 * std::log10(s.psd[c - 1] + s.psd[c] + s.psd[c + 1]);
    };
    EXPECT_NEAR(tone_db(154.0) - tone_db(77.0), -10.0, 0.5);
    EXPECT_NEAR(tone_db(231.0) - tone_db(77.0), -16.0, 0.5);
    // The floor sits 40 dB below the fundamental in total power.
    const double fundamental = s.band_power(70, 84);
    const double floor = s.band_power(300, 3900) / (3600.0 / 4000.0);
    EXPECT_NEAR(10 * std::log10(floor / fundamental), -40.0, 1.0);
}

TEST(AudioIo, RawF32RoundTrip) {
    TempDir dir("io");
    const auto x = sine(100.0, 0.8, 1000);
    write_raw_f32(dir.path() / "x.f32", x);
    const auto back = read_raw_f32(dir.path() / "x.f32");
    ASSERT_EQ(back.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(back[i], static_cast<float>(x[i]));
    EXPECT_EQ(std::filesystem::file_size(dir.path() / "x.f32"), x.size() * 4);
}

TEST(AudioIo, WavHeader) {
    TempDir dir("wav");
    const auto x = sine(100.0, 0.5, 800);
    write_wav_f32(dir.path() / "x.wav", x, 8000);
    std::ifstream in(dir.path() / "x.wav", std::ios::binary);
    std::vector<char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ASSERT_EQ(b.size(), 44 + x.size() * 4);
    EXPECT_EQ(std::string(b.data(), 4), "RIFF");
    EXPECT_EQ(std::string(b.data() + 8, 4), "WAVE");
    std::uint16_t fmt;
    std::uint32_t rate;
    std::memcpy(&fmt, b.data() + 20, 2);
    std::memcpy(&rate, b.data() + 24, 4);
    EXPECT_EQ(fmt, 3);
    EXPECT_EQ(rate, 8000u);
}
