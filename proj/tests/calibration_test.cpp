#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ancsim/control/calibration.hpp"
#include "ancsim/signal/fir.hpp"
#include "support.hpp"

using namespace ancsim;
using namespace ancsim::testing;

namespace {

/// Known FIR path plus an optional ambient tone at the microphone.
struct FirProbe {
    FirFilter path;
    double tone_amp = 0.0;
    double tone_hz = 77.0;
    std::size_t n = 0;

    double exchange(double u) {
        const double ambient = tone_amp * std::sin(2.0 * std::numbers::pi * tone_hz * static_cast<double>(n++) / 8000.0);
        return path.process_sample(u) + ambient;
    }
};

} // namespace

TEST(Calibration, QuietShortPath) {
    const std::vector<double> s{0.9, 0.1};
    FirProbe probe{FirFilter(s)};
    SignalGen training(SignalParams::white(1.0, 12), 8000);
    CalibrationOptions opt;
    opt.model_order = 8;
    const auto r = estimate_secondary_path(probe, training, 8000 * 8, opt, s);
    EXPECT_EQ(r.shat.size(), 8u);
    EXPECT_EQ(r.training_samples, 8000u * 8);
    EXPECT_LE(r.misalignment_db, -30.0);
    EXPECT_TRUE(std::isfinite(r.misalignment_db));
}

TEST(Calibration, AmbientToneAtZeroDbSnr) {
    const std::vector<double> s{0.9, 0.1};
    // Training noise at the mic has power |s|^2 / 3; the tone gets the same power.
    const double tone_amp = std::sqrt(2.0 * (0.81 + 0.01) / 3.0);
    FirProbe probe{FirFilter(s), tone_amp};
    SignalGen training(SignalParams::white(1.0, 12), 8000);
    CalibrationOptions opt;
    opt.model_order = 8;
    const auto r = estimate_secondary_path(probe, training, 8000 * 8, opt, s);
    EXPECT_LE(r.misalignment_db, -15.0);
}

TEST(Calibration, TruncationFloorEqualsTailEnergy) {
    std::vector<double> s;
    for (int i = 0; i < 12; ++i) s.push_back(std::pow(0.7, i) * (i % 2 ? -1.0 : 1.0));
    for (std::size_t order : {4u, 6u, 9u}) {
        double tail = 0.0, total = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            total += s[i] * s[i];
            if (i >= order) tail += s[i] * s[i];
        }
        const double floor_db = 10.0 * std::log10(tail / total);
        FirProbe probe{FirFilter(s)};
        SignalGen training(SignalParams::white(1.0, 5), 8000);
        CalibrationOptions opt;
        opt.model_order = order;
        opt.step = 0.001;
        const auto r = estimate_secondary_path(probe, training, 8000 * 20, opt, s);
        EXPECT_NEAR(r.misalignment_db, floor_db, 0.5) << "order " << order;
    }
}

TEST(Calibration, NonFiniteDivergenceFails) {
    FirProbe probe{FirFilter({0.9, 0.1})};
    SignalGen training(SignalParams::white(1.0, 1), 8000);
    CalibrationOptions opt;
    opt.model_order = 8;
    opt.step = 5.0;
    EXPECT_THROW(estimate_secondary_path(probe, training, 8000 * 2, opt), CalibrationFailed);
}

TEST(Calibration, ResidualGrowthInFinalQuarterFails) {
    const std::size_t n = 8000 * 4;
    SecondaryPathIdentifier id(n, CalibrationOptions{8, 0.002, 2.0});
    SignalGen training(SignalParams::white(1.0, 2), 8000);
    FirFilter path({0.9, 0.1});
    for (std::size_t k = 0; k < n; ++k) {
        const double u = training.next();
        double m = path.process_sample(u);
        // The path changes abruptly in the second half of the last quarter.
        if (k >= n - n / 8) m = -3.0 * m;
        id.step(u, m);
    }
    EXPECT_THROW(id.finish(), CalibrationFailed);
}

TEST(Calibration, UnknownTruthGivesNanMisalignment) {
    FirProbe probe{FirFilter({0.5})};
    SignalGen training(SignalParams::white(1.0, 1), 8000);
    const auto r = estimate_secondary_path(probe, training, 8000 * 4, CalibrationOptions{4});
    EXPECT_TRUE(std::isnan(r.misalignment_db));
    EXPECT_NEAR(r.shat[0], 0.5, 0.01);
    EXPECT_LT(r.residual_power, 1e-6);
}

TEST(Calibration, OptionsValidated) {
    EXPECT_THROW(SecondaryPathIdentifier(8000, CalibrationOptions{0}), ConfigError);
    EXPECT_THROW(SecondaryPathIdentifier(4, CalibrationOptions{8}), ConfigError);
    EXPECT_THROW(SecondaryPathIdentifier(8000, CalibrationOptions{8, 0.0}), ConfigError);
}

TEST(Misalignment, Definition) {
    EXPECT_NEAR(misalignment_db(std::vector<double>{1.0, 0.0}, std::vector<double>{0.9, 0.0}), -20.0, 1e-12);
    // Missing taps count as zero.
    EXPECT_NEAR(misalignment_db(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0}), 10 * std::log10(0.5), 1e-12);
    EXPECT_THROW(misalignment_db(std::vector<double>{0.0}, std::vector<double>{1.0}), ConfigError);
}
