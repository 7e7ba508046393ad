#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/plant/geometry.hpp"

namespace ancsim {

/// Total radiated power change (dB, <= 0) for a primary monopole cancelled by
/// one optimally driven secondary monopole at normalized spacing d/lambda:
/// 10 log10(1 - sinc^2(kd)), kd = 2 pi d / lambda.
inline double global_power_reduction(double d_over_lambda) {
    if (!(d_over_lambda > 0.0)) throw ConfigError("global_power_reduction: d/lambda must be > 0");
    const double kd = 2.0 * std::numbers::pi * d_over_lambda;
    const double sinc = std::sin(kd) / kd;
    const double ratio = 1.0 - sinc * sinc;
    if (ratio <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(ratio);
}

/// Complex pressure of a unit-strength monopole, e^{-jkr} / (4 pi r).
inline std::complex<double> monopole_pressure(const Vec3& source, const Vec3& point, double k) {
    const double r = std::max(distance(source, point), kMinDistance);
    return std::polar(1.0 / (4.0 * std::numbers::pi * r), -k * r);
}

/// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

struct SpatialGridOptions {
    double radius_wavelengths = 200.0;  // integration sphere radius
    std::size_t n_polar = 96;           // Gauss-Legendre nodes in cos(theta)
    std::size_t n_azimuth = 32;
};

struct SpatialResult {
    double reduction_db = 0.0;                // 10 log10(P_on / P_off)
    std::complex<double> secondary_strength;  // relative to a unit primary
};

/// Time-harmonic free-field check of the two-monopole rule by brute force:
/// sample the pressure on a large sphere, find the secondary strength that
/// minimises the integrated |p|^2 by least squares, and integrate both fields.
inline SpatialResult simulate_global_power_reduction(double d_over_lambda, const SpatialGridOptions& opt = {}) {
    if (!(d_over_lambda > 0.0)) throw ConfigError("d/lambda must be > 0");
    const double lambda = 1.0;
    const double k = 2.0 * std::numbers::pi / lambda;
    const Vec3 primary{0.0, 0.0, 0.0};
    const Vec3 secondary{d_over_lambda * lambda, 0.0, 0.0};
    const double R = opt.radius_wavelengths * lambda;

    std::vector<double> mu, wmu;
    gauss_legendre(opt.n_polar, mu, wmu);
    const double dphi = 2.0 * std::numbers::pi / static_cast<double>(opt.n_azimuth);

    // Least squares over the quadrature points: q = -<g2, g1> / <g2, g2>.
    std::vector<std::complex<double>> g1, g2;
    std::vector<double> wq;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double st = std::sqrt(std::max(0.0, 1.0 - mu[i] * mu[i]));
        for (std::size_t j = 0; j < opt.n_azimuth; ++j) {
            const double phi = dphi * static_cast<double>(j);
            const Vec3 p{R * st * std::cos(phi), R * st * std::sin(phi), R * mu[i]};
            g1.push_back(monopole_pressure(primary, p, k));
            g2.push_back(monopole_pressure(secondary, p, k));
            wq.push_back(wmu[i] * dphi * R * R);
        }
    }
    std::complex<double> num{0.0, 0.0};
    double den = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        num += wq[i] * std::conj(g2[i]) * g1[i];
        den += wq[i] * std::norm(g2[i]);
    }
    const std::complex<double> q = -num / den;
    double p_off = 0.0, p_on = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        p_off += wq[i] * std::norm(g1[i]);
        p_on += wq[i] * std::norm(g1[i] + q * g2[i]);
    }
    return {10.0 * std::log10(p_on / p_off), q};
}

} // namespace ancsim
