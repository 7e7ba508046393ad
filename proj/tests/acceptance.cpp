// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <boost/asio.hpp>

#include "ancsim/control/constraint.hpp"
#include "ancsim/metrics/third_octave.hpp"
#include "ancsim/plant/spatial.hpp"
#include "ancsim/remote/server.hpp"
#include "ancsim/sim/engine.hpp"
#include "ancsim/sim/run.hpp"
#include "ancsim/sim/scenario.hpp"
#include "support.hpp"

using namespace ancsim;
using namespace ancsim::testing;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

json scenario_json(const std::string& name) { return json::parse(read_file(source_dir() / "scenarios" / name)); }

double constraint_limit(double rho) { return rho * rho * 1.1; }

// 1. Output constraint at three tone amplitudes.
void output_constraint(Verdict& v) {
    const double rho = 0.65;
    // Full cancellation needs mean y^2 = A^2 / 2 through the unit-gain paths.
    const std::array<std::pair<const char*, double>, 3> amps{
        {{"under", 0.8 * rho * std::sqrt(2.0)}, {"at", rho * std::sqrt(2.0)}, {"over", 1.2}}};
    for (const auto& [label, a] : amps) {
        for (const char* alg : {"mov-fxlms", "fxlms"}) {
            auto j = scenario_json("tonal_saturation.json");
            j["plant"]["sources"][0]["signal"]["amplitudes"] = {a};
            j["units"][0]["algorithm"] = alg;
            const auto r = simulate(scenario_from_json(j));
            const double y2 = r.units.at(0).output_power;
            v.detail << ' ' << label << '/' << alg << " y2=" << y2;
            if (std::string(alg) == "mov-fxlms") v.require(y2 <= constraint_limit(rho), std::string("mov ") + label);
            if (std::string(label) == "over" && std::string(alg) == "fxlms") {
                v.require(y2 > constraint_limit(rho), "fxlms should violate over the limit");
            }
        }
    }
    v.detail << " limit=" << constraint_limit(rho);
}

// 2. Harmonics under a hard clip at 150 Hz.
void clipped_tone(Verdict& v) {
    const auto mov = simulate(scenario_from_json(scenario_json("tonal_saturation.json")));
    const auto fx = simulate(scenario_from_json(scenario_json("tonal_saturation_fxlms.json")));
    const double w_mov = worst_harmonic_db(mov.units.at(0).harmonics);
    const double w_fx = worst_harmonic_db(fx.units.at(0).harmonics);
    const double band = mov.units.at(0).bands.reduction_at(160.0);
    v.detail << " fxlms_worst_harmonic=" << w_fx << "dB mov_worst_harmonic=" << w_mov << "dB mov_160Hz_band=" << band
             << "dB";
    v.require(w_fx > -20.0, "fxlms harmonic above -20 dB");
    v.require(w_mov <= -20.0, "mov harmonics at or below -20 dB");
    v.require(band >= 10.0, "mov 160 Hz band reduction >= 10 dB");
}

// 3. Generator noise with two feedback units.
void genset(Verdict& v) {
    const auto r = simulate(scenario_from_json(scenario_json("genset_dual_unit.json")));
    v.require(!r.faulted, "no fault");
    v.require(r.units.size() == 2 && r.monitors.size() == 3, "two error mics and three monitors");
    for (std::size_t u = 0; u < r.units.size(); ++u) {
        const double d = r.units[u].bands.mean_reduction(31.5, 125.0);
        v.detail << " error" << u << '=' << d;
        v.require(d >= 8.0, "error mic " + std::to_string(u));
    }
    for (std::size_t m = 0; m < r.monitors.size(); ++m) {
        const double d = r.monitors[m].mean_reduction(31.5, 125.0);
        v.detail << " monitor" << m << '=' << d;
        v.require(d >= 8.0, "monitor " + std::to_string(m));
    }
}

// 4. Global power reduction of a compact pair.
void spatial(Verdict& v) {
    const auto r = simulate_global_power_reduction(0.1);
    const double red = -r.reduction_db;
    v.detail << " simulated=" << red << "dB analytic=" << -global_power_reduction(0.1) << "dB";
    v.require(std::abs(red - 9.0) <= 0.5, "9.0 +- 0.5 dB");
}

// 5. Penalty and update against extended-precision oracles; alpha = 0 path equals plain FxLMS.
void unit_oracles(Verdict& v) {
    std::mt19937_64 rng(2025);
    std::uniform_real_distribution<double> u(-3.0, 3.0), lg(-2.0, 1.0);
    double worst_pen = 0.0, worst_upd = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t m = 1 + rng() % 128;
        std::vector<double> d(m);
        for (auto& x : d) x = u(rng);
        const double gs = std::pow(10.0, lg(rng)), rho = std::pow(10.0, lg(rng));
        long double s = 0;
        for (double x : d) s += static_cast<long double>(x) * x;
        long double want = std::sqrt(static_cast<long double>(gs)) * std::sqrt(s / m) / rho - gs;
        if (want < 0) want = 0;
        const double got = penalty_factor(d, gs, rho);
        if (want == 0) {
            if (got != 0.0) worst_pen = INFINITY;
        } else {
            worst_pen = std::max(worst_pen, rel_err(got, static_cast<double>(want)));
        }

        const std::size_t n = 1 + rng() % 64;
        std::vector<double> w(n), xf(n), x(n);
        for (std::size_t k = 0; k < n; ++k) w[k] = u(rng), xf[k] = u(rng), x[k] = u(rng);
        const double mu = 0.01 * std::abs(u(rng)), e = u(rng), alpha = std::abs(u(rng)), y = u(rng);
        std::vector<long double> wl(n);
        for (std::size_t k = 0; k < n; ++k) {
            wl[k] = w[k] + static_cast<long double>(mu) * (static_cast<long double>(e) * xf[k] -
                                                           static_cast<long double>(alpha) * y * x[k]);
        }
        std::vector<double> scratch(n);
        mov_fxlms_update(w, mu, e, xf, alpha, y, x, scratch);
        for (std::size_t k = 0; k < n; ++k) worst_upd = std::max(worst_upd, rel_err(w[k], static_cast<double>(wl[k])));
    }
    v.detail << " penalty_max_rel=" << worst_pen << " update_max_rel=" << worst_upd;
    v.require(worst_pen <= 1e-12, "penalty_factor 1e-12");
    v.require(worst_upd <= 1e-12, "mov_fxlms_update 1e-12");

    auto a = scenario_json("tonal_saturation.json");
    a["units"][0]["rho"] = nullptr;
    auto b = a;
    b["units"][0]["algorithm"] = "fxlms";
    const auto ra = simulate(scenario_from_json(a)), rb = simulate(scenario_from_json(b));
    const auto& ya = ra.recording.output[0];
    const auto& yb = rb.recording.output[0];
    const auto& ea = ra.recording.error[0];
    const auto& eb = rb.recording.error[0];
    const bool same = ya.size() == yb.size() && ea.size() == eb.size() && !ya.empty() &&
                      std::memcmp(ya.data(), yb.data(), ya.size() * sizeof(double)) == 0 &&
                      std::memcmp(ea.data(), eb.data(), ea.size() * sizeof(double)) == 0;
    v.detail << " alpha0_bit_identical=" << (same ? "yes" : "no") << " samples=" << ya.size();
    v.require(same, "alpha = 0 bit-identical to FxLMS");
}

// 6. Update direction versus a finite-difference gradient of the surrogate cost.
void gradient(Verdict& v) {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 2 + rng() % 30;
        std::vector<double> w(n), xf(n), x(n);
        for (std::size_t k = 0; k < n; ++k) w[k] = u(rng), xf[k] = u(rng), x[k] = u(rng);
        const double d = 2.0 * u(rng), alpha = 2.0 * std::abs(u(rng));
        auto cost = [&](const std::vector<double>& c) {
            const double r = d - dot(c, xf), y = dot(c, x);
            return r * r + alpha * y * y;
        };
        auto w1 = w;
        std::vector<double> scratch(n);
        mov_fxlms_update(w1, 1.0, d - dot(w, xf), xf, alpha, dot(w, x), x, scratch);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            auto p = w, m = w;
            p[k] += 1e-4;
            m[k] -= 1e-4;
            const double g = (cost(p) - cost(m)) / 2e-4;
            const double step = w1[k] - w[k];
            num += (step + 0.5 * g) * (step + 0.5 * g);
            den += 0.25 * g * g;
        }
        worst = std::max(worst, std::sqrt(num / den));
    }
    v.detail << " max_rel_err=" << worst << " states=100";
    v.require(worst < 1e-6, "relative error < 1e-6");
}

// 7. In-loop secondary-path calibration, then feedback control with that estimate.
double calibrate_in_engine(Engine& eng) {
    eng.apply_command(0, {{"cmd", "calibrate"}});
    while (eng.state(0).state() == UnitState::Calibrating) eng.run_ticks(1);
    for (const auto& ev : eng.drain_events()) {
        if (ev.type == "calibration-done") return ev.detail.at("misalignment_db").get<double>();
    }
    return INFINITY;  // no completion event
}

void calibration(Verdict& v) {
    UnitSetup us;
    us.controller.mode = ControlMode::Feedback;
    us.secondary_path.method = SecondaryPathSetup::Method::Calibrate;

    Engine quiet(single_unit_plant(SignalParams::tone(150.0, 0.0)), {us});
    const double m_quiet = calibrate_in_engine(quiet);

    // Training noise at the mic has power 1/3; the ambient tone is given the same power.
    const double amp = std::sqrt(2.0 / 3.0);
    Engine noisy(single_unit_plant(SignalParams::tone(150.0, amp)), {us});
    noisy.set_telemetry_enabled(false);
    const double m_noisy = calibrate_in_engine(noisy);
    noisy.advance(0);
    noisy.start_recording();
    noisy.apply_command(0, {{"cmd", "set_mode"}, {"mode", "feedback"}});
    noisy.run_ticks(8000 * 30);
    const auto& rec = noisy.recording();
    const auto from = rec.error[0].size() - 8000 * 10;
    const auto rep = third_octave_reduction(std::span<const double>(rec.error_disturbance[0]).subspan(from),
                                            std::span<const double>(rec.error[0]).subspan(from), 8000);
    const double red = rep.reduction_at(160.0);
    v.detail << " quiet=" << m_quiet << "dB snr0=" << m_noisy << "dB feedback_160Hz_band=" << red << "dB";
    v.require(m_quiet <= -30.0, "quiet misalignment <= -30 dB");
    v.require(m_noisy <= -15.0, "0 dB SNR misalignment <= -15 dB");
    v.require(red >= 8.0, "feedback after calibration >= 8 dB");
    v.require(noisy.state(0).state() == UnitState::RunningFB, "still running");
}

// 8. Control-plane safety.
void dfs(const Engine& eng, bool cal, int depth, std::size_t& nodes, bool& ok) {
    if (depth == 0 || !ok) return;
    static const std::array<json, 5> cmds{json{{"cmd", "calibrate"}, {"seconds", 0.01}},
                                          json{{"cmd", "set_mode"}, {"mode", "feedforward"}},
                                          json{{"cmd", "set_mode"}, {"mode", "feedback"}},
                                          json{{"cmd", "set_mode"}, {"mode", "idle"}}, json{{"cmd", "reset"}}};
    for (int a = 0; a < 6; ++a) {
        Engine e = eng;
        bool c = cal;
        if (a < 5) {
            if (e.apply_command(0, cmds[a]).ok && a == 0) c = false;
        } else {
            for (int k = 0; k < 100; ++k) {
                e.run_ticks(1);
                for (const auto& ev : e.drain_events()) {
                    if (ev.type == "calibration-done") c = true;
                    if (ev.type == "calibration-failed") c = false;
                }
                if (is_running(e.state(0).state()) && !c) ok = false;
            }
            while (!e.quiescent()) e.run_ticks(1);
        }
        ++nodes;
        if (is_running(e.state(0).state()) && !c) ok = false;
        dfs(e, c, depth - 1, nodes, ok);
    }
}

std::optional<Envelope> read_envelope(boost::asio::io_context& io, boost::asio::ip::tcp::socket& s, std::string& buf,
                                      std::chrono::milliseconds timeout) {
    std::optional<Envelope> out;
    bool done = false;
    boost::asio::async_read_until(s, boost::asio::dynamic_buffer(buf), '\n', [&](boost::system::error_code ec, std::size_t n) {
        done = true;
        if (ec) return;
        out = parse_envelope(std::string_view(buf).substr(0, n - 1));
        buf.erase(0, n);
    });
    io.restart();
    io.run_for(timeout);
    if (!done) {
        s.cancel();
        io.restart();
        io.run();
    }
    return out;
}

void control_plane(Verdict& v) {
    UnitSetup us;
    us.controller.mode = ControlMode::Feedback;
    us.controller.filter_len = 16;
    us.controller.frame_len = 16;
    us.reference_source = 0;
    us.secondary_path.model_order = 8;
    Engine eng(single_unit_plant(SignalParams::tone(150, 0.5)), {us});
    eng.set_telemetry_enabled(false);
    std::size_t nodes = 0;
    bool safe = true;
    dfs(eng, false, 6, nodes, safe);
    v.detail << " enumerated=" << nodes;
    v.require(safe && nodes == 55986, "never Running* uncalibrated over all 6-step sequences");

    auto sc = scenario_from_json(scenario_json("genset_dual_unit.json"));
    for (auto& u : sc.units) u.secondary_path.method = SecondaryPathSetup::Method::Oracle;
    ServeOptions so;
    so.tcp_port = 0;
    so.http_port = 0;
    so.speed = 5.0;
    const double period = 1.0 / sc.telemetry_hz;
    Server srv(sc, so);
    srv.start();
    boost::asio::io_context io;
    boost::asio::ip::tcp::socket s(io);
    s.connect({boost::asio::ip::make_address("127.0.0.1"), srv.tcp_port()});
    std::string buf;
    read_envelope(io, s, buf, std::chrono::milliseconds(2000));
    std::string out = json{{"topic", "broker/subscribe"}, {"seq", 1}, {"payload", {{"filters", {"unit/#"}}}}}.dump() + "\n";
    const std::array<json, 4> payloads{json{{"cmd", "get_state"}}, json{{"cmd", "set_param"}, {"params", {{"mu", 0.005}}}},
                                       json{{"cmd", "nonsense"}}, json{{"cmd", "set_mode"}, {"mode", "idle"}}};
    std::map<std::uint64_t, int> acks;
    for (std::uint64_t q = 10; q < 50; ++q) {
        out += json{{"topic", unit_topic(q % 2, "cmd")}, {"seq", q}, {"payload", payloads[q % 4]}}.dump() + "\n";
        acks[q] = 0;
    }
    boost::asio::write(s, boost::asio::buffer(out));
    double worst_latency = 0.0;
    // Keeps reading past the last ack so duplicates would be seen.
    const auto end = std::chrono::steady_clock::now() + std::chrono::seconds(3);
    while (std::chrono::steady_clock::now() < end) {
        const auto e = read_envelope(io, s, buf, std::chrono::milliseconds(300));
        if (!e) continue;
        if (e->topic.find("/ack") == std::string::npos) continue;
        const auto q = e->payload.at("cmd_seq").get<std::uint64_t>();
        if (acks.count(q)) ++acks[q];
        worst_latency = std::max(worst_latency, e->payload.at("t").get<double>() - e->payload.at("t_received").get<double>());
    }
    srv.stop();
    bool once = true;
    for (const auto& [q, n] : acks) once = once && n == 1;
    v.detail << " commands=" << acks.size() << " worst_ack_latency=" << worst_latency << "s";
    v.require(once, "every command acked exactly once");
    v.require(worst_latency <= 2 * period + 1e-9, "ack within 2 telemetry periods");
    v.detail << " headless=yes";
}

} // namespace

int main() {
    // Nothing here may need a display.
    unsetenv("DISPLAY");
    unsetenv("WAYLAND_DISPLAY");

    struct Criterion {
        int id;
        const char* name;
        std::function<void(Verdict&)> fn;
        double budget_s;  // 0 = no runtime bound
    };
    const std::vector<Criterion> all{
        {1, "output-constraint", output_constraint, 60.0},
        {2, "clipped-tone-harmonics", clipped_tone, 0.0},
        {3, "genset-dual-feedback", genset, 120.0},
        {4, "spatial-d-over-lambda-0.1", spatial, 0.0},
        {5, "unit-oracles", unit_oracles, 0.0},
        {6, "update-direction-gradient", gradient, 0.0},
        {7, "calibration", calibration, 0.0},
        {8, "control-plane-safety", control_plane, 0.0},
    };
    int failed = 0;
    for (const auto& c : all) {
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.fn(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0) v.require(wall < c.budget_s, "runtime under " + std::to_string(static_cast<int>(c.budget_s)) + " s");
        failed += !v.pass;
        std::printf("%s %d %s wall=%.2fs%s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, wall, v.detail.str().c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
