#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "snow/channel/impairments.hpp"
#include "snow/channel/link.hpp"
#include "snow/estimation/cfo.hpp"
#include "snow/estimation/csi.hpp"
#include "snow/phy/modulation.hpp"
#include "snow/phy/packet.hpp"
#include "snow/sim/scenarios.hpp"

using namespace snow;
using namespace snow::estimation;

namespace {

constexpr double kRate = 11200.0;

phy::BasebandSignal preamble(double fs)
{
    return phy::modulate(phy::preamble_bits(), {phy::ModulationKind::ook, kRate}, 0.0, std::min(39000.0, fs / 2.0), fs);
}

double estimate(const phy::BasebandSignal& rx)
{
    const auto split = split_preamble(rx, kRate);
    return estimate_cfo_fine(split, estimate_cfo_coarse(split));
}

// stacked least squares through a pseudo-inverse of the reference column
Complex pinv_oracle(const phy::BasebandSignal& y, const Bits& known)
{
    const Eigen::Index m = static_cast<Eigen::Index>(y.size());
    Eigen::MatrixXcd p(m, 1);
    Eigen::VectorXcd yy(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        p(i, 0) = known[static_cast<std::size_t>(i) * known.size() / static_cast<std::size_t>(m)] ? 1.0 : 0.0;
        yy(i) = y.samples[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXcd pinv = p.completeOrthogonalDecomposition().pseudoInverse();
    return (pinv * yy)(0);
}

}  // namespace

TEST_CASE("csi exact in zero noise")
{
    const auto pre = preamble(4 * kRate);
    for (Complex h : {std::polar(0.5, kPi / 4.0), Complex(1.0, 0.0)}) {
        auto y = pre;
        for (auto& s : y.samples) s *= h;
        const auto est = estimate_csi(y, phy::preamble_bits(), 4);
        CHECK(std::abs(est.h_gain - h) < 1e-9);
        CHECK(est.n_parts == 4);
    }
}

TEST_CASE("csi equals the pseudo-inverse solution")
{
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> pick(0, 3);
    const int parts_choice[] = {1, 2, 4, 8};
    for (int trial = 0; trial < 200; ++trial) {
        auto y = preamble(8 * kRate);
        const Complex h = channel::draw_rayleigh(rng);
        for (auto& s : y.samples) s *= h;
        channel::add_awgn(y, 0.3, rng);
        const int parts = parts_choice[pick(rng)];
        const auto est = estimate_csi(y, phy::preamble_bits(), parts);
        CHECK(std::abs(est.h_gain - pinv_oracle(y, phy::preamble_bits())) < 1e-9);
    }
}

TEST_CASE("csi error falls as 1/sqrt of the preamble length")
{
    std::mt19937_64 rng(13);
    auto mean_err = [&](double fs) {
        const auto pre = preamble(fs);
        double e = 0.0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            const Complex h = channel::draw_rayleigh(rng);
            auto y = pre;
            for (auto& s : y.samples) s *= h;
            channel::add_awgn(y, 0.1, rng);  // 10 dB per on-sample
            e += std::abs(estimate_csi(y, phy::preamble_bits(), 4).h_gain - h);
        }
        return e / trials;
    };
    const double e1 = mean_err(4 * kRate), e2 = mean_err(8 * kRate);
    MESSAGE("mean |H err| " << e1 << " -> " << e2);
    CHECK(e2 / e1 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("csi rejects bad input")
{
    const auto pre = preamble(4 * kRate);
    CHECK_THROWS(estimate_csi(pre, Bits(32, 0), 4));
    CHECK_THROWS(estimate_csi(pre, phy::preamble_bits(), 3));
    CHECK_THROWS(estimate_csi(phy::BasebandSignal{}, phy::preamble_bits(), 4));
}

TEST_CASE("split lengths follow the 8/24 bit division")
{
    const auto split = split_preamble(preamble(8.4e6), kRate);
    CHECK(split.short_part.duration() == doctest::Approx(8.0 / kRate).epsilon(1e-3));
    CHECK(split.long_part.duration() == doctest::Approx(24.0 / kRate).epsilon(1e-3));
}

TEST_CASE("coarse and fine recover noiseless offsets")
{
    const auto pre = preamble(8.4e6);
    for (double df : {0.0, 500.0, -500.0, 3333.3, -9876.5}) {
        const auto split = split_preamble(channel::apply_cfo(pre, df), kRate);
        const double c = estimate_cfo_coarse(split);
        const double f = estimate_cfo_fine(split, c);
        if (df == 0.0) {
            CHECK(std::abs(c) < 1e-9);
            CHECK(std::abs(f) < 1e-9);
        } else {
            CHECK(std::abs(c - df) / std::abs(df) < 1e-6);
            CHECK(std::abs(f - df) / std::abs(df) < 1e-6);
        }
    }
    // exact coarse: fine adds nothing
    const auto split = split_preamble(channel::apply_cfo(pre, 700.0), kRate);
    CHECK(estimate_cfo_fine(split, 700.0) == doctest::Approx(700.0).epsilon(1e-9));
    CHECK(sim::cfo_noiseless_max_rel_error(41, 20.0, 505e6) < 1e-6);
}

TEST_CASE("fine stage repairs a coarse error at 20 dB")
{
    std::mt19937_64 rng(5);
    auto y = channel::apply_cfo(preamble(8.4e6), 500.0);
    channel::add_awgn(y, y.avg_power() / 100.0, rng);
    const auto split = split_preamble(y, kRate);
    const double f = estimate_cfo_fine(split, 480.0);
    CHECK(std::abs(f - 500.0) < 0.005 * 500.0);
}

TEST_CASE("offset beyond the coarse range is rejected")
{
    const auto split = split_preamble(channel::apply_cfo(preamble(8.4e6), 11000.0), kRate);
    CHECK_THROWS_AS(estimate_cfo_coarse(split), AmbiguityError);
}

TEST_CASE("fine rms never exceeds coarse rms")
{
    for (double snr : {5.0, 10.0, 20.0, 40.0}) {
        const auto row = sim::cfo_bench(snr, 150, 20.0, 505e6, 3);
        INFO("snr " << snr);
        CHECK(row.failures == 0);
        CHECK(row.fine_rms_hz <= row.coarse_rms_hz);
    }
}

TEST_CASE("ppm extrapolation")
{
    const auto plan = phy::SpectrumPlan::snow_default();
    const auto e = ppm_and_subcarrier_cfo(5050.0, 505e6, plan);
    CHECK(e.ppm_bs == doctest::Approx(10.0));
    CHECK(500e6 * e.ppm_bs * 1e-6 == doctest::Approx(5000.0));
    for (const auto& [k, hz] : e.per_subcarrier_hz) CHECK(hz / plan.center_hz(k) == doctest::Approx(5050.0 / 505e6).epsilon(1e-15));
    const double fj = plan.center_hz(plan.join_index);
    CHECK(ppm_and_subcarrier_cfo(1234.0, fj, plan).per_subcarrier_hz.at(plan.join_index) == doctest::Approx(1234.0).epsilon(1e-15));
    for (const auto& [k, hz] : ppm_and_subcarrier_cfo(0.0, 505e6, plan).per_subcarrier_hz) CHECK(hz == 0.0);
    CHECK_THROWS(ppm_and_subcarrier_cfo(1.0, 0.0, plan));
}

TEST_CASE("proactive correction closes the loop")
{
    const auto pre = preamble(8.4e6);
    CHECK(proactive_correction(pre, 0.0, 0.0).samples == pre.samples);

    std::mt19937_64 rng(7);
    // node estimated its offset from a noisy join preamble
    auto join = channel::apply_cfo(pre, 5000.0);
    channel::add_awgn(join, join.avg_power() / 100.0, rng);
    const double est = estimate(join);
    auto rx = channel::apply_cfo(proactive_correction(pre, est, 0.0), 5000.0);
    CHECK(std::abs(estimate(rx)) < 10.0);

    // 20 mph straight at the BS
    channel::MobilityState mob;
    mob.velocity_mps = 20.0 * 0.44704;
    mob.angle_theta_rad = 0.0;
    const double fd = channel::doppler_shift_hz(mob, 500e6);
    CHECK(fd == doctest::Approx(14.9).epsilon(0.01));
    rx = channel::apply_cfo(proactive_correction(pre, 5000.0, fd), 5000.0 + fd);
    CHECK(std::abs(estimate(rx)) < 1.0);
}

TEST_CASE("doppler is a common shift: join-path extrapolation leaves < 1 Hz")
{
    const auto plan = phy::SpectrumPlan::snow_default();
    const double ppm = 7.5, v = 9.0;
    auto offset_at = [&](double f) { return f * (ppm * 1e-6 + v / kSpeedOfLight); };
    const double fj = plan.center_hz(plan.join_index);
    const double fine = estimate(channel::apply_cfo(preamble(8.4e6), offset_at(fj)));
    const auto e = ppm_and_subcarrier_cfo(fine, fj, plan);
    for (int k : plan.data_subcarriers()) CHECK(std::abs(e.per_subcarrier_hz.at(k) - offset_at(plan.center_hz(k))) < 1.0);
}

TEST_CASE("snr loss closed form")
{
    CHECK(snr_loss_factor(0.0, 1e-3, 100.0) == 1.0);
    const double t = 1.0 / 11200.0;
    const double df = 0.1 / (kPi * t);
    CHECK(snr_loss_factor(df, t, 100.0) == doctest::Approx(1.0 + 1.0 / 3.0));
    const double a = snr_loss_factor(df, t, 50.0) - 1.0, b = snr_loss_factor(2 * df, t, 50.0) - 1.0;
    CHECK(b / a == doctest::Approx(4.0));
    CHECK_THROWS(snr_loss_factor(1.0, 0.0, 1.0));

    const auto row = sim::snr_loss_mc(0.2, 20.0, 400, 1);
    CHECK(row.measured == doctest::Approx(row.closed_form).epsilon(0.1));
}
