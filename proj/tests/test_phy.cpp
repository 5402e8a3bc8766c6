#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "snow/channel/impairments.hpp"
#include "snow/channel/link.hpp"
#include "snow/phy/dofdm.hpp"
#include "snow/phy/modulation.hpp"
#include "snow/phy/packet.hpp"
#include "snow/phy/papr.hpp"
#include "snow/phy/receiver.hpp"
#include "snow/phy/spectrum_plan.hpp"
#include "test_util.hpp"

using namespace snow;
using phy::ModulationKind;
using phy::ModulationScheme;

namespace {

// bit-at-a-time CRC straight from the polynomial definition
std::uint16_t crc_reference(const std::vector<std::uint8_t>& bytes)
{
    std::uint16_t r = 0xFFFF;
    for (auto b : bytes)
        for (int i = 7; i >= 0; --i) {
            const bool top = ((r >> 15) & 1u) != (((b >> i) & 1u) != 0);
            r = static_cast<std::uint16_t>(r << 1);
            if (top) r ^= 0x1021;
        }
    return r;
}

}  // namespace

TEST_CASE("spectrum plan default layout")
{
    const auto p = phy::SpectrumPlan::snow_default();
    CHECK_NOTHROW(p.validate());
    CHECK(p.num_subcarriers == 29);
    CHECK(p.spacing_hz() == doctest::Approx(200e3));
    CHECK(p.center_hz(1) == doctest::Approx(500.2e6));
    CHECK(p.center_hz(29) == doctest::Approx(505.8e6));
    double prev = 0.0;
    std::set<int> bins;
    for (int k = 1; k <= 29; ++k) {
        CHECK(p.center_hz(k) > prev);
        CHECK(p.center_hz(k) >= p.band_start_hz);
        CHECK(p.center_hz(k) <= p.band_end_hz);
        prev = p.center_hz(k);
        bins.insert(p.bin(k));
    }
    CHECK(bins.size() == 29u);
    CHECK(p.join_index == 28);
    CHECK(p.downlink_index == 26);
    CHECK_FALSE(p.is_data(28));
    CHECK_FALSE(p.is_data(27));
    CHECK_FALSE(p.is_data(29));
    CHECK(p.data_subcarriers().size() == 25u);
}

TEST_CASE("spectrum plan rejects a join subcarrier in the data pool")
{
    auto p = phy::SpectrumPlan::snow_default();
    p.downlink_index = 28;
    CHECK_THROWS(p.validate());
}

TEST_CASE("crc matches bitwise reference and catalogue check value")
{
    const std::vector<std::uint8_t> check{'1', '2', '3', '4', '5', '6', '7', '8', '9'};
    CHECK(phy::crc16_ccitt(check) == 0x29B1);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto p = testing::random_payload(rng, 1 + i * 5);
        CHECK(phy::crc16_ccitt(p) == crc_reference(p));
    }
}

TEST_CASE("packet round trip and every single-bit flip is caught")
{
    std::mt19937_64 rng(5);
    const auto payload = testing::random_payload(rng, 30);
    const auto pkt = phy::SnowPacket::make(payload);
    const auto bits = pkt.to_bits();
    CHECK(bits.size() == phy::frame_bits(30));
    CHECK(bits.size() == 32 + 32 + 8 + 240 + 16);
    const auto back = phy::parse_packet(bits);
    REQUIRE(back);
    CHECK(back->payload == payload);
    CHECK(back->crc_ok());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        auto b = bits;
        b[i] ^= 1;
        const auto got = phy::parse_packet(b);
        CHECK_MESSAGE(!(got && got->payload == payload), "flip at bit " << i);
        CHECK_MESSAGE(!got, "flip at bit " << i);
    }
}

TEST_CASE("modulate basics")
{
    const ModulationScheme ook{ModulationKind::ook, 11200.0};
    const double fs = 8.4e6;
    SUBCASE("all-zero OOK is silence")
    {
        const auto s = phy::modulate(Bits(40, 0), ook, 0.0, 39000.0, fs);
        CHECK(s.avg_power() == 0.0);
    }
    SUBCASE("BPSK antipodal")
    {
        const ModulationScheme bpsk{ModulationKind::bpsk, 11200.0};
        const auto a = phy::modulate(Bits{1}, bpsk, 100e3, 39000.0, fs);
        const auto b = phy::modulate(Bits{0}, bpsk, 100e3, 39000.0, fs);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.samples[i] + b.samples[i]) < 1e-12);
    }
    SUBCASE("preamble duration")
    {
        const auto s = phy::modulate(phy::preamble_bits(), ook, 0.0, 39000.0, fs);
        CHECK(s.duration() == doctest::Approx(32.0 / 11200.0).epsilon(1e-6));
    }
    SUBCASE("aliasing and empty input rejected")
    {
        CHECK_THROWS(phy::modulate(Bits{1, 0}, ook, 0.0, 39000.0, 50000.0));
        CHECK_THROWS(phy::modulate(Bits{}, ook, 0.0, 39000.0, fs));
        CHECK_THROWS(phy::parse_modulation("qam16"));
    }
}

TEST_CASE("demodulate inverts modulate")
{
    std::mt19937_64 rng(11);
    const double fs = 8 * 11200.0;
    for (auto kind : {ModulationKind::ook, ModulationKind::bpsk, ModulationKind::ask}) {
        const ModulationScheme sc{kind, 11200.0};
        const auto bits = testing::random_bits(rng, 240);
        const auto sig = phy::modulate(bits, sc, 0.0, 11200.0, fs);
        CHECK(phy::demodulate(sig, sc, std::nullopt).bits == bits);
    }
    SUBCASE("BPSK through H = -1 with CSI")
    {
        const ModulationScheme bpsk{ModulationKind::bpsk, 11200.0};
        const auto bits = testing::random_bits(rng, 240);
        auto sig = phy::modulate(bits, bpsk, 0.0, 11200.0, fs);
        for (auto& x : sig.samples) x = -x;
        estimation::CsiEstimate csi;
        csi.h_gain = {-1.0, 0.0};
        CHECK(phy::demodulate(sig, bpsk, csi).bits == bits);
        Bits flipped = bits;
        for (auto& b : flipped) b ^= 1;
        CHECK(phy::demodulate(sig, bpsk, std::nullopt).bits == flipped);
    }
    SUBCASE("shorter than a symbol")
    {
        const phy::BasebandSignal tiny(std::vector<Complex>(3, Complex(1, 0)), fs);
        CHECK_THROWS(phy::demodulate(tiny, ModulationScheme{ModulationKind::ook, 11200.0}, std::nullopt));
    }
}

TEST_CASE("noncoherent OOK BER agrees with the Rician closed form")
{
    // one sample per symbol: Es = A^2 on a one, average Eb = A^2 / 2
    const double ebn0 = std::pow(10.0, 12.0 / 10.0);
    const double a = 1.0;
    const double sigma2 = a * a / (2.0 * ebn0);  // complex noise variance
    const double t = 0.5 * a;                    // threshold at half amplitude

    // oracle: P0 from the Rayleigh tail, P1 from the Rician cdf by quadrature
    const double s2 = sigma2 / 2.0;
    const double p0 = std::exp(-t * t / sigma2);
    double p1 = 0.0;
    const int steps = 20000;
    for (int i = 0; i < steps; ++i) {
        const double r = (i + 0.5) * t / steps;
        p1 += r / s2 * std::exp(-(r * r + a * a) / (2.0 * s2)) * std::cyl_bessel_i(0.0, r * a / s2) * (t / steps);
    }
    const double ber_oracle = 0.5 * (p0 + p1);

    std::mt19937_64 rng(21);
    const std::size_t n = 200000;
    const auto bits = testing::random_bits(rng, n);
    const ModulationScheme ook{ModulationKind::ook, 1.0};
    auto sig = phy::modulate(bits, ook, 0.0, 0.5, 1.0);
    channel::add_awgn(sig, sigma2, rng);
    const auto dem = phy::demodulate(sig, ook, std::nullopt, 0.0, a);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < n; ++i) errors += dem.bits[i] != bits[i];
    const double ber = static_cast<double>(errors) / static_cast<double>(n);
    MESSAGE("ber " << ber << " oracle " << ber_oracle);
    CHECK(ber > 0.5 * ber_oracle);
    CHECK(ber < 2.0 * ber_oracle);
}

TEST_CASE("dofdm encode: single subcarrier has constant envelope")
{
    const auto plan = phy::SpectrumPlan::snow_default();
    std::map<int, std::vector<Complex>> sym{{7, {Complex(1, 0), Complex(0, 1), Complex(-1, 0)}}};
    const auto x = phy::dofdm_encode(sym, plan);
    const double n = plan.fft_size();
    CHECK(x.size() == 3u * 42u);
    for (const auto& v : x.samples) CHECK(std::abs(v) == doctest::Approx(1.0 / std::sqrt(n)).epsilon(1e-12));
    CHECK_THROWS(phy::dofdm_encode({}, plan));
    CHECK_THROWS(phy::dofdm_encode({{99, {Complex(1, 0)}}}, plan));
}

TEST_CASE("dofdm Parseval on a 64-subcarrier plan")
{
    const auto plan = phy::SpectrumPlan::analysis(64, 200e3);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        std::map<int, std::vector<Complex>> sym;
        std::normal_distribution<double> g(0.0, 1.0);
        double freq_power = 0.0;
        for (int k = 1; k <= 64; ++k) {
            const Complex v(g(rng), g(rng));
            sym[k] = {v};
            freq_power += std::norm(v);
        }
        freq_power /= 64.0;
        const auto x = phy::dofdm_encode(sym, plan);
        CHECK(std::abs(x.avg_power() - freq_power) / freq_power < 1e-9);
    }
}

TEST_CASE("dofdm orthogonality and round trip on every data subcarrier")
{
    const auto plan = phy::SpectrumPlan::snow_default();
    std::mt19937_64 rng(4);
    const auto data = plan.data_subcarriers();
    std::map<int, std::vector<Complex>> sym;
    std::map<int, Bits> bits;
    for (int id : data) {
        bits[id] = testing::random_bits(rng, 200);
        for (auto b : bits[id]) sym[id].push_back(Complex(b ? 1.0 : 0.0, 0.0));
    }
    const auto streams = phy::dofdm_decode(phy::dofdm_encode(sym, plan), plan);
    for (int id : data) {
        const auto& s = streams.at(id).samples;
        for (std::size_t w = 0; w < s.size(); ++w) CHECK(std::abs(s[w] - sym[id][w]) < 1e-10);
    }

    // leakage of one lit subcarrier into all others
    for (int j : {1, 13, 25}) {
        const auto one = phy::dofdm_decode(phy::dofdm_encode({{j, std::vector<Complex>(50, Complex(1, 0))}}, plan), plan);
        const double ej = one.at(j).energy();
        for (const auto& [k, st] : one) {
            if (k == j) continue;
            const double leak = st.energy() / ej;
            CHECK(leak < 1e-6);
        }
    }
}

TEST_CASE("adjacent overlapping subcarriers decode exactly from the wideband signal")
{
    const auto plan = phy::SpectrumPlan::snow_default();
    std::mt19937_64 rng(8);
    const auto p10 = testing::random_payload(rng, 30), p11 = testing::random_payload(rng, 30);
    const auto mixed = channel::mix_concurrent(
        {{testing::wideband_frame(p10, 10, plan), 0.0}, {testing::wideband_frame(p11, 11, plan), 0.0013}});
    const auto streams = phy::dofdm_decode(mixed, plan, {10, 11});
    phy::ReceiverConfig rc;
    const auto f10 = phy::receive_frame(streams.at(10), rc);
    const auto f11 = phy::receive_frame(streams.at(11), rc);
    REQUIRE(f10.packet);
    REQUIRE(f11.packet);
    CHECK(f10.packet->payload == p10);
    CHECK(f11.packet->payload == p11);
    CHECK(f11.detection.start_sample == doctest::Approx(0.0013 * 8.4e6).epsilon(0.002));
}

TEST_CASE("join-only traffic gives no detection on data subcarriers")
{
    const auto plan = phy::SpectrumPlan::snow_default();
    std::mt19937_64 rng(9);
    auto sig = testing::wideband_frame(testing::random_payload(rng, 8), plan.join_index, plan);
    // 20 dB per symbol on the join bin: 750 samples per symbol, unit tone
    channel::add_awgn(sig, 7.5, rng);
    const auto streams = phy::dofdm_decode(sig, plan);
    phy::ReceiverConfig rc;
    CHECK(phy::receive_frame(streams.at(plan.join_index), rc).packet);
    for (int id : plan.data_subcarriers()) {
        INFO("subcarrier " << id);
        CHECK_FALSE(phy::detect_preamble(streams.at(id), rc).found);
        CHECK_FALSE(phy::receive_frame(streams.at(id), rc).packet);
    }
}

TEST_CASE("papr closed forms")
{
    const auto plan = phy::SpectrumPlan::analysis(64, 200e3);
    std::map<int, std::vector<Complex>> ones;
    for (int k = 1; k <= 64; ++k) ones[k] = {Complex(1, 0)};
    CHECK(phy::compute_papr(phy::dofdm_encode(ones, plan)).papr_db == doctest::Approx(18.0618).epsilon(1e-4));

    const phy::BasebandSignal tone(std::vector<Complex>(100, std::polar(2.0, 0.3)), 1e3);
    CHECK(phy::compute_papr(tone).papr_db == doctest::Approx(0.0));
    CHECK_THROWS(phy::compute_papr(phy::BasebandSignal(std::vector<Complex>(10), 1e3)));

    // coherent alignment bound 10 log10(k) grows with every active subcarrier
    double prev = -1.0;
    for (int k = 1; k <= 64; ++k) {
        std::map<int, std::vector<Complex>> s;
        for (int i = 1; i <= k; ++i) s[i] = {Complex(1, 0)};
        const double p = phy::compute_papr(phy::dofdm_encode(s, plan)).papr_db;
        CHECK(p == doctest::Approx(10.0 * std::log10(k)).epsilon(1e-9));
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("hpa efficiency")
{
    CHECK(phy::hpa_efficiency(14.0) == doctest::Approx(0.5 / 25.1189).epsilon(1e-4));
    CHECK(phy::hpa_efficiency(10.0 * std::log10(2.0)) == doctest::Approx(0.25));
    CHECK(phy::hpa_efficiency(0.0) == doctest::Approx(0.5));
}

TEST_CASE("ccdf")
{
    const std::vector<double> grid{2.0, 3.0, 4.0, 5.0, 6.0};
    const auto two = phy::ccdf_from_values({3.0, 5.0, 3.0, 5.0}, grid);
    CHECK(two[2].second == doctest::Approx(0.5));
    CHECK(two[0].second == doctest::Approx(1.0));
    CHECK(two[4].second == doctest::Approx(0.0));

    // identical frames: a step at their PAPR
    const phy::BasebandSignal f(std::vector<Complex>{Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(0, 0)}, 1.0);
    const double p = phy::compute_papr(f).papr_db;
    const auto rep = phy::papr_ccdf({f, f, f}, phy::default_ccdf_grid());
    for (const auto& [x, q] : rep.ccdf) CHECK(q == (x < p ? 1.0 : 0.0));

    // random frames: non-increasing
    const auto plan = phy::SpectrumPlan::analysis(64, 200e3);
    std::mt19937_64 rng(1);
    std::vector<phy::BasebandSignal> frames;
    for (int i = 0; i < 500; ++i) frames.push_back(phy::random_bpsk_frame(plan, rng));
    const auto r = phy::papr_ccdf(frames, phy::default_ccdf_grid());
    for (std::size_t i = 1; i < r.ccdf.size(); ++i) CHECK(r.ccdf[i].second <= r.ccdf[i - 1].second);

    CHECK(phy::ccdf_threshold({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.1) == 9.0);
}

TEST_CASE("receiver finds asynchronous frames under noise")
{
    const auto plan = phy::SpectrumPlan::snow_default();
    std::mt19937_64 rng(31);
    std::vector<std::pair<phy::BasebandSignal, double>> parts;
    std::map<int, std::vector<std::uint8_t>> sent;
    std::uniform_real_distribution<double> off(0.0, 0.004);
    for (int id : {3, 4, 5, 20}) {
        sent[id] = testing::random_payload(rng, 20);
        auto s = testing::wideband_frame(sent[id], id, plan);
        s = channel::apply_cfo(s, 40.0);
        const Complex h = std::polar(0.7, 1.1 * id);
        for (auto& x : s.samples) x *= h;
        parts.emplace_back(std::move(s), off(rng));
    }
    auto mixed = channel::mix_concurrent(parts);
    // per-bin SNR about 25 dB over a symbol
    channel::add_awgn(mixed, 0.49 * 750 / 300.0, rng);
    const auto streams = phy::dofdm_decode(mixed, plan, {3, 4, 5, 20});
    phy::ReceiverConfig rc;
    for (const auto& [id, payload] : sent) {
        const auto fr = phy::receive_frame(streams.at(id), rc);
        REQUIRE(fr.packet);
        CHECK(fr.packet->payload == payload);
    }
}
