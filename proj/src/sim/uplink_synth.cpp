#include "snow/sim/uplink_synth.hpp"

#include <cmath>
#include <stdexcept>

#include "snow/phy/modulation.hpp"

namespace snow::sim {

std::int64_t UplinkTx::length() const
{
    return static_cast<std::int64_t>(phy::symbol_start_sample(levels.size(), sps));
}

namespace {

// sum_{l<L} exp(j w l)
Complex geometric(double w, std::int64_t L)
{
    const double Ld = static_cast<double>(L);
    const double den = std::sin(w / 2.0);
    if (std::abs(den) < 1e-15) return {Ld, 0.0};  // w on a multiple of 2 pi
    return std::polar(std::sin(w * Ld / 2.0) / den, w * (Ld - 1.0) / 2.0);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

void add_tx_to_bin(std::vector<Complex>& out, const UplinkTx& tx, int bin, std::int64_t w0, const BinGrid& grid)
{
    if (grid.fft_size <= 0 || grid.sample_rate <= 0.0) throw std::invalid_argument("uplink synth: bad grid");
    if (tx.sps <= 0.0) throw std::invalid_argument("uplink synth: bad samples per symbol");
    const std::int64_t N = grid.fft_size;
    const std::int64_t M = tx.length();
    if (M == 0 || out.empty()) return;

    const double theta = 2.0 * kPi * (tx.bin_offset_hz + tx.offset_hz) / grid.sample_rate;
    const double w = theta - 2.0 * kPi * bin / static_cast<double>(N);
    const std::int64_t ns_mod = ((tx.start % N) + N) % N;
    const Complex base = tx.amplitude * std::polar(1.0, -2.0 * kPi * bin * static_cast<double>(ns_mod) / N) /
                         std::sqrt(static_cast<double>(N));
    // full-window sum vanishes: only windows with a level change matter
    const Complex full = geometric(w, N);
    const bool sparse = std::abs(full) < 1e-9;

    const std::int64_t wa = std::max(w0, floor_div(tx.start, N));
    const std::int64_t wb =
        std::min<std::int64_t>(w0 + static_cast<std::int64_t>(out.size()), floor_div(tx.end() - 1, N) + 1);
    const std::size_t nsym = tx.levels.size();

    std::size_t sym = 0;
    for (std::int64_t win = wa; win < wb; ++win) {
        const std::int64_t m_lo = std::max<std::int64_t>(win * N - tx.start, 0);
        const std::int64_t m_hi = std::min<std::int64_t>(win * N + N - tx.start, M);
        if (m_lo >= m_hi) continue;
        while (sym + 1 < nsym && static_cast<std::int64_t>(phy::symbol_start_sample(sym + 1, tx.sps)) <= m_lo) ++sym;
        const std::int64_t sym_end = static_cast<std::int64_t>(phy::symbol_start_sample(sym + 1, tx.sps));
        if (sparse && m_hi - m_lo == N && sym_end >= m_hi) continue;

        Complex acc{0.0, 0.0};
        std::size_t s = sym;
        std::int64_t m = m_lo;
        while (m < m_hi) {
            const std::int64_t seg_end = std::min<std::int64_t>(
                static_cast<std::int64_t>(phy::symbol_start_sample(s + 1, tx.sps)), m_hi);
            const double lvl = tx.levels[s];
            if (lvl != 0.0) acc += lvl * std::polar(1.0, w * static_cast<double>(m)) * geometric(w, seg_end - m);
            m = seg_end;
            ++s;
        }
        out[static_cast<std::size_t>(win - w0)] += base * acc;
    }
}

std::vector<Complex> synth_bin_stream(const std::vector<const UplinkTx*>& txs, int bin, std::int64_t w0,
                                      std::size_t count, const BinGrid& grid)
{
    std::vector<Complex> out(count, Complex{0.0, 0.0});
    for (const auto* tx : txs) add_tx_to_bin(out, *tx, bin, w0, grid);
    return out;
}

void add_complex_noise(std::vector<Complex>& stream, double variance, std::mt19937_64& rng)
{
    if (variance < 0.0) throw std::invalid_argument("noise variance must be >= 0");
    if (variance == 0.0) return;
    std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
    for (auto& z : stream) z += Complex(g(rng), g(rng));
}

}  // namespace snow::sim
