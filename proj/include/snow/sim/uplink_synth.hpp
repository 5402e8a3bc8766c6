// uplink_synth.hpp - G-FFT bin streams of concurrent uplink frames, built in
// closed form per constant-amplitude segment instead of sample by sample
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "snow/phy/signal.hpp"

namespace snow::sim {

// One node transmission as seen at the BS wideband input:
//   s[start + m] = amplitude * levels[i(m)] * exp(j 2 pi (bin_offset_hz + offset_hz) m / fs)
// for m in [0, symbol_start(levels.size())), symbol i covering
// [round(i*sps), round((i+1)*sps)). Matches modulate() + apply_cfo() placed
// at `start` by mix_concurrent().
struct UplinkTx {
    std::int64_t start = 0;      // wideband sample index
    double sps = 750.0;          // wideband samples per symbol
    std::vector<double> levels;  // per-symbol amplitude (OOK 0/1, BPSK +-1, ...)
    Complex amplitude{1.0, 0.0};
    double bin_offset_hz = 0.0;  // subcarrier center minus LO
    double offset_hz = 0.0;      // residual CFO + Doppler

    std::int64_t length() const;
    std::int64_t end() const { return start + length(); }
};

struct BinGrid {
    int fft_size = 42;
    double sample_rate = 8.4e6;
};

// Unitary G-FFT output of bin `bin` for windows [w0, w0 + count), window w
// covering samples [w*N, (w+1)*N). Adds into `out` (resized if smaller).
void add_tx_to_bin(std::vector<Complex>& out, const UplinkTx& tx, int bin, std::int64_t w0, const BinGrid& grid);

std::vector<Complex> synth_bin_stream(const std::vector<const UplinkTx*>& txs, int bin, std::int64_t w0,
                                      std::size_t count, const BinGrid& grid);

// CN(0, variance) per window sample (white input noise keeps its per-sample
// variance through the unitary DFT)
void add_complex_noise(std::vector<Complex>& stream, double variance, std::mt19937_64& rng);

}  // namespace snow::sim
