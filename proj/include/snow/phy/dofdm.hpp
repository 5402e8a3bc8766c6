// dofdm.hpp - BS side IFFT/G-FFT over the wideband channel
#pragma once

#include <map>
#include <vector>

#include "snow/phy/signal.hpp"
#include "snow/phy/spectrum_plan.hpp"

namespace snow::phy {

// subcarrier id -> one complex value per FFT window (rate = spacing)
using SubcarrierStreams = std::map<int, BasebandSignal>;

// Unitary n-point DFT restricted to a set of bins, twiddles precomputed.
class BinDft {
public:
    BinDft(int n, std::vector<int> bins);
    int size() const { return n_; }
    const std::vector<int>& bins() const { return bins_; }
    // out[j] = n^-1/2 * sum_m x[m] exp(-j 2 pi bins[j] m / n)
    void forward(const Complex* window, Complex* out) const;

private:
    int n_;
    std::vector<int> bins_;
    std::vector<Complex> twiddle_;  // bins.size() x n, row-major
};

// x[w*N + m] = N^-1/2 * sum_k X_k[w] exp(j 2 pi bin_k m / N)
BasebandSignal dofdm_encode(const std::map<int, std::vector<Complex>>& symbols, const SpectrumPlan& plan);

// Non-overlapping N-sample windows starting at sample 0; a trailing
// partial window is zero padded. Streams inherit t0.
SubcarrierStreams dofdm_decode(const BasebandSignal& signal, const SpectrumPlan& plan);
SubcarrierStreams dofdm_decode(const BasebandSignal& signal, const SpectrumPlan& plan,
                               const std::vector<int>& ids);

}  // namespace snow::phy
