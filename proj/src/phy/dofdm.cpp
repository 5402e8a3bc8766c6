#include "snow/phy/dofdm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace snow::phy {

BinDft::BinDft(int n, std::vector<int> bins) : n_(n), bins_(std::move(bins))
{
    if (n_ < 1) throw std::invalid_argument("BinDft: size must be positive");
    twiddle_.resize(bins_.size() * static_cast<std::size_t>(n_));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
    for (std::size_t j = 0; j < bins_.size(); ++j) {
        if (bins_[j] < 0 || bins_[j] >= n_) throw std::invalid_argument("BinDft: bin out of range");
        for (int m = 0; m < n_; ++m) {
            const long idx = (static_cast<long>(bins_[j]) * m) % n_;
            twiddle_[j * n_ + m] = std::polar(scale, -2.0 * kPi * static_cast<double>(idx) / n_);
        }
    }
}

void BinDft::forward(const Complex* window, Complex* out) const
{
    for (std::size_t j = 0; j < bins_.size(); ++j) {
        const Complex* t = &twiddle_[j * n_];
        Complex acc{};
        for (int m = 0; m < n_; ++m) acc += window[m] * t[m];
        out[j] = acc;
    }
}

BasebandSignal dofdm_encode(const std::map<int, std::vector<Complex>>& symbols, const SpectrumPlan& plan)
{
    if (symbols.empty()) throw std::invalid_argument("dofdm_encode: empty symbol map");
    const int n = plan.fft_size();
    std::size_t len = symbols.begin()->second.size();
    for (const auto& [id, s] : symbols) {
        if (!plan.valid_id(id)) throw std::invalid_argument("dofdm_encode: unknown subcarrier " + std::to_string(id));
        if (s.size() != len) throw std::invalid_argument("dofdm_encode: streams are not frame aligned");
    }
    if (len == 0) throw std::invalid_argument("dofdm_encode: empty streams");

    std::vector<Complex> table(n);
    for (int m = 0; m < n; ++m) table[m] = std::polar(1.0, 2.0 * kPi * m / n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));

    std::vector<Complex> out(len * n);
    for (const auto& [id, s] : symbols) {
        const long b = plan.bin(id);
        for (std::size_t w = 0; w < len; ++w) {
            const Complex x = s[w] * scale;
            if (x == Complex{}) continue;
            Complex* dst = &out[w * n];
            for (int m = 0; m < n; ++m) dst[m] += x * table[(b * m) % n];
        }
    }
    return BasebandSignal(std::move(out), plan.sample_rate_hz);
}

SubcarrierStreams dofdm_decode(const BasebandSignal& signal, const SpectrumPlan& plan)
{
    return dofdm_decode(signal, plan, plan.all_subcarriers());
}

SubcarrierStreams dofdm_decode(const BasebandSignal& signal, const SpectrumPlan& plan,
                               const std::vector<int>& ids)
{
    signal.require_valid("dofdm_decode");
    if (std::abs(signal.sample_rate - plan.sample_rate_hz) > 1e-6 * plan.sample_rate_hz)
        throw std::invalid_argument("dofdm_decode: signal rate does not match the plan");
    const int n = plan.fft_size();
    std::vector<int> bins;
    for (int id : ids) {
        if (!plan.valid_id(id)) throw std::invalid_argument("dofdm_decode: unknown subcarrier " + std::to_string(id));
        bins.push_back(plan.bin(id));
    }
    BinDft dft(n, bins);

    const std::size_t nwin = (signal.size() + n - 1) / n;
    std::vector<std::vector<Complex>> streams(ids.size(), std::vector<Complex>(nwin));
    std::vector<Complex> window(n), res(ids.size());
    for (std::size_t w = 0; w < nwin; ++w) {
        const std::size_t base = w * n;
        const Complex* src;
        if (base + n <= signal.size()) {
            src = &signal.samples[base];
        } else {
            std::fill(window.begin(), window.end(), Complex{});
            for (std::size_t m = base; m < signal.size(); ++m) window[m - base] = signal.samples[m];
            src = window.data();
        }
        dft.forward(src, res.data());
        for (std::size_t j = 0; j < ids.size(); ++j) streams[j][w] = res[j];
    }

    SubcarrierStreams out;
    for (std::size_t j = 0; j < ids.size(); ++j)
        out.emplace(ids[j], BasebandSignal(std::move(streams[j]), plan.spacing_hz(), signal.t0));
    return out;
}

}  // namespace snow::phy
