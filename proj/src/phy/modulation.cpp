#include "snow/phy/modulation.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace snow::phy {

std::string to_string(ModulationKind k)
{
    switch (k) {
    case ModulationKind::ook: return "ook";
    case ModulationKind::bpsk: return "bpsk";
    case ModulationKind::ask: return "ask";
    }
    return "?";
}

ModulationKind parse_modulation(const std::string& name)
{
    if (name == "ook" || name == "OOK") return ModulationKind::ook;
    if (name == "bpsk" || name == "BPSK") return ModulationKind::bpsk;
    if (name == "ask" || name == "ASK") return ModulationKind::ask;
    throw std::invalid_argument("unsupported modulation: " + name);
}

double ModulationScheme::level(std::uint8_t bit) const
{
    switch (kind) {
    case ModulationKind::ook: return bit ? 1.0 : 0.0;
    case ModulationKind::bpsk: return bit ? 1.0 : -1.0;
    case ModulationKind::ask: return bit ? 1.0 : ask_low_level;
    }
    throw std::invalid_argument("unsupported modulation kind");
}

double ModulationScheme::decision_threshold() const
{
    switch (kind) {
    case ModulationKind::ook: return 0.5;
    case ModulationKind::bpsk: return 0.0;
    case ModulationKind::ask: return 0.5 * (1.0 + ask_low_level);
    }
    throw std::invalid_argument("unsupported modulation kind");
}

void ModulationScheme::validate() const
{
    if (kind != ModulationKind::ook && kind != ModulationKind::bpsk && kind != ModulationKind::ask)
        throw std::invalid_argument("unsupported modulation kind");
    if (!(symbol_rate > 0.0)) throw std::invalid_argument("symbol rate must be positive");
    if (kind == ModulationKind::ask && !(ask_low_level >= 0.0 && ask_low_level < 1.0))
        throw std::invalid_argument("ASK low level must lie in [0,1)");
}

std::size_t symbol_start_sample(std::size_t i, double sps)
{
    return static_cast<std::size_t>(std::llround(static_cast<double>(i) * sps));
}

BasebandSignal modulate(const Bits& bits, const ModulationScheme& scheme, double subcarrier_center_hz,
                        double bandwidth_hz, double sample_rate)
{
    scheme.validate();
    if (bits.empty()) throw std::invalid_argument("modulate: no bits");
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("modulate: bandwidth must be positive");
    if (sample_rate < 2.0 * bandwidth_hz)
        throw std::invalid_argument("modulate: sample rate below twice the bandwidth");
    if (std::abs(subcarrier_center_hz) + 0.5 * bandwidth_hz > 0.5 * sample_rate)
        throw std::invalid_argument("modulate: subcarrier outside the sampled band");

    const double sps = sample_rate / scheme.symbol_rate;
    const std::size_t n = symbol_start_sample(bits.size(), sps);
    if (n == 0) throw std::invalid_argument("modulate: symbol shorter than one sample");
    std::vector<Complex> out(n);
    const double w = 2.0 * kPi * subcarrier_center_hz / sample_rate;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const double a = scheme.level(bits[i]);
        const std::size_t s0 = symbol_start_sample(i, sps);
        const std::size_t s1 = symbol_start_sample(i + 1, sps);
        for (std::size_t m = s0; m < s1; ++m)
            out[m] = a == 0.0 ? Complex{} : std::polar(a, w * static_cast<double>(m));
    }
    return BasebandSignal(std::move(out), sample_rate);
}

std::vector<Complex> symbol_statistics(const BasebandSignal& signal, const ModulationScheme& scheme,
                                       double subcarrier_center_hz)
{
    signal.require_valid("demodulate");
    scheme.validate();
    const double sps = signal.sample_rate / scheme.symbol_rate;
    const double nsym_f = static_cast<double>(signal.size()) / sps;
    if (nsym_f < 1.0 - 1e-9) throw std::invalid_argument("demodulate: signal shorter than one symbol");
    const std::size_t nsym = static_cast<std::size_t>(std::floor(nsym_f + 1e-9));

    const double w = -2.0 * kPi * subcarrier_center_hz / signal.sample_rate;
    std::vector<Complex> z(nsym);
    for (std::size_t i = 0; i < nsym; ++i) {
        const std::size_t s0 = symbol_start_sample(i, sps);
        const std::size_t s1 = std::min(symbol_start_sample(i + 1, sps), signal.size());
        Complex acc{};
        for (std::size_t m = s0; m < s1; ++m)
            acc += subcarrier_center_hz == 0.0 ? signal.samples[m]
                                               : signal.samples[m] * std::polar(1.0, w * static_cast<double>(m));
        z[i] = s1 > s0 ? acc / static_cast<double>(s1 - s0) : Complex{};
    }
    return z;
}

namespace {

// phase advance per symbol from products of known nonzero symbols, grouped
// by their spacing; the short spacings carry the weight
double known_phase_ramp(std::span<const Complex> z, const ModulationScheme& scheme, std::span<const std::uint8_t> known)
{
    std::vector<std::pair<std::size_t, Complex>> m;
    for (std::size_t i = 0; i < z.size() && i < known.size(); ++i) {
        const double ref = scheme.level(known[i]);
        if (ref != 0.0) m.emplace_back(i, z[i] / ref);
    }
    Complex acc1{}, acc2{};
    for (std::size_t k = 1; k < m.size(); ++k) {
        const std::size_t gap = m[k].first - m[k - 1].first;
        const Complex p = m[k].second * std::conj(m[k - 1].second);
        if (gap == 1) acc1 += p;
        if (gap == 2) acc2 += p;
    }
    // spacing 2 is ambiguous beyond a quarter turn per symbol; spacing 1 resolves it
    if (std::abs(acc2) == 0.0) return std::abs(acc1) > 0.0 ? std::arg(acc1) : 0.0;
    double w2 = std::arg(acc2) / 2.0;
    if (std::abs(acc1) > 0.0) {
        const double w1 = std::arg(acc1);
        const double alt = w2 + (w2 > 0.0 ? -kPi : kPi);
        if (std::abs(std::remainder(alt - w1, 2.0 * kPi)) < std::abs(std::remainder(w2 - w1, 2.0 * kPi))) w2 = alt;
    }
    return w2;
}

}  // namespace

Demodulated decide_symbols(std::span<const Complex> z, const ModulationScheme& scheme,
                           const DecisionOptions& opt)
{
    const double thr = scheme.decision_threshold();
    Demodulated out;
    out.bits.resize(z.size());
    out.soft.resize(z.size());
    if (opt.channel) {
        Complex h = *opt.channel;
        std::vector<Complex> zd;
        if (opt.estimate_drift) {
            const double w = known_phase_ramp(z, scheme, opt.known);
            zd.assign(z.begin(), z.end());
            for (std::size_t i = 0; i < zd.size(); ++i) zd[i] *= std::polar(1.0, -w * static_cast<double>(i));
            z = zd;
            Complex acc{};
            double n = 0.0;
            for (std::size_t i = 0; i < z.size() && i < opt.known.size(); ++i) {
                const double ref = scheme.level(opt.known[i]);
                if (ref == 0.0) continue;
                acc += z[i] / ref;
                n += 1.0;
            }
            if (n > 0.0 && std::abs(acc) > 0.0) h = acc / n;
        }
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double hh = std::norm(h);
            const double u = hh > 0.0 ? (z[i] * std::conj(h)).real() / hh : 0.0;
            const std::uint8_t bit = u > thr ? 1 : 0;
            out.bits[i] = bit;
            out.soft[i] = u - thr;
            if (opt.tracking_gain > 0.0) {
                const double ref = scheme.level(i < opt.known.size() ? opt.known[i] : bit);
                if (ref != 0.0) h += opt.tracking_gain * (z[i] / ref - h);
            }
        }
        return out;
    }
    // no channel knowledge
    for (std::size_t i = 0; i < z.size(); ++i) {
        double u;
        if (scheme.kind == ModulationKind::bpsk)
            u = z[i].real() / opt.nominal_amplitude;
        else
            u = std::abs(z[i]) / opt.nominal_amplitude;
        out.bits[i] = u > thr ? 1 : 0;
        out.soft[i] = u - thr;
    }
    return out;
}

Demodulated demodulate(const BasebandSignal& signal, const ModulationScheme& scheme,
                       const std::optional<estimation::CsiEstimate>& csi, double subcarrier_center_hz,
                       double nominal_amplitude)
{
    const auto z = symbol_statistics(signal, scheme, subcarrier_center_hz);
    DecisionOptions opt;
    if (csi) opt.channel = csi->h_gain;
    opt.nominal_amplitude = nominal_amplitude;
    return decide_symbols(z, scheme, opt);
}

}  // namespace snow::phy
