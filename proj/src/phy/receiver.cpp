#include "snow/phy/receiver.hpp"

#include <cmath>
#include <stdexcept>

namespace snow::phy {

namespace {

struct PrefixStream {
    std::vector<Complex> prefix;  // prefix[w] = sum of the first w samples
    std::size_t windows = 0;

    explicit PrefixStream(const BasebandSignal& s) : prefix(s.size() + 1), windows(s.size())
    {
        for (std::size_t w = 0; w < s.size(); ++w) prefix[w + 1] = prefix[w] + s.samples[w];
    }
};

bool symbols_at(const PrefixStream& ps, const ReceiverConfig& cfg, double start, std::size_t first,
                std::size_t count, std::vector<Complex>& z)
{
    const double n = cfg.window_length;
    const double sps = cfg.wideband_rate / cfg.scheme.symbol_rate;
    const double norm = 1.0 / std::sqrt(n);
    z.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double s = start + static_cast<double>(first + k) * sps;
        const double e = s + sps;
        const long w0 = static_cast<long>(std::ceil(s / n - 0.5));
        const long w1 = static_cast<long>(std::ceil(e / n - 0.5));
        if (w0 < 0 || w1 > static_cast<long>(ps.windows)) return false;
        const long c = w1 - w0;
        z[k] = c > 0 ? (ps.prefix[w1] - ps.prefix[w0]) * (norm / static_cast<double>(c)) : Complex{};
    }
    return true;
}

const Bits& template_bits()
{
    static const Bits t = [] {
        Bits b = preamble_bits();
        const Bits s = sync_bits();
        b.insert(b.end(), s.begin(), s.end());
        return b;
    }();
    return t;
}

double correlation(const std::vector<Complex>& z, const ModulationScheme& scheme)
{
    const Bits& t = template_bits();
    double den = 0.0;
    for (const auto& v : z) den += std::abs(v);
    if (!(den > 1e-300)) return 0.0;
    if (scheme.kind == ModulationKind::bpsk) {
        Complex acc{};
        for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] ? z[i] : -z[i];
        return std::abs(acc) / den;
    }
    double num = 0.0, inum = 0.0, iden = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double sgn = t[i] ? 1.0 : -1.0;
        num += sgn * std::abs(z[i]);
        const double l = std::abs(scheme.level(t[i]));
        inum += sgn * l;
        iden += l;
    }
    return (num / den) / (inum / iden);
}

}  // namespace

std::optional<std::vector<Complex>> frame_symbols(const BasebandSignal& stream, const ReceiverConfig& cfg,
                                                  double start_sample, std::size_t first, std::size_t count)
{
    PrefixStream ps(stream);
    std::vector<Complex> z;
    if (!symbols_at(ps, cfg, start_sample, first, count, z)) return std::nullopt;
    return z;
}

namespace {

Detection detect_impl(const PrefixStream& ps, const ReceiverConfig& cfg)
{
    cfg.scheme.validate();
    if (cfg.window_length < 1) throw std::invalid_argument("receiver: window length must be positive");
    const double n = cfg.window_length;
    const double sps = cfg.wideband_rate / cfg.scheme.symbol_rate;
    const std::size_t tlen = template_bits().size();
    const double last_fit = static_cast<double>(ps.windows) * n - static_cast<double>(tlen) * sps;
    const double lo = std::max(0.0, cfg.search_begin);
    const double hi = cfg.search_end < 0.0 ? last_fit : std::min(cfg.search_end, last_fit);

    Detection best;
    best.metric = -1.0;
    std::vector<Complex> z;
    auto eval = [&](double tau) {
        if (!symbols_at(ps, cfg, tau, 0, tlen, z)) return;
        const double r = correlation(z, cfg.scheme);
        if (r > best.metric) {
            best.metric = r;
            best.start_sample = tau;
        }
    };
    for (double tau = lo; tau <= hi; tau += n) eval(tau);
    if (best.metric < 0.0) return Detection{};
    const double centre = best.start_sample;
    for (double d = -n; d <= n; d += n / 8.0) {
        const double tau = centre + d;
        if (tau >= lo && tau <= hi) eval(tau);
    }
    best.found = best.metric >= cfg.detection_threshold;
    return best;
}

}  // namespace

Detection detect_preamble(const BasebandSignal& stream, const ReceiverConfig& cfg)
{
    if (stream.empty()) return Detection{};
    PrefixStream ps(stream);
    return detect_impl(ps, cfg);
}

ReceivedFrame receive_frame(const BasebandSignal& stream, const ReceiverConfig& cfg)
{
    ReceivedFrame out;
    if (stream.empty()) return out;
    PrefixStream ps(stream);
    out.detection = detect_impl(ps, cfg);
    if (!out.detection.found) return out;
    const double tau = out.detection.start_sample;

    std::vector<Complex> z;
    if (!symbols_at(ps, cfg, tau, 0, kHeaderBits, z)) return out;

    const Bits& known = template_bits();
    DecisionOptions opt;
    opt.nominal_amplitude = cfg.nominal_amplitude;
    if (cfg.coherent) {
        BasebandSignal pre(std::vector<Complex>(z.begin(), z.begin() + kPreambleBits), cfg.scheme.symbol_rate);
        out.csi = estimation::estimate_csi(pre, preamble_bits(), cfg.csi_parts, cfg.scheme);
        opt.channel = out.csi->h_gain;
        opt.tracking_gain = cfg.tracking_gain;
        opt.known = std::span<const std::uint8_t>(known.data(), known.size());
        opt.estimate_drift = true;
    }
    const Demodulated head = decide_symbols(z, cfg.scheme, opt);
    const std::size_t len = read_bits(head.bits, kPreambleBits + kSyncBits, 8);
    const std::size_t total = frame_bits(len);
    if (!symbols_at(ps, cfg, tau, 0, total, z)) {
        out.bits = head.bits;
        return out;
    }
    out.bits = decide_symbols(z, cfg.scheme, opt).bits;
    out.packet = parse_packet(out.bits);
    return out;
}

}  // namespace snow::phy
