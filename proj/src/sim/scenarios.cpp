#include "snow/sim/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "snow/atpc/atpc.hpp"
#include "snow/channel/impairments.hpp"
#include "snow/channel/link.hpp"
#include "snow/channel/path_loss.hpp"
#include "snow/estimation/cfo.hpp"
#include "snow/estimation/csi.hpp"
#include "snow/mac/base_station.hpp"
#include "snow/mac/invariants.hpp"
#include "snow/phy/dofdm.hpp"
#include "snow/phy/packet.hpp"
#include "snow/phy/papr.hpp"
#include "snow/sim/downlink.hpp"

namespace snow::sim {

namespace {

constexpr double kMph = 0.44704;  // m/s

double snr_to_variance(double signal_power, double snr_db) { return signal_power / std::pow(10.0, snr_db / 10.0); }

double mean_of(const std::vector<double>& v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

// ---- plain studies -------------------------------------------------------

PaprStudy papr_study(int frames, int subcarriers, double spacing_hz, std::uint64_t seed)
{
    if (frames < 1) throw ConfigError("papr: need at least one frame");
    const auto plan = phy::SpectrumPlan::analysis(subcarriers, spacing_hz);
    std::mt19937_64 rng(stream_seed(seed, 0xAA, 1));
    PaprStudy s;
    s.papr_real_db.reserve(static_cast<std::size_t>(frames));
    s.papr_complex_db.reserve(static_cast<std::size_t>(frames));
    for (int i = 0; i < frames; ++i) {
        const auto f = phy::random_bpsk_frame(plan, rng);
        s.papr_complex_db.push_back(phy::compute_papr(f).papr_db);
        s.papr_real_db.push_back(phy::compute_papr(phy::real_part(f)).papr_db);
    }
    s.threshold_real_db = phy::ccdf_threshold(s.papr_real_db, s.exceed);
    s.threshold_complex_db = phy::ccdf_threshold(s.papr_complex_db, s.exceed);
    return s;
}

namespace {

phy::BasebandSignal preamble_at(double fs, double symbol_rate)
{
    const phy::ModulationScheme ook{phy::ModulationKind::ook, symbol_rate};
    return phy::modulate(phy::preamble_bits(), ook, 0.0, std::min(39000.0, fs / 2.0), fs);
}

}  // namespace

CfoBenchRow cfo_bench(double snr_db, int trials, double ppm_span, double carrier_hz, std::uint64_t seed)
{
    const double fs = 8.4e6, rate = 11200.0;
    const auto clean = preamble_at(fs, rate);
    const double p = clean.avg_power();
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(std::llround(snr_db * 100.0 + 1e5)), 7));
    std::uniform_real_distribution<double> u(-ppm_span, ppm_span);
    CfoBenchRow row;
    row.snr_db = snr_db;
    row.trials = trials;
    double ec = 0.0, ef = 0.0, tt = 0.0;
    int ok = 0;
    for (int i = 0; i < trials; ++i) {
        const double off = u(rng) * 1e-6 * carrier_hz;
        auto sig = channel::apply_cfo(clean, off);
        if (snr_db <= 200.0) channel::add_awgn(sig, snr_to_variance(p, snr_db), rng);
        try {
            const auto split = estimation::split_preamble(sig, rate);
            const double c = estimation::estimate_cfo_coarse(split);
            const double f = estimation::estimate_cfo_fine(split, c);
            ec += (c - off) * (c - off);
            ef += (f - off) * (f - off);
            tt += off * off;
            ++ok;
        } catch (const std::exception&) {
            ++row.failures;
        }
    }
    if (ok > 0) {
        row.coarse_rms_hz = std::sqrt(ec / ok);
        row.fine_rms_hz = std::sqrt(ef / ok);
        row.fine_rel_rms = tt > 0.0 ? std::sqrt(ef / tt) : 0.0;
    }
    return row;
}

double cfo_noiseless_max_rel_error(int count, double ppm_span, double carrier_hz)
{
    const double fs = 8.4e6, rate = 11200.0;
    const auto clean = preamble_at(fs, rate);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        const double ppm = -ppm_span + (i + 0.5) * 2.0 * ppm_span / count;
        const double off = ppm * 1e-6 * carrier_hz;
        const auto split = estimation::split_preamble(channel::apply_cfo(clean, off), rate);
        const double f = estimation::estimate_cfo_fine(split, estimation::estimate_cfo_coarse(split));
        worst = std::max(worst, std::abs(f - off) / std::abs(off));
    }
    return worst;
}

CsiBenchRow csi_bench(double snr_db, int parts, int trials, std::uint64_t seed)
{
    const double rate = 11200.0, fs = 30.0 * rate;
    const auto clean = preamble_at(fs, rate);
    const double p = clean.avg_power();
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(parts * 1000 + std::llround(snr_db + 100)), 8));
    double err = 0.0;
    for (int i = 0; i < trials; ++i) {
        const Complex h = channel::draw_rayleigh(rng);
        auto sig = clean;
        for (auto& s : sig.samples) s *= h;
        channel::add_awgn(sig, snr_to_variance(p, snr_db), rng);
        const auto est = estimation::estimate_csi(sig, phy::preamble_bits(), parts);
        err += std::abs(est.h_gain - h);
    }
    return {snr_db, parts, trials > 0 ? err / trials : 0.0};
}

SnrLossRow snr_loss_mc(double pi_df_t, double es_n0_db, int symbols, std::uint64_t seed)
{
    const int n = 64;
    const auto plan = phy::SpectrumPlan::analysis(n, 200e3);
    const double spacing = plan.spacing_hz();
    const double df = pi_df_t / kPi * spacing;
    const double sigma2 = std::pow(10.0, -es_n0_db / 10.0);
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(std::llround(pi_df_t * 1e4) * 1000 +
                                                                      std::llround(es_n0_db * 10.0)), 9));
    std::bernoulli_distribution coin(0.5);
    // estimate the common gain first, then the residual power
    std::vector<std::vector<Complex>> tx(static_cast<std::size_t>(symbols)), rx(static_cast<std::size_t>(symbols));
    Complex g{0.0, 0.0};
    for (int s = 0; s < symbols; ++s) {
        std::map<int, std::vector<Complex>> sym;
        auto& x = tx[static_cast<std::size_t>(s)];
        for (int k = 1; k <= n; ++k) {
            const double v = coin(rng) ? 1.0 : -1.0;
            sym[k] = {Complex(v, 0.0)};
            x.emplace_back(v, 0.0);
        }
        auto sig = channel::apply_cfo(phy::dofdm_encode(sym, plan), df);
        channel::add_awgn(sig, sigma2, rng);
        const auto streams = phy::dofdm_decode(sig, plan);
        auto& y = rx[static_cast<std::size_t>(s)];
        for (int k = 1; k <= n; ++k) y.push_back(streams.at(k).samples.at(0));
        for (int k = 0; k < n; ++k) g += y[static_cast<std::size_t>(k)] * std::conj(x[static_cast<std::size_t>(k)]);
    }
    g /= static_cast<double>(symbols) * n;
    double resid = 0.0;
    for (int s = 0; s < symbols; ++s)
        for (int k = 0; k < n; ++k) {
            const auto i = static_cast<std::size_t>(s), j = static_cast<std::size_t>(k);
            resid += std::norm(rx[i][j] - g * tx[i][j]);
        }
    resid /= static_cast<double>(symbols) * n;
    SnrLossRow row;
    row.pi_df_t = pi_df_t;
    row.es_n0_db = es_n0_db;
    const double snr0 = 1.0 / sigma2;
    row.measured = snr0 / (std::norm(g) / resid);
    row.closed_form = estimation::snr_loss_factor(df, 1.0 / spacing, snr0);
    return row;
}

std::vector<AtpcLoopRow> atpc_closed_loop(double a_true, double b_true, double threshold, int window,
                                          int iterations, bool sampled, std::uint64_t seed)
{
    if (window < 1) throw ConfigError("atpc loop: window must be >= 1");
    std::mt19937_64 rng(stream_seed(seed, 0xA7, 10));
    auto link = [&](double tp) { return std::clamp(a_true * tp + b_true, 0.0, 1.0); };
    auto measure = [&](double tp) {
        const double p = link(tp);
        if (!sampled) return p;
        std::bernoulli_distribution d(p);
        int ok = 0;
        for (int i = 0; i < window; ++i) ok += d(rng) ? 1 : 0;
        return static_cast<double>(ok) / window;
    };
    const auto levels = atpc::PowerVector::range(0, 15);
    auto choose = [&](const atpc::AtpcModel& m, double probe_mean) {
        if (m.a_hat > 1e-12) return atpc::select_power(m, levels);
        return probe_mean >= threshold ? levels.levels.front() : levels.levels.back();
    };

    atpc::PdrSamples probes;
    probes.window_k = window;
    double probe_mean = 0.0;
    for (double tp : {0.0, 5.0, 10.0, 15.0}) {
        const double v = measure(tp);
        probes.pairs.emplace_back(tp, v);
        probe_mean += v / 4.0;
    }
    atpc::AtpcModel model{0.0, 0.0, threshold};
    try {
        model = atpc::fit_initial(probes, threshold);
    } catch (const std::invalid_argument&) {
    }
    std::vector<AtpcLoopRow> out;
    double tp = choose(model, probe_mean);
    out.push_back({0, tp, link(tp), std::nan(""), model.a_hat, model.b_hat});
    for (int it = 1; it <= iterations; ++it) {
        const double m = measure(tp);
        atpc::PdrSamples r;
        r.window_k = window;
        r.pairs.emplace_back(tp, m);
        if (model.a_hat > 1e-12) model = atpc::update_intercept(model, r);
        tp = choose(model, probe_mean);
        out.push_back({it, tp, link(tp), m, model.a_hat, model.b_hat});
    }
    return out;
}

// ---- network studies -----------------------------------------------------

namespace {

LabeledRun run_labeled(std::string label, SimConfig cfg)
{
    LabeledRun lr;
    lr.label = std::move(label);
    lr.result = run(cfg);
    lr.config = std::move(cfg);
    return lr;
}

double carrier_of(const SimConfig& cfg) { return cfg.spectrum.center_hz(cfg.spectrum.join_index); }

}  // namespace

RangeStudy range_study(const SimConfig& base, const std::vector<double>& distances, int nodes_per_distance)
{
    if (nodes_per_distance < 1) throw ConfigError("range: nodes per distance must be >= 1");
    RangeStudy s;
    for (double d : distances) {
        if (!(d > 0.0)) throw ConfigError("range: distances must be positive");
        SimConfig cfg = base;
        cfg.nodes.clear();
        for (int i = 0; i < nodes_per_distance; ++i) {
            NodeSpec n;
            n.id = i + 1;
            n.distance_m = d;
            n.angle_rad = 2.0 * kPi * i / nodes_per_distance;
            cfg.nodes.push_back(n);
        }
        cfg.node_count = nodes_per_distance;
        RangeRow row;
        row.distance_m = d;
        const std::string tag = "d" + fmt(d, 0);

        SimConfig on = cfg;
        on.csi = on.cfo = true;
        on.atpc = false;
        auto r_on = run_labeled(tag + "_comp", on);
        SimConfig off = cfg;
        off.csi = off.cfo = off.atpc = false;
        auto r_off = run_labeled(tag + "_nocomp", off);

        row.prr_comp = r_on.result.metrics.prr();
        row.prr_nocomp = r_off.result.metrics.prr();
        const double fc = carrier_of(cfg);
        row.path_loss_db = channel::path_loss_db(cfg.pathloss, d, fc);
        row.free_space_db = channel::free_space_db(d, fc);
        row.rssi_dbm = cfg.tx_power_dbm - row.path_loss_db;
        s.rows.push_back(row);
        s.runs.push_back(std::move(r_on));
        s.runs.push_back(std::move(r_off));
    }
    return s;
}

std::vector<ScalingCase> default_scaling_cases()
{
    return {{"full", true, true, true}, {"csi_cfo", true, true, false}, {"none", false, false, false}};
}

ScalingStudy scaling_study(const SimConfig& base, const std::vector<int>& node_counts,
                           const std::vector<ScalingCase>& cases)
{
    ScalingStudy s;
    for (int c : node_counts) {
        if (c < 1) throw ConfigError("scaling: node counts must be >= 1");
        for (const auto& k : cases) {
            SimConfig cfg = base;
            cfg.nodes.clear();
            cfg.node_count = c;
            cfg.csi = k.csi;
            cfg.cfo = k.cfo;
            cfg.atpc = k.atpc;
            auto lr = run_labeled("n" + std::to_string(c) + "_" + k.name, cfg);
            const auto& m = lr.result.metrics;
            ScalingRow row;
            row.nodes = c;
            row.case_name = k.name;
            row.throughput_kbps = m.throughput_bps() / 1e3;
            row.per_node_kbps = m.mean_node_throughput_bps() / 1e3;
            row.delay_ms = m.mean_delay_s() * 1e3;
            row.energy_uj_per_bit = m.energy_per_bit_j() * 1e6;
            row.prr = m.prr();
            s.rows.push_back(row);
            s.runs.push_back(std::move(lr));
        }
    }
    return s;
}

NearFarStudy near_far_study(const SimConfig& base, double distance_m, const std::vector<double>& powers)
{
    const auto data = base.spectrum.data_subcarriers();
    int mid = 0;
    for (std::size_t i = data.size() / 2; i > 0 && i + 1 < data.size(); --i)
        if (data[i - 1] + 1 == data[i] && data[i] + 1 == data[i + 1]) {
            mid = data[i];
            break;
        }
    if (mid == 0) throw ConfigError("near_far: no data subcarrier with two adjacent data neighbours");

    SimConfig cfg = base;
    cfg.nodes.clear();
    NodeSpec m;
    m.id = 1;
    m.distance_m = distance_m;
    m.subcarrier = mid;
    cfg.nodes.push_back(m);
    int id = 2;
    for (int nb : {mid - 1, mid + 1}) {
        NodeSpec n;
        n.id = id++;
        n.distance_m = 20.0;
        n.angle_rad = nb < mid ? kPi / 2.0 : -kPi / 2.0;
        n.subcarrier = nb;
        n.fixed_power_dbm = 0.0;
        n.continuous = true;
        n.interval_max_ms = 0.0;
        cfg.nodes.push_back(n);
    }
    cfg.node_count = static_cast<int>(cfg.nodes.size());

    NearFarStudy s;
    for (double p : powers) {
        SimConfig c = cfg;
        c.atpc = false;
        c.nodes[0].fixed_power_dbm = p;
        auto lr = run_labeled("fixed_" + fmt(p, 1) + "dbm", c);
        s.fixed.push_back({p, lr.result.metrics.pdr(), lr.result.metrics.prr()});
        s.runs.push_back(std::move(lr));
    }

    SimConfig c = cfg;
    c.atpc = true;
    auto lr = run_labeled("atpc", c);
    std::vector<double> windows;
    for (const auto& pt : lr.result.atpc)
        if (pt.node == 1 && pt.phase == "update") windows.push_back(pt.window_pdr);
    s.atpc_points = lr.result.atpc;
    s.atpc_windows = static_cast<int>(windows.size());
    s.atpc_pdr_after_fit = mean_of(windows);
    for (const auto& nm : lr.result.metrics.nodes)
        if (nm.node == 1) s.atpc_power_dbm = nm.final_power_dbm;
    s.runs.push_back(std::move(lr));
    return s;
}

InterferenceStudy interference_study(const SimConfig& base, const std::vector<double>& overlaps, int runs)
{
    if (runs < 1) throw ConfigError("interference: runs must be >= 1");
    InterferenceStudy s;
    for (int r = 0; r < runs; ++r) {
        SimConfig cfg = base;
        cfg.seed = base.seed + static_cast<std::uint64_t>(r);
        // nodes 20-30 m around the BS
        std::mt19937_64 rng(stream_seed(cfg.seed, 0x1F, 11));
        std::uniform_real_distribution<double> ud(20.0, 30.0), ua(0.0, 2.0 * kPi);
        cfg.nodes.clear();
        for (int i = 0; i < base.node_count; ++i) {
            NodeSpec n;
            n.id = i + 1;
            n.distance_m = ud(rng);
            n.angle_rad = ua(rng);
            cfg.nodes.push_back(n);
        }
        for (double o : overlaps) {
            if (o < 0.0 || o > 1.0) throw ConfigError("interference: overlap must lie in [0,1]");
            SimConfig c = cfg;
            c.interferer.enabled = o > 0.0;
            c.interferer.overlap = o;
            auto lr = run_labeled("overlap" + fmt(o, 2) + "_run" + std::to_string(r + 1), c);
            s.rows.push_back({o, r + 1, lr.result.metrics.prr()});
            s.runs.push_back(std::move(lr));
        }
    }
    return s;
}

MobilityStudy mobility_study(const SimConfig& base, const std::vector<double>& speeds_mph,
                             const std::vector<int>& payloads, double distance_m)
{
    MobilityStudy s;
    // background: one continuous sender per remaining data subcarrier
    SimConfig bg = base;
    bg.nodes.clear();
    const int slots = static_cast<int>(base.spectrum.data_subcarriers().size());
    bg.node_count = std::max(0, std::min(base.node_count, slots) - 1);
    auto background = bg.node_count > 0 ? build_topology(bg) : std::vector<NodeSpec>{};
    for (auto& n : background) {
        n.continuous = true;
        n.interval_max_ms = 50.0;
    }
    for (double mph : speeds_mph) {
        if (mph < 0.0) throw ConfigError("mobility: speeds must be >= 0");
        for (int pl : payloads) {
            if (pl < 1 || pl > 255) throw ConfigError("mobility: payloads must lie in 1..255");
            for (bool comp : {true, false}) {
                SimConfig c = base;
                c.nodes = background;
                NodeSpec mob;
                mob.id = static_cast<int>(background.size()) + 1;
                mob.distance_m = distance_m;
                mob.angle_rad = 0.3;
                mob.ppm = 15.0;
                mob.mobile = mph > 0.0;
                mob.speed_mps = mph * kMph;
                c.nodes.push_back(mob);
                c.node_count = static_cast<int>(c.nodes.size());
                c.payload_bytes = pl;
                c.csi = c.cfo = c.atpc = comp;
                auto lr = run_labeled("v" + fmt(mph, 0) + "_p" + std::to_string(pl) + (comp ? "_comp" : "_nocomp"), c);
                const auto& m = lr.result.metrics;
                MobilityRow row;
                row.speed_mph = mph;
                row.payload_bytes = pl;
                row.compensated = comp;
                row.throughput_kbps = m.throughput_bps() / 1e3;
                row.energy_uj_per_bit = m.energy_per_bit_j() * 1e6;
                row.delay_ms = m.mean_delay_s() * 1e3;
                row.prr = m.prr();
                s.rows.push_back(row);
                s.runs.push_back(std::move(lr));
            }
        }
    }
    return s;
}

namespace {

double downlink_prr(const SimConfig& cfg, const JoinRecord& j, double distance_m, int dl_index, int packets,
                    bool comp, double extra_noise_db, std::mt19937_64& rng, int payload_bytes)
{
    const double f_dl = cfg.spectrum.center_hz(dl_index);
    const double pl = channel::path_loss_db(cfg.pathloss, distance_m, carrier_of(cfg));
    const double amp = std::sqrt(channel::dbm_to_mw(cfg.bs_tx_power_dbm - pl));
    const double n0 = cfg.noisy() ? channel::dbm_to_mw(cfg.noise_psd_dbm_hz + extra_noise_db) : 0.0;
    DownlinkRxOptions o;
    o.scheme = cfg.downlink;
    o.samples_per_symbol = cfg.downlink_samples_per_symbol;
    o.coherent = comp && cfg.csi;
    o.csi_parts = cfg.csi_parts;
    o.tracking_gain = cfg.tracking_gain;
    o.nominal_amplitude = amp;
    int ok = 0;
    std::vector<std::uint8_t> payload(static_cast<std::size_t>(payload_bytes));
    for (int p = 0; p < packets; ++p) {
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng() & 0xFF);
        Complex h = std::polar(1.0, std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng));
        if (cfg.faded()) h = channel::draw_rayleigh(rng);
        if (cfg.noisy() && cfg.bs_tx_power_dbm - pl + 20.0 * std::log10(std::max(std::abs(h), 1e-300)) <
                               cfg.rx_sensitivity_dbm)
            continue;
        DownlinkLink dl;
        dl.amplitude = amp * h;
        dl.offset_hz = -(j.ppm_true - (comp ? j.ppm_estimated : 0.0)) * 1e-6 * f_dl;
        dl.n0_mw_per_hz = n0;
        const auto rx = receive_downlink(payload, dl, o, rng);
        ok += (rx && *rx == payload) ? 1 : 0;
    }
    return packets > 0 ? static_cast<double>(ok) / packets : 0.0;
}

}  // namespace

DownlinkStudy downlink_study(const SimConfig& base, int packets_per_node)
{
    if (packets_per_node < 1) throw ConfigError("downlink: packets must be >= 1");
    // joins give each node its ppm estimate
    SimConfig jc = base;
    jc.packets_per_node = 1;
    jc.atpc = false;
    jc.trace = false;
    const auto joined = run(jc);
    const auto topo = build_topology(base);

    DownlinkStudy s;
    const double bits = static_cast<double>(phy::frame_bits(static_cast<std::size_t>(base.payload_bytes)));
    const double airtime = bits / base.downlink.symbol_rate;
    for (std::size_t i = 0; i < topo.size(); ++i) {
        const auto& j = joined.joins.at(i);
        if (!j.ok) continue;
        std::mt19937_64 rng(stream_seed(base.seed, static_cast<std::uint64_t>(j.node), 12));
        DownlinkRow row;
        row.node = j.node;
        row.distance_m = topo[i].distance_m;
        row.prr_comp = downlink_prr(base, j, row.distance_m, base.spectrum.downlink_index, packets_per_node, true, 0.0,
                                    rng, base.payload_bytes);
        row.prr_nocomp = downlink_prr(base, j, row.distance_m, base.spectrum.downlink_index, packets_per_node, false,
                                      0.0, rng, base.payload_bytes);
        row.throughput_kbps_comp = row.prr_comp * bits / airtime / 1e3;
        s.rows.push_back(row);
    }

    // failover: jam the downlink, report, switch to a backup, announce, re-measure
    mac::BsState bs(base.spectrum);
    const int probe = std::max(1, packets_per_node / 5);
    const double jam_db = 40.0;
    std::int64_t t_us = 0;
    const auto step_us = static_cast<std::int64_t>(std::llround(airtime * 1e6));
    auto measure = [&](int dl, double extra_db) {
        double sum = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < topo.size(); ++i) {
            const auto& j = joined.joins.at(i);
            if (!j.ok) continue;
            std::mt19937_64 rng(stream_seed(base.seed, static_cast<std::uint64_t>(j.node), 13 + dl));
            sum += downlink_prr(base, j, topo[i].distance_m, dl, probe, true, extra_db, rng, base.payload_bytes);
            ++n;
        }
        t_us += step_us * probe;
        return n > 0 ? sum / n : 0.0;
    };
    const int dl0 = bs.downlink_index();
    const double nominal = measure(dl0, 0.0);
    s.failover.push_back({"nominal", dl0, nominal});
    const double jammed = measure(dl0, jam_db);
    s.failover.push_back({"jammed", dl0, jammed});
    const mac::NoiseReport rep{dl0, jammed};
    s.trace.add(t_us, "bs", "noise_report", dl0, "prr=" + fmt(jammed, 4));
    if (mac::failover_needed(rep)) {
        try {
            const auto next = mac::downlink_failover(bs, rep);
            const int dl1 = next.downlink_index();
            // announced on the old subcarrier, then the switch
            for (int a = 1; a <= 3; ++a) {
                t_us += step_us;
                s.trace.add(t_us, "bs", "announce", dl0, "n=" + std::to_string(a) + ";next=" + std::to_string(dl1));
            }
            bs = next;
            s.trace.add(t_us, "bs", "failover", dl1, "from=" + std::to_string(dl0) + ";to=" + std::to_string(dl1));
            s.failover.push_back({"restored", dl1, measure(dl1, 0.0)});
        } catch (const std::runtime_error& e) {
            s.trace.add(t_us, "bs", "failover_failed", dl0, "reason=no_backup");
        }
    }
    return s;
}

// ---- scenario runners ----------------------------------------------------

void collect_runs(ScenarioOutput& out, const std::vector<LabeledRun>& runs, std::size_t trace_runs)
{
    std::size_t traced = 0;
    for (const auto& r : runs) {
        out.runs.emplace_back(r.label, r.result.metrics);
        for (const auto& v : mac::check_mac_invariants(r.result.trace, r.result.invariant_config(r.config)))
            out.violations.push_back(r.label + ": " + v);
        if (traced >= trace_runs || r.result.trace.size() == 0) continue;
        ++traced;
        out.trace.add(0, "sim", "run_start", 0, "label=" + r.label);
        for (const auto& rec : r.result.trace.records())
            out.trace.add(rec.time_us, rec.entity, rec.event, rec.subcarrier, rec.detail);
    }
}

namespace {

// scenario.* parameters with a whitelist per scenario
class Params {
public:
    Params(const ScenarioParams& p, std::set<std::string> allowed) : p_(p)
    {
        allowed.insert("trace_runs");
        for (const auto& [k, v] : p_) {
            const std::string key = k.rfind("scenario.", 0) == 0 ? k.substr(9) : k;
            if (!allowed.count(key)) throw ConfigError("unknown scenario parameter: " + k);
        }
    }
    const std::string* find(const std::string& k) const
    {
        const auto it = p_.find("scenario." + k);
        return it == p_.end() ? nullptr : &it->second;
    }
    double num(const std::string& k, double def) const
    {
        const auto* v = find(k);
        return v ? parse_double("scenario." + k, *v) : def;
    }
    int integer(const std::string& k, int def) const
    {
        const auto* v = find(k);
        return v ? static_cast<int>(parse_int("scenario." + k, *v)) : def;
    }
    bool flag(const std::string& k, bool def) const
    {
        const auto* v = find(k);
        return v ? parse_bool("scenario." + k, *v) : def;
    }
    std::vector<double> list(const std::string& k, std::vector<double> def) const
    {
        const auto* v = find(k);
        return v ? parse_list("scenario." + k, *v) : def;
    }
    std::vector<int> ints(const std::string& k, const std::vector<int>& def) const
    {
        const auto* v = find(k);
        if (!v) return def;
        std::vector<int> out;
        for (double d : parse_list("scenario." + k, *v)) {
            if (d != std::floor(d)) throw ConfigError("scenario." + k + ": expected integers");
            out.push_back(static_cast<int>(d));
        }
        return out;
    }
    std::size_t trace_runs() const { return static_cast<std::size_t>(std::max(0, integer("trace_runs", 4))); }

private:
    const ScenarioParams& p_;
};

std::vector<std::string> row(std::initializer_list<std::string> v) { return v; }

// ---- papr
void papr_defaults(SimConfig&) {}
ScenarioOutput papr_run(const SimConfig& cfg, const ScenarioParams& params)
{
    const Params p(params, {"frames", "subcarriers", "spacing_hz"});
    const auto s = papr_study(p.integer("frames", 100000), p.integer("subcarriers", 64), p.num("spacing_hz", 200e3),
                              cfg.seed);
    ScenarioOutput out;
    Table t{"fig4_papr_ccdf.csv", {"papr_db", "ccdf_real", "ccdf_complex"}, {}};
    const auto grid = phy::default_ccdf_grid();
    const auto cr = phy::ccdf_from_values(s.papr_real_db, grid);
    const auto cc = phy::ccdf_from_values(s.papr_complex_db, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        t.rows.push_back(row({fmt(grid[i], 2), fmt(cr[i].second, 6), fmt(cc[i].second, 6)}));
    out.tables.push_back(std::move(t));
    out.summary.push_back("frames " + std::to_string(s.papr_real_db.size()));
    out.summary.push_back("papr_at_1e-4_real_db " + fmt(s.threshold_real_db, 3));
    out.summary.push_back("papr_at_1e-4_complex_db " + fmt(s.threshold_complex_db, 3));
    out.summary.push_back("hpa_efficiency_at_threshold_pct " + fmt(100.0 * phy::hpa_efficiency(s.threshold_real_db), 3));
    out.summary.push_back("hpa_efficiency_at_14db_pct " + fmt(100.0 * phy::hpa_efficiency(14.0), 3));
    return out;
}

// ---- range_prr
void range_defaults(SimConfig& c)
{
    c.atpc = false;
    c.packets_per_node = 100;
}
ScenarioOutput range_run(const SimConfig& cfg, const ScenarioParams& params)
{
    const Params p(params, {"distances_m", "nodes_per_distance"});
    const auto s = range_study(cfg, p.list("distances_m", {200, 400, 600, 800, 1000}), p.integer("nodes_per_distance", 10));
    ScenarioOutput out;
    Table a{"fig8a_prr_vs_distance.csv", {"distance_m", "prr_comp", "prr_nocomp"}, {}};
    Table b{"fig6_rssi_pathloss_vs_distance.csv", {"distance_m", "rssi_dbm", "path_loss_db", "free_space_db"}, {}};
    for (const auto& r : s.rows) {
        a.rows.push_back(row({fmt(r.distance_m, 1), fmt(r.prr_comp, 4), fmt(r.prr_nocomp, 4)}));
        b.rows.push_back(row({fmt(r.distance_m, 1), fmt(r.rssi_dbm, 2), fmt(r.path_loss_db, 2), fmt(r.free_space_db, 2)}));
        out.summary.push_back("d=" + fmt(r.distance_m, 0) + "m prr_comp " + fmt(r.prr_comp, 4) + " prr_nocomp " +
                              fmt(r.prr_nocomp, 4));
    }
    out.tables.push_back(std::move(a));
    out.tables.push_back(std::move(b));
    collect_runs(out, s.runs, p.trace_runs());
    return out;
}

// ---- uplink_scaling
void scaling_defaults(SimConfig& c)
{
    c.ideal_channel = true;
    c.interval_min_ms = 0.0;
    c.interval_max_ms = 100.0;
    c.packets_per_node = 100;
    c.atpc_probe_packets = 10;
    c.atpc_window = 20;
}
ScenarioOutput scaling_run(const SimConfig& cfg, const ScenarioParams& params)
{
    const Params p(params, {"node_counts"});
    const auto s = scaling_study(cfg, p.ints("node_counts", {1, 5, 10, 15, 20, 25}), default_scaling_cases());
    ScenarioOutput out;
    Table a{"fig14a_throughput_vs_nodes.csv", {"nodes", "case", "throughput_kbps", "per_node_kbps"}, {}};
    Table b{"fig14b_delay_vs_nodes.csv", {"nodes", "case", "e2e_delay_ms"}, {}};
    Table c{"fig14c_energy_vs_nodes.csv", {"nodes", "case", "energy_per_bit_uj"}, {}};
    Table d{"fig8b_prr_vs_nodes.csv", {"nodes", "case", "prr"}, {}};
    std::vector<std::pair<double, double>> xy;
    std::vector<double> delays;
    for (const auto& r : s.rows) {
        const std::string n = std::to_string(r.nodes);
        a.rows.push_back(row({n, r.case_name, fmt(r.throughput_kbps, 3), fmt(r.per_node_kbps, 3)}));
        b.rows.push_back(row({n, r.case_name, fmt(r.delay_ms, 3)}));
        c.rows.push_back(row({n, r.case_name, fmt(r.energy_uj_per_bit, 4)}));
        d.rows.push_back(row({n, r.case_name, fmt(r.prr, 4)}));
        if (r.case_name == "full") {
            xy.emplace_back(r.nodes, r.throughput_kbps);
            delays.push_back(r.delay_ms);
        }
    }
    for (auto* t : {&a, &b, &c, &d}) out.tables.push_back(std::move(*t));
    if (xy.size() >= 2) {
        const auto f = fit_line(xy);
        out.summary.push_back("full throughput fit slope_kbps_per_node " + fmt(f.slope, 4) + " r2 " + fmt(f.r2, 5));
        const auto [lo, hi] = std::minmax_element(delays.begin(), delays.end());
        out.summary.push_back("full delay_ms min " + fmt(*lo, 2) + " max " + fmt(*hi, 2));
    }
    collect_runs(out, s.runs, p.trace_runs());
    return out;
}

// ---- downlink
void downlink_defaults(SimConfig& c)
{
    if (c.spectrum.backup_indices.empty()) c.spectrum.backup_indices = {24};
}
ScenarioOutput downlink_run(const SimConfig& cfg, const ScenarioParams& params)
{
    const Params p(params, {"packets"});
    const auto s = downlink_study(cfg, p.integer("packets", 100));
    ScenarioOutput out;
    Table a{"fig8c_downlink_prr_vs_distance.csv", {"node", "distance_m", "prr_comp", "prr_nocomp"}, {}};
    Table b{"fig_downlink_throughput_vs_distance.csv", {"node", "distance_m", "throughput_kbps"}, {}};
    Table c{"fig_downlink_failover.csv", {"phase", "downlink_subcarrier", "prr"}, {}};
    double on = 0.0, off = 0.0;
    for (const auto& r : s.rows) {
        a.rows.push_back(row({std::to_string(r.node), fmt(r.distance_m, 1), fmt(r.prr_comp, 4), fmt(r.prr_nocomp, 4)}));
        b.rows.push_back(row({std::to_string(r.node), fmt(r.distance_m, 1), fmt(r.throughput_kbps_comp, 3)}));
        on += r.prr_comp;
        off += r.prr_nocomp;
    }
    for (const auto& f : s.failover) c.rows.push_back(row({f.phase, std::to_string(f.downlink_subcarrier), fmt(f.prr, 4)}));
    for (auto* t : {&a, &b, &c}) out.tables.push_back(std::move(*t));
    if (!s.rows.empty()) {
        out.summary.push_back("mean downlink prr comp " + fmt(on / s.rows.size(), 4) + " nocomp " +
                              fmt(off / s.rows.size(), 4));
    }
    for (const auto& f : s.failover)
        out.summary.push_back("failover " + f.phase + " subcarrier " + std::to_string(f.downlink_subcarrier) + " prr " +
                              fmt(f.prr, 4));
    out.trace = s.trace;
    return out;
}

// ---- mobility
void mobility_defaults(SimConfig& c)
{
    c.packets_per_node = 50;
    c.atpc_probe_packets = 10;
    c.atpc_window = 20;
}
ScenarioOutput mobility_run(const SimConfig& cfg, const ScenarioParams& params)
{
    const Params p(params, {"speeds_mph", "payloads", "distance_m"});
    const auto s = mobility_study(cfg, p.list("speeds_mph", {5, 10, 20}), p.ints("payloads", {10, 30, 60, 90, 120}),
                                  p.num("distance_m", 600.0));
    ScenarioOutput out;
    Table a{"fig12a_mobility_throughput.csv", {"speed_mph", "payload_bytes", "case", "throughput_kbps", "prr"}, {}};
    Table b{"fig12b_mobility_energy.csv", {"speed_mph", "payload_bytes", "case", "energy_per_bit_uj"}, {}};
    Table c{"fig_mobility_delay_vs_payload.csv", {"speed_mph", "payload_bytes", "case", "e2e_delay_ms"}, {}};
    for (const auto& r : s.rows) {
        const std::string v = fmt(r.speed_mph, 1), pl = std::to_string(r.payload_bytes);
        const std::string k = r.compensated ? "comp" : "nocomp";
        a.rows.push_back(row({v, pl, k, fmt(r.throughput_kbps, 3), fmt(r.prr, 4)}));
        b.rows.push_back(row({v, pl, k, fmt(r.energy_uj_per_bit, 4)}));
        c.rows.push_back(row({v, pl, k, fmt(r.delay_ms, 3)}));
    }
    for (auto* t : {&a, &b, &c}) out.tables.push_back(std::move(*t));
    // throughput loss from the smallest to the largest payload, compensated
    std::map<double, std::pair<const MobilityRow*, const MobilityRow*>> span;
    for (const auto& r : s.rows) {
        if (!r.compensated) continue;
        auto& e = span[r.speed_mph];
        if (!e.first || r.payload_bytes < e.first->payload_bytes) e.first = &r;
        if (!e.second || r.payload_bytes > e.second->payload_bytes) e.second = &r;
    }
    for (const auto& [v, e] : span) {
        const double lo = e.first->throughput_kbps, hi = e.second->throughput_kbps;
        const double loss = lo > 0.0 ? (lo - hi) / lo : 0.0;
        out.summary.push_back("speed " + fmt(v, 1) + "mph comp throughput " + fmt(lo, 3) + " -> " + fmt(hi, 3) +
                              " kbps, loss " + fmt(100.0 * loss, 2) + "%");
    }
    collect_runs(out, s.runs, p.trace_runs());
    return out;
}

// ---- near_far
void near_far_defaults(SimConfig& c)
{
    c.fading = false;
    c.packets_per_node = 500;
    c.atpc_probe_packets = 50;
    c.atpc_window = 50;
}
ScenarioOutput near_far_run(const SimConfig& cfg, const ScenarioParams& params)
{
    const Params p(params, {"distance_m", "powers"});
    std::vector<double> powers;
    for (int v = 0; v <= 15; ++v) powers.push_back(v);
    SimConfig fixed = cfg;
    const auto s = near_far_study(fixed, p.num("distance_m", 400.0), p.list("powers", powers));
    ScenarioOutput out;
    Table a{"fig11_pdr_vs_txpower.csv", {"tx_power_dbm", "pdr", "prr"}, {}};
    for (const auto& r : s.fixed) a.rows.push_back(row({fmt(r.power_dbm, 1), fmt(r.pdr, 4), fmt(r.prr, 4)}));
    Table b{"fig11_atpc_trajectory.csv", {"time_s", "phase", "power_dbm", "a_hat", "b_hat", "window_pdr"}, {}};
    for (const auto& pt : s.atpc_points)
        if (pt.node == 1)
            b.rows.push_back(row({fmt(pt.time_s, 3), pt.phase, fmt(pt.power_dbm, 1), fmt(pt.a_hat, 5), fmt(pt.b_hat, 5),
                                  fmt(pt.window_pdr, 4)}));
    out.tables.push_back(std::move(a));
    out.tables.push_back(std::move(b));
    if (!s.fixed.empty())
        out.summary.push_back("pdr at " + fmt(s.fixed.front().power_dbm, 1) + " dBm " + fmt(s.fixed.front().pdr, 4));
    out.summary.push_back("atpc final power_dbm " + fmt(s.atpc_power_dbm, 1) + " pdr after fit " +
                          fmt(s.atpc_pdr_after_fit, 4) + " over " + std::to_string(s.atpc_windows) + " windows");
    collect_runs(out, s.runs, p.trace_runs());
    return out;
}

// ---- interference
void interference_defaults(SimConfig& c)
{
    c.interval_min_ms = 0.0;
    c.interval_max_ms = 20.0;
    c.packets_per_node = 60;
    c.atpc_probe_packets = 10;
    c.atpc_window = 20;
    c.interferer.tx_power_dbm = 15.0;
    c.interferer.distance_m = 10.0;
}
ScenarioOutput interference_run(const SimConfig& cfg, const ScenarioParams& params)
{
    const Params p(params, {"overlaps", "runs"});
    const auto s = interference_study(cfg, p.list("overlaps", {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}), p.integer("runs", 3));
    ScenarioOutput out;
    Table a{"fig_interference_prr.csv", {"overlap", "run", "prr"}, {}};
    std::map<double, std::vector<double>> by;
    for (const auto& r : s.rows) {
        a.rows.push_back(row({fmt(r.overlap, 2), std::to_string(r.run), fmt(r.prr, 4)}));
        by[r.overlap].push_back(r.prr);
    }
    out.tables.push_back(std::move(a));
    for (const auto& [o, v] : by) out.summary.push_back("overlap " + fmt(o, 2) + " mean prr " + fmt(mean_of(v), 4));
    collect_runs(out, s.runs, p.trace_runs());
    return out;
}

// ---- atpc_convergence
void atpc_defaults(SimConfig&) {}
ScenarioOutput atpc_run(const SimConfig& cfg, const ScenarioParams& params)
{
    const Params p(params, {"a", "b", "window", "iterations", "sampled"});
    const auto rows = atpc_closed_loop(p.num("a", 0.04), p.num("b", 0.35), cfg.atpc_threshold, p.integer("window", 100),
                                       p.integer("iterations", 10), p.flag("sampled", true), cfg.seed);
    ScenarioOutput out;
    Table a{"fig_atpc_convergence.csv", {"iteration", "power_dbm", "true_pdr", "measured_pdr", "a_hat", "b_hat"}, {}};
    int first = -1;
    for (const auto& r : rows) {
        a.rows.push_back(row({std::to_string(r.iteration), fmt(r.power_dbm, 1), fmt(r.true_pdr, 4),
                              std::isnan(r.measured_pdr) ? std::string("") : fmt(r.measured_pdr, 4), fmt(r.a_hat, 5),
                              fmt(r.b_hat, 5)}));
        if (first < 0 && std::abs(r.true_pdr - cfg.atpc_threshold) <= 0.05) first = r.iteration;
    }
    out.tables.push_back(std::move(a));
    out.summary.push_back(first < 0 ? std::string("not within 0.05 of the threshold")
                                    : "within 0.05 of the threshold at iteration " + std::to_string(first));
    return out;
}

// ---- estimator_bench
void estimator_defaults(SimConfig&) {}
ScenarioOutput estimator_run(const SimConfig& cfg, const ScenarioParams& params)
{
    const Params p(params, {"snrs_db", "trials", "symbols"});
    const auto snrs = p.list("snrs_db", {5, 10, 20, 40});
    const int trials = p.integer("trials", 1000);
    if (trials < 1) throw ConfigError("scenario.trials must be >= 1");
    const double carrier = 505e6;
    ScenarioOutput out;
    Table a{"fig_cfo_rms_vs_snr.csv", {"snr_db", "trials", "failures", "coarse_rms_hz", "fine_rms_hz", "fine_rel_rms"}, {}};
    for (double snr : snrs) {
        const auto r = cfo_bench(snr, trials, 20.0, carrier, cfg.seed);
        a.rows.push_back(row({fmt(snr, 1), std::to_string(r.trials), std::to_string(r.failures), fmt(r.coarse_rms_hz, 4),
                              fmt(r.fine_rms_hz, 4), fmt(r.fine_rel_rms, 6)}));
    }
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3e", cfo_noiseless_max_rel_error(101, 20.0, carrier));
        out.summary.push_back(std::string("noiseless fine max relative error ") + buf);
    }
    Table b{"fig_csi_error_vs_snr.csv", {"snr_db", "parts", "mean_abs_error"}, {}};
    for (double snr : snrs)
        for (int parts : {1, 2, 4}) {
            const auto r = csi_bench(snr, parts, std::max(1, trials / 5), cfg.seed);
            b.rows.push_back(row({fmt(snr, 1), std::to_string(parts), fmt(r.mean_abs_error, 6)}));
        }
    Table c{"fig_snr_loss.csv", {"pi_df_t", "es_n0_db", "measured", "closed_form", "rel_diff"}, {}};
    const int symbols = p.integer("symbols", 400);
    for (double es : {10.0, 20.0})
        for (double x : {0.05, 0.1, 0.15, 0.2, 0.25, 0.29}) {
            const auto r = snr_loss_mc(x, es, symbols, cfg.seed);
            c.rows.push_back(row({fmt(x, 3), fmt(es, 1), fmt(r.measured, 5), fmt(r.closed_form, 5),
                                  fmt((r.measured - r.closed_form) / r.closed_form, 5)}));
        }
    for (auto* t : {&a, &b, &c}) out.tables.push_back(std::move(*t));
    return out;
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_registry()
{
    static const std::vector<ScenarioInfo> reg{
        {"papr", "PAPR CCDF of random BPSK D-OFDM frames", papr_defaults, papr_run},
        {"range_prr", "uplink PRR and RSSI vs distance, compensation on/off", range_defaults, range_run},
        {"uplink_scaling", "throughput, delay, energy vs node count", scaling_defaults, scaling_run},
        {"downlink", "downlink PRR vs distance and downlink failover", downlink_defaults, downlink_run},
        {"mobility", "one mobile node: throughput, energy, delay vs speed and payload", mobility_defaults, mobility_run},
        {"near_far", "weak node between two strong neighbours, fixed power sweep and ATPC", near_far_defaults,
         near_far_run},
        {"interference", "PRR under a bursty wideband interferer vs overlap", interference_defaults, interference_run},
        {"atpc_convergence", "closed-loop ATPC on a synthetic linear link", atpc_defaults, atpc_run},
        {"estimator_bench", "CFO, CSI and SNR-loss estimator benchmarks", estimator_defaults, estimator_run},
    };
    return reg;
}

const ScenarioInfo* find_scenario(const std::string& name)
{
    for (const auto& s : scenario_registry())
        if (s.name == name) return &s;
    return nullptr;
}

}  // namespace snow::sim
