#include "snow/sim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
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
#include "snow/mac/node_mac.hpp"
#include "snow/phy/packet.hpp"
#include "snow/phy/receiver.hpp"
#include "snow/sim/downlink.hpp"
#include "snow/sim/uplink_synth.hpp"

namespace snow::sim {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t entity, std::uint64_t purpose)
{
    // splitmix64 over the three words
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ entity) ^ (purpose * 0x632be59bd9b4e019ull));
}

std::vector<NodeSpec> build_topology(const SimConfig& cfg)
{
    if (!cfg.nodes.empty()) return cfg.nodes;
    std::mt19937_64 rng(stream_seed(cfg.seed, 0xC0FFEE, 1));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t nc = cfg.cluster_distances_m.size();
    std::vector<double> cluster_angle(nc);
    for (std::size_t c = 0; c < nc; ++c) cluster_angle[c] = 2.0 * kPi * static_cast<double>(c) / static_cast<double>(nc);
    std::vector<NodeSpec> out;
    for (int i = 0; i < cfg.node_count; ++i) {
        NodeSpec n;
        n.id = i + 1;
        const std::size_t c = static_cast<std::size_t>(i) % nc;
        n.distance_m = std::max(1.0, cfg.cluster_distances_m[c] + cfg.cluster_jitter_m * u(rng));
        n.angle_rad = cluster_angle[c] + 0.05 * u(rng);
        out.push_back(n);
    }
    return out;
}

mac::InvariantConfig RunResult::invariant_config(const SimConfig& cfg) const
{
    mac::InvariantConfig ic;
    ic.join_subcarrier = cfg.spectrum.join_index;
    ic.downlink_subcarriers = {cfg.spectrum.downlink_index};
    for (int b : cfg.spectrum.backup_indices) ic.downlink_subcarriers.insert(b);
    ic.ack_duration_us = ack_airtime_max_s * 1e6;
    return ic;
}

namespace {

using Tick = std::int64_t;
constexpr int kMaxSharers = 4;

enum class Ev { wake, timer, tx_end, ack_timeout, ack_end, burst_start, burst_end, epoch_kick };

struct Event {
    Tick t = 0;
    std::uint64_t seq = 0;
    Ev kind = Ev::wake;
    int idx = 0;
    std::uint64_t token = 0;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const { return a.t != b.t ? a.t > b.t : a.seq > b.seq; }
};

struct ActiveTx {
    int node = 0;
    std::size_t node_index = 0;
    int subcarrier = 0;
    UplinkTx tx;
    std::vector<std::uint8_t> payload;
    double power_dbm = 0.0;
    double nominal_amplitude = 0.0;  // link budget, no fading
    double rx_dbm = 0.0;             // with fading
};

struct Burst {
    Tick start = 0;
    Tick end = 0;
    std::vector<int> subcarriers;
    double power_mw_at_bs = 0.0;
};

struct AtpcRt {
    bool enabled = false;
    bool probing = true;
    std::size_t level = 0;
    int count = 0;
    int acked = 0;
    atpc::PdrSamples samples;
    atpc::AtpcModel model;
    std::vector<double> readings;
};

struct NodeRt {
    NodeSpec spec;
    int index = 0;
    double x = 0.0, y = 0.0;
    double heading = 0.0;
    Tick last_move = 0;
    double ppm = 0.0;
    double ppm_est = 0.0;
    int sc = 0;
    bool joined = false;

    mac::NodeMacState mac;
    mac::MacTiming timing;
    std::mt19937_64 rng;   // traffic and backoff
    std::mt19937_64 chan;  // fading and carrier phase

    double power_dbm = 0.0;
    int packets_left = 0;
    bool in_packet = false;
    std::vector<std::uint8_t> payload;
    Tick first_tx = -1;
    int attempt = 0;
    std::uint64_t token = 0;
    Tick tx_start = 0;
    Tick listen_start = -1;

    AtpcRt atpc;
    NodeMetrics m;

    double distance() const { return std::max(1.0, std::hypot(x, y)); }
};

struct Epoch {
    int id = 0;
    Tick start = 0;
    Tick end = 0;
    mac::AckBitVector bits;
    std::vector<std::uint8_t> payload;
};

class Engine {
public:
    explicit Engine(const SimConfig& cfg) : cfg_(cfg), bs_(cfg.spectrum), bs_rng_(stream_seed(cfg.seed, 0, 2))
    {
        fs_ = cfg.spectrum.sample_rate_hz;
        fft_ = cfg.spectrum.fft_size();
        sps_ = fs_ / cfg.uplink.symbol_rate;
        n0_ = cfg.noisy() ? channel::dbm_to_mw(cfg.noise_psd_dbm_hz) : 0.0;
        cca_threshold_dbm_ = cfg.rx_sensitivity_dbm + cfg.cca_margin_db;
    }

    RunResult run();

private:
    Tick ms(double v) const { return static_cast<Tick>(std::llround(v * 1e-3 * fs_)); }
    double seconds(Tick t) const { return static_cast<double>(t) / fs_; }
    std::int64_t us(Tick t) const { return static_cast<std::int64_t>(std::floor(static_cast<double>(t) * 1e6 / fs_)); }
    std::string ent(const NodeRt& n) const { return "node" + std::to_string(n.spec.id); }

    void push(Tick t, Ev k, int idx, std::uint64_t token = 0) { q_.push(Event{t, seq_++, k, idx, token}); }
    void trace(Tick t, const std::string& e, const std::string& ev, int sc, const std::string& d = {})
    {
        if (cfg_.trace) res_.trace.add(us(t), e, ev, sc, d);
    }
    void radio(NodeRt& n, RadioState st, Tick a, Tick b, double dbm);

    double path_loss(double d) const { return channel::path_loss_db(cfg_.pathloss, d, cfg_.spectrum.center_hz(cfg_.spectrum.join_index)); }
    double doppler(const NodeRt& n, double f_hz) const;
    void move(NodeRt& n, Tick now);

    void setup_nodes();
    void do_joins();
    bool join_once(NodeRt& n, int attempt_no, mac::JoinResult& out);

    void on_wake(NodeRt& n, Tick now);
    void on_timer(NodeRt& n, Tick now);
    bool cca_busy(const NodeRt& n, Tick now) const;
    void start_tx(NodeRt& n, Tick now);
    void on_tx_end(NodeRt& n, Tick now);
    void on_tx_end_background(NodeRt& n, Tick now);
    void prune(Tick now);
    bool bs_decode(const ActiveTx& t, Tick now, double& metric);
    void on_ack_timeout(NodeRt& n, Tick now);
    void start_epoch(Tick now);
    void on_ack_end(Tick now);
    void finish_packet(NodeRt& n, Tick now);
    bool regular_active() const;

    void atpc_init(NodeRt& n);
    void atpc_record(NodeRt& n, bool acked, Tick now);
    double atpc_choose(const NodeRt& n) const;

    void schedule_burst(int k);
    void on_burst_start(int k, Tick now);

    const SimConfig& cfg_;
    mac::BsState bs_;
    std::mt19937_64 bs_rng_;
    double fs_ = 0.0;
    int fft_ = 0;
    double sps_ = 0.0;
    double n0_ = 0.0;
    double cca_threshold_dbm_ = 0.0;

    std::vector<NodeRt> nodes_;
    std::deque<ActiveTx> txs_;
    std::vector<Burst> bursts_;
    std::mt19937_64 intf_rng_;
    double intf_x_ = 0.0, intf_y_ = 0.0;

    std::priority_queue<Event, std::vector<Event>, Later> q_;
    std::uint64_t seq_ = 0;

    bool bs_tx_busy_ = false;
    bool kick_pending_ = false;
    std::vector<std::pair<int, int>> pending_;  // (subcarrier, node id) decoded since the last epoch
    Epoch cur_epoch_;
    int next_epoch_ = 1;
    Tick ack_timeout_ = 0;
    Tick data_start_ = 0;
    Tick last_event_ = 0;

    RunResult res_;
};

void Engine::radio(NodeRt& n, RadioState st, Tick a, Tick b, double dbm)
{
    if (b <= a) return;
    RadioInterval iv{n.spec.id, seconds(a), seconds(b), st, dbm};
    res_.radio.push_back(iv);
    if (st == RadioState::tx) n.m.airtime_s += iv.end_s - iv.start_s;
    std::ostringstream d;
    d << "state=" << to_string(st) << ";start_us=" << fmt(iv.start_s * 1e6, 3) << ";end_us=" << fmt(iv.end_s * 1e6, 3)
      << ";dbm=" << fmt(dbm, 2);
    trace(b, ent(n), "radio", n.sc, d.str());
}

double Engine::doppler(const NodeRt& n, double f_hz) const
{
    if (!n.spec.mobile || n.spec.speed_mps == 0.0) return 0.0;
    const double r = std::hypot(n.x, n.y);
    if (r <= 0.0) return 0.0;
    // angle between the heading and the direction to the BS
    const double to_bs = std::atan2(-n.y, -n.x);
    channel::MobilityState ms;
    ms.velocity_mps = n.spec.speed_mps;
    ms.angle_theta_rad = n.heading - to_bs;
    ms.range_r_m = r;
    return channel::doppler_shift_hz(ms, f_hz);
}

void Engine::move(NodeRt& n, Tick now)
{
    if (!n.spec.mobile) return;
    const double dt = seconds(now - n.last_move);
    n.last_move = now;
    n.x += n.spec.speed_mps * dt * std::cos(n.heading);
    n.y += n.spec.speed_mps * dt * std::sin(n.heading);
    // new straight segment for the next packet, any direction
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
    n.heading = u(n.rng);
    // stay inside the deployment: head back when drifting out of range
    const double r = std::hypot(n.x, n.y);
    const double home = n.spec.distance_m;
    if (r > 1.25 * home || r < 0.75 * home) {
        const double to_home = std::atan2(std::sin(n.spec.angle_rad) * home - n.y, std::cos(n.spec.angle_rad) * home - n.x);
        n.heading = to_home;
    }
}

void Engine::setup_nodes()
{
    const auto topo = build_topology(cfg_);
    if (topo.empty()) throw ConfigError("no nodes");
    std::set<int> ids;
    for (const auto& s : topo) {
        if (!(s.distance_m > 0.0)) throw ConfigError("node " + std::to_string(s.id) + ": distance must be positive");
        if (!ids.insert(s.id).second) throw ConfigError("duplicate node id " + std::to_string(s.id));
        NodeRt n;
        n.spec = s;
        n.index = static_cast<int>(nodes_.size());
        n.rng.seed(stream_seed(cfg_.seed, static_cast<std::uint64_t>(s.id), 3));
        n.chan.seed(stream_seed(cfg_.seed, static_cast<std::uint64_t>(s.id), 4));
        n.x = s.distance_m * std::cos(s.angle_rad);
        n.y = s.distance_m * std::sin(s.angle_rad);
        std::mt19937_64 osc(stream_seed(cfg_.seed, static_cast<std::uint64_t>(s.id), 5));
        n.ppm = s.ppm ? *s.ppm : std::uniform_real_distribution<double>(-cfg_.ppm_max, cfg_.ppm_max)(osc);
        n.heading = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(osc);
        n.power_dbm = s.fixed_power_dbm ? *s.fixed_power_dbm : cfg_.tx_power_dbm;
        n.packets_left = cfg_.packets_per_node;
        n.m.node = s.id;
        n.m.distance_m = s.distance_m;
        n.m.continuous = s.continuous;
        n.m.mobile = s.mobile;
        n.m.ppm_true = n.ppm;
        nodes_.push_back(std::move(n));
    }
}

bool Engine::join_once(NodeRt& n, int attempt_no, mac::JoinResult& out)
{
    // join preamble at the integrate-and-dump rate of the join stream
    const double fs_join = 30.0 * cfg_.uplink.symbol_rate;
    phy::ModulationScheme ook{phy::ModulationKind::ook, cfg_.uplink.symbol_rate};
    auto sig = phy::modulate(phy::preamble_bits(), ook, 0.0, std::min(cfg_.node_bandwidth_hz, fs_join / 2.0), fs_join);
    const double f_join = cfg_.spectrum.center_hz(cfg_.spectrum.join_index);
    const double offset = n.ppm * 1e-6 * f_join + doppler(n, f_join);
    sig = channel::apply_cfo(sig, offset);
    Complex h = std::polar(1.0, std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(n.chan));
    if (cfg_.faded()) h = channel::draw_rayleigh(n.chan);
    const double amp = std::sqrt(channel::dbm_to_mw(cfg_.tx_power_dbm - path_loss(n.distance())));
    for (auto& s : sig.samples) s *= amp * h;
    if (n0_ > 0.0) channel::add_awgn(sig, n0_ * fs_join, bs_rng_);
    (void)attempt_no;

    if (cfg_.noisy() && cfg_.tx_power_dbm - path_loss(n.distance()) + 20.0 * std::log10(std::abs(h)) < cfg_.rx_sensitivity_dbm)
        return false;
    try {
        out = mac::bs_join(bs_, n.spec.id, sig, cfg_.uplink.symbol_rate);
    } catch (const estimation::AmbiguityError&) {
        return false;
    } catch (const std::invalid_argument&) {
        return false;
    }
    // accept only a clean preamble: symbol SNR after removing the estimated offset
    const auto derot = channel::apply_cfo(sig, -out.cfo.fine_hz);
    const auto csi = estimation::estimate_csi(derot, phy::preamble_bits(), 4);
    const double sps = fs_join / cfg_.uplink.symbol_rate;
    const double snr = csi.noise_variance > 0.0 ? std::norm(csi.h_gain) * sps / csi.noise_variance : 1e12;
    if (10.0 * std::log10(snr) < cfg_.join_min_snr_db) {
        bs_.assignments.erase(n.spec.id);
        return false;
    }
    return true;
}

void Engine::do_joins()
{
    const Tick req = ms(frame_airtime_s(static_cast<std::size_t>(cfg_.join_payload_bytes), cfg_.uplink.symbol_rate) * 1e3);
    const Tick resp = ms(frame_airtime_s(4, cfg_.downlink.symbol_rate) * 1e3);
    const Tick slot = req + resp + ms(5.0);
    Tick t = 0;
    std::map<int, std::vector<std::uint8_t>> hashes;
    for (auto& n : nodes_) {
        JoinRecord jr;
        jr.node = n.spec.id;
        jr.ppm_true = n.ppm;
        for (int a = 1; a <= cfg_.join_attempts && !n.joined; ++a) {
            trace(t, ent(n), "join_req", cfg_.spectrum.join_index, "attempt=" + std::to_string(a));
            mac::JoinResult r;
            jr.attempts = a;
            if (n.spec.subcarrier != 0) bs_.assignments[n.spec.id] = n.spec.subcarrier;
            if (join_once(n, a, r)) {
                n.joined = true;
                n.sc = r.subcarrier;
                n.ppm_est = r.cfo.ppm_bs;
                n.mac.assigned_subcarrier = n.sc;
                n.mac.cfo_feedback_i = r.delta_f_i;
                std::ostringstream d;
                d << "node=" << n.spec.id << ";ppm=" << fmt(r.cfo.ppm_bs, 4) << ";dfi_hz=" << fmt(r.delta_f_i, 2);
                trace(t + req, "bs", "join_ok", n.sc, d.str());
            } else {
                trace(t + req, "bs", "join_fail", cfg_.spectrum.join_index, "node=" + std::to_string(n.spec.id));
            }
            t += slot;
        }
        jr.ok = n.joined;
        jr.subcarrier = n.sc;
        jr.ppm_estimated = n.ppm_est;
        res_.joins.push_back(jr);
        n.m.joined = n.joined;
        n.m.subcarrier = n.sc;
        n.m.ppm_estimated = n.ppm_est;
        if (n.joined) {
            auto& hs = hashes[n.sc];
            const auto h = mac::node_id_hash(n.spec.id);
            if (std::find(hs.begin(), hs.end(), h) != hs.end())
                throw std::runtime_error("subcarrier " + std::to_string(n.sc) + ": node id hash collision");
            hs.push_back(h);
            if (static_cast<int>(hs.size()) > kMaxSharers)
                throw std::runtime_error("subcarrier " + std::to_string(n.sc) + ": more than " +
                                         std::to_string(kMaxSharers) + " nodes");
        }
    }
    data_start_ = t;

    // worst-case ACK frame: bit vector plus one sharer entry per node on a shared subcarrier
    int shared_nodes = 0;
    for (const auto& [sc, hs] : hashes)
        if (hs.size() > 1) shared_nodes += static_cast<int>(hs.size());
    const std::size_t bytes = static_cast<std::size_t>((cfg_.spectrum.num_subcarriers + 7) / 8 + 2 * shared_nodes);
    res_.ack_airtime_max_s = frame_airtime_s(bytes, cfg_.downlink.symbol_rate);
    ack_timeout_ = ms(2.0 * res_.ack_airtime_max_s * 1e3 + cfg_.ack_guard_ms);
}

void Engine::atpc_init(NodeRt& n)
{
    n.atpc.enabled = cfg_.atpc && !n.spec.fixed_power_dbm && !n.spec.continuous;
    if (!n.atpc.enabled) return;
    n.atpc.model.pdr_threshold = cfg_.atpc_threshold;
    n.power_dbm = cfg_.atpc_probe_levels.front();
}

double Engine::atpc_choose(const NodeRt& n) const
{
    const auto& a = n.atpc;
    const auto levels = atpc::PowerVector::range(static_cast<int>(std::ceil(cfg_.atpc_min_dbm)),
                                                 static_cast<int>(std::floor(cfg_.atpc_max_dbm)));
    if (a.model.a_hat > 1e-12) return atpc::select_power(a.model, levels);
    // flat or inverted fit: the probes alone decide
    double mean = 0.0;
    for (const auto& p : a.samples.pairs) mean += p.second;
    mean /= static_cast<double>(std::max<std::size_t>(1, a.samples.pairs.size()));
    return mean >= a.model.pdr_threshold ? levels.levels.front() : levels.levels.back();
}

void Engine::atpc_record(NodeRt& n, bool acked, Tick now)
{
    auto& a = n.atpc;
    if (!a.enabled) return;
    AtpcPoint pt;
    pt.time_s = seconds(now);
    pt.node = n.spec.id;
    if (a.probing) {
        ++a.count;
        a.acked += acked ? 1 : 0;
        if (a.count < cfg_.atpc_probe_packets) return;
        const double pdr = static_cast<double>(a.acked) / a.count;
        a.samples.pairs.emplace_back(cfg_.atpc_probe_levels[a.level], pdr);
        pt.phase = "probe";
        pt.window_pdr = pdr;
        pt.power_dbm = cfg_.atpc_probe_levels[a.level];
        res_.atpc.push_back(pt);
        a.count = a.acked = 0;
        if (++a.level < cfg_.atpc_probe_levels.size()) {
            n.power_dbm = cfg_.atpc_probe_levels[a.level];
            return;
        }
        a.probing = false;
        try {
            a.model = atpc::fit_initial(a.samples, cfg_.atpc_threshold);
        } catch (const std::exception&) {
            a.model = atpc::AtpcModel{0.0, 0.0, cfg_.atpc_threshold};
        }
        n.power_dbm = atpc_choose(n);
        pt.phase = "fit";
    } else {
        a.readings.push_back(acked ? 1.0 : 0.0);
        if (static_cast<int>(a.readings.size()) < cfg_.atpc_window) return;
        atpc::PdrSamples r;
        r.window_k = cfg_.atpc_window;
        double mean = 0.0;
        for (double v : a.readings) {
            r.pairs.emplace_back(n.power_dbm, v);
            mean += v;
        }
        pt.window_pdr = mean / static_cast<double>(a.readings.size());
        a.readings.clear();
        if (a.model.a_hat > 1e-12) a.model = atpc::update_intercept(a.model, r);
        n.power_dbm = atpc_choose(n);
        pt.phase = "update";
    }
    pt.power_dbm = n.power_dbm;
    pt.a_hat = a.model.a_hat;
    pt.b_hat = a.model.b_hat;
    res_.atpc.push_back(pt);
    std::ostringstream d;
    d << "phase=" << pt.phase << ";dbm=" << fmt(pt.power_dbm, 1) << ";a=" << fmt(pt.a_hat, 5) << ";b=" << fmt(pt.b_hat, 5)
      << ";pdr=" << fmt(pt.window_pdr, 4);
    trace(now, ent(n), "atpc", n.sc, d.str());
}

bool Engine::regular_active() const
{
    for (const auto& n : nodes_)
        if (n.joined && !n.spec.continuous && (n.packets_left > 0 || n.in_packet)) return true;
    return false;
}

void Engine::on_wake(NodeRt& n, Tick now)
{
    if (!n.joined || n.in_packet) return;
    if (n.spec.continuous) {
        const bool any_regular = std::any_of(nodes_.begin(), nodes_.end(), [](const NodeRt& o) { return o.joined && !o.spec.continuous; });
        if (any_regular ? !regular_active() : n.packets_left <= 0) return;
    } else if (n.packets_left <= 0) {
        return;
    }
    n.in_packet = true;
    n.first_tx = -1;
    n.attempt = 0;
    n.payload.resize(static_cast<std::size_t>(cfg_.payload_bytes));
    for (auto& b : n.payload) b = static_cast<std::uint8_t>(n.rng() & 0xFF);
    ++n.m.generated;
    const auto r = mac::node_step(n.mac, mac::MacEvent::wake(), n.rng, now, n.timing);
    n.mac = r.state;
    trace(now, ent(n), "wake", n.sc, "pkt=" + std::to_string(n.m.generated));
    push(n.mac.backoff_deadline, Ev::timer, n.index, ++n.token);
}

bool Engine::cca_busy(const NodeRt& n, Tick now) const
{
    double mw = 0.0;
    for (const auto& t : txs_) {
        if (t.subcarrier != n.sc || t.node == n.spec.id) continue;
        if (t.tx.start > now || t.tx.end() <= now) continue;
        const auto& o = nodes_[t.node_index];
        const double d = std::max(1.0, std::hypot(o.x - n.x, o.y - n.y));
        mw += channel::dbm_to_mw(t.power_dbm - path_loss(d));
    }
    for (const auto& b : bursts_) {
        if (b.start > now || b.end <= now) continue;
        if (std::find(b.subcarriers.begin(), b.subcarriers.end(), n.sc) == b.subcarriers.end()) continue;
        const double d = std::max(1.0, std::hypot(intf_x_ - n.x, intf_y_ - n.y));
        // share of the burst inside this subcarrier's band (2 bins)
        const double share = std::min(1.0, 2.0 / static_cast<double>(b.subcarriers.size()));
        mw += channel::dbm_to_mw(cfg_.interferer.tx_power_dbm - path_loss(d)) * share;
    }
    return mw > 0.0 && channel::mw_to_dbm(mw) >= cca_threshold_dbm_;
}

void Engine::on_timer(NodeRt& n, Tick now)
{
    if (n.mac.mode != mac::MacMode::initial_backoff && n.mac.mode != mac::MacMode::congestion_backoff) return;
    auto r = mac::node_step(n.mac, mac::MacEvent::timer(), n.rng, now, n.timing);
    n.mac = r.state;
    const bool busy = cca_busy(n, now);
    trace(now, ent(n), "cca", n.sc, busy ? "result=busy" : "result=clear");
    r = mac::node_step(n.mac, mac::MacEvent::cca(busy), n.rng, now, n.timing);
    n.mac = r.state;
    if (busy) {
        ++n.m.cca_busy;
        push(n.mac.backoff_deadline, Ev::timer, n.index, ++n.token);
        return;
    }
    start_tx(n, now);
}

void Engine::start_tx(NodeRt& n, Tick now)
{
    move(n, now);
    const double f = cfg_.spectrum.center_hz(n.sc);
    const double fd = doppler(n, f);
    ActiveTx t;
    t.node = n.spec.id;
    t.node_index = static_cast<std::size_t>(n.index);
    t.subcarrier = n.sc;
    t.payload = n.payload;
    t.power_dbm = n.power_dbm;
    const Bits bits = phy::SnowPacket::make(n.payload).to_bits();
    t.tx.start = now;
    t.tx.sps = sps_;
    t.tx.levels.reserve(bits.size());
    for (auto b : bits) t.tx.levels.push_back(cfg_.uplink.level(b));
    const double pl = path_loss(n.distance());
    t.nominal_amplitude = std::sqrt(channel::dbm_to_mw(n.power_dbm - pl));
    Complex h = std::polar(1.0, std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(n.chan));
    if (cfg_.faded()) h = channel::draw_rayleigh(n.chan);
    t.tx.amplitude = t.nominal_amplitude * h;
    t.rx_dbm = n.power_dbm - pl + 20.0 * std::log10(std::max(std::abs(h), 1e-300));
    t.tx.bin_offset_hz = cfg_.spectrum.baseband_offset_hz(n.sc);
    const double true_offset = n.ppm * 1e-6 * f + fd;
    // proactive correction: (df_i + df_d), the node knows its own heading
    const double correction = cfg_.cfo ? (n.ppm_est * 1e-6 * f + fd) : 0.0;
    n.mac.cfo_feedback_d = fd;
    t.tx.offset_hz = true_offset - correction;

    n.tx_start = now;
    if (n.first_tx < 0) n.first_tx = now;
    ++n.attempt;
    ++n.m.sent;
    std::ostringstream d;
    d << "pkt=" << n.m.generated << ";attempt=" << n.attempt << ";dbm=" << fmt(n.power_dbm, 1)
      << ";residual_hz=" << fmt(t.tx.offset_hz, 2);
    trace(now, ent(n), "tx_start", n.sc, d.str());
    const Tick end = t.tx.end();
    txs_.push_back(std::move(t));
    push(end, Ev::tx_end, n.index, ++n.token);
}

bool Engine::bs_decode(const ActiveTx& t, Tick now, double& metric)
{
    metric = 0.0;
    if (cfg_.noisy() && t.rx_dbm < cfg_.rx_sensitivity_dbm) return false;
    const Tick N = fft_;
    const Tick margin = static_cast<Tick>(std::ceil(2.0 * sps_ / static_cast<double>(N))) + 1;
    const Tick w0 = std::max<Tick>(0, t.tx.start / N - margin);
    const Tick w1 = (t.tx.end() + N - 1) / N + margin;
    const auto count = static_cast<std::size_t>(w1 - w0);
    const int bin = cfg_.spectrum.bin(t.subcarrier);
    const BinGrid grid{fft_, fs_};

    std::vector<Complex> stream(count, Complex{0.0, 0.0});
    for (const auto& o : txs_)
        if (o.tx.end() > w0 * N && o.tx.start < w1 * N) add_tx_to_bin(stream, o.tx, bin, w0, grid);

    for (const auto& b : bursts_) {
        if (b.end <= w0 * N || b.start >= w1 * N) continue;
        if (std::find(b.subcarriers.begin(), b.subcarriers.end(), t.subcarrier) == b.subcarriers.end()) continue;
        const double var = b.power_mw_at_bs * static_cast<double>(N) / static_cast<double>(b.subcarriers.size());
        std::normal_distribution<double> g(0.0, std::sqrt(var / 2.0));
        const Tick a = std::max(w0, b.start / N), e = std::min(w1, (b.end + N - 1) / N);
        for (Tick w = a; w < e; ++w) stream[static_cast<std::size_t>(w - w0)] += Complex(g(bs_rng_), g(bs_rng_));
    }
    add_complex_noise(stream, n0_ * fs_, bs_rng_);

    phy::ReceiverConfig rc;
    rc.scheme = cfg_.uplink;
    rc.wideband_rate = fs_;
    rc.window_length = fft_;
    rc.coherent = cfg_.csi;
    rc.csi_parts = cfg_.csi_parts;
    rc.tracking_gain = cfg_.tracking_gain;
    rc.nominal_amplitude = t.nominal_amplitude;
    const double rel = static_cast<double>(t.tx.start - w0 * N);
    rc.search_begin = std::max(0.0, rel - 2.0 * sps_);
    rc.search_end = rel + 2.0 * sps_;
    const phy::BasebandSignal sig(std::move(stream), cfg_.spectrum.spacing_hz());
    const auto fr = phy::receive_frame(sig, rc);
    metric = fr.detection.metric;
    (void)now;
    return fr.packet && fr.packet->payload == t.payload;
}

void Engine::on_tx_end(NodeRt& n, Tick now)
{
    ActiveTx* t = nullptr;
    for (auto it = txs_.rbegin(); it != txs_.rend(); ++it)
        if (it->node == n.spec.id && it->tx.start == n.tx_start) {
            t = &*it;
            break;
        }
    if (!t) throw std::logic_error("engine: lost track of a transmission");
    radio(n, RadioState::tx, n.tx_start, now, t->power_dbm);

    double metric = 0.0;
    if (n.spec.continuous) {
        // background load only
        on_tx_end_background(n, now);
        return;
    }
    const bool ok = bs_decode(*t, now, metric);
    const std::string d = "node=" + std::to_string(n.spec.id) + ";metric=" + fmt(metric, 3);
    if (ok) {
        ++n.m.decoded;
        n.m.decoded_frame_bits += static_cast<double>(phy::frame_bits(t->payload.size()));
        n.m.decoded_payload_bits += 8.0 * static_cast<double>(t->payload.size());
        trace(now, "bs", "rx_ok", n.sc, d);
        pending_.emplace_back(n.sc, n.spec.id);
        // queued behind every other event at this tick so simultaneous decodes share one epoch
        if (!bs_tx_busy_ && !kick_pending_) {
            kick_pending_ = true;
            push(now, Ev::epoch_kick, 0);
        }
    } else {
        ++n.m.lost;
        trace(now, "bs", "rx_fail", n.sc, d);
    }

    n.mac = mac::node_step(n.mac, mac::MacEvent::timer(), n.rng, now, n.timing).state;
    n.listen_start = now;
    push(n.mac.backoff_deadline, Ev::ack_timeout, n.index, ++n.token);
    prune(now);
}

void Engine::on_tx_end_background(NodeRt& n, Tick now)
{
    // no ACK wait: straight back to sleep
    n.mac = mac::node_step(n.mac, mac::MacEvent::timer(), n.rng, now, n.timing).state;
    auto t2 = n.timing;
    t2.max_retries = 0;
    n.mac = mac::node_step(n.mac, mac::MacEvent::ack_timeout(), n.rng, now, t2).state;
    n.in_packet = false;
    --n.packets_left;
    const double gap = n.spec.interval_max_ms ? *n.spec.interval_max_ms : cfg_.interval_max_ms;
    push(now + ms(std::uniform_real_distribution<double>(0.0, gap)(n.rng)), Ev::wake, n.index);
    prune(now);
}

void Engine::prune(Tick now)
{
    // forget transmissions that can no longer overlap a decode window
    const Tick horizon = now - 4 * static_cast<Tick>(sps_) * static_cast<Tick>(phy::frame_bits(255));
    while (!txs_.empty() && txs_.front().tx.end() < horizon) txs_.pop_front();
    while (!bursts_.empty() && bursts_.front().end < horizon) bursts_.erase(bursts_.begin());
}

void Engine::on_ack_timeout(NodeRt& n, Tick now)
{
    if (n.mac.mode != mac::MacMode::await_ack) return;
    radio(n, RadioState::rx, n.listen_start, now, 0.0);
    n.listen_start = -1;
    atpc_record(n, false, now);
    const auto r = mac::node_step(n.mac, mac::MacEvent::ack_timeout(), n.rng, now, n.timing);
    n.mac = r.state;
    if (n.mac.mode == mac::MacMode::initial_backoff) {
        trace(now, ent(n), "ack_timeout", n.sc, "retry=" + std::to_string(n.mac.retry_count));
        push(n.mac.backoff_deadline, Ev::timer, n.index, ++n.token);
    } else {
        trace(now, ent(n), "ack_timeout", n.sc, "drop=1");
        ++n.m.dropped;
        finish_packet(n, now);
    }
}

void Engine::start_epoch(Tick now)
{
    std::map<int, int> load = bs_.load();
    Epoch e;
    e.id = next_epoch_++;
    e.start = now;
    e.bits = mac::bs_ack_epoch(pending_, bs_.plan, load);
    e.payload = e.bits.to_payload();
    e.end = now + ms(frame_airtime_s(e.payload.size(), cfg_.downlink.symbol_rate) * 1e3);
    pending_.clear();
    bs_tx_busy_ = true;
    trace(now, "bs", "ack_start", bs_.plan.downlink_index,
          "epoch=" + std::to_string(e.id) + ";bits=" + e.bits.bit_string() + ";bytes=" + std::to_string(e.payload.size()));
    cur_epoch_ = std::move(e);
    ++res_.metrics.ack_epochs;
    push(cur_epoch_.end, Ev::ack_end, cur_epoch_.id);
}

void Engine::on_ack_end(Tick now)
{
    const Epoch e = cur_epoch_;
    bs_tx_busy_ = false;
    trace(now, "bs", "ack_end", bs_.plan.downlink_index, "epoch=" + std::to_string(e.id));
    const double f_dl = cfg_.spectrum.center_hz(bs_.plan.downlink_index);
    for (auto& n : nodes_) {
        if (!n.joined || n.mac.mode != mac::MacMode::await_ack || n.listen_start < 0 || n.listen_start > e.start) continue;
        if (!e.bits.acknowledges(n.sc, mac::node_id_hash(n.spec.id))) continue;
        // node side: its own LO corrected with the join ppm feedback
        DownlinkLink dl;
        const double pl = path_loss(n.distance());
        const double amp = std::sqrt(channel::dbm_to_mw(cfg_.bs_tx_power_dbm - pl));
        Complex h = std::polar(1.0, std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(n.chan));
        if (cfg_.faded()) h = channel::draw_rayleigh(n.chan);
        dl.amplitude = amp * h;
        dl.offset_hz = -(n.ppm - n.ppm_est) * 1e-6 * f_dl;
        dl.n0_mw_per_hz = n0_;
        DownlinkRxOptions o;
        o.scheme = cfg_.downlink;
        o.samples_per_symbol = cfg_.downlink_samples_per_symbol;
        o.coherent = cfg_.csi;
        o.csi_parts = cfg_.csi_parts;
        o.tracking_gain = cfg_.tracking_gain;
        o.nominal_amplitude = amp;
        bool got = false;
        if (!cfg_.noisy() || cfg_.bs_tx_power_dbm - pl + 20.0 * std::log10(std::max(std::abs(h), 1e-300)) >= cfg_.rx_sensitivity_dbm) {
            const auto rx = receive_downlink(e.payload, dl, o, n.chan);
            got = rx && *rx == e.payload;
        }
        if (!got) {
            trace(now, ent(n), "ack_miss", n.sc, "epoch=" + std::to_string(e.id));
            continue;
        }
        radio(n, RadioState::rx, n.listen_start, now, 0.0);
        n.listen_start = -1;
        n.mac = mac::node_step(n.mac, mac::MacEvent::ack(true), n.rng, now, n.timing).state;
        ++n.token;  // cancels the pending timeout
        ++n.m.acked;
        ++n.m.delivered;
        const Tick delay = now - n.first_tx;
        n.m.delay_sum_s += seconds(delay);
        ++n.m.delay_count;
        trace(now, ent(n), "ack_rx", n.sc, "epoch=" + std::to_string(e.id) + ";delay_us=" + std::to_string(us(delay)));
        atpc_record(n, true, now);
        finish_packet(n, now);
    }
    if (!pending_.empty()) start_epoch(now);
}

void Engine::finish_packet(NodeRt& n, Tick now)
{
    n.in_packet = false;
    --n.packets_left;
    if (n.packets_left <= 0) return;
    const double hi = n.spec.interval_max_ms ? *n.spec.interval_max_ms : cfg_.interval_max_ms;
    std::uniform_real_distribution<double> u(std::min(cfg_.interval_min_ms, hi), hi);
    push(now + ms(u(n.rng)), Ev::wake, n.index);
}

void Engine::schedule_burst(int k)
{
    const auto& ic = cfg_.interferer;
    const Tick period = ms(ic.period_ms);
    const Tick dur = static_cast<Tick>(std::llround(static_cast<double>(phy::frame_bits(static_cast<std::size_t>(ic.payload_bytes))) * fs_ / ic.symbol_rate));
    const Tick slack = std::max<Tick>(0, period - dur);
    const Tick t0 = data_start_ + static_cast<Tick>(k) * period +
                    static_cast<Tick>(std::uniform_real_distribution<double>(0.0, static_cast<double>(slack))(intf_rng_));
    push(t0, Ev::burst_start, k);
}

void Engine::on_burst_start(int k, Tick now)
{
    const auto& ic = cfg_.interferer;
    if (!regular_active()) return;
    const auto data = bs_.plan.data_subcarriers();
    const int m = static_cast<int>(std::lround(ic.overlap * static_cast<double>(data.size())));
    schedule_burst(k + 1);
    if (m <= 0) return;
    Burst b;
    b.start = now;
    b.end = now + static_cast<Tick>(std::llround(static_cast<double>(phy::frame_bits(static_cast<std::size_t>(ic.payload_bytes))) * fs_ / ic.symbol_rate));
    const int first = std::uniform_int_distribution<int>(0, static_cast<int>(data.size()) - m)(intf_rng_);
    for (int i = 0; i < m; ++i) b.subcarriers.push_back(data[static_cast<std::size_t>(first + i)]);
    double g = 1.0;
    if (cfg_.faded()) g = std::norm(channel::draw_rayleigh(intf_rng_));
    b.power_mw_at_bs = channel::dbm_to_mw(ic.tx_power_dbm - path_loss(ic.distance_m)) * g;
    trace(now, "interferer", "burst_start", b.subcarriers.front(), "count=" + std::to_string(m));
    push(b.end, Ev::burst_end, k);
    bursts_.push_back(std::move(b));
}

RunResult Engine::run()
{
    cfg_.validate();
    setup_nodes();
    do_joins();

    const mac::MacTiming base{ms(cfg_.initial_window_ms), ms(cfg_.congestion_window_ms),
                              static_cast<Tick>(std::llround(static_cast<double>(phy::frame_bits(static_cast<std::size_t>(cfg_.payload_bytes))) * sps_)),
                              ack_timeout_, cfg_.max_retries};
    for (auto& n : nodes_) {
        n.timing = base;
        if (n.spec.continuous) n.timing.initial_window = 0;  // immediate CCA
        n.last_move = data_start_;
        atpc_init(n);
        if (!n.joined) continue;
        const double spread = n.spec.continuous ? 0.0 : cfg_.start_spread_ms;
        push(data_start_ + ms(std::uniform_real_distribution<double>(0.0, spread)(n.rng)), Ev::wake, n.index);
    }
    if (cfg_.interferer.enabled) {
        intf_rng_.seed(stream_seed(cfg_.seed, 0xFFFF, 6));
        const double a = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(intf_rng_);
        intf_x_ = cfg_.interferer.distance_m * std::cos(a);
        intf_y_ = cfg_.interferer.distance_m * std::sin(a);
        schedule_burst(0);
    }

    const Tick limit = data_start_ + ms(1e3 * 3600.0 * 24.0);
    while (!q_.empty()) {
        const Event e = q_.top();
        q_.pop();
        if (e.t > limit) throw std::runtime_error("simulation did not finish within a simulated day");
        last_event_ = e.t;
        switch (e.kind) {
        case Ev::wake: on_wake(nodes_[static_cast<std::size_t>(e.idx)], e.t); break;
        case Ev::timer: {
            auto& n = nodes_[static_cast<std::size_t>(e.idx)];
            if (e.token == n.token) on_timer(n, e.t);
            break;
        }
        case Ev::tx_end: {
            auto& n = nodes_[static_cast<std::size_t>(e.idx)];
            if (e.token == n.token) on_tx_end(n, e.t);
            break;
        }
        case Ev::ack_timeout: {
            auto& n = nodes_[static_cast<std::size_t>(e.idx)];
            if (e.token == n.token) on_ack_timeout(n, e.t);
            break;
        }
        case Ev::ack_end: on_ack_end(e.t); break;
        case Ev::epoch_kick:
            kick_pending_ = false;
            if (!bs_tx_busy_ && !pending_.empty()) start_epoch(e.t);
            break;
        case Ev::burst_start: on_burst_start(e.idx, e.t); break;
        case Ev::burst_end: trace(e.t, "interferer", "burst_end", 0, "burst=" + std::to_string(e.idx)); break;
        }
    }

    // energy: tx/rx intervals, idle for the rest of the data phase
    std::map<int, double> bits;
    for (const auto& n : nodes_) bits[n.spec.id] = n.m.decoded_payload_bits;
    const auto rep = energy_consumed(res_.radio, cfg_.energy, bits);
    const double span = seconds(last_event_ - data_start_);
    res_.metrics.duration_s = span;
    for (auto& n : nodes_) {
        double busy = 0.0;
        for (const auto& iv : res_.radio)
            if (iv.node == n.spec.id) busy += iv.end_s - iv.start_s;
        const auto it = rep.joules.find(n.spec.id);
        n.m.energy_j = (it == rep.joules.end() ? 0.0 : it->second) +
                       cfg_.energy.supply_v * cfg_.energy.idle_current_a * std::max(0.0, span - busy);
        n.m.final_power_dbm = n.power_dbm;
        res_.metrics.nodes.push_back(n.m);
    }
    return std::move(res_);
}

}  // namespace

RunResult run(const SimConfig& cfg)
{
    Engine e(cfg);
    return e.run();
}

}  // namespace snow::sim
