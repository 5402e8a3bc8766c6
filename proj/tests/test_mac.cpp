#include <random>
#include <sstream>

#include "doctest.h"
#include "snow/channel/impairments.hpp"
#include "snow/estimation/cfo.hpp"
#include "snow/mac/base_station.hpp"
#include "snow/mac/invariants.hpp"
#include "snow/mac/node_mac.hpp"
#include "snow/mac/trace.hpp"
#include "snow/phy/modulation.hpp"
#include "snow/phy/packet.hpp"
#include "snow/sim/engine.hpp"

using namespace snow;
using namespace snow::mac;

namespace {

MacTiming timing()
{
    MacTiming t;
    t.initial_window = 320;
    t.congestion_window = 640;
    t.tx_duration = 100;
    t.ack_timeout = 50;
    t.max_retries = 2;
    return t;
}

}  // namespace

TEST_CASE("uncontended path: one backoff draw, then transmit")
{
    std::mt19937_64 rng(1), copy(1);
    const auto t = timing();
    auto r = node_step(NodeMacState{}, MacEvent::wake(), rng, 1000, t);
    CHECK(r.state.mode == MacMode::initial_backoff);
    CHECK(r.action == MacAction::none);
    const Tick expect = 1000 + std::uniform_int_distribution<Tick>(0, t.initial_window)(copy);
    CHECK(r.state.backoff_deadline == expect);
    r = node_step(r.state, MacEvent::timer(), rng, expect, t);
    CHECK(r.action == MacAction::start_cca);
    r = node_step(r.state, MacEvent::cca(false), rng, expect, t);
    CHECK(r.action == MacAction::transmit);
    CHECK(r.state.mode == MacMode::transmit);
    CHECK(rng() == copy());  // no further draws on the clear path
    r = node_step(r.state, MacEvent::timer(), rng, expect + t.tx_duration, t);
    CHECK(r.state.mode == MacMode::await_ack);
    CHECK(r.action == MacAction::listen_downlink);
    r = node_step(r.state, MacEvent::ack(false), rng, expect + 120, t);
    CHECK(r.state.mode == MacMode::await_ack);
    r = node_step(r.state, MacEvent::ack(true), rng, expect + 130, t);
    CHECK(r.state.mode == MacMode::sleep);
    CHECK(r.state.outcome == MacOutcome::delivered);
}

TEST_CASE("busy CCA goes to congestion backoff")
{
    std::mt19937_64 rng(2);
    NodeMacState s;
    s.mode = MacMode::cca;
    const auto r = node_step(s, MacEvent::cca(true), rng, 500, timing());
    CHECK(r.state.mode == MacMode::congestion_backoff);
    CHECK(r.action == MacAction::none);
    CHECK(r.state.backoff_deadline >= 500);
    CHECK(r.state.backoff_deadline <= 500 + timing().congestion_window);
}

TEST_CASE("retries then drop")
{
    std::mt19937_64 rng(3);
    NodeMacState s;
    s.mode = MacMode::await_ack;
    const auto t = timing();
    for (int i = 1; i <= t.max_retries; ++i) {
        auto r = node_step(s, MacEvent::ack_timeout(), rng, 0, t);
        CHECK(r.state.mode == MacMode::initial_backoff);
        CHECK(r.state.retry_count == i);
        s = r.state;
        s.mode = MacMode::await_ack;
    }
    const auto r = node_step(s, MacEvent::ack_timeout(), rng, 0, t);
    CHECK(r.state.mode == MacMode::sleep);
    CHECK(r.state.outcome == MacOutcome::dropped);
}

TEST_CASE("invalid events are protocol errors")
{
    std::mt19937_64 rng(4);
    NodeMacState s;
    CHECK_THROWS_AS(node_step(s, MacEvent::ack(true), rng, 0, timing()), ProtocolError);
    s.mode = MacMode::cca;
    CHECK_THROWS_AS(node_step(s, MacEvent::wake(), rng, 0, timing()), ProtocolError);
    s.mode = MacMode::transmit;
    CHECK_THROWS_AS(node_step(s, MacEvent::cca(false), rng, 0, timing()), ProtocolError);
}

TEST_CASE("node_step is deterministic for a given rng state")
{
    std::mt19937_64 a(9), b(9);
    const auto ra = node_step(NodeMacState{}, MacEvent::wake(), a, 0, timing());
    const auto rb = node_step(NodeMacState{}, MacEvent::wake(), b, 0, timing());
    CHECK(ra.state.backoff_deadline == rb.state.backoff_deadline);
}

TEST_CASE("ack epoch bit vectors")
{
    const auto plan = phy::SpectrumPlan::snow_default();
    const auto none = bs_ack_epoch(std::set<int>{}, plan);
    CHECK(none.count() == 0u);
    CHECK(none.bits.size() == 29u);
    const auto v = bs_ack_epoch(std::set<int>{3, 7}, plan);
    CHECK(v.count() == 2u);
    CHECK(v.test(3));
    CHECK(v.test(7));
    CHECK_FALSE(v.test(4));
    CHECK(v.to_payload().at(0) == 0x22);
    CHECK_THROWS(bs_ack_epoch(std::set<int>{28}, plan));

    // shared subcarrier: the hash list picks the sender
    const auto sh = bs_ack_epoch({{5, 1}, {6, 2}}, plan, {{5, 2}, {6, 1}});
    CHECK(sh.acknowledges(5, node_id_hash(1)));
    CHECK_FALSE(sh.acknowledges(5, node_id_hash(30)));
    CHECK(sh.acknowledges(6, node_id_hash(99)));  // sole owner needs no hash
    CHECK(sh.sharer_hashes.size() == 1u);
}

TEST_CASE("subcarrier assignment: unique until full, then shared by two")
{
    BsState bs(phy::SpectrumPlan::snow_default());
    std::set<int> used;
    for (int id = 1; id <= 25; ++id) used.insert(assign_subcarrier(bs, id));
    CHECK(used.size() == 25u);
    for (int sc : used) CHECK(bs.plan.is_data(sc));
    const int s26 = assign_subcarrier(bs, 26);
    CHECK(bs.load().at(s26) == 2);
    CHECK(assign_subcarrier(bs, 26) == s26);
}

TEST_CASE("join: +10 ppm node gets its offset and pre-corrects it")
{
    BsState bs(phy::SpectrumPlan::snow_default());
    const double fs = 8.4e6, rate = 11200.0;
    const double fj = bs.plan.center_hz(bs.plan.join_index);
    const auto pre = phy::modulate(phy::preamble_bits(), {phy::ModulationKind::ook, rate}, 0.0, 39000.0, fs);
    std::mt19937_64 rng(5);
    auto rx = channel::apply_cfo(pre, fj * 1e-5);
    const auto j = bs_join(bs, 1, rx, rate);
    const double fi = bs.plan.center_hz(j.subcarrier);
    CHECK(j.delta_f_i == doctest::Approx(fi * 1e-5).epsilon(1e-4));
    CHECK(j.cfo.ppm_bs == doctest::Approx(10.0).epsilon(1e-4));
    // uplink on the assigned subcarrier after pre-correction
    const auto up = channel::apply_cfo(estimation::proactive_correction(pre, j.delta_f_i, 0.0), fi * 1e-5);
    const auto split = estimation::split_preamble(up, rate);
    const double resid = estimation::estimate_cfo_fine(split, estimation::estimate_cfo_coarse(split));
    CHECK(std::abs(resid) < 10.0);
}

TEST_CASE("downlink failover")
{
    auto plan = phy::SpectrumPlan::snow_default();
    plan.backup_indices = {24};
    BsState bs(plan);
    CHECK(failover_needed({26, 0.3}));
    CHECK_FALSE(failover_needed({26, 0.8}));
    const auto next = downlink_failover(bs, {26, 0.3});
    CHECK(next.downlink_index() == 24);
    CHECK(next.plan.backup_indices.empty());
    CHECK(next.retired == std::vector<int>{26});
    CHECK_FALSE(next.plan.is_data(26));
    CHECK_THROWS(downlink_failover(next, {24, 0.1}));
}

TEST_CASE("trace text round trip")
{
    TraceLog log;
    log.add(10, "node1", "cca", 3, "result=clear");
    log.add(20, "bs", "ack_end", 26, "");
    std::stringstream ss;
    log.write(ss);
    const auto back = TraceLog::parse(ss);
    REQUIRE(back.size() == 2u);
    CHECK(back.records()[0].detail == "result=clear");
    CHECK(back.records()[1].detail.empty());
    CHECK(detail_get("a=1;bb=2", "bb").value() == "2");
    CHECK_FALSE(detail_get("a=1", "b"));
    CHECK_THROWS(log.add(0, "x", "y", 0, "a,b"));
}

TEST_CASE("invariant checker flags each violation kind")
{
    InvariantConfig cfg;
    cfg.ack_duration_us = 1000.0;
    auto good = [] {
        TraceLog t;
        t.add(0, "node1", "cca", 3, "result=clear");
        t.add(5, "node1", "tx_start", 3, "");
        t.add(100, "bs", "rx_ok", 3, "node=1");
        t.add(110, "bs", "ack_start", 26, "epoch=1;bits=00100000000000000000000000000");
        t.add(1110, "bs", "ack_end", 26, "epoch=1");
        return t;
    };
    CHECK(check_mac_invariants(good(), cfg).empty());

    TraceLog no_cca;
    no_cca.add(5, "node1", "tx_start", 3, "");
    CHECK(check_mac_invariants(no_cca, cfg).size() == 1u);

    TraceLog busy;
    busy.add(0, "node1", "cca", 3, "result=busy");
    busy.add(5, "node1", "tx_start", 3, "");
    CHECK(check_mac_invariants(busy, cfg).size() == 1u);

    auto wrong_bits = good();
    TraceLog wb;
    for (auto r : wrong_bits.records()) {
        if (r.event == "ack_start") r.detail = "epoch=1;bits=00010000000000000000000000000";
        wb.add(r.time_us, r.entity, r.event, r.subcarrier, r.detail);
    }
    CHECK(check_mac_invariants(wb, cfg).size() == 1u);

    TraceLog late;
    const auto g = good();
    for (auto r : g.records()) late.add(r.event == "ack_end" ? 5000 : r.time_us, r.entity, r.event, r.subcarrier, r.detail);
    CHECK(check_mac_invariants(late, cfg).size() == 1u);

    TraceLog join;
    join.add(0, "node1", "cca", 28, "result=clear");
    join.add(5, "node1", "tx_start", 28, "");
    CHECK(check_mac_invariants(join, cfg).size() == 1u);

    TraceLog dl;
    dl.add(0, "node1", "cca", 26, "result=clear");
    dl.add(5, "node1", "tx_start", 26, "");
    CHECK(check_mac_invariants(dl, cfg).size() == 1u);

    TraceLog unacked;
    unacked.add(100, "bs", "rx_ok", 3, "");
    CHECK(check_mac_invariants(unacked, cfg).size() == 1u);
}

namespace {

sim::SimConfig ideal(int nodes, int packets)
{
    sim::SimConfig c;
    c.node_count = nodes;
    c.ideal_channel = true;
    c.packets_per_node = packets;
    c.atpc = false;
    return c;
}

}  // namespace

TEST_CASE("two sharers on one subcarrier defer and both get ACKs in time")
{
    auto c = ideal(2, 40);
    c.interval_max_ms = 40.0;
    c.start_spread_ms = 5.0;
    for (int i = 1; i <= 2; ++i) {
        sim::NodeSpec n;
        n.id = i;
        n.distance_m = 200.0 + 50.0 * i;
        n.subcarrier = 5;
        c.nodes.push_back(n);
    }
    const auto r = sim::run(c);
    int busy = 0;
    for (const auto& n : r.metrics.nodes) {
        busy += n.cca_busy;
        CHECK(n.delivered == 40);
        CHECK(n.subcarrier == 5);
    }
    CHECK(busy > 0);
    CHECK(check_mac_invariants(r.trace, r.invariant_config(c)).empty());
}

TEST_CASE("25 simultaneous uplinks are acknowledged by one broadcast")
{
    auto c = ideal(25, 1);
    c.start_spread_ms = 0.0;
    c.initial_window_ms = 0.0;
    // one distance, so no node is buried under its neighbours' leakage
    c.cluster_distances_m.assign(5, 300.0);
    c.cluster_jitter_m = 0.0;
    const auto r = sim::run(c);
    int epochs = 0, bits_first = -1;
    for (const auto& rec : r.trace.records()) {
        if (rec.event != "ack_start") continue;
        ++epochs;
        if (bits_first < 0) {
            const auto b = detail_get(rec.detail, "bits").value_or("");
            bits_first = static_cast<int>(std::count(b.begin(), b.end(), '1'));
        }
    }
    CHECK(epochs == 1);
    CHECK(bits_first == 25);
    CHECK(r.metrics.acked() == 25);
}

TEST_CASE("disjoint subcarriers on an ideal channel never see a busy CCA")
{
    const auto c = ideal(25, 20);
    const auto r = sim::run(c);
    int busy = 0;
    for (const auto& n : r.metrics.nodes) busy += n.cca_busy;
    CHECK(busy == 0);
    CHECK(check_mac_invariants(r.trace, r.invariant_config(c)).empty());
}
