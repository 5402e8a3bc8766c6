#include "snow/mac/base_station.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace snow::mac {

bool AckBitVector::test(int id) const
{
    return id >= 1 && static_cast<std::size_t>(id) <= bits.size() && bits[id - 1] != 0;
}

std::size_t AckBitVector::count() const
{
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

std::vector<std::uint8_t> AckBitVector::to_payload() const
{
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    for (const auto& [sc, h] : sharer_hashes) {
        out.push_back(static_cast<std::uint8_t>(sc));
        out.push_back(h);
    }
    return out;
}

std::string AckBitVector::bit_string() const
{
    std::string s;
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

bool AckBitVector::acknowledges(int subcarrier, std::uint8_t node_hash) const
{
    if (!test(subcarrier)) return false;
    bool listed = false;
    for (const auto& [sc, h] : sharer_hashes) {
        if (sc != subcarrier) continue;
        listed = true;
        if (h == node_hash) return true;
    }
    return !listed;
}

std::uint8_t node_id_hash(int node_id)
{
    const std::uint32_t x = static_cast<std::uint32_t>(node_id) * 2654435761u;
    return static_cast<std::uint8_t>(x >> 24);
}

AckBitVector bs_ack_epoch(const std::set<int>& decoded, const phy::SpectrumPlan& plan)
{
    AckBitVector v;
    v.bits.assign(plan.num_subcarriers, 0);
    for (int id : decoded) {
        if (!plan.is_data(id))
            throw std::invalid_argument("ack epoch: subcarrier " + std::to_string(id) + " is not a data subcarrier");
        v.bits[id - 1] = 1;
    }
    return v;
}

AckBitVector bs_ack_epoch(const std::vector<std::pair<int, int>>& decoded, const phy::SpectrumPlan& plan,
                          const std::map<int, int>& subcarrier_load)
{
    std::set<int> ids;
    for (const auto& d : decoded) ids.insert(d.first);
    AckBitVector v = bs_ack_epoch(ids, plan);
    for (const auto& [sc, node] : decoded) {
        const auto it = subcarrier_load.find(sc);
        if (it != subcarrier_load.end() && it->second > 1) v.sharer_hashes.emplace_back(sc, node_id_hash(node));
    }
    return v;
}

std::map<int, int> BsState::load() const
{
    std::map<int, int> l;
    for (const auto& [node, sc] : assignments) ++l[sc];
    return l;
}

int assign_subcarrier(BsState& bs, int node_id)
{
    const auto it = bs.assignments.find(node_id);
    if (it != bs.assignments.end()) return it->second;
    const auto data = bs.plan.data_subcarriers();
    std::vector<int> usable;
    for (int id : data)
        if (std::find(bs.retired.begin(), bs.retired.end(), id) == bs.retired.end()) usable.push_back(id);
    if (usable.empty()) throw std::runtime_error("join: no data subcarrier available");
    const auto l = bs.load();
    int best = usable.front();
    int best_load = 1 << 30;
    for (int id : usable) {
        const auto li = l.find(id);
        const int n = li == l.end() ? 0 : li->second;
        if (n < best_load) {
            best_load = n;
            best = id;
        }
    }
    bs.assignments[node_id] = best;
    return best;
}

JoinResult bs_join(BsState& bs, int node_id, const phy::BasebandSignal& join_preamble, double symbol_rate)
{
    const auto split = estimation::split_preamble(join_preamble, symbol_rate);
    const double coarse = estimation::estimate_cfo_coarse(split);
    const double fine = estimation::estimate_cfo_fine(split, coarse);
    JoinResult r;
    r.cfo = estimation::ppm_and_subcarrier_cfo(fine, bs.plan.center_hz(bs.plan.join_index), bs.plan);
    r.cfo.coarse_hz = coarse;
    r.subcarrier = assign_subcarrier(bs, node_id);
    r.delta_f_i = r.cfo.per_subcarrier_hz.at(r.subcarrier);
    return r;
}

bool failover_needed(const NoiseReport& report, double prr_floor)
{
    return report.downlink_prr < prr_floor;
}

BsState downlink_failover(const BsState& bs, const NoiseReport& report)
{
    if (bs.plan.backup_indices.empty()) throw std::runtime_error("downlink failover: no backup subcarrier left");
    (void)report;
    BsState out = bs;
    out.retired.push_back(bs.plan.downlink_index);
    out.plan.downlink_index = bs.plan.backup_indices.front();
    out.plan.backup_indices.erase(out.plan.backup_indices.begin());
    // the retired subcarrier stays reserved: keep it out of the data pool
    out.plan.guard_indices.push_back(bs.plan.downlink_index);
    return out;
}

}  // namespace snow::mac
