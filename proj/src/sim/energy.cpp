#include "snow/sim/energy.hpp"

#include <algorithm>
#include <stdexcept>

namespace snow::sim {

std::string to_string(RadioState s)
{
    switch (s) {
    case RadioState::tx: return "tx";
    case RadioState::rx: return "rx";
    case RadioState::idle: return "idle";
    }
    return "?";
}

double EnergyProfile::tx_current_a(double power_dbm) const
{
    const auto& t = tx_current_table;
    if (power_dbm <= t.front().first) return t.front().second;
    if (power_dbm >= t.back().first) return t.back().second;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (power_dbm <= t[i].first) {
            const double f = (power_dbm - t[i - 1].first) / (t[i].first - t[i - 1].first);
            return t[i - 1].second + f * (t[i].second - t[i - 1].second);
        }
    }
    return t.back().second;
}

double EnergyProfile::current_a(RadioState s, double power_dbm) const
{
    switch (s) {
    case RadioState::tx: return tx_current_a(power_dbm);
    case RadioState::rx: return rx_current_a;
    case RadioState::idle: return idle_current_a;
    }
    return 0.0;
}

void EnergyProfile::validate() const
{
    if (supply_v <= 0.0) throw std::invalid_argument("energy: supply voltage must be positive");
    if (rx_current_a < 0.0 || idle_current_a < 0.0) throw std::invalid_argument("energy: negative current");
    if (tx_current_table.empty()) throw std::invalid_argument("energy: empty tx current table");
    for (std::size_t i = 0; i < tx_current_table.size(); ++i) {
        if (tx_current_table[i].second < 0.0) throw std::invalid_argument("energy: negative tx current");
        if (i > 0 && tx_current_table[i].first <= tx_current_table[i - 1].first)
            throw std::invalid_argument("energy: tx current table must be sorted by power");
    }
}

EnergyReport energy_consumed(const std::vector<RadioInterval>& intervals, const EnergyProfile& profile,
                             const std::map<int, double>& delivered_bits)
{
    profile.validate();
    std::map<int, std::vector<const RadioInterval*>> by_node;
    for (const auto& iv : intervals) {
        if (iv.end_s < iv.start_s) throw std::invalid_argument("energy: interval ends before it starts");
        by_node[iv.node].push_back(&iv);
    }
    EnergyReport rep;
    for (auto& [node, list] : by_node) {
        std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->start_s < b->start_s; });
        double j = 0.0;
        for (std::size_t i = 0; i < list.size(); ++i) {
            // radio states are exclusive; 1 ns tolerance for tick rounding
            if (i > 0 && list[i]->start_s < list[i - 1]->end_s - 1e-9)
                throw std::invalid_argument("energy: overlapping radio intervals for node " + std::to_string(node));
            const auto& iv = *list[i];
            j += profile.supply_v * profile.current_a(iv.state, iv.power_dbm) * (iv.end_s - iv.start_s);
        }
        rep.joules[node] = j;
    }
    for (const auto& [node, bits] : delivered_bits) {
        const auto it = rep.joules.find(node);
        const double j = it == rep.joules.end() ? 0.0 : it->second;
        if (bits > 0.0) rep.joules_per_bit[node] = j / bits;
    }
    return rep;
}

std::vector<RadioInterval> intervals_from_trace(const mac::TraceLog& trace)
{
    // radio records: detail "state=tx;start_us=..;end_us=..;dbm=.."
    std::vector<RadioInterval> out;
    for (const auto& r : trace.records()) {
        if (r.event != "radio") continue;
        if (r.entity.rfind("node", 0) != 0) continue;
        RadioInterval iv;
        iv.node = std::stoi(r.entity.substr(4));
        const std::string st = mac::detail_get(r.detail, "state").value_or("idle");
        iv.state = st == "tx" ? RadioState::tx : st == "rx" ? RadioState::rx : RadioState::idle;
        iv.start_s = std::stod(mac::detail_get(r.detail, "start_us").value_or("0")) * 1e-6;
        iv.end_s = std::stod(mac::detail_get(r.detail, "end_us").value_or("0")) * 1e-6;
        iv.power_dbm = std::stod(mac::detail_get(r.detail, "dbm").value_or("0"));
        out.push_back(iv);
    }
    return out;
}

EnergyReport energy_consumed(const mac::TraceLog& trace, const EnergyProfile& profile,
                             const std::map<int, double>& delivered_bits)
{
    return energy_consumed(intervals_from_trace(trace), profile, delivered_bits);
}

}  // namespace snow::sim
