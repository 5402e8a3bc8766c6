#include "snow/mac/invariants.hpp"

#include <map>

namespace snow::mac {

std::vector<std::string> check_mac_invariants(const TraceLog& trace, const InvariantConfig& cfg)
{
    std::vector<std::string> bad;
    auto at = [](const TraceRecord& r) { return std::to_string(r.time_us) + "us " + r.entity + " "; };

    std::map<std::string, std::string> last_cca;  // node -> "clear"/"busy"/""
    std::vector<const TraceRecord*> since_epoch;  // rx_ok awaiting an epoch
    struct Open {
        const TraceRecord* ack_start;
        std::vector<const TraceRecord*> covered;
    };
    std::map<std::string, Open> open_epochs;  // epoch id -> contents

    for (const auto& r : trace.records()) {
        if (r.event == "cca") {
            last_cca[r.entity] = detail_get(r.detail, "result").value_or("");
        } else if (r.event == "tx_start") {
            if (last_cca[r.entity] != "clear") bad.push_back(at(r) + "transmitted without a clear CCA");
            last_cca[r.entity].clear();
            if (r.subcarrier == cfg.join_subcarrier) bad.push_back(at(r) + "data on the join subcarrier");
            if (cfg.downlink_subcarriers.count(r.subcarrier))
                bad.push_back(at(r) + "uplink on a downlink subcarrier");
        } else if (r.event == "rx_ok") {
            since_epoch.push_back(&r);
        } else if (r.event == "ack_start") {
            const std::string bits = detail_get(r.detail, "bits").value_or("");
            std::set<int> set_bits, decoded;
            for (std::size_t i = 0; i < bits.size(); ++i)
                if (bits[i] == '1') set_bits.insert(static_cast<int>(i) + 1);
            for (const auto* d : since_epoch) decoded.insert(d->subcarrier);
            if (set_bits != decoded) bad.push_back(at(r) + "ACK bits do not match the decoded set");
            const std::string id = detail_get(r.detail, "epoch").value_or("?");
            open_epochs[id] = Open{&r, since_epoch};
            since_epoch.clear();
        } else if (r.event == "ack_end") {
            const std::string id = detail_get(r.detail, "epoch").value_or("?");
            const auto it = open_epochs.find(id);
            if (it == open_epochs.end()) {
                bad.push_back(at(r) + "ACK end without a start");
                continue;
            }
            for (const auto* d : it->second.covered) {
                const double wait = static_cast<double>(r.time_us - d->time_us);
                if (wait > 2.0 * cfg.ack_duration_us + cfg.slack_us)
                    bad.push_back(at(*d) + "ACK delivered " + std::to_string(wait) + "us after decode");
            }
            open_epochs.erase(it);
        }
    }
    for (const auto* d : since_epoch) bad.push_back(at(*d) + "decoded packet never acknowledged");
    for (const auto& [id, o] : open_epochs) bad.push_back(at(*o.ack_start) + "ACK epoch " + id + " never ended");
    return bad;
}

}  // namespace snow::mac
