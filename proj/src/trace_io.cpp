#include "rcsim/trace_io.hpp"

#include <sstream>

namespace rcsim {

nlohmann::json decision_to_json(const Decision& d) {
    switch (d.kind) {
        case DecisionKind::value: return d.value;
        case DecisionKind::bot: return "BOT";
        case DecisionKind::undecided: return "UNDECIDED";
    }
    return "UNDECIDED";
}

nlohmann::json round_record_to_json(const RoundRecord& rec, int round) {
    nlohmann::json in = nlohmann::json::array();
    for (const auto& [src, exp] : rec.incoming)
        in.push_back({{"from", src}, {"payload", exp.has_value() ? *exp : nlohmann::json()}});
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [dst, exp] : rec.outgoing)
        out.push_back({{"to", dst}, {"payload", exp.has_value() ? *exp : nlohmann::json()}});
    return {{"agent", rec.agent}, {"round", round},    {"input", rec.input},
            {"in", in},           {"out", out},        {"decision", decision_to_json(rec.decision)}};
}

std::string trace_to_jsonl(const Trace& tr) {
    std::ostringstream os;
    for (int t = 0; t < static_cast<int>(tr.rounds.size()); t++)
        for (const auto& [agent, rec] : tr.rounds[t]) os << round_record_to_json(rec, t) << "\n";
    return os.str();
}

}  // namespace rcsim
