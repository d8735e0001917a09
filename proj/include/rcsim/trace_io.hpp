#pragma once

#include <string>

#include <json.hpp>

#include "rcsim/engine.hpp"

namespace rcsim {

nlohmann::json decision_to_json(const Decision& d);

// One object per round per agent:
// {agent, round, input, in:[{from,payload}], out:[{to,payload}], decision}
// Silence is a null payload; the EMPTY payload is the literal "EMPTY".
nlohmann::json round_record_to_json(const RoundRecord& rec, int round);
std::string trace_to_jsonl(const Trace& tr);

}  // namespace rcsim
