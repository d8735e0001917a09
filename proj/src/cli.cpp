#include "rcsim/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "rcsim/engine.hpp"
#include "rcsim/epistemics.hpp"
#include "rcsim/error.hpp"
#include "rcsim/game.hpp"
#include "rcsim/net.hpp"
#include "rcsim/protocols.hpp"
#include "rcsim/trace_io.hpp"

namespace rcsim {

namespace {

struct Scenario {
    Topology topology;
    ProtocolSpec protocol;
    std::optional<std::vector<Rat>> distribution;
    long long cap;

    const std::vector<Rat>* dist() const { return distribution ? &*distribution : nullptr; }
};

Scenario load_scenario(const nlohmann::json& config, long long cap) {
    Scenario s{topology_from_json(config.at("topology")), {}, {}, cap};
    if (!check_two_vertex_connected(s.topology))
        throw Error("config-invalid", "topology is not 2-vertex-connected");
    ProtocolOptions opts;
    opts.deterministic = config.value("deterministic", false);
    if (config.contains("distribution")) {
        std::vector<Rat> dist;
        for (const auto& v : config.at("distribution")) dist.push_back(Rat::parse(v.get<std::string>()));
        Rat total(0);
        for (const auto& p : dist) total += p;
        if (total != Rat(1)) throw Error("config-invalid", "distribution must sum to 1");
        s.distribution = dist;
        opts.input_prior = dist;
    }
    s.protocol = make_protocol_by_name(config.at("protocol").get<std::string>(), s.topology,
                                       config.value("r", 2), opts);
    s.cap = config.value("cap", cap);
    return s;
}

void write_file(const std::string& out_dir, const std::string& name, const std::string& body) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir + "/" + name);
    f << body;
}

void write_report(const std::string& out_dir, const std::string& name,
                  const nlohmann::json& report) {
    write_file(out_dir, name, report.dump(2) + "\n");
}

std::set<AgentId> coalition_of(const nlohmann::json& config) {
    std::set<AgentId> c;
    for (const auto& a : config.at("coalition")) c.insert(a.get<int>());
    return c;
}

CommandResult config_error(const std::string& what) {
    CommandResult r;
    r.exit_code = 2;
    r.report = {{"error", what}};
    std::cerr << "error: " << what << "\n";
    return r;
}

}  // namespace

CommandResult cmd_run(const nlohmann::json& config, const std::string& out_dir, long long cap,
                      std::optional<unsigned long long> seed) {
    CommandResult result;
    try {
        Scenario s = load_scenario(config, cap);
        std::vector<Enumerated> runs;
        bool sampled = false;
        try {
            runs = enumerate_executions(s.protocol, s.topology, s.dist(), s.cap);
        } catch (const Error& e) {
            if (e.code() != "enumeration-cap-exceeded" || !seed) throw;
            runs = sample_executions(s.protocol, s.topology, s.dist(),
                                     config.value("samples", 1000), *seed);
            sampled = true;
        }

        std::string jsonl;
        std::map<std::string, long long> outcomes;
        std::map<std::string, Rat> decision_dist;
        Rat legal_mass(0);
        for (const auto& e : runs) {
            jsonl += trace_to_jsonl(e.trace);
            outcomes[to_string(classify_outcome(e.trace))]++;
            Rat w = sampled ? Rat(1, static_cast<long long>(runs.size())) : e.probability;
            bool agree = true;
            bool bot = false;
            for (const auto& d : e.trace.decisions) {
                if (d.kind == DecisionKind::bot) bot = true;
                if (d != e.trace.decisions.front()) agree = false;
            }
            if (bot)
                decision_dist["BOT"] += w;
            else if (!agree)
                decision_dist["disagree"] += w;
            else
                decision_dist[std::to_string(e.trace.decisions.front().value)] += w;
        }

        nlohmann::json dist_json = nlohmann::json::object();
        for (const auto& [k, v] : decision_dist) dist_json[k] = v.str();
        nlohmann::json outcomes_json = nlohmann::json::object();
        for (const auto& [k, v] : outcomes) outcomes_json[k] = v;
        result.report = {{"protocol", s.protocol.name},
                         {"runs", runs.size()},
                         {"sampled", sampled},
                         {"outcomes", outcomes_json},
                         {"decision_dist", dist_json}};
        write_file(out_dir, "traces.jsonl", jsonl);
        write_report(out_dir, "summary.json", result.report);

        bool ok = true;
        if (config.contains("expect")) {
            const auto& expect = config["expect"];
            if (expect.value("all_legal", false))
                ok = ok && outcomes.size() == 1 && outcomes.count("legal") > 0;
            if (expect.value("erroneous_validity", false))
                ok = ok && outcomes.count("erroneous(validity)") > 0;
            if (expect.contains("decision_prob")) {
                std::string key = expect["decision_prob"].at("value").is_string()
                                      ? expect["decision_prob"]["value"].get<std::string>()
                                      : std::to_string(expect["decision_prob"]["value"].get<int>());
                ok = ok && decision_dist.count(key) &&
                     decision_dist[key] == Rat::parse(expect["decision_prob"].at("prob"));
            }
        }
        result.exit_code = ok ? 0 : 1;
    } catch (const Error& e) {
        return config_error(e.what());
    }
    return result;
}

CommandResult cmd_equilibrium(const nlohmann::json& config, const std::string& out_dir,
                              long long cap) {
    CommandResult result;
    try {
        Scenario s = load_scenario(config, cap);
        auto coalition = coalition_of(config);
        int prefer = config.at("utility").at("prefer").get<int>();
        UtilityFunction u = make_preference_utility(prefer, s.protocol.r);
        nlohmann::json space = config.value("space", nlohmann::json{{"family", "catalog"}});
        EquilibriumReport rep =
            find_profitable_deviation(s.protocol, s.topology, coalition, space, u, s.dist(), s.cap);
        result.report = rep.to_json();
        write_report(out_dir, "equilibrium.json", result.report);

        std::string expect = config.value("expect", "");
        bool ok = true;
        if (expect == "equilibrium") ok = !rep.deviation_found();
        if (expect == "deviation") ok = rep.deviation_found();
        if (config.contains("expect_best_eu"))
            ok = ok && rep.best_eu == Rat::parse(config["expect_best_eu"].get<std::string>());
        result.exit_code = ok ? 0 : 1;
    } catch (const Error& e) {
        return config_error(e.what());
    }
    return result;
}

CommandResult cmd_verify(const nlohmann::json& config, const std::string& out_dir,
                         long long cap) {
    CommandResult result;
    try {
        Scenario s = load_scenario(config, cap);
        std::string check = config.at("check").get<std::string>();
        std::string expect = config.value("expect", "pass");
        bool ok = false;

        if (check == "encoding") {
            std::optional<MessageFilter> lossy;
            if (config.contains("lossy")) {
                int src = config["lossy"].value("drop_src", -1);
                int round = config["lossy"].value("drop_round", -1);
                lossy = [src, round](const MessageRecord& m) {
                    return !(m.src == src && m.round == round);
                };
            }
            EncodingReport rep = verify_input_encoding(s.protocol, s.topology, s.dist(), s.cap,
                                                       lossy ? &*lossy : nullptr);
            result.report = rep.to_json();
            ok = expect == "fail" ? !rep.pass : rep.pass;
        } else if (check == "ris-resilience") {
            RisReport rep = verify_ris_resilience(s.protocol, s.topology, s.dist(), s.cap);
            result.report = rep.to_json();
            ok = expect == "fail" ? !rep.pass() : rep.pass();
        } else if (check == "silences") {
            ProtocolSpec p = s.protocol;
            if (config.value("rewrite", false)) p = rewrite_with_empty(p);
            auto flags = detect_informative_silences(p, s.topology, s.dist(), s.cap);
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& f : flags)
                arr.push_back({{"observer", f.i}, {"silent_neighbor", f.j}, {"round", f.round}});
            result.report = {{"flags", arr}, {"count", flags.size()}};
            ok = expect == "flagged" ? !flags.empty() : flags.empty();
        } else if (check == "uniformity") {
            // every conditional output distribution equals (1/r, ..., 1/r)
            ok = true;
            nlohmann::json details = nlohmann::json::array();
            for (AgentId i : s.topology.agents) {
                std::vector<int> claim(s.topology.n - 1, 0);
                while (true) {
                    auto dist = conditional_output_distribution(s.protocol, s.topology, i, claim,
                                                                s.dist(), s.cap);
                    for (int v = 0; v < s.protocol.r; v++)
                        if (dist[std::to_string(v)] != Rat(1, s.protocol.r)) ok = false;
                    int k = s.topology.n - 2;
                    for (; k >= 0; k--) {
                        if (++claim[k] < s.protocol.r) break;
                        claim[k] = 0;
                    }
                    if (k < 0) break;
                }
            }
            result.report = {{"uniform", ok}};
        } else if (check == "transform") {
            ProtocolSpec transformed = ris_transform(s.protocol, s.topology);
            ok = true;
            long long decoded = 0;
            for (const auto& e : enumerate_executions(s.protocol, s.topology, s.dist(), s.cap)) {
                Trace wrapped = execute(transformed, s.topology, e.inputs, e.randomness);
                if (!traces_equal(strip_piggyback(wrapped), e.trace)) ok = false;
                for (AgentId a : s.topology.agents) {
                    auto buffer = piggyback_buffer(wrapped, a);
                    auto recovered = decode_inputs(e.inputs[a], wrapped.decisions[a], buffer,
                                                   s.protocol, s.topology, a);
                    if (recovered != e.inputs) ok = false;
                    decoded++;
                }
            }
            result.report = {{"pass", ok}, {"decoded", decoded}};
        } else {
            return config_error("unknown check: " + check);
        }

        write_report(out_dir, "verify_" + check + ".json", result.report);
        result.exit_code = ok ? 0 : 1;
    } catch (const Error& e) {
        return config_error(e.what());
    }
    return result;
}

int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_dir, std::optional<long long> cap,
                std::optional<unsigned long long> seed) {
    nlohmann::json config;
    try {
        std::ifstream f(config_path);
        if (!f) {
            std::cerr << "error: cannot open config " << config_path << "\n";
            return 2;
        }
        f >> config;
    } catch (const std::exception& e) {
        std::cerr << "error: bad config: " << e.what() << "\n";
        return 2;
    }
    long long effective_cap = cap.value_or(4'000'000LL);
    CommandResult result;
    if (command == "run")
        result = cmd_run(config, out_dir, effective_cap, seed);
    else if (command == "equilibrium")
        result = cmd_equilibrium(config, out_dir, effective_cap);
    else if (command == "verify")
        result = cmd_verify(config, out_dir, effective_cap);
    else {
        std::cerr << "error: unknown command " << command << "\n";
        return 2;
    }
    std::cout << result.report.dump(2) << "\n";
    return result.exit_code;
}

}  // namespace rcsim
