#include "nsbot/config.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#ifndef NSBOT_DEFAULT_DATA_DIR
#define NSBOT_DEFAULT_DATA_DIR "data"
#endif

namespace nsbot {

std::filesystem::path AppConfig::kb_path() const {
    return kb.empty() ? data_dir / "kb" / "restaurants.csv" : kb;
}

std::filesystem::path AppConfig::graph_path() const {
    return graph.empty() ? data_dir / "graph" / "movies.yaml" : graph;
}

std::filesystem::path AppConfig::ontology_path(const std::string& task) const {
    return data_dir / "ontology" / (task + ".yaml");
}

std::filesystem::path AppConfig::mock_path(const std::string& task) const {
    return data_dir / "mock" / (task + ".yaml");
}

AppConfig default_config() {
    AppConfig c;
    c.data_dir = NSBOT_DEFAULT_DATA_DIR;
    c.live.kind = nl::BackendConfig::Kind::Live;
    c.live.endpoint = "https://api.openai.com/v1/chat/completions";
    c.live.model = "gpt-4";
    c.live.credential_env = "NSBOT_API_KEY";
    return c;
}

AppConfig config_from_yaml(std::string_view text, const std::filesystem::path& base) {
    AppConfig c = default_config();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base.empty() ? base / path : path;
    };
    try {
        YAML::Node root = YAML::Load(std::string(text));
        if (!root || root.IsNull()) return c;
        if (!root.IsMap()) throw Error("config: expected a mapping at top level");
        for (const char* forbidden : {"api_key", "credential", "token"}) {
            if (root[forbidden] || (root["live"] && root["live"][forbidden])) {
                throw Error(std::string("config: '") + forbidden +
                            "' is not accepted; put the key in the environment and name the variable in "
                            "live.credential_env");
            }
        }
        if (root["data_dir"]) c.data_dir = resolve(root["data_dir"].as<std::string>());
        if (root["kb"]) c.kb = resolve(root["kb"].as<std::string>());
        if (root["graph"]) c.graph = resolve(root["graph"].as<std::string>());
        if (root["context_turns"]) c.context_turns = root["context_turns"].as<int>();
        if (auto live = root["live"]) {
            if (live["endpoint"]) c.live.endpoint = live["endpoint"].as<std::string>();
            if (live["model"]) c.live.model = live["model"].as<std::string>();
            if (live["credential_env"]) c.live.credential_env = live["credential_env"].as<std::string>();
            if (live["timeout_ms"]) c.live.timeout = std::chrono::milliseconds(live["timeout_ms"].as<long>());
            if (live["max_retries"]) c.live.max_retries = live["max_retries"].as<int>();
        }
        if (auto comp = root["companion"]) {
            if (comp["p_jump"]) c.p_jump = comp["p_jump"].as<double>();
            if (comp["persona"]) c.companion_persona = comp["persona"].as<std::string>();
        }
        if (auto conc = root["concierge"]) {
            if (conc["persona"]) c.concierge_persona = conc["persona"].as<std::string>();
        }
    } catch (const YAML::Exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    if (c.p_jump < 0.0 || c.p_jump > 1.0) throw Error("config: companion.p_jump must lie in [0, 1]");
    if (c.context_turns < 0) throw Error("config: context_turns must be non-negative");
    if (c.live.timeout.count() <= 0) throw Error("config: live.timeout_ms must be positive");
    if (c.live.max_retries < 0) throw Error("config: live.max_retries must be non-negative");
    return c;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_yaml(buf.str(), path.parent_path());
}

} // namespace nsbot
