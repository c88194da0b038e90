#pragma once

#include <filesystem>
#include <string>

#include "nsbot/nl_interface.hpp"

namespace nsbot {

/// Runtime settings shared by the CLI and the service.
struct AppConfig {
    /// Root holding ontology/, kb/, graph/, mock/ and e2e/.
    std::filesystem::path data_dir;
    /// Overrides data_dir/kb/restaurants.csv when set.
    std::filesystem::path kb;
    /// Overrides data_dir/graph/movies.yaml when set.
    std::filesystem::path graph;
    nl::BackendConfig live;
    double p_jump = 0.35;
    int context_turns = 4;
    std::string concierge_persona = "a friendly restaurant concierge";
    std::string companion_persona = "an enthusiastic movie and book buff";

    std::filesystem::path kb_path() const;
    std::filesystem::path graph_path() const;
    std::filesystem::path ontology_path(const std::string& task) const;
    std::filesystem::path mock_path(const std::string& task) const;
};

/// Defaults: data directory from the build, live backend pointed at an
/// OpenAI-compatible endpoint with the key in NSBOT_API_KEY.
AppConfig default_config();

/// Reads a YAML config over the defaults. Relative paths resolve against the
/// file's directory. A credential in the file is rejected. Throws Error.
AppConfig load_config(const std::filesystem::path& path);
AppConfig config_from_yaml(std::string_view text, const std::filesystem::path& base = {});

} // namespace nsbot
