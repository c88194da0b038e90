#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nsbot/companion.hpp"
#include "nsbot/concierge.hpp"
#include "nsbot/config.hpp"
#include "nsbot/nl_interface.hpp"
#include "nsbot/pipeline.hpp"
#include "nsbot/rcc.hpp"

namespace nsbot::service {

class BadTask : public Error {
public:
    explicit BadTask(std::string_view what) : Error(std::string(what)) {}
};

class UnknownSession : public Error {
public:
    explicit UnknownSession(std::string_view id) : Error("no session '" + std::string(id) + "'") {}
};

/// Structured snapshot of a dialog state plus the generator position. Never
/// contains the session id or timestamps, so equal histories give equal
/// snapshots.
nlohmann::json snapshot(const DialogState& state, const rcc::Rng& rng, std::string_view task);

/// Lower-case hex SHA-256 of the compact snapshot text.
std::string digest(const DialogState& state, const rcc::Rng& rng, std::string_view task);

std::string sha256_hex(std::string_view data);

struct TurnResponse {
    std::string reply;
    /// The user's turn as predicates (empty for the opening turn).
    PredicateSet themes;
    PredicateSet action;
    PredicateSet knowledge;
    std::string action_kind;
    std::string digest;
    bool closed = false;
    int turn = 0;
};

struct TranscriptEntry {
    std::string speaker;  // "user" or "bot"
    std::string text;
    PredicateSet predicates;
    std::string action_kind;  // bot only
    std::string at;
};

struct SessionInfo {
    std::string id;
    std::string task;
    std::string backend;
    std::uint64_t seed = 0;
    std::string created;
    std::string updated;
};

/// Builds the language backend for (task, kind). The default loads the mock
/// table from the data directory or constructs a live client.
using BackendFactory = std::function<std::shared_ptr<nl::Backend>(const std::string& task, const std::string& kind)>;

class Service {
public:
    struct Options {
        AppConfig config = default_config();
        /// Event logs live here; empty keeps sessions in memory only.
        std::filesystem::path store_dir;
        BackendFactory backends;
    };

    /// Loads ontologies, knowledge base and graph. Throws Error on bad data.
    explicit Service(Options options);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Throws BadTask or nl::BackendUnavailable.
    std::pair<SessionInfo, TurnResponse> create_session(const std::string& task, const std::string& backend,
                                                        std::optional<std::uint64_t> seed = std::nullopt);

    /// Runs understand, update, decide, realize once and persists the turn
    /// before returning. Throws UnknownSession, StateClosed and backend errors.
    TurnResponse post_message(const std::string& id, std::string_view text);

    SessionInfo info(const std::string& id) const;
    std::vector<TranscriptEntry> transcript(const std::string& id) const;
    nlohmann::json state(const std::string& id) const;
    std::string state_digest(const std::string& id) const;
    std::vector<std::string> session_ids() const;
    std::size_t session_count() const;

    /// Rebuilds every session found in the store directory by replaying its
    /// event log; no backend calls are made. Returns the number loaded.
    std::size_t recover();

    const TaskEngine& engine(const std::string& task) const;
    const AppConfig& config() const { return options_.config; }

private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id) const;
    std::shared_ptr<nl::NlInterface> language(Session& s);
    std::shared_ptr<Session> replay(const std::filesystem::path& log);
    void append(const Session& s, const nlohmann::json& event) const;

    Options options_;
    std::map<std::string, std::unique_ptr<Ontology>> ontologies_;
    concierge::KnowledgeBase kb_;
    rcc::ConceptGraph graph_;
    std::unique_ptr<companion::Companion> companion_;
    std::map<std::string, std::unique_ptr<TaskEngine>> engines_;

    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, std::shared_ptr<nl::Backend>> backend_cache_;
};

nlohmann::json to_json(const TurnResponse& r, SerializeStyle style);
nlohmann::json to_json(const TranscriptEntry& e, SerializeStyle style);
nlohmann::json to_json(const SessionInfo& s);

} // namespace nsbot::service
