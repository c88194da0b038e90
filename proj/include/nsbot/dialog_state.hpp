#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nsbot/ontology.hpp"
#include "nsbot/predicate.hpp"

namespace nsbot {

struct SlotConstraint {
    /// Monotone: set by any require/not_require on the slot.
    bool addressed = false;
    /// Values the user asked for; nullopt means no positive constraint yet.
    std::optional<std::set<std::string>> included;
    std::set<std::string> excluded;
    bool query_pending = false;
    /// Constraint predicates that touched this slot, deduplicated.
    std::vector<Predicate> sources;

    friend bool operator==(const SlotConstraint&, const SlotConstraint&) = default;
};

/// Values still admissible for a slot. Closed slots get a concrete set in
/// `allowed` with `excluded` already applied; open slots keep the literal
/// include/exclude lists and compare case-insensitively.
struct Candidates {
    bool open = false;
    std::optional<std::set<std::string>> allowed;
    std::set<std::string> excluded;

    bool admits(std::string_view value) const;
    bool empty() const;

    friend bool operator==(const Candidates&, const Candidates&) = default;
};

struct Turn {
    std::string speaker;  // "user" or "bot"
    std::string text;
    PredicateSet predicates;

    friend bool operator==(const Turn&, const Turn&) = default;
};

/// Companion-side bookkeeping: what is being talked about and what has been
/// covered.
struct TopicState {
    std::optional<std::string> current;
    std::string category;
    std::string aspect;
    /// True when the latest user turn brought up `aspect` on `current` for the
    /// first time this session.
    bool user_opened_aspect = false;
    /// Aspects covered by either side, and the subset the user raised.
    std::map<std::string, std::set<std::string>> discussed;
    std::map<std::string, std::set<std::string>> raised;
    /// Latest user attitude per concept.
    std::map<std::string, std::string> attitude_on;
    std::string last_attitude;
    /// Logical time of the most recent visit per concept.
    std::map<std::string, std::uint64_t> last_visit;
    std::uint64_t clock = 0;
    /// One entry per user turn: the talk/content/attitude/quit predicates.
    std::vector<PredicateSet> themes_log;
    /// One entry per bot move.
    std::vector<PredicateSet> next_log;

    bool visited(const std::string& id) const { return last_visit.count(id) != 0; }
    void visit(const std::string& id) { last_visit[id] = ++clock; }

    friend bool operator==(const TopicState&, const TopicState&) = default;
};

/// Value type; update() returns a new state.
struct DialogState {
    std::string session_id;
    int turn_index = 0;
    std::map<std::string, SlotConstraint> slots;
    std::vector<std::string> pending_queries;
    bool quit = false;
    /// Deduplicated require/not_require/quit predicates in first-mention order:
    /// the running predicate state shown after each user turn.
    PredicateSet facts;
    /// Entity the bot last recommended or described.
    std::optional<std::string> focus;
    std::vector<Turn> history;
    TopicState topic;

    friend bool operator==(const DialogState&, const DialogState&) = default;
};

class StateClosed : public Error {
public:
    StateClosed() : Error("dialog already ended") {}
};

class ValidationFailed : public Error {
public:
    explicit ValidationFailed(ValidationReport report)
        : Error("predicates failed validation:\n" + report.describe()), report_(std::move(report)) {}
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

/// Merges one user turn. Throws StateClosed or ValidationFailed.
DialogState update(const DialogState& state, const PredicateSet& preds, const Ontology& onto,
                   std::string_view utterance = {});

/// Throws UnknownSlot.
Candidates candidates(const DialogState& state, std::string_view slot, const Ontology& onto);

/// Appends a bot turn to the history.
DialogState record_bot_turn(const DialogState& state, std::string text, PredicateSet preds);

/// Case-insensitive ASCII equality used for open-slot matching.
bool iequals(std::string_view a, std::string_view b);

} // namespace nsbot
