#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "nsbot/dialog_state.hpp"
#include "nsbot/ontology.hpp"
#include "nsbot/predicate.hpp"

namespace nsbot {

/// A record the reasoner can recommend: a name plus slot-keyed attributes.
struct Entity {
    std::string name;
    std::map<std::string, std::string> attributes;

    std::optional<std::string> attribute(std::string_view slot) const;
};

/// What the engine needs from a knowledge base.
class EntitySource {
public:
    virtual ~EntitySource() = default;
    /// Entities satisfying every constraint in `state`, best first.
    virtual std::vector<Entity> matches(const DialogState& state, const Ontology& onto) const = 0;
    virtual std::optional<Entity> find(std::string_view name) const = 0;
};

/// Conversational knowledge template for a slot-filling task.
struct CktSpec {
    std::vector<std::string> required;  // priority order
    std::string result_slot;            // the slot a recommendation answers, e.g. "name"
    std::string rank_slot;              // closed slot whose higher values rank first
    std::string policy = "ask-then-recommend";

    /// Throws OntologyError if the ontology lacks require/not_require/quit or
    /// the named slots.
    static CktSpec from_ontology(const Ontology& onto, std::string result_slot, std::string rank_slot);
};

struct AskSlot {
    std::string slot;
    friend bool operator==(const AskSlot&, const AskSlot&) = default;
};
struct Recommend {
    std::string entity;
    std::vector<std::pair<std::string, std::string>> facts;
    friend bool operator==(const Recommend&, const Recommend&) = default;
};
struct AnswerQuery {
    std::string entity;
    std::string slot;
    std::optional<std::string> value;  // nullopt: the record lacks the attribute
    friend bool operator==(const AnswerQuery&, const AnswerQuery&) = default;
};
struct ReportNone {
    std::string relax_slot;  // empty when nothing is constrained
    friend bool operator==(const ReportNone&, const ReportNone&) = default;
};
struct Conflict {
    std::string slot;
    std::vector<Predicate> sources;
    friend bool operator==(const Conflict&, const Conflict&) = default;
};
struct Clarify {
    std::vector<Conflict> conflicts;
    friend bool operator==(const Clarify&, const Clarify&) = default;
};
struct Farewell {
    friend bool operator==(const Farewell&, const Farewell&) = default;
};

using Action = std::variant<AskSlot, Recommend, AnswerQuery, ReportNone, Clarify, Farewell>;

std::string_view action_kind(const Action& action);

/// The action as predicates: ask('price range'), or recommend('Southern Recipes Grill')
/// followed by one has(entity, slot, value) per fact.
PredicateSet action_predicates(const Action& action);

/// Required slots not yet addressed, in priority order.
std::vector<std::string> check_completeness(const CktSpec& spec, const DialogState& state);

/// One conflict per closed slot whose candidate set is empty.
std::vector<Conflict> check_consistency(const DialogState& state, const Ontology& onto);

/// Precedence: Farewell, Clarify, AnswerQuery, AskSlot, Recommend/ReportNone.
Action next_action(const CktSpec& spec, const DialogState& state, const Ontology& onto,
                   const EntitySource& kb);

/// Bookkeeping after an action is delivered: Recommend puts the entity in
/// focus, AnswerQuery consumes the query, Clarify resets the conflicting slots.
DialogState apply_action(const CktSpec& spec, const DialogState& state, const Action& action);

/// Ranking used for recommendations: higher `rank_slot` value first, then name.
bool ranks_before(const Entity& a, const Entity& b, const Ontology& onto, std::string_view rank_slot);

} // namespace nsbot
