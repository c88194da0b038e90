#pragma once

#include <string>
#include <string_view>

#include "nsbot/ckt.hpp"
#include "nsbot/companion.hpp"
#include "nsbot/concierge.hpp"
#include "nsbot/dialog_state.hpp"
#include "nsbot/rcc.hpp"

namespace nsbot {

/// What the reasoner decided for one bot turn.
struct Decision {
    DialogState state;
    /// Instruction predicates for the realizer (the Next block for companion).
    PredicateSet action;
    /// Supporting facts for the realizer.
    PredicateSet knowledge;
    std::string kind;
};

/// The symbolic half of a bot: pure functions of state, input and rng.
class TaskEngine {
public:
    virtual ~TaskEngine() = default;
    virtual std::string_view task() const = 0;
    virtual const Ontology& ontology() const = 0;
    /// Style used for this task's predicate blocks in transcripts.
    virtual SerializeStyle style() const = 0;
    /// The bot's first turn of a fresh session.
    virtual Decision open(const DialogState& state, rcc::Rng& rng) const = 0;
    /// One user turn. Throws StateClosed or ValidationFailed.
    virtual Decision step(const DialogState& state, const PredicateSet& preds, std::string_view utterance,
                          rcc::Rng& rng) const = 0;
};

class ConciergeEngine : public TaskEngine {
public:
    /// Throws OntologyError if the ontology cannot drive a concierge template.
    ConciergeEngine(const Ontology& onto, const concierge::KnowledgeBase& kb);

    std::string_view task() const override { return "concierge"; }
    const Ontology& ontology() const override { return *onto_; }
    SerializeStyle style() const override { return SerializeStyle::Concierge; }
    const CktSpec& spec() const { return spec_; }

    Decision open(const DialogState& state, rcc::Rng& rng) const override;
    Decision step(const DialogState& state, const PredicateSet& preds, std::string_view utterance,
                  rcc::Rng& rng) const override;

    /// The chosen action, for callers that want the typed form.
    Action decide(const DialogState& state) const;

private:
    const Ontology* onto_;
    const concierge::KnowledgeBase* kb_;
    CktSpec spec_;
};

class CompanionEngine : public TaskEngine {
public:
    explicit CompanionEngine(const companion::Companion& bot) : bot_(&bot) {}

    std::string_view task() const override { return "companion"; }
    const Ontology& ontology() const override { return bot_->ontology(); }
    SerializeStyle style() const override { return SerializeStyle::Companion; }

    Decision open(const DialogState& state, rcc::Rng& rng) const override;
    Decision step(const DialogState& state, const PredicateSet& preds, std::string_view utterance,
                  rcc::Rng& rng) const override;

private:
    const companion::Companion* bot_;
};

} // namespace nsbot
