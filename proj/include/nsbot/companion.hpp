#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "nsbot/dialog_state.hpp"
#include "nsbot/ontology.hpp"
#include "nsbot/rcc.hpp"

namespace nsbot::companion {

/// The bot's chosen talking point for one turn, or the end of the chat.
struct NextBlock {
    bool quit = false;
    rcc::NextMove move;  // unset when quit

    /// `talk(...). attitude(...).` or `quit.`
    PredicateSet predicates() const;
};

struct StepResult {
    DialogState state;
    NextBlock next;
    /// Entity the user mentioned that the graph does not know, if any.
    std::optional<std::string> gap;
};

/// Binds the concept graph and aspect catalogs into the Themes/Next protocol.
class Companion {
public:
    /// Throws OntologyError when a graph category has no aspect catalog.
    Companion(const Ontology& onto, const rcc::ConceptGraph& graph, rcc::RccConfig config = {});

    const Ontology& ontology() const { return *onto_; }
    const rcc::ConceptGraph& graph() const { return *graph_; }
    const rcc::RccConfig& config() const { return config_; }

    /// Opening move of a fresh session (jump to the graph's root).
    StepResult open(const DialogState& state, rcc::Rng& rng) const;

    /// Merges the user's Themes and picks the next move. Throws StateClosed or
    /// ValidationFailed; unknown entities fall back to the previous concept.
    StepResult step(const DialogState& state, const PredicateSet& themes, rcc::Rng& rng,
                    std::string_view utterance = {}) const;

    /// Supporting facts for the realizer: snippet, and for jumps the source
    /// concept and bridging person.
    PredicateSet knowledge_for(const NextBlock& next, bool opening) const;

private:
    const Ontology* onto_;
    const rcc::ConceptGraph* graph_;
    rcc::RccConfig config_;
};

} // namespace nsbot::companion
