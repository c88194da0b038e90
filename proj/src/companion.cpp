#include "nsbot/companion.hpp"

#include <spdlog/spdlog.h>

namespace nsbot::companion {

PredicateSet NextBlock::predicates() const {
    if (quit) return {make_predicate("quit")};
    return rcc::next_block(move);
}

Companion::Companion(const Ontology& onto, const rcc::ConceptGraph& graph, rcc::RccConfig config)
    : onto_(&onto), graph_(&graph), config_(config) {
    for (const auto& [id, node] : graph.concepts()) {
        if (onto.aspects_for(node.category) == nullptr) {
            throw OntologyError("no aspect catalog for category '" + node.category + "' of '" + id + "'");
        }
    }
}

StepResult Companion::open(const DialogState& state, rcc::Rng& rng) const {
    StepResult out{state, {}, std::nullopt};
    out.next.move = rcc::next_move(*graph_, out.state.topic, rng, config_, *onto_);
    out.state.topic = rcc::apply_move(out.state.topic, out.next.move);
    return out;
}

StepResult Companion::step(const DialogState& state, const PredicateSet& themes, rcc::Rng& rng,
                           std::string_view utterance) const {
    StepResult out{update(state, themes, *onto_, utterance), {}, std::nullopt};
    auto& topic = out.state.topic;

    if (out.state.quit) {
        out.next.quit = true;
        topic.next_log.push_back(out.next.predicates());
        return out;
    }

    if (topic.current && graph_->find(*topic.current) == nullptr) {
        out.gap = *topic.current;
        spdlog::warn("companion: '{}' is not in the concept graph; staying on the previous topic", *topic.current);
        topic.current = state.topic.current;
        topic.category = state.topic.category;
        topic.aspect = state.topic.aspect;
        topic.user_opened_aspect = false;
    }

    out.next.move = rcc::next_move(*graph_, topic, rng, config_, *onto_);
    topic = rcc::apply_move(topic, out.next.move);
    return out;
}

PredicateSet Companion::knowledge_for(const NextBlock& next, bool opening) const {
    PredicateSet out;
    if (opening) out.push_back(make_predicate("greet"));
    if (next.quit) return out;
    const auto& move = next.move;
    if (move.kind == rcc::MoveKind::JumpTopic && !move.from.empty()) {
        out.push_back(make_predicate("recall", {atom(move.from)}));
        if (!move.via.empty()) out.push_back(make_predicate("via", {atom(move.via), atom(move.via_relation)}));
    }
    if (const auto* node = graph_->find(move.subject)) {
        auto it = node->snippets.find(move.aspect);
        if (it != node->snippets.end()) out.push_back(make_predicate("snippet", {atom(move.aspect), atom(it->second)}));
    }
    return out;
}

} // namespace nsbot::companion
