#include "nsbot/pipeline.hpp"

namespace nsbot {

ConciergeEngine::ConciergeEngine(const Ontology& onto, const concierge::KnowledgeBase& kb)
    : onto_(&onto), kb_(&kb), spec_(CktSpec::from_ontology(onto, "name", "customer rating")) {}

Action ConciergeEngine::decide(const DialogState& state) const { return next_action(spec_, state, *onto_, *kb_); }

Decision ConciergeEngine::open(const DialogState& state, rcc::Rng&) const {
    return {state, {make_predicate("greet")}, {}, "Greet"};
}

Decision ConciergeEngine::step(const DialogState& state, const PredicateSet& preds, std::string_view utterance,
                               rcc::Rng&) const {
    auto merged = update(state, preds, *onto_, utterance);
    auto action = decide(merged);
    Decision out;
    out.state = apply_action(spec_, merged, action);
    out.action = action_predicates(action);
    out.kind = std::string(action_kind(action));
    return out;
}

Decision CompanionEngine::open(const DialogState& state, rcc::Rng& rng) const {
    auto r = bot_->open(state, rng);
    return {std::move(r.state), r.next.predicates(), bot_->knowledge_for(r.next, true), "Open"};
}

Decision CompanionEngine::step(const DialogState& state, const PredicateSet& preds, std::string_view utterance,
                               rcc::Rng& rng) const {
    auto r = bot_->step(state, preds, rng, utterance);
    Decision out;
    out.action = r.next.predicates();
    out.knowledge = bot_->knowledge_for(r.next, false);
    out.kind = r.next.quit ? "Quit" : std::string(rcc::to_string(r.next.move.kind));
    out.state = std::move(r.state);
    return out;
}

} // namespace nsbot
