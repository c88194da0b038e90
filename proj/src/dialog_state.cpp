#include "nsbot/dialog_state.hpp"

#include <algorithm>
#include <cctype>

namespace nsbot {

namespace {

std::vector<std::string> atoms_of(const Value& list) {
    std::vector<std::string> out;
    for (const auto& v : list.items()) out.push_back(v.text());
    return out;
}

void add_unique(PredicateSet& set, const Predicate& p) {
    if (std::find(set.begin(), set.end(), p) == set.end()) set.push_back(p);
}

bool is_topic_functor(std::string_view f) {
    return f == "talk" || f == "content" || f == "attitude" || f == "quit";
}

void merge_constraint(DialogState& st, const Predicate& p, const Ontology& onto) {
    const auto& slot_name = p.args[0].text();
    const auto& schema = onto.slot(slot_name);
    auto values = atoms_of(p.args[1]);
    auto& c = st.slots[slot_name];
    c.addressed = true;
    add_unique(c.sources, p);
    add_unique(st.facts, p);

    if (p.functor == "not_require") {
        c.excluded.insert(values.begin(), values.end());
        return;
    }
    if (values.size() == 1 && values[0] == kQueryValue && schema.queryable) {
        c.query_pending = true;
        if (std::find(st.pending_queries.begin(), st.pending_queries.end(), slot_name) ==
            st.pending_queries.end()) {
            st.pending_queries.push_back(slot_name);
        }
        return;
    }
    std::set<std::string> wanted(values.begin(), values.end());
    if (schema.domain) {
        std::set<std::string> whole(schema.domain->begin(), schema.domain->end());
        // Asking for every value is the "no preference" answer.
        if (wanted == whole) return;
    }
    if (!c.included) {
        c.included = std::move(wanted);
        return;
    }
    std::set<std::string> kept;
    if (schema.domain) {
        std::set_intersection(c.included->begin(), c.included->end(), wanted.begin(), wanted.end(),
                              std::inserter(kept, kept.end()));
    } else {
        for (const auto& v : *c.included) {
            if (std::any_of(wanted.begin(), wanted.end(), [&](const std::string& w) { return iequals(v, w); })) {
                kept.insert(v);
            }
        }
    }
    c.included = std::move(kept);
}

void merge_topic(TopicState& topic, const Predicate& p, std::optional<std::string>& last_entity) {
    if (p.functor == "talk") {
        const auto& category = p.args[0].text();
        const auto& entity = p.args[1].text();
        const auto& aspect = p.args[2].text();
        topic.discussed[entity].insert(aspect);
        topic.user_opened_aspect = topic.raised[entity].insert(aspect).second;
        topic.current = entity;
        topic.category = category;
        topic.aspect = aspect;
        topic.visit(entity);
        last_entity = entity;
    } else if (p.functor == "attitude") {
        const auto& attitude = p.args[0].text();
        topic.last_attitude = attitude;
        if (last_entity) {
            topic.attitude_on[*last_entity] = attitude;
        } else if (topic.current) {
            topic.attitude_on[*topic.current] = attitude;
        }
    }
}

} // namespace

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

bool Candidates::admits(std::string_view value) const {
    if (!open) return allowed->count(std::string(value)) != 0;
    auto match = [&](const std::string& s) { return iequals(s, value); };
    if (allowed && std::none_of(allowed->begin(), allowed->end(), match)) return false;
    return std::none_of(excluded.begin(), excluded.end(), match);
}

bool Candidates::empty() const {
    if (!open) return allowed->empty();
    if (!allowed) return false;
    return std::none_of(allowed->begin(), allowed->end(), [&](const std::string& v) { return admits(v); });
}

DialogState update(const DialogState& state, const PredicateSet& preds, const Ontology& onto,
                   std::string_view utterance) {
    if (state.quit) throw StateClosed();
    auto report = validate(preds, onto);
    if (!report.ok()) throw ValidationFailed(std::move(report));

    DialogState next = state;
    next.turn_index += 1;
    next.history.push_back(Turn{"user", std::string(utterance), preds});
    next.topic.user_opened_aspect = false;

    PredicateSet themes;
    std::optional<std::string> last_entity;
    for (const auto& p : preds) {
        if (p.functor == "require" || p.functor == "not_require") {
            merge_constraint(next, p, onto);
        } else if (p.functor == "quit") {
            next.quit = true;
            add_unique(next.facts, p);
        }
        if (is_topic_functor(p.functor)) {
            themes.push_back(p);
            merge_topic(next.topic, p, last_entity);
        }
    }
    if (!onto.aspects().empty()) next.topic.themes_log.push_back(std::move(themes));
    return next;
}

Candidates candidates(const DialogState& state, std::string_view slot, const Ontology& onto) {
    const auto& schema = onto.slot(slot);
    SlotConstraint none;
    auto it = state.slots.find(std::string(slot));
    const auto& c = it == state.slots.end() ? none : it->second;

    Candidates out;
    if (schema.is_open()) {
        out.open = true;
        out.allowed = c.included;
        out.excluded = c.excluded;
        return out;
    }
    std::set<std::string> base;
    if (c.included) {
        base = *c.included;
    } else {
        base.insert(schema.domain->begin(), schema.domain->end());
    }
    for (const auto& v : c.excluded) base.erase(v);
    out.allowed = std::move(base);
    return out;
}

DialogState record_bot_turn(const DialogState& state, std::string text, PredicateSet preds) {
    DialogState next = state;
    next.history.push_back(Turn{"bot", std::move(text), std::move(preds)});
    return next;
}

} // namespace nsbot
