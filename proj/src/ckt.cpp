#include "nsbot/ckt.hpp"

#include <algorithm>

namespace nsbot {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_constrained(const SlotConstraint& c) { return c.included.has_value() || !c.excluded.empty(); }

std::string relaxation_hint(const DialogState& state, const Ontology& onto, const EntitySource& kb) {
    std::string best;
    std::size_t best_count = 0;
    for (const auto& schema : onto.slots()) {
        auto it = state.slots.find(schema.name);
        if (it == state.slots.end() || !is_constrained(it->second)) continue;
        DialogState relaxed = state;
        auto& c = relaxed.slots[schema.name];
        c.included.reset();
        c.excluded.clear();
        auto count = kb.matches(relaxed, onto).size();
        // Later slots win ties: they were asked last and matter least.
        if (best.empty() || count >= best_count) {
            best = schema.name;
            best_count = count;
        }
    }
    return best;
}

} // namespace

std::optional<std::string> Entity::attribute(std::string_view slot) const {
    if (slot == "name") return name;
    auto it = attributes.find(std::string(slot));
    if (it == attributes.end() || it->second.empty()) return std::nullopt;
    return it->second;
}

CktSpec CktSpec::from_ontology(const Ontology& onto, std::string result_slot, std::string rank_slot) {
    for (const char* f : {"require", "not_require", "quit"}) {
        if (onto.find_functor(f) == nullptr) {
            throw OntologyError("task '" + onto.task_name() + "' lacks functor '" + f + "'");
        }
    }
    if (onto.find_slot(result_slot) == nullptr) throw OntologyError("unknown result slot '" + result_slot + "'");
    const auto* rank = onto.find_slot(rank_slot);
    if (rank == nullptr || rank->is_open()) throw OntologyError("rank slot must be a closed slot");
    CktSpec spec;
    for (const auto* s : onto.required_slots()) spec.required.push_back(s->name);
    spec.result_slot = std::move(result_slot);
    spec.rank_slot = std::move(rank_slot);
    return spec;
}

std::string_view action_kind(const Action& action) {
    return std::visit(Overloaded{
                          [](const AskSlot&) { return std::string_view("AskSlot"); },
                          [](const Recommend&) { return std::string_view("Recommend"); },
                          [](const AnswerQuery&) { return std::string_view("AnswerQuery"); },
                          [](const ReportNone&) { return std::string_view("ReportNone"); },
                          [](const Clarify&) { return std::string_view("Clarify"); },
                          [](const Farewell&) { return std::string_view("Farewell"); },
                      },
                      action);
}

PredicateSet action_predicates(const Action& action) {
    return std::visit(
        Overloaded{
            [](const AskSlot& a) { return PredicateSet{make_predicate("ask", {atom(a.slot)})}; },
            [](const Recommend& a) {
                PredicateSet out{make_predicate("recommend", {atom(a.entity)})};
                for (const auto& [slot, value] : a.facts) {
                    out.push_back(make_predicate("has", {atom(a.entity), atom(slot), atom(value)}));
                }
                return out;
            },
            [](const AnswerQuery& a) {
                if (!a.value) return PredicateSet{make_predicate("no_answer", {atom(a.entity), atom(a.slot)})};
                return PredicateSet{make_predicate("answer", {atom(a.entity), atom(a.slot), atom(*a.value)})};
            },
            [](const ReportNone& a) {
                PredicateSet out{make_predicate("report_none")};
                if (!a.relax_slot.empty()) out.push_back(make_predicate("relax", {atom(a.relax_slot)}));
                return out;
            },
            [](const Clarify& a) {
                PredicateSet out;
                for (const auto& c : a.conflicts) out.push_back(make_predicate("clarify", {atom(c.slot)}));
                return out;
            },
            [](const Farewell&) { return PredicateSet{make_predicate("farewell")}; },
        },
        action);
}

std::vector<std::string> check_completeness(const CktSpec& spec, const DialogState& state) {
    std::vector<std::string> missing;
    for (const auto& slot : spec.required) {
        auto it = state.slots.find(slot);
        if (it == state.slots.end() || !it->second.addressed) missing.push_back(slot);
    }
    return missing;
}

std::vector<Conflict> check_consistency(const DialogState& state, const Ontology& onto) {
    std::vector<Conflict> out;
    for (const auto& schema : onto.slots()) {
        if (schema.is_open()) continue;
        auto it = state.slots.find(schema.name);
        if (it == state.slots.end()) continue;
        if (candidates(state, schema.name, onto).empty()) out.push_back({schema.name, it->second.sources});
    }
    return out;
}

Action next_action(const CktSpec& spec, const DialogState& state, const Ontology& onto,
                   const EntitySource& kb) {
    if (state.quit) return Farewell{};

    auto conflicts = check_consistency(state, onto);
    if (!conflicts.empty()) return Clarify{std::move(conflicts)};

    if (state.focus) {
        for (const auto& slot : state.pending_queries) {
            if (slot == spec.result_slot) continue;
            auto entity = kb.find(*state.focus);
            if (!entity) break;
            return AnswerQuery{entity->name, slot, entity->attribute(slot)};
        }
    }

    auto missing = check_completeness(spec, state);
    if (!missing.empty()) return AskSlot{missing.front()};

    auto found = kb.matches(state, onto);
    if (found.empty()) return ReportNone{relaxation_hint(state, onto, kb)};

    const auto& top = found.front();
    Recommend rec{top.name, {}};
    for (const auto& slot : spec.required) {
        if (auto v = top.attribute(slot)) rec.facts.emplace_back(slot, *v);
    }
    return rec;
}

DialogState apply_action(const CktSpec& spec, const DialogState& state, const Action& action) {
    DialogState next = state;
    auto consume = [&](const std::string& slot) {
        auto& q = next.pending_queries;
        q.erase(std::remove(q.begin(), q.end(), slot), q.end());
        if (auto it = next.slots.find(slot); it != next.slots.end()) it->second.query_pending = false;
    };
    std::visit(Overloaded{
                   [&](const Recommend& a) {
                       next.focus = a.entity;
                       consume(spec.result_slot);
                   },
                   [&](const AnswerQuery& a) { consume(a.slot); },
                   [&](const Clarify& a) {
                       for (const auto& c : a.conflicts) {
                           next.slots.erase(c.slot);
                           auto& f = next.facts;
                           f.erase(std::remove_if(f.begin(), f.end(),
                                                  [&](const Predicate& p) {
                                                      return p.arity() == 2 && p.args[0].is_atom() &&
                                                             p.args[0].text() == c.slot;
                                                  }),
                                   f.end());
                       }
                   },
                   [](const auto&) {},
               },
               action);
    return next;
}

bool ranks_before(const Entity& a, const Entity& b, const Ontology& onto, std::string_view rank_slot) {
    auto rank = [&](const Entity& e) -> long {
        auto v = e.attribute(rank_slot);
        if (!v) return -1;
        auto r = onto.domain_rank(rank_slot, *v);
        return r ? static_cast<long>(*r) : -1;
    };
    long ra = rank(a);
    long rb = rank(b);
    if (ra != rb) return ra > rb;
    return a.name < b.name;
}

} // namespace nsbot
