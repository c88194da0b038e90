#include "nsbot/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace nsbot {

namespace {

ArgSpec parse_arg_spec(const YAML::Node& node) {
    ArgSpec spec;
    if (node.IsMap()) {
        if (!node["one_of"]) throw OntologyError("argument map must contain 'one_of'");
        spec.kind = ArgKind::Enum;
        spec.choices = node["one_of"].as<std::vector<std::string>>();
        if (spec.choices.empty()) throw OntologyError("'one_of' must not be empty");
        return spec;
    }
    static const std::map<std::string, ArgKind, std::less<>> kinds = {
        {"slot", ArgKind::Slot},         {"values", ArgKind::Values},
        {"values_or_query", ArgKind::ValuesOrQuery},
        {"category", ArgKind::Category}, {"aspect", ArgKind::Aspect},
        {"entity", ArgKind::Entity},     {"text", ArgKind::Text},
    };
    auto name = node.as<std::string>();
    auto it = kinds.find(name);
    if (it == kinds.end()) throw OntologyError("unknown argument kind '" + name + "'");
    spec.kind = it->second;
    return spec;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

// Returns the first problem with `pred`, or an OK entry.
ValidationEntry check(const Predicate& pred, const Ontology& onto, Side side) {
    const auto* sig = side == Side::User ? onto.find_functor(pred.functor) : onto.find_action(pred.functor);
    if (sig == nullptr) return {0, Verdict::UnknownFunctor, "unknown functor '" + pred.functor + "'"};
    if (sig->arity() != pred.arity()) {
        return {0, Verdict::ArityMismatch,
                pred.functor + " expects " + std::to_string(sig->arity()) + " arguments, got " +
                    std::to_string(pred.arity())};
    }

    const SlotSchema* slot = nullptr;
    const std::vector<std::string>* catalog = nullptr;
    for (std::size_t i = 0; i < pred.args.size(); ++i) {
        const auto& arg = pred.args[i];
        const auto& spec = sig->args[i];
        auto where = pred.functor + " argument " + std::to_string(i + 1);
        if (spec.kind != ArgKind::Values && spec.kind != ArgKind::ValuesOrQuery && !arg.is_atom()) {
            return {0, Verdict::ValueOutOfDomain, where + " must be an atom"};
        }
        switch (spec.kind) {
            case ArgKind::Slot:
                slot = onto.find_slot(arg.text());
                if (slot == nullptr) return {0, Verdict::UnknownSlot, "unknown slot '" + arg.text() + "'"};
                break;
            case ArgKind::Values:
            case ArgKind::ValuesOrQuery: {
                if (!arg.is_list()) return {0, Verdict::ValueOutOfDomain, where + " must be a list"};
                const auto& items = arg.items();
                bool is_query = items.size() == 1 && items[0].is_atom() && items[0].text() == kQueryValue;
                if (is_query && spec.kind == ArgKind::ValuesOrQuery) {
                    if (slot != nullptr && !slot->queryable) {
                        return {0, Verdict::ValueOutOfDomain, "slot '" + slot->name + "' is not queryable"};
                    }
                    break;
                }
                for (const auto& item : items) {
                    if (!item.is_atom()) return {0, Verdict::ValueOutOfDomain, where + " must hold atoms"};
                    if (slot != nullptr && slot->domain && !contains(*slot->domain, item.text())) {
                        return {0, Verdict::ValueOutOfDomain,
                                "'" + item.text() + "' is not a value of '" + slot->name + "'"};
                    }
                }
                break;
            }
            case ArgKind::Category:
                catalog = onto.aspects_for(arg.text());
                if (catalog == nullptr) {
                    return {0, Verdict::ValueOutOfDomain, "unknown category '" + arg.text() + "'"};
                }
                break;
            case ArgKind::Aspect: {
                bool known = false;
                if (catalog != nullptr) {
                    known = contains(*catalog, arg.text());
                } else {
                    for (const auto& [_, aspects] : onto.aspects()) known = known || contains(aspects, arg.text());
                }
                if (!known) return {0, Verdict::UnknownSlot, "unknown aspect '" + arg.text() + "'"};
                break;
            }
            case ArgKind::Enum:
                if (!contains(spec.choices, arg.text())) {
                    return {0, Verdict::ValueOutOfDomain, "'" + arg.text() + "' not allowed for " + where};
                }
                break;
            case ArgKind::Entity:
            case ArgKind::Text:
                break;
        }
    }
    return {};
}

} // namespace

Ontology::Ontology(std::string task_name, std::vector<SlotSchema> slots,
                   std::vector<FunctorSignature> functors,
                   std::map<std::string, std::vector<std::string>> aspects,
                   std::vector<FunctorSignature> actions)
    : task_name_(std::move(task_name)),
      slots_(std::move(slots)),
      functors_(std::move(functors)),
      aspects_(std::move(aspects)),
      actions_(std::move(actions)) {
    std::set<std::string> names;
    std::set<int> priorities;
    for (const auto& s : slots_) {
        if (s.name.empty()) throw OntologyError("slot name must not be empty");
        if (!names.insert(s.name).second) throw OntologyError("duplicate slot '" + s.name + "'");
        if (s.domain) {
            if (s.domain->empty()) throw OntologyError("closed domain of '" + s.name + "' is empty");
            std::set<std::string> seen(s.domain->begin(), s.domain->end());
            if (seen.size() != s.domain->size()) {
                throw OntologyError("duplicate value in domain of '" + s.name + "'");
            }
        }
        if (s.required && !priorities.insert(s.priority).second) {
            throw OntologyError("priority " + std::to_string(s.priority) + " used twice");
        }
    }
    for (const auto* list : {&functors_, &actions_}) {
        std::set<std::string> functor_names;
        for (const auto& f : *list) {
            if (!is_valid_functor(f.name)) throw OntologyError("invalid functor name '" + f.name + "'");
            if (!functor_names.insert(f.name).second) throw OntologyError("duplicate functor '" + f.name + "'");
        }
    }
    for (const auto& [category, list] : aspects_) {
        std::set<std::string> seen(list.begin(), list.end());
        if (seen.size() != list.size()) throw OntologyError("duplicate aspect in category '" + category + "'");
    }
}

Ontology Ontology::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw OntologyError("cannot open ontology file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return from_yaml(buf.str());
    } catch (const OntologyError& e) {
        throw OntologyError(path.string() + ": " + e.what());
    }
}

Ontology Ontology::from_yaml(std::string_view text) {
    try {
        YAML::Node root = YAML::Load(std::string(text));
        if (!root["format"] || root["format"].as<int>() != 1) {
            throw OntologyError("expected 'format: 1' header");
        }
        auto task = root["task"].as<std::string>("");
        if (task.empty()) throw OntologyError("missing 'task'");

        std::vector<SlotSchema> slots;
        for (const auto& n : root["slots"]) {
            SlotSchema s;
            s.name = n["name"].as<std::string>();
            const auto& domain = n["domain"];
            if (!domain || (domain.IsScalar() && domain.as<std::string>() == "open")) {
                s.domain = std::nullopt;
            } else {
                s.domain = domain.as<std::vector<std::string>>();
            }
            s.queryable = n["queryable"].as<bool>(false);
            s.required = n["required"].as<bool>(false);
            s.priority = n["priority"].as<int>(0);
            if (s.required && !n["priority"]) throw OntologyError("required slot '" + s.name + "' needs a priority");
            slots.push_back(std::move(s));
        }

        auto signatures = [](const YAML::Node& list) {
            std::vector<FunctorSignature> out;
            for (const auto& n : list) {
                FunctorSignature f;
                f.name = n["name"].as<std::string>();
                for (const auto& a : n["args"]) f.args.push_back(parse_arg_spec(a));
                out.push_back(std::move(f));
            }
            return out;
        };
        auto functors = signatures(root["functors"]);
        auto actions = signatures(root["actions"]);

        std::map<std::string, std::vector<std::string>> aspects;
        for (const auto& kv : root["aspects"]) {
            aspects[kv.first.as<std::string>()] = kv.second.as<std::vector<std::string>>();
        }
        return Ontology(std::move(task), std::move(slots), std::move(functors), std::move(aspects),
                        std::move(actions));
    } catch (const YAML::Exception& e) {
        throw OntologyError(std::string("malformed ontology: ") + e.what());
    }
}

const SlotSchema* Ontology::find_slot(std::string_view name) const {
    auto it = std::find_if(slots_.begin(), slots_.end(), [&](const auto& s) { return s.name == name; });
    return it == slots_.end() ? nullptr : &*it;
}

const SlotSchema& Ontology::slot(std::string_view name) const {
    const auto* s = find_slot(name);
    if (s == nullptr) throw UnknownSlot(name);
    return *s;
}

const FunctorSignature* Ontology::find_functor(std::string_view name) const {
    auto it = std::find_if(functors_.begin(), functors_.end(), [&](const auto& f) { return f.name == name; });
    return it == functors_.end() ? nullptr : &*it;
}

const FunctorSignature* Ontology::find_action(std::string_view name) const {
    auto it = std::find_if(actions_.begin(), actions_.end(), [&](const auto& f) { return f.name == name; });
    return it == actions_.end() ? nullptr : &*it;
}

std::vector<const SlotSchema*> Ontology::required_slots() const {
    std::vector<const SlotSchema*> out;
    for (const auto& s : slots_) {
        if (s.required) out.push_back(&s);
    }
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->priority < b->priority; });
    return out;
}

const std::vector<std::string>* Ontology::aspects_for(std::string_view category) const {
    auto it = aspects_.find(std::string(category));
    return it == aspects_.end() ? nullptr : &it->second;
}

std::optional<std::size_t> Ontology::domain_rank(std::string_view slot, std::string_view value) const {
    const auto* s = find_slot(slot);
    if (s == nullptr || !s->domain) return std::nullopt;
    auto it = std::find(s->domain->begin(), s->domain->end(), value);
    if (it == s->domain->end()) return std::nullopt;
    return static_cast<std::size_t>(it - s->domain->begin());
}

const std::vector<std::string>& full_domain(const Ontology& onto, std::string_view slot) {
    const auto& s = onto.slot(slot);
    if (!s.domain) throw OpenDomain(slot);
    return *s.domain;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Ok: return "OK";
        case Verdict::UnknownFunctor: return "UNKNOWN_FUNCTOR";
        case Verdict::ArityMismatch: return "ARITY_MISMATCH";
        case Verdict::UnknownSlot: return "UNKNOWN_SLOT";
        case Verdict::ValueOutOfDomain: return "VALUE_OUT_OF_DOMAIN";
    }
    return "?";
}

bool ValidationReport::ok() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.verdict == Verdict::Ok; });
}

bool ValidationReport::well_formed() const {
    return std::none_of(entries.begin(), entries.end(), [](const auto& e) {
        return e.verdict == Verdict::UnknownFunctor || e.verdict == Verdict::ArityMismatch;
    });
}

std::string ValidationReport::describe() const {
    std::string out;
    for (const auto& e : entries) {
        if (e.verdict == Verdict::Ok) continue;
        out += "#" + std::to_string(e.index + 1) + " " + std::string(to_string(e.verdict)) + ": " + e.detail + "\n";
    }
    return out;
}

ValidationReport validate(const PredicateSet& preds, const Ontology& onto, Side side) {
    ValidationReport report;
    report.entries.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto entry = check(preds[i], onto, side);
        entry.index = i;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace nsbot
