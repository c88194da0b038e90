#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nsbot/error.hpp"
#include "nsbot/predicate.hpp"

namespace nsbot {

/// The value a user asks about instead of constraining, as in
/// `require('address',['query'])`.
inline constexpr std::string_view kQueryValue = "query";

struct SlotSchema {
    std::string name;
    /// Closed domain in declaration order; nullopt marks an open slot.
    std::optional<std::vector<std::string>> domain;
    bool queryable = false;
    bool required = false;
    /// Asking order among required slots (lower asks first).
    int priority = 0;

    bool is_open() const { return !domain.has_value(); }
};

enum class ArgKind {
    Slot,           // a declared slot name
    Values,         // list of values of the preceding slot
    ValuesOrQuery,  // as Values, or ['query'] for a queryable slot
    Category,       // a key of the aspect catalog
    Aspect,         // an aspect of the preceding category (any catalog if none)
    Entity,         // free atom naming a knowledge-base entity
    Text,           // free atom
    Enum,           // one of ArgSpec::choices
};

struct ArgSpec {
    ArgKind kind = ArgKind::Text;
    std::vector<std::string> choices;
};

struct FunctorSignature {
    std::string name;
    std::vector<ArgSpec> args;

    std::size_t arity() const { return args.size(); }
};

class OntologyError : public Error {
public:
    using Error::Error;
};

class UnknownSlot : public Error {
public:
    explicit UnknownSlot(std::string_view slot) : Error("unknown slot '" + std::string(slot) + "'") {}
};

class OpenDomain : public Error {
public:
    explicit OpenDomain(std::string_view slot)
        : Error("slot '" + std::string(slot) + "' has an open domain") {}
};

/// Immutable after construction; share freely across sessions.
class Ontology {
public:
    Ontology(std::string task_name, std::vector<SlotSchema> slots,
             std::vector<FunctorSignature> functors,
             std::map<std::string, std::vector<std::string>> aspects,
             std::vector<FunctorSignature> actions = {});

    /// Reads the `format: 1` YAML ontology file. Throws OntologyError.
    static Ontology load(const std::filesystem::path& path);
    static Ontology from_yaml(std::string_view text);

    const std::string& task_name() const { return task_name_; }
    const std::vector<SlotSchema>& slots() const { return slots_; }
    /// Functors the language understanding side may emit.
    const std::vector<FunctorSignature>& functors() const { return functors_; }
    /// Functors the reasoner hands to the realizer.
    const std::vector<FunctorSignature>& actions() const { return actions_; }
    const std::map<std::string, std::vector<std::string>>& aspects() const { return aspects_; }

    const SlotSchema* find_slot(std::string_view name) const;
    /// Throws UnknownSlot.
    const SlotSchema& slot(std::string_view name) const;
    const FunctorSignature* find_functor(std::string_view name) const;
    const FunctorSignature* find_action(std::string_view name) const;
    /// Required slots ordered by priority.
    std::vector<const SlotSchema*> required_slots() const;
    /// Aspect catalog for a category, or nullptr.
    const std::vector<std::string>* aspects_for(std::string_view category) const;

    /// Position of `value` in the slot's closed domain, if present.
    std::optional<std::size_t> domain_rank(std::string_view slot, std::string_view value) const;

private:
    std::string task_name_;
    std::vector<SlotSchema> slots_;
    std::vector<FunctorSignature> functors_;
    std::map<std::string, std::vector<std::string>> aspects_;
    std::vector<FunctorSignature> actions_;
};

/// Throws UnknownSlot or OpenDomain.
const std::vector<std::string>& full_domain(const Ontology& onto, std::string_view slot);

enum class Verdict { Ok, UnknownFunctor, ArityMismatch, UnknownSlot, ValueOutOfDomain };

std::string_view to_string(Verdict v);

struct ValidationEntry {
    std::size_t index = 0;
    Verdict verdict = Verdict::Ok;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    bool ok() const;
    /// No UnknownFunctor or ArityMismatch entries.
    bool well_formed() const;
    /// One line per non-OK entry, e.g. "#2 VALUE_OUT_OF_DOMAIN: ...".
    std::string describe() const;
};

enum class Side { User, Action };

/// Total: every predicate receives exactly one verdict. `Side::Action`
/// checks against the realizer-facing signatures instead.
ValidationReport validate(const PredicateSet& preds, const Ontology& onto, Side side = Side::User);

} // namespace nsbot
