#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nsbot/error.hpp"

namespace nsbot {

/// A ground argument: either an atom (bare or quoted in the source text,
/// the distinction is dropped after parsing) or a list of values.
class Value {
public:
    using List = std::vector<Value>;

    Value() = default;

    static Value atom(std::string text);
    static Value list(List items);

    bool is_atom() const { return data_.index() == 0; }
    bool is_list() const { return data_.index() == 1; }

    /// Precondition: is_atom().
    const std::string& text() const { return std::get<0>(data_); }
    /// Precondition: is_list().
    const List& items() const { return std::get<1>(data_); }

    friend bool operator==(const Value& a, const Value& b);
    friend bool operator<(const Value& a, const Value& b);

private:
    std::variant<std::string, List> data_;
};

struct Predicate {
    std::string functor;
    std::vector<Value> args;

    std::size_t arity() const { return args.size(); }

    friend bool operator==(const Predicate& a, const Predicate& b) {
        return a.functor == b.functor && a.args == b.args;
    }
    friend bool operator<(const Predicate& a, const Predicate& b);
};

/// Predicates in the order they appeared in one turn; duplicates are kept.
using PredicateSet = std::vector<Predicate>;

enum class SerializeStyle {
    /// `require('price range',['cheap'])`, one predicate per line joined by ",\n".
    Concierge,
    /// `talk(movie,Inception,plot episode). attitude(positive).`
    Companion,
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, std::string expected);

    std::size_t offset() const { return offset_; }
    const std::string& expected() const { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

/// Parses zero or more ground terms separated by commas, periods or newlines.
/// Throws SyntaxError.
PredicateSet parse_predicates(std::string_view text);

/// Convenience: parses exactly one predicate. Throws SyntaxError otherwise.
Predicate parse_predicate(std::string_view text);

std::string serialize(const PredicateSet& preds, SerializeStyle style);
std::string serialize(const Predicate& pred, SerializeStyle style);

/// True when `text` can be written as a bare atom and read back unchanged.
bool is_bare_safe(std::string_view text);

/// True when `text` is usable as a functor (non-empty and bare-safe).
bool is_valid_functor(std::string_view text);

/// Collapses whitespace so that two renderings of the same terms compare
/// equal: whitespace next to `,()[].` is removed, other runs become one
/// space, and the result is trimmed.
std::string normalize_whitespace(std::string_view text);

// Small builders used throughout the engine and tests.
Predicate make_predicate(std::string functor, std::vector<Value> args = {});
Value atom(std::string text);
Value atom_list(const std::vector<std::string>& items);

} // namespace nsbot
