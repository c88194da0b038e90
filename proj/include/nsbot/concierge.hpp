#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nsbot/ckt.hpp"
#include "nsbot/dialog_state.hpp"
#include "nsbot/ontology.hpp"

namespace nsbot::concierge {

struct Restaurant {
    std::string name;
    std::string establishment;
    std::string food_type;
    std::string price_range;
    std::string customer_rating;
    std::string address;
    std::optional<std::string> phone;
    std::optional<std::string> area;

    /// Attribute by ontology slot name; nullopt when absent.
    std::optional<std::string> attribute(std::string_view slot) const;
    Entity to_entity() const;
};

class FormatError : public Error {
public:
    FormatError(std::size_t row, std::size_t column, const std::string& what)
        : Error("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
          row_(row),
          column_(column) {}
    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class DomainError : public Error {
public:
    DomainError(std::size_t row, std::string slot, std::string value)
        : Error("row " + std::to_string(row) + ": '" + value + "' is not a value of '" + slot + "'"),
          row_(row),
          slot_(std::move(slot)),
          value_(std::move(value)) {}
    std::size_t row() const { return row_; }
    const std::string& slot() const { return slot_; }
    const std::string& value() const { return value_; }

private:
    std::size_t row_;
    std::string slot_;
    std::string value_;
};

class NotQueryable : public Error {
public:
    explicit NotQueryable(std::string_view slot) : Error("slot '" + std::string(slot) + "' is not queryable") {}
};

class MissingAttribute : public Error {
public:
    MissingAttribute(std::string_view name, std::string_view slot)
        : Error(std::string(name) + " has no " + std::string(slot)) {}
};

/// Restaurants matching every constraint, best first (rating, then name).
std::vector<Restaurant> filter(const std::vector<Restaurant>& rows, const DialogState& state,
                               const Ontology& onto);

/// Immutable after load.
class KnowledgeBase : public EntitySource {
public:
    KnowledgeBase() = default;
    explicit KnowledgeBase(std::vector<Restaurant> rows) : rows_(std::move(rows)) {}

    const std::vector<Restaurant>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    const Restaurant* find_restaurant(std::string_view name) const;

    std::vector<Entity> matches(const DialogState& state, const Ontology& onto) const override;
    std::optional<Entity> find(std::string_view name) const override;

private:
    std::vector<Restaurant> rows_;
};

/// Reads the delimited restaurant table (header row mandatory). Rows are
/// validated against the ontology. Throws FormatError or DomainError.
KnowledgeBase load_kb(const std::filesystem::path& path, const Ontology& onto);
KnowledgeBase parse_kb(std::string_view text, const Ontology& onto);

/// Throws NotQueryable or MissingAttribute.
std::string answer_detail(const Restaurant& r, std::string_view slot, const Ontology& onto);

/// Splits CSV text into records (RFC 4180 quoting). Throws FormatError on an
/// unterminated quote.
std::vector<std::vector<std::string>> read_csv(std::string_view text);

} // namespace nsbot::concierge
