#include "nsbot/concierge.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

namespace nsbot::concierge {

namespace {

constexpr std::array<std::string_view, 8> kColumns = {
    "name", "establishment", "food type", "price range", "customer rating", "address", "phone", "area",
};

bool is_constrained(const DialogState& state, const std::string& slot) {
    auto it = state.slots.find(slot);
    return it != state.slots.end() && (it->second.included || !it->second.excluded.empty());
}

} // namespace

std::optional<std::string> Restaurant::attribute(std::string_view slot) const {
    if (slot == "name") return name;
    if (slot == "establishment") return establishment;
    if (slot == "food type") return food_type;
    if (slot == "price range") return price_range;
    if (slot == "customer rating") return customer_rating;
    if (slot == "address") return address.empty() ? std::nullopt : std::optional(address);
    if (slot == "phone") return phone;
    if (slot == "area") return area;
    return std::nullopt;
}

Entity Restaurant::to_entity() const {
    Entity e{name, {}};
    for (auto col : kColumns) {
        if (col == "name") continue;
        if (auto v = attribute(col)) e.attributes.emplace(std::string(col), *v);
    }
    return e;
}

std::vector<Restaurant> filter(const std::vector<Restaurant>& rows, const DialogState& state,
                               const Ontology& onto) {
    std::vector<std::pair<std::string, Candidates>> active;
    for (const auto& schema : onto.slots()) {
        if (is_constrained(state, schema.name)) active.emplace_back(schema.name, candidates(state, schema.name, onto));
    }
    std::vector<Restaurant> out;
    for (const auto& r : rows) {
        bool ok = std::all_of(active.begin(), active.end(), [&](const auto& slot_cands) {
            auto v = r.attribute(slot_cands.first);
            // A missing attribute is in no exclusion list but in no inclusion list either.
            if (!v) return !slot_cands.second.allowed.has_value();
            return slot_cands.second.admits(*v);
        });
        if (ok) out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [&](const Restaurant& a, const Restaurant& b) {
        return ranks_before(a.to_entity(), b.to_entity(), onto, "customer rating");
    });
    return out;
}

const Restaurant* KnowledgeBase::find_restaurant(std::string_view name) const {
    auto it = std::find_if(rows_.begin(), rows_.end(), [&](const auto& r) { return r.name == name; });
    return it == rows_.end() ? nullptr : &*it;
}

std::vector<Entity> KnowledgeBase::matches(const DialogState& state, const Ontology& onto) const {
    std::vector<Entity> out;
    for (const auto& r : filter(rows_, state, onto)) out.push_back(r.to_entity());
    return out;
}

std::optional<Entity> KnowledgeBase::find(std::string_view name) const {
    const auto* r = find_restaurant(name);
    if (r == nullptr) return std::nullopt;
    return r->to_entity();
}

std::vector<std::vector<std::string>> read_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t row = 1;
    std::size_t quote_row = 0;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        bool blank = record.size() == 1 && record[0].empty();
        if (!blank) records.push_back(std::move(record));
        record.clear();
        ++row;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started) {
                    quoted = true;
                    quote_row = row;
                } else {
                    field.push_back(c);
                }
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (quoted) throw FormatError(quote_row, record.size() + 1, "unterminated quote");
    if (field_started || !record.empty()) end_record();
    return records;
}

KnowledgeBase parse_kb(std::string_view text, const Ontology& onto) {
    auto records = read_csv(text);
    if (records.empty()) throw FormatError(1, 1, "missing header row");

    const auto& header = records.front();
    std::array<std::size_t, kColumns.size()> index{};
    for (std::size_t k = 0; k < kColumns.size(); ++k) {
        auto it = std::find(header.begin(), header.end(), kColumns[k]);
        if (it == header.end()) {
            throw FormatError(1, header.size() + 1, "missing column '" + std::string(kColumns[k]) + "'");
        }
        index[k] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<Restaurant> rows;
    std::set<std::string> names;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        std::size_t row = r + 1;
        if (rec.size() != header.size()) {
            throw FormatError(row, std::min(rec.size(), header.size()) + 1,
                              "expected " + std::to_string(header.size()) + " fields, found " +
                                  std::to_string(rec.size()));
        }
        auto field = [&](std::size_t k) { return rec[index[k]]; };
        Restaurant rest;
        rest.name = field(0);
        rest.establishment = field(1);
        rest.food_type = field(2);
        rest.price_range = field(3);
        rest.customer_rating = field(4);
        rest.address = field(5);
        if (!field(6).empty()) rest.phone = field(6);
        if (!field(7).empty()) rest.area = field(7);

        for (std::size_t k : {0u, 1u, 2u, 3u, 4u}) {
            if (field(k).empty()) throw FormatError(row, index[k] + 1, "empty " + std::string(kColumns[k]));
        }
        if (!names.insert(rest.name).second) throw FormatError(row, index[0] + 1, "duplicate name '" + rest.name + "'");
        for (std::size_t k = 1; k < kColumns.size(); ++k) {
            const auto* schema = onto.find_slot(kColumns[k]);
            if (schema == nullptr || !schema->domain || field(k).empty()) continue;
            if (std::find(schema->domain->begin(), schema->domain->end(), field(k)) == schema->domain->end()) {
                throw DomainError(row, schema->name, field(k));
            }
        }
        rows.push_back(std::move(rest));
    }
    return KnowledgeBase(std::move(rows));
}

KnowledgeBase load_kb(const std::filesystem::path& path, const Ontology& onto) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(0, 0, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_kb(buf.str(), onto);
}

std::string answer_detail(const Restaurant& r, std::string_view slot, const Ontology& onto) {
    const auto& schema = onto.slot(slot);
    if (!schema.queryable) throw NotQueryable(slot);
    auto v = r.attribute(slot);
    if (!v) throw MissingAttribute(r.name, slot);
    return *v;
}

} // namespace nsbot::concierge
