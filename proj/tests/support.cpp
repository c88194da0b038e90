#include "support.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <yaml-cpp/yaml.h>

#include "nsbot/companion.hpp"

#ifndef NSBOT_TEST_DATA_DIR
#error "NSBOT_TEST_DATA_DIR must be defined"
#endif

namespace testing_support {

using namespace nsbot;
namespace fs = std::filesystem;

fs::path data_dir() { return fs::path(NSBOT_TEST_DATA_DIR); }
fs::path data(const std::string& rel) { return data_dir() / rel; }

std::vector<ConciergeTurn> concierge_golden() {
    auto doc = YAML::LoadFile(data("golden/concierge.yaml").string());
    std::vector<ConciergeTurn> out;
    for (const auto& t : doc["turns"]) {
        out.push_back({t["user"].as<std::string>(), t["state"].as<std::string>(), t["action_kind"].as<std::string>()});
    }
    return out;
}

std::vector<CompanionTurn> companion_golden() {
    auto doc = YAML::LoadFile(data("golden/companion.yaml").string());
    std::vector<CompanionTurn> out;
    for (const auto& t : doc["turns"]) {
        out.push_back({t["user"].as<std::string>(), t["themes"].as<std::string>(), t["next"].as<std::string>()});
    }
    return out;
}

std::uint64_t companion_seed() {
    auto doc = YAML::LoadFile(data("golden/companion.yaml").string());
    return doc["seed"] ? doc["seed"].as<std::uint64_t>() : 0;
}

std::vector<std::string> replay_companion(std::uint64_t seed, const std::vector<CompanionTurn>* expected) {
    static const Ontology onto = companion_ontology();
    static const rcc::ConceptGraph graph = rcc::ConceptGraph::load(data("graph/movies.yaml"));
    companion::Companion bot(onto, graph);
    rcc::Rng rng(seed);
    DialogState state;
    auto opened = bot.open(state, rng);
    state = opened.state;

    const auto turns = expected ? *expected : companion_golden();
    std::vector<std::string> out;
    for (const auto& t : turns) {
        auto step = bot.step(state, parse_predicates(t.themes), rng, t.user);
        state = step.state;
        out.push_back(serialize(step.next.predicates(), SerializeStyle::Companion));
        if (expected && normalize_whitespace(out.back()) != normalize_whitespace(t.next)) break;
        if (step.next.quit) break;
    }
    return out;
}

// --- oracles ---------------------------------------------------------------

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool same_text(const std::string& a, const std::string& b, bool open) { return open ? lower(a) == lower(b) : a == b; }

bool mentions(const std::vector<std::string>& values, const std::string& v, bool open) {
    return std::any_of(values.begin(), values.end(), [&](const std::string& x) { return same_text(x, v, open); });
}

// Ops that leave a slot unconstrained: a query, or asking for the whole domain.
bool is_neutral(const ConstraintOp& op, const SlotSchema& schema) {
    if (op.negated) return false;
    if (schema.queryable && op.values.size() == 1 && op.values[0] == kQueryValue) return true;
    if (!schema.domain) return false;
    std::set<std::string> want(op.values.begin(), op.values.end());
    return want == std::set<std::string>(schema.domain->begin(), schema.domain->end());
}

std::optional<std::string> row_value(const concierge::Restaurant& r, const std::string& slot) {
    if (slot == "name") return r.name;
    if (slot == "establishment") return r.establishment;
    if (slot == "food type") return r.food_type;
    if (slot == "price range") return r.price_range;
    if (slot == "customer rating") return r.customer_rating;
    if (slot == "address") return r.address;
    if (slot == "phone") return r.phone;
    if (slot == "area") return r.area;
    return std::nullopt;
}

int rating_rank(const std::string& v) {
    if (v == "high") return 2;
    if (v == "average") return 1;
    return 0;
}

} // namespace

bool oracle_row_matches(const concierge::Restaurant& r, const std::vector<ConstraintOp>& ops, const Ontology& onto) {
    for (const auto& op : ops) {
        const auto& schema = onto.slot(op.slot);
        if (is_neutral(op, schema)) continue;
        bool open = schema.is_open();
        auto v = row_value(r, op.slot);
        if (op.negated) {
            if (v && mentions(op.values, *v, open)) return false;
        } else {
            if (!v || !mentions(op.values, *v, open)) return false;
        }
    }
    return true;
}

std::vector<std::string> oracle_filter(const std::vector<concierge::Restaurant>& rows,
                                       const std::vector<ConstraintOp>& ops, const Ontology& onto) {
    std::vector<const concierge::Restaurant*> hits;
    for (const auto& r : rows) {
        if (oracle_row_matches(r, ops, onto)) hits.push_back(&r);
    }
    std::stable_sort(hits.begin(), hits.end(), [](const auto* a, const auto* b) {
        int ra = rating_rank(a->customer_rating), rb = rating_rank(b->customer_rating);
        if (ra != rb) return ra > rb;
        return a->name < b->name;
    });
    std::vector<std::string> out;
    for (const auto* r : hits) out.push_back(r->name);
    return out;
}

std::vector<std::string> oracle_conflicts(const std::vector<ConstraintOp>& ops, const Ontology& onto) {
    std::vector<std::string> out;
    for (const auto& schema : onto.slots()) {
        if (schema.is_open()) continue;
        bool touched = false;
        bool any_left = false;
        for (const auto& op : ops) touched = touched || op.slot == schema.name;
        if (!touched) continue;
        for (const auto& v : *schema.domain) {
            bool ok = true;
            for (const auto& op : ops) {
                if (op.slot != schema.name || is_neutral(op, schema)) continue;
                bool listed = std::find(op.values.begin(), op.values.end(), v) != op.values.end();
                if (op.negated == listed) ok = false;
            }
            any_left = any_left || ok;
        }
        if (!any_left) out.push_back(schema.name);
    }
    std::sort(out.begin(), out.end());
    return out;
}

PredicateSet to_predicates(const std::vector<ConstraintOp>& ops) {
    PredicateSet out;
    for (const auto& op : ops) {
        out.push_back(make_predicate(op.negated ? "not_require" : "require", {atom(op.slot), atom_list(op.values)}));
    }
    return out;
}

// --- generators ------------------------------------------------------------

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

bool coin(std::mt19937_64& rng, double p = 0.5) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
    static const std::vector<std::string> pieces = {
        "a", "b", "z", "Q", "0", "7", "_", " ", " ", "'", "\\", ",", "(", ")", "[", "]", ".", "-", "\t", "\xc3\xa9",
        "don", "t", "%", "query", "\"", ":",
    };
    std::string s;
    auto len = pick(rng, max_len + 1);
    for (std::size_t i = 0; i < len; ++i) s += pieces[pick(rng, pieces.size())];
    return s;
}

std::string random_functor(std::mt19937_64& rng) {
    static const std::string first = "abcdefghijklmnopqrstuvwxyz";
    static const std::string rest = "abcdefghijklmnopqrstuvwxyz_0123456789";
    std::string s(1, first[pick(rng, first.size())]);
    auto len = pick(rng, 10);
    for (std::size_t i = 0; i < len; ++i) s += rest[pick(rng, rest.size())];
    return s;
}

Value random_value(std::mt19937_64& rng, int depth) {
    if (depth < 3 && coin(rng, 0.3)) {
        Value::List items;
        auto n = pick(rng, 4);
        for (std::size_t i = 0; i < n; ++i) items.push_back(random_value(rng, depth + 1));
        return Value::list(std::move(items));
    }
    return Value::atom(random_text(rng, 6));
}

std::string vary_case(std::mt19937_64& rng, std::string s) {
    for (auto& c : s) {
        if (coin(rng, 0.3)) c = static_cast<char>(coin(rng) ? std::toupper(static_cast<unsigned char>(c))
                                                             : std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

} // namespace

PredicateSet random_predicate_set(std::mt19937_64& rng) {
    PredicateSet out;
    auto n = 1 + pick(rng, 6);
    for (std::size_t i = 0; i < n; ++i) {
        Predicate p;
        p.functor = random_functor(rng);
        auto arity = pick(rng, 5);
        for (std::size_t a = 0; a < arity; ++a) p.args.push_back(random_value(rng, 0));
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<concierge::Restaurant> random_kb(std::mt19937_64& rng, const Ontology& onto, std::size_t max_rows) {
    static const std::vector<std::string> foods = {"Italian", "Thai", "Indian", "French", "Chinese", "English"};
    static const std::vector<std::string> areas = {"city centre", "riverside"};
    auto dom = [&](const char* slot) {
        const auto& d = *onto.slot(slot).domain;
        return d[pick(rng, d.size())];
    };
    std::vector<concierge::Restaurant> rows;
    auto n = pick(rng, max_rows + 1);
    for (std::size_t i = 0; i < n; ++i) {
        concierge::Restaurant r;
        r.name = "R" + std::to_string(pick(rng, 1000)) + "-" + std::to_string(i);
        r.establishment = dom("establishment");
        r.food_type = foods[pick(rng, foods.size())];
        r.price_range = dom("price range");
        r.customer_rating = dom("customer rating");
        r.address = std::to_string(1 + pick(rng, 99)) + " Main Street";
        if (coin(rng, 0.7)) r.phone = "01223 " + std::to_string(100000 + pick(rng, 900000));
        if (coin(rng, 0.7)) r.area = areas[pick(rng, areas.size())];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ConstraintOp> random_constraints(std::mt19937_64& rng, const Ontology& onto, bool closed_only,
                                             std::size_t max_ops) {
    static const std::map<std::string, std::vector<std::string>> open_values = {
        {"food type", {"Italian", "Thai", "Indian", "French", "Chinese", "English", "Korean"}},
        {"area", {"city centre", "riverside", "airport"}},
        {"name", {"R1-0", "R2-1"}},
    };
    std::vector<const SlotSchema*> slots;
    for (const auto& s : onto.slots()) {
        if (!s.is_open() || (!closed_only && open_values.count(s.name))) slots.push_back(&s);
    }
    std::vector<ConstraintOp> ops;
    auto n = 1 + pick(rng, max_ops);
    for (std::size_t i = 0; i < n; ++i) {
        const auto* s = slots[pick(rng, slots.size())];
        ConstraintOp op;
        op.slot = s->name;
        op.negated = coin(rng, 0.4);
        const auto& pool = s->domain ? *s->domain : open_values.at(s->name);
        if (!op.negated && s->queryable && coin(rng, 0.2)) {
            op.values = {std::string(kQueryValue)};
        } else {
            for (const auto& v : pool) {
                if (coin(rng, 0.4)) op.values.push_back(s->is_open() ? vary_case(rng, v) : v);
            }
            if (op.values.empty()) op.values.push_back(pool[pick(rng, pool.size())]);
        }
        ops.push_back(std::move(op));
    }
    return ops;
}

rcc::ConceptGraph random_graph(std::mt19937_64& rng, const Ontology& onto, std::size_t max_nodes) {
    auto n = 2 + pick(rng, std::max<std::size_t>(max_nodes, 2) - 1);
    static const char* cats[] = {"movie", "book", "person"};
    std::vector<rcc::Concept> nodes;
    for (std::size_t i = 0; i < n; ++i) {
        rcc::Concept c;
        c.category = cats[pick(rng, 3)];
        c.id = c.category + "-" + std::to_string(i);
        for (const auto& a : *onto.aspects_for(c.category)) c.snippets[a] = "about " + a + " of " + c.id;
        nodes.push_back(std::move(c));
    }
    auto relation = [&](const rcc::Concept& a, const rcc::Concept& b) -> std::string {
        if (a.category == "person" || b.category == "person") {
            const auto& other = a.category == "person" ? b : a;
            if (other.category == "book") return "authored";
            if (other.category == "movie") return coin(rng) ? "acted_in" : "directed";
            return "same_genre";
        }
        return a.category == b.category ? "same_genre" : "adapted_from";
    };
    std::vector<rcc::EdgeSpec> edges;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    auto add = [&](std::size_t a, std::size_t b) {
        if (a == b || seen.count({std::min(a, b), std::max(a, b)})) return;
        seen.insert({std::min(a, b), std::max(a, b)});
        edges.push_back({nodes[a].id, relation(nodes[a], nodes[b]), nodes[b].id});
    };
    for (std::size_t i = 1; i < n; ++i) add(i, pick(rng, i));
    auto extra = pick(rng, n + 1);
    for (std::size_t i = 0; i < extra; ++i) add(pick(rng, n), pick(rng, n));
    auto root = nodes[pick(rng, n)].id;
    return rcc::ConceptGraph(std::move(nodes), edges, root);
}

Ontology concierge_ontology() { return Ontology::load(data("ontology/concierge.yaml")); }
Ontology companion_ontology() { return Ontology::load(data("ontology/companion.yaml")); }

} // namespace testing_support
