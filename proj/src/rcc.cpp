#include "nsbot/rcc.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace nsbot::rcc {

namespace {

template <class Range>
bool contains(const Range& r, std::string_view s) {
    return std::find(std::begin(r), std::end(r), s) != std::end(r);
}

const std::vector<std::string>& catalog_of(const Concept& c, const Ontology& onto) {
    static const std::vector<std::string> kNone;
    const auto* catalog = onto.aspects_for(c.category);
    return catalog == nullptr ? kNone : *catalog;
}

bool is_discussed(const TopicState& topic, const std::string& id, const std::string& aspect) {
    auto it = topic.discussed.find(id);
    return it != topic.discussed.end() && it->second.count(aspect) != 0;
}

std::string attitude_toward(const TopicState& topic, const std::string& id) {
    auto it = topic.attitude_on.find(id);
    return it == topic.attitude_on.end() ? "positive" : it->second;
}

} // namespace

ConceptGraph::ConceptGraph(std::vector<Concept> nodes, const std::vector<EdgeSpec>& edges, std::string root)
    : root_(std::move(root)) {
    for (auto& n : nodes) {
        if (n.id.empty()) throw GraphError("concept id must not be empty");
        if (!contains(kCategories, n.category)) {
            throw GraphError("concept '" + n.id + "' has unknown category '" + n.category + "'");
        }
        if (n.category != "person" && n.snippets.empty()) {
            throw GraphError("concept '" + n.id + "' needs at least one aspect snippet");
        }
        auto id = n.id;
        if (!nodes_.emplace(id, std::move(n)).second) throw GraphError("duplicate concept '" + id + "'");
    }
    for (const auto& e : edges) {
        if (e.from == e.to) throw GraphError("self-loop on '" + e.from + "'");
        if (!contains(kRelations, e.relation)) throw GraphError("unknown relation '" + e.relation + "'");
        if (!nodes_.count(e.from)) throw GraphError("edge from unknown concept '" + e.from + "'");
        if (!nodes_.count(e.to)) throw GraphError("edge to unknown concept '" + e.to + "'");
        auto add = [&](const std::string& a, const std::string& b) {
            auto& list = adjacency_[a];
            std::pair<std::string, std::string> entry{e.relation, b};
            if (std::find(list.begin(), list.end(), entry) == list.end()) list.push_back(std::move(entry));
        };
        add(e.from, e.to);
        add(e.to, e.from);
    }
    for (auto& [_, list] : adjacency_) std::sort(list.begin(), list.end());
    if (!nodes_.empty() && !nodes_.count(root_)) throw GraphError("root '" + root_ + "' is not a concept");
}

ConceptGraph ConceptGraph::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("cannot open concept graph " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_yaml(buf.str());
}

ConceptGraph ConceptGraph::from_yaml(std::string_view text) {
    try {
        YAML::Node root = YAML::Load(std::string(text));
        if (!root["format"] || root["format"].as<int>() != 1) throw GraphError("expected 'format: 1' header");
        std::vector<Concept> nodes;
        for (const auto& n : root["nodes"]) {
            Concept c;
            c.id = n["id"].as<std::string>();
            c.category = n["category"].as<std::string>();
            if (n["attributes"]) c.attributes = n["attributes"].as<std::map<std::string, std::string>>();
            if (n["snippets"]) c.snippets = n["snippets"].as<std::map<std::string, std::string>>();
            nodes.push_back(std::move(c));
        }
        std::vector<EdgeSpec> edges;
        for (const auto& e : root["edges"]) {
            if (!e.IsSequence() || e.size() != 3) throw GraphError("edge must be [from, relation, to]");
            edges.push_back({e[0].as<std::string>(), e[1].as<std::string>(), e[2].as<std::string>()});
        }
        return ConceptGraph(std::move(nodes), edges, root["root"].as<std::string>(""));
    } catch (const YAML::Exception& e) {
        throw GraphError(std::string("malformed concept graph: ") + e.what());
    }
}

const Concept* ConceptGraph::find(std::string_view id) const {
    auto it = nodes_.find(std::string(id));
    return it == nodes_.end() ? nullptr : &it->second;
}

const Concept& ConceptGraph::at(std::string_view id) const {
    const auto* c = find(id);
    if (c == nullptr) throw UnknownConcept(id);
    return *c;
}

std::vector<std::pair<std::string, const Concept*>> ConceptGraph::neighbors(std::string_view id) const {
    at(id);
    std::vector<std::pair<std::string, const Concept*>> out;
    auto it = adjacency_.find(std::string(id));
    if (it == adjacency_.end()) return out;
    for (const auto& [relation, other] : it->second) out.emplace_back(relation, &nodes_.at(other));
    return out;
}

bool ConceptGraph::adjacent(std::string_view a, std::string_view b) const {
    auto it = adjacency_.find(std::string(a));
    if (it == adjacency_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [&](const auto& e) { return e.second == b; });
}

double Rng::uniform01() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::index(std::size_t n) {
    ++draws_;
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t x = engine_();
        if (x >= threshold) return static_cast<std::size_t>(x % bound);
    }
}

std::string Rng::state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

std::string_view to_string(MoveKind k) {
    switch (k) {
        case MoveKind::Stay: return "Stay";
        case MoveKind::ShiftAspect: return "ShiftAspect";
        case MoveKind::JumpTopic: return "JumpTopic";
    }
    return "?";
}

std::string opening_aspect(const Concept& node, const Ontology& onto, const TopicState& topic) {
    const auto& catalog = catalog_of(node, onto);
    for (const auto& a : catalog) {
        if (!is_discussed(topic, node.id, a)) return a;
    }
    return catalog.empty() ? std::string() : catalog.front();
}

std::vector<NextMove> jump_candidates(const ConceptGraph& graph, std::string_view id, const Ontology& onto,
                                      const TopicState& topic) {
    std::vector<NextMove> out;
    std::set<std::string> seen{std::string(id)};
    auto add = [&](const Concept& target, const std::string& relation, const std::string& via,
                   const std::string& via_relation) {
        if (!seen.insert(target.id).second) return;
        NextMove m;
        m.kind = MoveKind::JumpTopic;
        m.subject = target.id;
        m.category = target.category;
        m.aspect = opening_aspect(target, onto, topic);
        m.from = std::string(id);
        m.relation = relation;
        m.via = via;
        m.via_relation = via_relation;
        out.push_back(std::move(m));
    };
    // Only direct neighbors. A person linked to both ends is kept for the wording.
    auto direct = graph.neighbors(id);
    for (const auto& [relation, n] : direct) {
        std::string via, via_relation;
        if (n->category != "person") {
            for (const auto& [r1, p] : direct) {
                if (p->category != "person") continue;
                for (const auto& [r2, m] : graph.neighbors(p->id)) {
                    if (m->id == n->id && via.empty()) {
                        via = p->id;
                        via_relation = r2;
                    }
                }
            }
        }
        add(*n, relation, via, via_relation);
    }
    return out;
}

NextMove next_move(const ConceptGraph& graph, const TopicState& topic, Rng& rng, const RccConfig& config,
                   const Ontology& onto) {
    if (graph.empty()) throw EmptyGraph();

    if (!topic.current) {
        const auto& root = graph.at(graph.root());
        NextMove m;
        m.kind = MoveKind::JumpTopic;
        m.subject = root.id;
        m.category = root.category;
        m.aspect = opening_aspect(root, onto, topic);
        return m;
    }

    const auto& current = graph.at(*topic.current);
    const auto& catalog = catalog_of(current, onto);
    const auto attitude = attitude_toward(topic, current.id);

    auto jump = [&]() -> std::optional<NextMove> {
        auto cands = jump_candidates(graph, current.id, onto, topic);
        if (cands.empty()) return std::nullopt;
        std::vector<NextMove> pool;
        std::copy_if(cands.begin(), cands.end(), std::back_inserter(pool),
                     [&](const NextMove& m) { return !topic.visited(m.subject); });
        if (pool.empty()) {
            auto oldest = std::min_element(cands.begin(), cands.end(), [&](const NextMove& a, const NextMove& b) {
                return topic.last_visit.at(a.subject) < topic.last_visit.at(b.subject);
            });
            pool.push_back(*oldest);
        }
        auto pick = pool[rng.index(pool.size())];
        pick.attitude = attitude;
        return pick;
    };
    auto stay_on = [&](MoveKind kind, const std::string& aspect) {
        NextMove m;
        m.kind = kind;
        m.subject = current.id;
        m.category = current.category;
        m.aspect = aspect;
        m.attitude = attitude;
        return m;
    };

    if (rng.uniform01() < config.p_jump) {
        if (auto j = jump()) return *j;
    }
    if (topic.user_opened_aspect && contains(catalog, topic.aspect)) return stay_on(MoveKind::Stay, topic.aspect);
    for (const auto& a : catalog) {
        if (!is_discussed(topic, current.id, a)) return stay_on(MoveKind::ShiftAspect, a);
    }
    if (auto j = jump()) return *j;
    std::string aspect = contains(catalog, topic.aspect) ? topic.aspect : (catalog.empty() ? "" : catalog.back());
    return stay_on(MoveKind::Stay, aspect);
}

TopicState apply_move(const TopicState& topic, const NextMove& move) {
    TopicState next = topic;
    next.current = move.subject;
    next.category = move.category;
    next.aspect = move.aspect;
    next.user_opened_aspect = false;
    if (!move.aspect.empty()) next.discussed[move.subject].insert(move.aspect);
    next.visit(move.subject);
    next.next_log.push_back(next_block(move));
    return next;
}

PredicateSet next_block(const NextMove& move) {
    return {make_predicate("talk", {atom(move.category), atom(move.subject), atom(move.aspect)}),
            make_predicate("attitude", {atom(move.attitude)})};
}

} // namespace nsbot::rcc
