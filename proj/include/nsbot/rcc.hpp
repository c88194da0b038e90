#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nsbot/dialog_state.hpp"
#include "nsbot/ontology.hpp"
#include "nsbot/predicate.hpp"

namespace nsbot::rcc {

inline constexpr std::string_view kCategories[] = {"movie", "book", "person"};
inline constexpr std::string_view kRelations[] = {"acted_in", "directed", "authored", "same_genre", "adapted_from", "shares_cast"};

struct Concept {
    std::string id;
    std::string category;
    std::map<std::string, std::string> attributes;
    /// Talking points keyed by aspect.
    std::map<std::string, std::string> snippets;
};

struct EdgeSpec {
    std::string from;
    std::string relation;
    std::string to;
};

class GraphError : public Error {
public:
    using Error::Error;
};

class EmptyGraph : public Error {
public:
    EmptyGraph() : Error("concept graph is empty") {}
};

class UnknownConcept : public Error {
public:
    explicit UnknownConcept(std::string_view id) : Error("unknown concept '" + std::string(id) + "'") {}
};

/// Labelled, undirected-for-traversal concept graph. Immutable after load.
class ConceptGraph {
public:
    ConceptGraph() = default;
    /// Throws GraphError on self-loops, dangling ends, unknown labels, duplicate
    /// ids, or a movie/book without snippets.
    ConceptGraph(std::vector<Concept> nodes, const std::vector<EdgeSpec>& edges, std::string root);

    static ConceptGraph load(const std::filesystem::path& path);
    static ConceptGraph from_yaml(std::string_view text);

    bool empty() const { return nodes_.empty(); }
    std::size_t size() const { return nodes_.size(); }
    const std::string& root() const { return root_; }
    const std::map<std::string, Concept>& concepts() const { return nodes_; }

    const Concept* find(std::string_view id) const;
    /// Throws UnknownConcept.
    const Concept& at(std::string_view id) const;

    /// Incident edges ordered by (relation, id). Throws UnknownConcept.
    std::vector<std::pair<std::string, const Concept*>> neighbors(std::string_view id) const;
    bool adjacent(std::string_view a, std::string_view b) const;

private:
    std::map<std::string, Concept> nodes_;
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> adjacency_;
    std::string root_;
};

/// Seeded generator whose draws are identical on every platform: only the
/// raw mt19937_64 output is used, never the std distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

    double uniform01();
    /// Uniform in [0, n); n > 0.
    std::size_t index(std::size_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t draws() const { return draws_; }
    /// Full engine state as text, for digests.
    std::string state() const;

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_ && a.draws_ == b.draws_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::uint64_t draws_ = 0;
};

struct RccConfig {
    double p_jump = 0.35;
};

enum class MoveKind { Stay, ShiftAspect, JumpTopic };

std::string_view to_string(MoveKind k);

struct NextMove {
    MoveKind kind = MoveKind::Stay;
    std::string subject;
    std::string category;
    std::string aspect;
    std::string attitude = "positive";
    // JumpTopic only. `from` is empty for the opening move. A non-empty `via`
    // names a person linked to both `from` and `subject`; the jump itself
    // follows the direct edge `relation`.
    std::string from;
    std::string relation;
    std::string via;
    std::string via_relation;

    friend bool operator==(const NextMove&, const NextMove&) = default;
};

/// Every concept reachable in one hop, or in two hops through a person,
/// ordered direct-first, then by (relation, id). No duplicates, never `id`.
std::vector<NextMove> jump_candidates(const ConceptGraph& graph, std::string_view id, const Ontology& onto,
                                      const TopicState& topic);

/// Chooses the next talking point. Throws EmptyGraph, or UnknownConcept when
/// the current concept is not in the graph.
NextMove next_move(const ConceptGraph& graph, const TopicState& topic, Rng& rng, const RccConfig& config,
                   const Ontology& onto);

/// Records the bot's move: focus, discussed aspects, visit time, next log.
TopicState apply_move(const TopicState& topic, const NextMove& move);

/// `talk(category,concept,aspect). attitude(x).` as predicates.
PredicateSet next_block(const NextMove& move);

/// First catalog aspect of `subject` not yet discussed, else the first aspect.
std::string opening_aspect(const Concept& node, const Ontology& onto, const TopicState& topic);

} // namespace nsbot::rcc
