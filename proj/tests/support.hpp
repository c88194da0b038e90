// Shared fixtures, golden loaders and independent oracles for the tests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nsbot/concierge.hpp"
#include "nsbot/ontology.hpp"
#include "nsbot/predicate.hpp"
#include "nsbot/rcc.hpp"

namespace testing_support {

std::filesystem::path data_dir();
std::filesystem::path data(const std::string& rel);

struct ConciergeTurn {
    std::string user;
    std::string state;
    std::string action_kind;
};

struct CompanionTurn {
    std::string user;
    std::string themes;
    std::string next;
};

std::vector<ConciergeTurn> concierge_golden();
std::vector<CompanionTurn> companion_golden();
/// The frozen seed that drives the companion replay.
std::uint64_t companion_seed();

/// Next blocks (companion style) produced by replaying the golden Themes
/// directly through the engine with `seed`; stops at the first mismatch
/// when `expected` is given.
std::vector<std::string> replay_companion(std::uint64_t seed, const std::vector<CompanionTurn>* expected = nullptr);

// --- oracles written independently of the engine -------------------------

using Constraint = std::pair<std::string, std::vector<std::string>>;  // slot, values

/// A constraint history: (negated?, slot, values).
struct ConstraintOp {
    bool negated = false;
    std::string slot;
    std::vector<std::string> values;
};

/// Row-by-row check of one restaurant against a constraint history,
/// interpreting the history from scratch.
bool oracle_row_matches(const nsbot::concierge::Restaurant& r, const std::vector<ConstraintOp>& ops,
                        const nsbot::Ontology& onto);

/// Brute-force filter: every row checked by oracle_row_matches, ordered by
/// rating (high first) then name.
std::vector<std::string> oracle_filter(const std::vector<nsbot::concierge::Restaurant>& rows,
                                       const std::vector<ConstraintOp>& ops, const nsbot::Ontology& onto);

/// For each closed slot: does exhaustive enumeration of its domain leave no
/// admissible value? Returns the conflicting slot names, sorted.
std::vector<std::string> oracle_conflicts(const std::vector<ConstraintOp>& ops, const nsbot::Ontology& onto);

nsbot::PredicateSet to_predicates(const std::vector<ConstraintOp>& ops);

// --- generators ------------------------------------------------------------

nsbot::PredicateSet random_predicate_set(std::mt19937_64& rng);
std::vector<nsbot::concierge::Restaurant> random_kb(std::mt19937_64& rng, const nsbot::Ontology& onto,
                                                    std::size_t max_rows);
std::vector<ConstraintOp> random_constraints(std::mt19937_64& rng, const nsbot::Ontology& onto,
                                             bool closed_only, std::size_t max_ops);

/// Connected random graph of movies, books and persons with aspect snippets
/// for every catalog aspect. At most `max_nodes` nodes.
nsbot::rcc::ConceptGraph random_graph(std::mt19937_64& rng, const nsbot::Ontology& onto, std::size_t max_nodes);

nsbot::Ontology concierge_ontology();
nsbot::Ontology companion_ontology();

} // namespace testing_support
