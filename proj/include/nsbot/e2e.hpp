#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nsbot/nl_interface.hpp"
#include "nsbot/ontology.hpp"
#include "nsbot/predicate.hpp"

namespace nsbot::e2e {

/// One dataset row: a meaning representation and its reference text.
struct Example {
    std::string mr;
    std::string ref;
    /// `mr` as require(slot, [value]) predicates, slots canonicalized.
    PredicateSet gold;
};

/// Maps E2E attribute names to ontology slots (eatType -> establishment,
/// priceRange -> price range, ...). Unknown names pass through.
std::string canonical_slot(std::string_view attribute);

/// `name[The Eagle], eatType[coffee shop]` -> predicates. Throws Error on
/// malformed input.
PredicateSet parse_mr(std::string_view mr);

/// Reads the two-column `mr,ref` CSV (header row required). `limit` = 0
/// reads everything. Throws DatasetMissing or concierge::FormatError.
std::vector<Example> load_dataset(const std::filesystem::path& path, std::size_t limit = 0);

/// Canonical form used for scoring: slots canonicalized, values lowercased
/// and trimmed, one require per (slot, value), sorted.
PredicateSet normalize(const PredicateSet& preds);

struct SlotCounts {
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
};

struct Failure {
    std::size_t row = 0;  // 1-based data row
    std::string ref;
    std::string gold;
    std::string predicted;
    std::string error;
};

struct AccuracyReport {
    std::string dataset;
    std::string backend;
    std::size_t shots = 0;
    std::size_t rows = 0;
    std::size_t exact = 0;
    double accuracy = 0.0;
    std::map<std::string, SlotCounts> per_slot;
    std::vector<Failure> failures;

    std::string to_json() const;
};

/// Scores every row by exact match of normalized predicate sets. Per-row
/// parse failures are recorded; BackendUnavailable aborts the run.
AccuracyReport evaluate_parsing(const std::vector<Example>& rows, std::shared_ptr<nl::Backend> backend,
                                const Ontology& onto, const std::vector<Example>& shots);

/// Convenience overload over files. Throws DatasetMissing.
AccuracyReport evaluate_parsing(const std::filesystem::path& dataset, std::shared_ptr<nl::Backend> backend,
                                const Ontology& onto, const std::filesystem::path& shots_file, std::size_t shots,
                                std::size_t limit = 0);

/// Problems with a serialized report; empty when it conforms to
/// docs/accuracy_report.schema.json.
std::vector<std::string> check_report_schema(std::string_view report_json);

/// A mock that answers every reference text with its gold predicates.
std::shared_ptr<nl::MockBackend> gold_echo_backend(const std::vector<Example>& rows);

} // namespace nsbot::e2e
