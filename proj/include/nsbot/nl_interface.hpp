#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "nsbot/dialog_state.hpp"
#include "nsbot/ontology.hpp"
#include "nsbot/predicate.hpp"

namespace nsbot::nl {

/// One worked example for few-shot prompting.
struct Shot {
    std::string utterance;
    PredicateSet predicates;
};

struct UnderstandRequest {
    std::string utterance;
    /// The last few turns, oldest first.
    std::vector<Turn> context;
    std::string ontology_summary;
    std::vector<Shot> shots;
    /// Set on the repair attempt: what the backend said and why it was rejected.
    std::string rejected_output;
    std::string rejection;
};

struct RealizeRequest {
    PredicateSet action;
    /// Facts the reasoner supplies for the reply (greeting, snippets, ...).
    PredicateSet knowledge;
    std::string persona;
    std::vector<Turn> context;
};

struct BackendConfig {
    enum class Kind { Mock, Live };
    Kind kind = Kind::Mock;
    std::string endpoint;
    std::string model;
    /// Name of the environment variable holding the API key.
    std::string credential_env;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 2;
    std::filesystem::path mock_table;
};

class BackendUnavailable : public Error {
public:
    explicit BackendUnavailable(const std::string& what, int retry_after_s = 5)
        : Error(what), retry_after_(retry_after_s) {}
    int retry_after() const { return retry_after_; }

private:
    int retry_after_;
};

class Timeout : public Error {
public:
    using Error::Error;
};

class UnparseableOutput : public Error {
public:
    UnparseableOutput(std::string raw, const std::string& why)
        : Error("backend output rejected: " + why), raw_(std::move(raw)) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

class DatasetMissing : public Error {
public:
    using Error::Error;
};

/// Raw text in, raw text out. Implementations must be safe to call from
/// several threads at once.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string_view kind() const = 0;
    virtual std::string understand(const UnderstandRequest& req) = 0;
    virtual std::string realize(const RealizeRequest& req) = 0;
};

/// Table-driven stand-in for the language model.
///
/// understand: the utterance is whitespace-collapsed and compared
/// case-insensitively against `exact` rules, then tried against `pattern`
/// rules (ECMAScript regex, case-insensitive) in file order; `$1` in a
/// pattern's output is the first capture. No match gives the empty string.
///
/// realize: knowledge predicates then action predicates are rendered in
/// order, each through the first template keyed `functor/arg` (arguments
/// tried left to right) or else `functor`.
/// Predicates without a template are silent. Placeholders:
///   {f}        first argument of the first `f` predicate
///   {f.N}      its N-th argument (1-based)
///   {slot}     the value in has(_, slot, value)
///   {a:key}    the value with an indefinite article
///   {syn:key}  the value through the synonym table
class MockBackend : public Backend {
public:
    struct Rule {
        std::string exact;  // normalized form, empty for pattern rules
        std::regex pattern;
        std::string source;
        std::string output;
    };

    MockBackend() = default;

    /// Throws Error on a malformed table.
    static std::shared_ptr<MockBackend> load(const std::filesystem::path& path);
    static std::shared_ptr<MockBackend> from_yaml(std::string_view text);

    void add_exact(std::string_view utterance, std::string output);
    void add_pattern(const std::string& regex, std::string output);
    void set_template(std::string key, std::string text) { templates_[std::move(key)] = std::move(text); }
    void set_synonym(std::string value, std::string text) { synonyms_[std::move(value)] = std::move(text); }

    std::string_view kind() const override { return "mock"; }
    std::string understand(const UnderstandRequest& req) override;
    std::string realize(const RealizeRequest& req) override;

    const std::vector<Rule>& rules() const { return rules_; }
    const std::map<std::string, std::string>& templates() const { return templates_; }

private:
    std::string render(const std::string& tmpl, const std::map<std::string, std::string>& vars) const;

    std::vector<Rule> rules_;
    std::map<std::string, std::string> templates_;
    std::map<std::string, std::string> synonyms_;
};

/// Chat-completions client. See docs/api.md for the wire format.
class LiveBackend : public Backend {
public:
    /// Throws BackendUnavailable when the endpoint is malformed or the
    /// credential variable is unset.
    explicit LiveBackend(BackendConfig config);

    std::string_view kind() const override { return "live"; }
    std::string understand(const UnderstandRequest& req) override;
    std::string realize(const RealizeRequest& req) override;

    /// The JSON body sent for an understand call; exposed for tests.
    std::string understand_body(const UnderstandRequest& req) const;
    std::string realize_body(const RealizeRequest& req) const;

private:
    std::string post(const std::string& body);

    BackendConfig config_;
    std::string origin_;
    std::string path_;
    std::string credential_;
};

/// Reads the `shots:` list ({utterance, predicates} entries) of a mock
/// table. Throws Error.
std::vector<Shot> load_shots(const std::filesystem::path& path);

/// Lower-case, whitespace-collapsed form used for mock lookups.
std::string normalize_utterance(std::string_view text);

/// Plain-text description of functors and slots for prompts.
std::string ontology_summary(const Ontology& onto);

/// The parse/validate/repair policy around a backend.
class NlInterface {
public:
    /// Throws OntologyError if a shot does not validate.
    NlInterface(std::shared_ptr<Backend> backend, const Ontology& onto, std::vector<Shot> shots = {},
                int context_turns = 4, std::string persona = {});

    /// Parses and validates the backend output; one repair attempt is made
    /// with the rejection attached. Throws UnparseableOutput,
    /// BackendUnavailable or Timeout.
    PredicateSet understand(std::string_view utterance, const std::vector<Turn>& history) const;

    /// Throws BackendUnavailable or Timeout; Error if the backend returns
    /// nothing.
    std::string realize(const PredicateSet& action, const PredicateSet& knowledge,
                        const std::vector<Turn>& history) const;

    Backend& backend() const { return *backend_; }
    const Ontology& ontology() const { return *onto_; }

private:
    std::vector<Turn> window(const std::vector<Turn>& history) const;

    std::shared_ptr<Backend> backend_;
    const Ontology* onto_;
    std::vector<Shot> shots_;
    int context_turns_;
    std::string persona_;
    std::string summary_;
};

} // namespace nsbot::nl
