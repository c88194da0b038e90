#include "nsbot/nl_interface.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

namespace nsbot::nl {

using json = nlohmann::json;

namespace {

SerializeStyle style_for(const Ontology& onto) {
    return onto.aspects().empty() ? SerializeStyle::Concierge : SerializeStyle::Companion;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string with_article(const std::string& word) {
    if (word.empty()) return word;
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word[0])));
    bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
    return (vowel ? "an " : "a ") + word;
}

std::string arg_text(const Value& v) {
    if (v.is_atom()) return v.text();
    std::string out;
    for (const auto& item : v.items()) {
        if (!out.empty()) out += ", ";
        out += arg_text(item);
    }
    return out;
}

void bind(std::map<std::string, std::string>& vars, const Predicate& p) {
    if (p.functor == "has" && p.arity() == 3) vars.emplace(arg_text(p.args[1]), arg_text(p.args[2]));
    if (vars.count(p.functor)) return;
    vars[p.functor] = p.args.empty() ? std::string() : arg_text(p.args[0]);
    for (std::size_t i = 0; i < p.args.size(); ++i) {
        vars[p.functor + "." + std::to_string(i + 1)] = arg_text(p.args[i]);
    }
}

// Strips a ``` fence some models wrap around their answer.
std::string unfence(std::string text) {
    text = trim(text);
    if (text.rfind("```", 0) != 0) return text;
    auto nl = text.find('\n');
    auto end = text.rfind("```");
    if (nl == std::string::npos || end <= nl) return text;
    return trim(std::string_view(text).substr(nl + 1, end - nl - 1));
}

json turn_messages(const std::vector<Turn>& context) {
    json out = json::array();
    for (const auto& t : context) {
        out.push_back({{"role", t.speaker == "user" ? "user" : "assistant"}, {"content", t.text}});
    }
    return out;
}

} // namespace

std::string normalize_utterance(std::string_view text) {
    std::string out;
    bool space = false;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    return out;
}

std::string ontology_summary(const Ontology& onto) {
    std::ostringstream out;
    out << "Task: " << onto.task_name() << "\nPredicates:\n";
    auto kind_name = [](const ArgSpec& a) -> std::string {
        switch (a.kind) {
            case ArgKind::Slot: return "slot";
            case ArgKind::Values: return "[values]";
            case ArgKind::ValuesOrQuery: return "[values] or ['query']";
            case ArgKind::Category: return "category";
            case ArgKind::Aspect: return "aspect";
            case ArgKind::Entity: return "entity";
            case ArgKind::Text: return "text";
            case ArgKind::Enum: {
                std::string s;
                for (const auto& c : a.choices) s += (s.empty() ? "" : "|") + c;
                return s;
            }
        }
        return "?";
    };
    for (const auto& f : onto.functors()) {
        out << "  " << f.name << "(";
        for (std::size_t i = 0; i < f.args.size(); ++i) out << (i ? ", " : "") << kind_name(f.args[i]);
        out << ")\n";
    }
    if (!onto.slots().empty()) {
        out << "Slots:\n";
        for (const auto& s : onto.slots()) {
            out << "  '" << s.name << "': ";
            if (s.is_open()) {
                out << "any value";
            } else {
                for (std::size_t i = 0; i < s.domain->size(); ++i) out << (i ? ", " : "") << "'" << (*s.domain)[i] << "'";
            }
            if (s.queryable) out << " (may be asked about with ['query'])";
            out << "\n";
        }
    }
    if (!onto.aspects().empty()) {
        out << "Aspects:\n";
        for (const auto& [category, list] : onto.aspects()) {
            out << "  " << category << ":";
            for (const auto& a : list) out << " " << a << ";";
            out << "\n";
        }
    }
    return out.str();
}

// --- MockBackend --------------------------------------------------------

std::shared_ptr<MockBackend> MockBackend::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open mock table " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_yaml(buf.str());
}

std::shared_ptr<MockBackend> MockBackend::from_yaml(std::string_view text) {
    auto mock = std::make_shared<MockBackend>();
    try {
        YAML::Node root = YAML::Load(std::string(text));
        if (!root["format"] || root["format"].as<int>() != 1) throw Error("mock table: expected 'format: 1' header");
        for (const auto& r : root["understand"]) {
            auto output = r["output"] ? r["output"].as<std::string>() : std::string();
            if (r["match"]) {
                mock->add_exact(r["match"].as<std::string>(), output);
            } else if (r["pattern"]) {
                mock->add_pattern(r["pattern"].as<std::string>(), output);
            } else {
                throw Error("mock table: rule needs 'match' or 'pattern'");
            }
        }
        for (const auto& kv : root["realize"]) mock->set_template(kv.first.as<std::string>(), kv.second.as<std::string>());
        for (const auto& kv : root["synonyms"]) mock->set_synonym(kv.first.as<std::string>(), kv.second.as<std::string>());
    } catch (const YAML::Exception& e) {
        throw Error(std::string("malformed mock table: ") + e.what());
    } catch (const std::regex_error& e) {
        throw Error(std::string("mock table: bad pattern: ") + e.what());
    }
    return mock;
}

std::vector<Shot> load_shots(const std::filesystem::path& path) {
    std::vector<Shot> out;
    try {
        YAML::Node root = YAML::LoadFile(path.string());
        for (const auto& n : root["shots"]) {
            out.push_back({n["utterance"].as<std::string>(), parse_predicates(n["predicates"].as<std::string>())});
        }
    } catch (const YAML::Exception& e) {
        throw Error("cannot read examples from " + path.string() + ": " + e.what());
    }
    return out;
}

void MockBackend::add_exact(std::string_view utterance, std::string output) {
    Rule r;
    r.exact = normalize_utterance(utterance);
    r.source = std::string(utterance);
    r.output = std::move(output);
    rules_.push_back(std::move(r));
}

void MockBackend::add_pattern(const std::string& regex, std::string output) {
    Rule r;
    r.pattern = std::regex(regex, std::regex::ECMAScript | std::regex::icase);
    r.source = regex;
    r.output = std::move(output);
    rules_.push_back(std::move(r));
}

std::string MockBackend::understand(const UnderstandRequest& req) {
    const auto key = normalize_utterance(req.utterance);
    for (const auto& r : rules_) {
        if (!r.exact.empty() && r.exact == key) return r.output;
    }
    for (const auto& r : rules_) {
        std::smatch m;
        if (r.exact.empty() && std::regex_search(req.utterance, m, r.pattern)) return m.format(r.output);
    }
    return {};
}

std::string MockBackend::render(const std::string& tmpl, const std::map<std::string, std::string>& vars) const {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out += tmpl[i++];
            continue;
        }
        auto close = tmpl.find('}', i);
        if (close == std::string::npos) throw Error("mock template: unclosed '{' in \"" + tmpl + "\"");
        std::string key = tmpl.substr(i + 1, close - i - 1);
        std::string mode;
        if (auto colon = key.find(':'); colon != std::string::npos) {
            mode = key.substr(0, colon);
            key = key.substr(colon + 1);
        }
        auto it = vars.find(key);
        if (it == vars.end()) throw Error("mock template: nothing bound to {" + key + "}");
        std::string value = it->second;
        if (mode == "syn") {
            auto s = synonyms_.find(value);
            if (s != synonyms_.end()) value = s->second;
        } else if (mode == "a") {
            value = with_article(value);
        } else if (!mode.empty()) {
            throw Error("mock template: unknown modifier '" + mode + "'");
        }
        out += value;
        i = close + 1;
    }
    return out;
}

std::string MockBackend::realize(const RealizeRequest& req) {
    std::map<std::string, std::string> vars;
    for (const auto& p : req.knowledge) bind(vars, p);
    for (const auto& p : req.action) bind(vars, p);

    std::string out;
    auto emit = [&](const Predicate& p) {
        const std::string* tmpl = nullptr;
        for (const auto& a : p.args) {
            auto it = templates_.find(p.functor + "/" + arg_text(a));
            if (it != templates_.end()) {
                tmpl = &it->second;
                break;
            }
        }
        if (tmpl == nullptr) {
            auto it = templates_.find(p.functor);
            if (it != templates_.end()) tmpl = &it->second;
        }
        if (tmpl == nullptr) return;
        auto text = trim(render(*tmpl, vars));
        if (text.empty()) return;
        if (!out.empty()) out += ' ';
        out += text;
    };
    for (const auto& p : req.knowledge) emit(p);
    for (const auto& p : req.action) emit(p);
    if (out.empty()) {
        auto it = templates_.find("fallback");
        if (it != templates_.end()) out = trim(render(it->second, vars));
    }
    return out;
}

// --- LiveBackend --------------------------------------------------------

LiveBackend::LiveBackend(BackendConfig config) : config_(std::move(config)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) {
        throw BackendUnavailable("live backend: malformed endpoint '" + config_.endpoint + "'");
    }
    origin_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : std::string("/");
    if (config_.credential_env.empty()) throw BackendUnavailable("live backend: no credential variable configured");
    const char* key = std::getenv(config_.credential_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw BackendUnavailable("live backend: environment variable " + config_.credential_env + " is not set");
    }
    credential_ = key;
}

std::string LiveBackend::understand_body(const UnderstandRequest& req) const {
    json messages = json::array();
    std::string system =
        "Translate the user's latest message into predicates. Use only the predicates, slots and values "
        "listed below. Reply with the predicates and nothing else; write nothing if the message carries "
        "no information.\n\n" +
        req.ontology_summary;
    messages.push_back({{"role", "system"}, {"content", system}});
    for (const auto& shot : req.shots) {
        messages.push_back({{"role", "user"}, {"content", shot.utterance}});
        messages.push_back({{"role", "assistant"}, {"content", serialize(shot.predicates, SerializeStyle::Concierge)}});
    }
    if (!req.context.empty()) {
        std::string ctx = "Conversation so far:\n";
        for (const auto& t : req.context) ctx += t.speaker + ": " + t.text + "\n";
        messages.push_back({{"role", "system"}, {"content", ctx}});
    }
    messages.push_back({{"role", "user"}, {"content", req.utterance}});
    if (!req.rejection.empty()) {
        messages.push_back({{"role", "assistant"}, {"content", req.rejected_output}});
        messages.push_back({{"role", "user"},
                            {"content", "That reply was rejected:\n" + req.rejection +
                                            "\nAnswer again with valid predicates only."}});
    }
    return json{{"model", config_.model}, {"temperature", 0}, {"messages", messages}}.dump();
}

std::string LiveBackend::realize_body(const RealizeRequest& req) const {
    std::string system =
        "You write the chatbot's next reply. Carry out the instruction predicates in one or two friendly "
        "sentences. State only the facts given; never add names, numbers or details of your own.";
    if (!req.persona.empty()) system += "\nPersona: " + req.persona;
    json messages = json::array();
    messages.push_back({{"role", "system"}, {"content", system}});
    for (auto& m : turn_messages(req.context)) messages.push_back(std::move(m));
    std::string task = "Instruction:\n" + serialize(req.action, SerializeStyle::Concierge);
    if (!req.knowledge.empty()) task += "\nFacts:\n" + serialize(req.knowledge, SerializeStyle::Concierge);
    messages.push_back({{"role", "system"}, {"content", task}});
    return json{{"model", config_.model}, {"temperature", 0.7}, {"messages", messages}}.dump();
}

std::string LiveBackend::post(const std::string& body) {
    httplib::Client client(origin_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers{{"Authorization", "Bearer " + credential_}};

    std::string last_error = "no attempt made";
    int retry_after = 5;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 << attempt));
        auto started = std::chrono::steady_clock::now();
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            auto err = res.error();
            auto elapsed = std::chrono::steady_clock::now() - started;
            if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= config_.timeout)) {
                throw Timeout("live backend: no reply within " + std::to_string(config_.timeout.count()) + " ms");
            }
            last_error = httplib::to_string(err);
            spdlog::warn("live backend: attempt {} failed: {}", attempt + 1, last_error);
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            if (res->has_header("Retry-After")) retry_after = std::atoi(res->get_header_value("Retry-After").c_str());
            spdlog::warn("live backend: attempt {} failed: {}", attempt + 1, last_error);
            continue;
        }
        if (res->status != 200) {
            throw BackendUnavailable("live backend: HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            auto doc = json::parse(res->body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw BackendUnavailable(std::string("live backend: unexpected response: ") + e.what());
        }
    }
    throw BackendUnavailable("live backend: " + last_error, retry_after);
}

std::string LiveBackend::understand(const UnderstandRequest& req) { return unfence(post(understand_body(req))); }

std::string LiveBackend::realize(const RealizeRequest& req) { return trim(post(realize_body(req))); }

// --- NlInterface --------------------------------------------------------

NlInterface::NlInterface(std::shared_ptr<Backend> backend, const Ontology& onto, std::vector<Shot> shots,
                         int context_turns, std::string persona)
    : backend_(std::move(backend)),
      onto_(&onto),
      shots_(std::move(shots)),
      context_turns_(context_turns),
      persona_(std::move(persona)),
      summary_(ontology_summary(onto)) {
    if (!backend_) throw Error("no backend");
    for (std::size_t i = 0; i < shots_.size(); ++i) {
        auto report = validate(shots_[i].predicates, onto);
        if (!report.ok()) throw OntologyError("example " + std::to_string(i + 1) + " is invalid:\n" + report.describe());
    }
}

std::vector<Turn> NlInterface::window(const std::vector<Turn>& history) const {
    auto n = static_cast<std::size_t>(std::max(0, context_turns_) * 2);
    if (history.size() <= n) return history;
    return {history.end() - static_cast<std::ptrdiff_t>(n), history.end()};
}

PredicateSet NlInterface::understand(std::string_view utterance, const std::vector<Turn>& history) const {
    UnderstandRequest req{std::string(utterance), window(history), summary_, shots_, {}, {}};
    auto check = [&](const std::string& raw, std::string& why) -> std::optional<PredicateSet> {
        try {
            auto preds = parse_predicates(raw);
            auto report = validate(preds, *onto_);
            if (report.ok()) return preds;
            why = report.describe();
        } catch (const SyntaxError& e) {
            why = e.what();
        }
        return std::nullopt;
    };

    std::string why;
    auto raw = backend_->understand(req);
    if (auto preds = check(raw, why)) return *preds;
    spdlog::info("understand: repairing output: {}", why);
    req.rejected_output = raw;
    req.rejection = why;
    raw = backend_->understand(req);
    if (auto preds = check(raw, why)) return *preds;
    throw UnparseableOutput(raw, why);
}

std::string NlInterface::realize(const PredicateSet& action, const PredicateSet& knowledge,
                                 const std::vector<Turn>& history) const {
    auto text = backend_->realize(RealizeRequest{action, knowledge, persona_, window(history)});
    if (trim(text).empty()) {
        throw Error("realizer returned no text for " + serialize(action, style_for(*onto_)));
    }
    return text;
}

} // namespace nsbot::nl
