#include "nsbot/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <set>

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <spdlog/spdlog.h>

namespace nsbot::service {

using json = nlohmann::json;

namespace {

constexpr SerializeStyle kStored = SerializeStyle::Concierge;

std::string utc_now() {
    auto now = std::chrono::system_clock::now();
    auto t = std::chrono::system_clock::to_time_t(now);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

std::string new_session_id() {
    unsigned char bytes[16];
    if (RAND_bytes(bytes, sizeof bytes) != 1) throw Error("cannot generate a session id");
    static const char* hex = "0123456789abcdef";
    std::string id;
    for (unsigned char b : bytes) {
        id += hex[b >> 4];
        id += hex[b & 0xF];
    }
    return id;
}

bool safe_id(std::string_view id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

json set_json(const std::set<std::string>& s) { return json(std::vector<std::string>(s.begin(), s.end())); }

void check_action(const Decision& d, const Ontology& onto) {
    PredicateSet all = d.action;
    all.insert(all.end(), d.knowledge.begin(), d.knowledge.end());
    auto report = validate(all, onto, Side::Action);
    if (!report.ok()) throw Error("engine produced an invalid instruction:\n" + report.describe());
}

PredicateSet parse_stored(const json& event, const char* key) {
    return parse_predicates(event.at(key).get<std::string>());
}

} // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

json snapshot(const DialogState& state, const rcc::Rng& rng, std::string_view task) {
    json slots = json::object();
    for (const auto& [name, c] : state.slots) {
        slots[name] = {
            {"addressed", c.addressed},
            {"included", c.included ? set_json(*c.included) : json(nullptr)},
            {"excluded", set_json(c.excluded)},
            {"query_pending", c.query_pending},
            {"sources", serialize(c.sources, kStored)},
        };
    }
    const auto& t = state.topic;
    auto sets = [](const std::map<std::string, std::set<std::string>>& m) {
        json out = json::object();
        for (const auto& [k, v] : m) out[k] = set_json(v);
        return out;
    };
    auto logs = [](const std::vector<PredicateSet>& l) {
        json out = json::array();
        for (const auto& block : l) out.push_back(serialize(block, SerializeStyle::Companion));
        return out;
    };
    json topic = {
        {"current", t.current ? json(*t.current) : json(nullptr)},
        {"category", t.category},
        {"aspect", t.aspect},
        {"user_opened_aspect", t.user_opened_aspect},
        {"discussed", sets(t.discussed)},
        {"raised", sets(t.raised)},
        {"attitude_on", t.attitude_on},
        {"last_attitude", t.last_attitude},
        {"last_visit", t.last_visit},
        {"clock", t.clock},
        {"themes_log", logs(t.themes_log)},
        {"next_log", logs(t.next_log)},
    };
    json history = json::array();
    for (const auto& turn : state.history) {
        history.push_back({{"speaker", turn.speaker}, {"text", turn.text}, {"predicates", serialize(turn.predicates, kStored)}});
    }
    return {
        {"format", 1},
        {"task", task},
        {"turn_index", state.turn_index},
        {"quit", state.quit},
        {"facts", serialize(state.facts, kStored)},
        {"focus", state.focus ? json(*state.focus) : json(nullptr)},
        {"pending_queries", state.pending_queries},
        {"slots", slots},
        {"topic", topic},
        {"history", history},
        {"rng", {{"seed", rng.seed()}, {"draws", rng.draws()}, {"state", rng.state()}}},
    };
}

std::string digest(const DialogState& state, const rcc::Rng& rng, std::string_view task) {
    return sha256_hex(snapshot(state, rng, task).dump());
}

json to_json(const TurnResponse& r, SerializeStyle style) {
    return {
        {"reply", r.reply},
        {"themes", serialize(r.themes, style)},
        {"action", serialize(r.action, style)},
        {"knowledge", serialize(r.knowledge, style)},
        {"action_kind", r.action_kind},
        {"digest", r.digest},
        {"closed", r.closed},
        {"turn", r.turn},
    };
}

json to_json(const TranscriptEntry& e, SerializeStyle style) {
    json out = {{"speaker", e.speaker}, {"text", e.text}, {"predicates", serialize(e.predicates, style)}, {"at", e.at}};
    if (!e.action_kind.empty()) out["action_kind"] = e.action_kind;
    return out;
}

json to_json(const SessionInfo& s) {
    return {{"id", s.id}, {"task", s.task}, {"backend", s.backend}, {"seed", s.seed}, {"created", s.created},
            {"updated", s.updated}};
}

struct Service::Session {
    SessionInfo info;
    const TaskEngine* engine = nullptr;
    DialogState state;
    rcc::Rng rng;
    std::vector<TranscriptEntry> transcript;
    std::shared_ptr<nl::NlInterface> nl;
    std::filesystem::path log;
    std::string digest;
    mutable std::mutex mu;
};

Service::Service(Options options) : options_(std::move(options)) {
    const auto& cfg = options_.config;
    for (const char* task : {"concierge", "companion"}) {
        ontologies_[task] = std::make_unique<Ontology>(Ontology::load(cfg.ontology_path(task)));
    }
    kb_ = concierge::load_kb(cfg.kb_path(), *ontologies_["concierge"]);
    graph_ = rcc::ConceptGraph::load(cfg.graph_path());
    companion_ = std::make_unique<companion::Companion>(*ontologies_["companion"], graph_, rcc::RccConfig{cfg.p_jump});
    engines_["concierge"] = std::make_unique<ConciergeEngine>(*ontologies_["concierge"], kb_);
    engines_["companion"] = std::make_unique<CompanionEngine>(*companion_);
    if (!options_.backends) {
        options_.backends = [cfg](const std::string& task, const std::string& kind) -> std::shared_ptr<nl::Backend> {
            if (kind == "mock") return nl::MockBackend::load(cfg.mock_path(task));
            return std::make_shared<nl::LiveBackend>(cfg.live);
        };
    }
    if (!options_.store_dir.empty()) std::filesystem::create_directories(options_.store_dir);
    spdlog::debug("service ready: {} restaurants, {} concepts", kb_.size(), graph_.size());
}

Service::~Service() = default;

const TaskEngine& Service::engine(const std::string& task) const {
    auto it = engines_.find(task);
    if (it == engines_.end()) throw BadTask("unknown task '" + task + "' (expected concierge or companion)");
    return *it->second;
}

std::shared_ptr<nl::NlInterface> Service::language(Session& s) {
    if (s.nl) return s.nl;
    const auto key = s.info.task + "/" + s.info.backend;
    std::shared_ptr<nl::Backend> backend;
    {
        std::lock_guard lock(mu_);
        auto it = backend_cache_.find(key);
        if (it != backend_cache_.end()) backend = it->second;
    }
    if (!backend) {
        backend = options_.backends(s.info.task, s.info.backend);
        std::lock_guard lock(mu_);
        backend_cache_.emplace(key, backend);
    }
    std::vector<nl::Shot> shots;
    if (s.info.backend == "live") {
        auto path = options_.config.mock_path(s.info.task);
        if (std::filesystem::exists(path)) shots = nl::load_shots(path);
    }
    const auto& persona =
        s.info.task == "concierge" ? options_.config.concierge_persona : options_.config.companion_persona;
    s.nl = std::make_shared<nl::NlInterface>(backend, s.engine->ontology(), std::move(shots),
                                             options_.config.context_turns, persona);
    return s.nl;
}

void Service::append(const Session& s, const json& event) const {
    if (s.log.empty()) return;
    auto line = event.dump() + "\n";
    int fd = ::open(s.log.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("cannot open event log " + s.log.string() + ": " + std::strerror(errno));
    std::size_t done = 0;
    while (done < line.size()) {
        auto n = ::write(fd, line.data() + done, line.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            ::close(fd);
            throw Error("cannot write event log: " + std::string(std::strerror(err)));
        }
        done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        int err = errno;
        ::close(fd);
        throw Error("cannot sync event log: " + std::string(std::strerror(err)));
    }
    ::close(fd);
}

std::pair<SessionInfo, TurnResponse> Service::create_session(const std::string& task, const std::string& backend,
                                                             std::optional<std::uint64_t> seed) {
    const auto& eng = engine(task);
    if (backend != "mock" && backend != "live") {
        throw BadTask("unknown backend '" + backend + "' (expected mock or live)");
    }
    auto s = std::make_shared<Session>();
    s->info.id = new_session_id();
    s->info.task = task;
    s->info.backend = backend;
    s->info.seed = seed ? *seed : std::random_device{}();
    s->info.created = s->info.updated = utc_now();
    s->engine = &eng;
    s->rng = rcc::Rng(s->info.seed);
    s->state.session_id = s->info.id;
    if (!options_.store_dir.empty()) s->log = options_.store_dir / (s->info.id + ".jsonl");

    auto nl = language(*s);
    auto d = eng.open(s->state, s->rng);
    check_action(d, eng.ontology());
    auto reply = nl->realize(d.action, d.knowledge, {});
    s->state = record_bot_turn(d.state, reply, d.action);
    s->transcript.push_back({"bot", reply, d.action, d.kind, s->info.created});
    s->digest = digest(s->state, s->rng, task);

    append(*s, {{"event", "create"}, {"format", 1}, {"id", s->info.id}, {"task", task}, {"backend", backend},
                {"seed", s->info.seed}, {"at", s->info.created}});
    append(*s, {{"event", "open"}, {"action", serialize(d.action, kStored)}, {"reply", reply}, {"digest", s->digest},
                {"at", s->info.created}});

    TurnResponse r{reply, {}, d.action, d.knowledge, d.kind, s->digest, s->state.quit, 0};
    {
        std::lock_guard lock(mu_);
        sessions_[s->info.id] = s;
    }
    spdlog::info("session {} created ({}, {}, seed {})", s->info.id, task, backend, s->info.seed);
    return {s->info, r};
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw UnknownSession(id);
    return it->second;
}

TurnResponse Service::post_message(const std::string& id, std::string_view text) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    if (s->state.quit) throw StateClosed();
    auto nl = language(*s);

    auto themes = nl->understand(text, s->state.history);
    auto rng = s->rng;
    auto d = s->engine->step(s->state, themes, text, rng);
    check_action(d, s->engine->ontology());
    auto reply = nl->realize(d.action, d.knowledge, d.state.history);
    auto next = record_bot_turn(d.state, reply, d.action);
    auto next_digest = digest(next, rng, s->info.task);
    auto at = utc_now();

    append(*s, {{"event", "turn"},
                {"index", next.turn_index},
                {"text", text},
                {"themes", serialize(themes, kStored)},
                {"action", serialize(d.action, kStored)},
                {"reply", reply},
                {"digest", next_digest},
                {"at", at}});

    s->state = std::move(next);
    s->rng = rng;
    s->digest = next_digest;
    s->info.updated = at;
    s->transcript.push_back({"user", std::string(text), themes, {}, at});
    s->transcript.push_back({"bot", reply, d.action, d.kind, at});
    return {reply, themes, d.action, d.knowledge, d.kind, s->digest, s->state.quit, s->state.turn_index};
}

std::shared_ptr<Service::Session> Service::replay(const std::filesystem::path& log) {
    std::ifstream in(log);
    if (!in) throw Error("cannot open event log " + log.string());
    auto s = std::make_shared<Session>();
    s->log = log;
    std::string line;
    std::size_t lineno = 0;
    bool opened = false;
    std::streamoff good_end = 0;
    bool torn = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json ev;
        try {
            ev = json::parse(line);
        } catch (const json::exception&) {
            // A torn final write from a crash; everything before it is intact.
            if (in.peek() == EOF) {
                spdlog::warn("{}: dropping incomplete last line", log.string());
                torn = true;
                break;
            }
            throw Error(log.string() + ":" + std::to_string(lineno) + ": corrupt event");
        }
        const auto kind = ev.at("event").get<std::string>();
        auto diverged = [&](const PredicateSet& got) {
            if (serialize(got, kStored) != ev.at("action").get<std::string>()) {
                throw Error(log.string() + ":" + std::to_string(lineno) + ": replay diverges from the log");
            }
        };
        if (kind == "create") {
            s->info.id = ev.at("id").get<std::string>();
            s->info.task = ev.at("task").get<std::string>();
            s->info.backend = ev.at("backend").get<std::string>();
            s->info.seed = ev.at("seed").get<std::uint64_t>();
            s->info.created = s->info.updated = ev.at("at").get<std::string>();
            s->engine = &engine(s->info.task);
            s->rng = rcc::Rng(s->info.seed);
            s->state.session_id = s->info.id;
        } else if (kind == "open") {
            if (s->engine == nullptr || opened) throw Error(log.string() + ": open event out of order");
            auto d = s->engine->open(s->state, s->rng);
            diverged(d.action);
            auto reply = ev.at("reply").get<std::string>();
            s->state = record_bot_turn(d.state, reply, d.action);
            s->transcript.push_back({"bot", reply, d.action, d.kind, ev.at("at").get<std::string>()});
            opened = true;
        } else if (kind == "turn") {
            if (!opened) throw Error(log.string() + ": turn before open");
            auto text = ev.at("text").get<std::string>();
            auto themes = parse_stored(ev, "themes");
            auto d = s->engine->step(s->state, themes, text, s->rng);
            diverged(d.action);
            auto reply = ev.at("reply").get<std::string>();
            auto at = ev.at("at").get<std::string>();
            s->state = record_bot_turn(d.state, reply, d.action);
            s->info.updated = at;
            s->transcript.push_back({"user", text, themes, {}, at});
            s->transcript.push_back({"bot", reply, d.action, d.kind, at});
        } else {
            throw Error(log.string() + ":" + std::to_string(lineno) + ": unknown event '" + kind + "'");
        }
        s->digest = digest(s->state, s->rng, s->info.task);
        if (ev.contains("digest") && ev["digest"].get<std::string>() != s->digest) {
            throw Error(log.string() + ":" + std::to_string(lineno) + ": state digest mismatch after replay");
        }
        good_end = in.tellg();
    }
    if (!opened) throw Error(log.string() + ": no opening turn");
    // Later appends must not land behind the fragment.
    if (torn) {
        in.close();
        std::filesystem::resize_file(log, static_cast<std::uintmax_t>(good_end));
    }
    return s;
}

std::size_t Service::recover() {
    if (options_.store_dir.empty() || !std::filesystem::exists(options_.store_dir)) return 0;
    std::size_t loaded = 0;
    for (const auto& entry : std::filesystem::directory_iterator(options_.store_dir)) {
        if (entry.path().extension() != ".jsonl" || !safe_id(entry.path().stem().string())) continue;
        try {
            auto s = replay(entry.path());
            std::lock_guard lock(mu_);
            sessions_[s->info.id] = s;
            ++loaded;
        } catch (const std::exception& e) {
            spdlog::error("skipping {}: {}", entry.path().string(), e.what());
        }
    }
    spdlog::info("recovered {} session(s) from {}", loaded, options_.store_dir.string());
    return loaded;
}

SessionInfo Service::info(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    return s->info;
}

std::vector<TranscriptEntry> Service::transcript(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    return s->transcript;
}

json Service::state(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    return snapshot(s->state, s->rng, s->info.task);
}

std::string Service::state_digest(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    return s->digest;
}

std::vector<std::string> Service::session_ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
}

std::size_t Service::session_count() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

} // namespace nsbot::service
