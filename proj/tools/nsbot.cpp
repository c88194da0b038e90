// nsbot: terminal chat, HTTP service and evaluation harness.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "nsbot/config.hpp"
#include "nsbot/e2e.hpp"
#include "nsbot/http_api.hpp"
#include "nsbot/service.hpp"

namespace {

using namespace nsbot;

struct Common {
    std::string config_path;
    std::string data_dir;
    std::string kb;
    std::string log_level = "warn";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "YAML config file")->check(CLI::ExistingFile);
    cmd->add_option("--data-dir", c.data_dir, "Directory with ontology/, kb/, graph/, mock/")->check(CLI::ExistingDirectory);
    cmd->add_option("--kb", c.kb, "Restaurant knowledge base CSV")->check(CLI::ExistingFile);
    cmd->add_option("--log-level", c.log_level, "trace, debug, info, warn, error or off");
}

AppConfig resolve(const Common& c) {
    AppConfig cfg = c.config_path.empty() ? default_config() : load_config(c.config_path);
    if (!c.data_dir.empty()) cfg.data_dir = c.data_dir;
    if (!c.kb.empty()) cfg.kb = c.kb;
    spdlog::set_level(spdlog::level::from_str(c.log_level));
    return cfg;
}

void print_block(const char* label, const PredicateSet& preds, SerializeStyle style) {
    std::cout << "  " << label << ":\n";
    auto text = serialize(preds, style);
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        std::cout << "    " << text.substr(start, end == std::string::npos ? std::string::npos : end - start) << "\n";
        if (end == std::string::npos) break;
        start = end + 1;
    }
}

int run_chat(const Common& common, const std::string& task, const std::string& backend, std::optional<std::uint64_t> seed,
             bool debug, const std::string& store) {
    service::Service::Options opts;
    opts.config = resolve(common);
    opts.store_dir = store;
    service::Service svc(std::move(opts));
    const auto style = svc.engine(task).style();
    const char* next_label = task == "companion" ? "Next" : "Action";

    auto [info, greeting] = svc.create_session(task, backend, seed);
    if (debug) std::cout << "[session " << info.id << ", seed " << info.seed << "]\n";
    std::cout << "Bot: " << greeting.reply << "\n";
    if (debug) print_block(next_label, greeting.action, style);

    std::string line;
    while (!greeting.closed) {
        std::cout << "You: " << std::flush;
        if (!std::getline(std::cin, line)) break;
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            auto turn = svc.post_message(info.id, line);
            if (debug) print_block("Themes", turn.themes, style);
            if (debug) print_block(next_label, turn.action, style);
            std::cout << "Bot: " << turn.reply << "\n";
            if (turn.closed) break;
        } catch (const nl::UnparseableOutput& e) {
            std::cout << "(I could not make sense of that: " << e.what() << ")\n";
        } catch (const nl::BackendUnavailable& e) {
            std::cout << "(language backend unavailable, retry in " << e.retry_after() << "s: " << e.what() << ")\n";
        } catch (const nl::Timeout& e) {
            std::cout << "(language backend timed out: " << e.what() << ")\n";
        }
    }
    return 0;
}

int run_serve(const Common& common, const std::string& host, int port, const std::string& store) {
    service::Service::Options opts;
    opts.config = resolve(common);
    opts.store_dir = store;
    service::Service svc(std::move(opts));
    svc.recover();
    bool ok = service::serve(svc, host, port, [&](int bound) {
        std::cout << "listening on " << host << ":" << bound << std::endl;
    });
    if (!ok) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

int run_eval(const Common& common, const std::string& dataset, const std::string& shots_file, std::size_t shots,
             std::size_t limit, const std::string& backend, const std::string& out) {
    auto cfg = resolve(common);
    auto onto = Ontology::load(cfg.ontology_path("e2e"));
    auto rows = e2e::load_dataset(dataset, limit);
    std::vector<e2e::Example> examples;
    if (shots > 0) examples = e2e::load_dataset(shots_file, shots);
    std::shared_ptr<nl::Backend> be;
    if (backend == "echo") {
        be = e2e::gold_echo_backend(rows);
    } else if (backend == "empty") {
        be = std::make_shared<nl::MockBackend>();
    } else {
        be = std::make_shared<nl::LiveBackend>(cfg.live);
    }
    auto report = e2e::evaluate_parsing(rows, be, onto, examples);
    report.dataset = std::filesystem::path(dataset).filename().string();
    if (backend != "live") report.backend = backend;
    auto text = report.to_json();
    auto problems = e2e::check_report_schema(text);
    for (const auto& p : problems) std::cerr << "report schema: " << p << "\n";
    if (out.empty() || out == "-") {
        std::cout << text << "\n";
    } else {
        std::ofstream(out) << text << "\n";
        std::cout << "accuracy " << report.accuracy << " (" << report.exact << "/" << report.rows << "), report in "
                  << out << "\n";
    }
    return problems.empty() ? 0 : 2;
}

int run_parse(const Common& common, const std::string& task) {
    auto cfg = resolve(common);
    auto onto = Ontology::load(cfg.ontology_path(task));
    std::string text((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
    PredicateSet preds;
    try {
        preds = parse_predicates(text);
    } catch (const SyntaxError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    auto report = validate(preds, onto);
    auto style = onto.aspects().empty() ? SerializeStyle::Concierge : SerializeStyle::Companion;
    std::cout << serialize(preds, style) << "\n";
    if (!report.ok()) {
        std::cerr << report.describe();
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predicate-grounded dialogue bots: concierge and companion"};
    app.require_subcommand(1);
    Common common;

    std::string task = "concierge";
    std::string backend = "mock";
    std::optional<std::uint64_t> seed;
    bool debug = false;
    std::string store;
    auto* chat = app.add_subcommand("chat", "Talk to a bot in the terminal");
    add_common(chat, common);
    chat->add_option("--task", task, "concierge or companion")->check(CLI::IsMember({"concierge", "companion"}));
    chat->add_option("--backend", backend, "mock or live")->check(CLI::IsMember({"mock", "live"}));
    chat->add_option("--seed", seed, "Seed for topic choices");
    chat->add_flag("--debug", debug, "Print the predicate blocks of every turn");
    chat->add_option("--store", store, "Persist the session event log in this directory");

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string serve_store = "sessions";
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    add_common(serve, common);
    serve->add_option("--host", host, "Address to bind");
    serve->add_option("--port", port, "Port to bind; 0 picks a free one");
    serve->add_option("--store", serve_store, "Directory for session event logs");

    std::string dataset;
    std::string shots_file;
    std::size_t shots = 11;
    std::size_t limit = 0;
    std::string eval_backend = "live";
    std::string out;
    auto* eval = app.add_subcommand("eval", "Score predicate extraction on E2E-format data");
    add_common(eval, common);
    eval->add_option("--dataset", dataset, "CSV with mr,ref columns")->required();
    eval->add_option("--shots-file", shots_file, "CSV with worked examples (defaults to the dataset)");
    eval->add_option("--shots", shots, "Number of worked examples in the prompt");
    eval->add_option("--limit", limit, "Score only the first N rows (0 = all)");
    eval->add_option("--backend", eval_backend, "live, echo (returns gold) or empty")
        ->check(CLI::IsMember({"live", "echo", "empty"}));
    eval->add_option("--out", out, "Write the JSON report here instead of stdout");

    std::string parse_task = "concierge";
    auto* parse = app.add_subcommand("parse", "Parse and validate predicates read from stdin");
    add_common(parse, common);
    parse->add_option("--task", parse_task, "Ontology to validate against")
        ->check(CLI::IsMember({"concierge", "companion", "e2e"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*chat) return run_chat(common, task, backend, seed, debug, store);
        if (*serve) return run_serve(common, host, port, serve_store);
        if (*eval) return run_eval(common, dataset, shots_file.empty() ? dataset : shots_file, shots, limit, eval_backend, out);
        if (*parse) return run_parse(common, parse_task);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
