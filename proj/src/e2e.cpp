#include "nsbot/e2e.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nsbot/concierge.hpp"

namespace nsbot::e2e {

using json = nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<Example> read_examples(const std::filesystem::path& path, std::size_t limit) {
    std::ifstream in(path);
    if (!in) throw nl::DatasetMissing("dataset not found: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto records = concierge::read_csv(buf.str());
    if (records.empty()) throw concierge::FormatError(1, 1, "missing header row");
    const auto& header = records.front();
    auto col = [&](const char* name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw concierge::FormatError(1, 1, std::string("missing column '") + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    auto mr_col = col("mr");
    auto ref_col = col("ref");
    std::vector<Example> out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (limit != 0 && out.size() == limit) break;
        const auto& rec = records[r];
        if (rec.size() != header.size()) {
            throw concierge::FormatError(r + 1, rec.size(), "expected " + std::to_string(header.size()) + " fields");
        }
        Example ex{rec[mr_col], rec[ref_col], {}};
        try {
            ex.gold = parse_mr(ex.mr);
        } catch (const Error& e) {
            throw concierge::FormatError(r + 1, mr_col + 1, e.what());
        }
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace

std::string canonical_slot(std::string_view attribute) {
    static const std::map<std::string, std::string> kSlots = {
        {"name", "name"},
        {"eattype", "establishment"},
        {"food", "food type"},
        {"pricerange", "price range"},
        {"customer rating", "customer rating"},
        {"customerrating", "customer rating"},
        {"area", "area"},
        {"familyfriendly", "family friendly"},
        {"near", "near"},
    };
    auto key = lower(trim(attribute));
    auto it = kSlots.find(key);
    return it == kSlots.end() ? key : it->second;
}

PredicateSet parse_mr(std::string_view mr) {
    PredicateSet out;
    std::size_t i = 0;
    while (i < mr.size()) {
        auto open = mr.find('[', i);
        if (open == std::string_view::npos) {
            if (!trim(mr.substr(i)).empty()) throw Error("trailing text in meaning representation");
            break;
        }
        auto close = mr.find(']', open);
        if (close == std::string_view::npos) throw Error("unclosed '[' in meaning representation");
        auto attr = trim(mr.substr(i, open - i));
        if (!attr.empty() && attr.front() == ',') attr = trim(attr.substr(1));
        if (attr.empty()) throw Error("attribute name missing before '['");
        auto value = trim(mr.substr(open + 1, close - open - 1));
        out.push_back(make_predicate("require", {atom(canonical_slot(attr)), atom_list({value})}));
        i = close + 1;
    }
    return out;
}

std::vector<Example> load_dataset(const std::filesystem::path& path, std::size_t limit) {
    return read_examples(path, limit);
}

PredicateSet normalize(const PredicateSet& preds) {
    std::set<std::pair<std::string, std::string>> pairs;
    PredicateSet other;
    for (const auto& p : preds) {
        if (p.functor == "require" && p.arity() == 2 && p.args[0].is_atom() && p.args[1].is_list()) {
            auto slot = canonical_slot(p.args[0].text());
            for (const auto& v : p.args[1].items()) {
                if (v.is_atom()) pairs.emplace(slot, lower(trim(v.text())));
            }
        } else {
            other.push_back(p);
        }
    }
    PredicateSet out;
    for (const auto& [slot, value] : pairs) out.push_back(make_predicate("require", {atom(slot), atom_list({value})}));
    std::sort(other.begin(), other.end());
    out.insert(out.end(), other.begin(), other.end());
    return out;
}

std::string AccuracyReport::to_json() const {
    json slots = json::object();
    for (const auto& [slot, c] : per_slot) {
        slots[slot] = {{"true_positive", c.true_positive},
                       {"false_positive", c.false_positive},
                       {"false_negative", c.false_negative}};
    }
    json fails = json::array();
    for (const auto& f : failures) {
        fails.push_back(
            {{"row", f.row}, {"ref", f.ref}, {"gold", f.gold}, {"predicted", f.predicted}, {"error", f.error}});
    }
    json doc = {
        {"format", 1},
        {"dataset", dataset},
        {"backend", backend},
        {"shots", shots},
        {"rows", rows},
        {"exact", exact},
        {"accuracy", accuracy},
        {"normalization",
         {{"slots", "E2E attribute names mapped to ontology slots"},
          {"values", "trimmed, lowercased"},
          {"match", "set equality of (slot, value) pairs"}}},
        {"per_slot", slots},
        {"failures", fails},
    };
    return doc.dump(2);
}

AccuracyReport evaluate_parsing(const std::vector<Example>& rows, std::shared_ptr<nl::Backend> backend,
                                const Ontology& onto, const std::vector<Example>& shots) {
    std::vector<nl::Shot> examples;
    for (const auto& s : shots) examples.push_back({s.ref, s.gold});
    AccuracyReport report;
    report.backend = std::string(backend->kind());
    report.shots = shots.size();
    report.rows = rows.size();
    nl::NlInterface iface(backend, onto, std::move(examples), 0);

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto gold = normalize(row.gold);
        PredicateSet predicted;
        std::string error;
        try {
            predicted = normalize(iface.understand(row.ref, {}));
        } catch (const nl::UnparseableOutput& e) {
            error = e.what();
        } catch (const nl::Timeout& e) {
            error = e.what();
        }
        std::set<std::pair<std::string, std::string>> g, p;
        auto collect = [](const PredicateSet& ps, auto& into) {
            for (const auto& x : ps) {
                if (x.functor == "require" && x.arity() == 2) into.emplace(x.args[0].text(), x.args[1].items()[0].text());
            }
        };
        collect(gold, g);
        collect(predicted, p);
        for (const auto& pair : g) {
            auto& c = report.per_slot[pair.first];
            if (p.count(pair)) {
                ++c.true_positive;
            } else {
                ++c.false_negative;
            }
        }
        for (const auto& pair : p) {
            if (!g.count(pair)) ++report.per_slot[pair.first].false_positive;
        }
        if (error.empty() && predicted == gold) {
            ++report.exact;
        } else {
            report.failures.push_back({r + 1, row.ref, serialize(gold, SerializeStyle::Concierge),
                                       serialize(predicted, SerializeStyle::Concierge), error});
        }
    }
    report.accuracy = rows.empty() ? 0.0 : static_cast<double>(report.exact) / static_cast<double>(rows.size());
    return report;
}

AccuracyReport evaluate_parsing(const std::filesystem::path& dataset, std::shared_ptr<nl::Backend> backend,
                                const Ontology& onto, const std::filesystem::path& shots_file, std::size_t shots,
                                std::size_t limit) {
    auto rows = load_dataset(dataset, limit);
    std::vector<Example> examples;
    if (shots > 0) examples = load_dataset(shots_file, shots);
    auto report = evaluate_parsing(rows, std::move(backend), onto, examples);
    report.dataset = dataset.filename().string();
    return report;
}

std::vector<std::string> check_report_schema(std::string_view report_json) {
    std::vector<std::string> problems;
    json doc;
    try {
        doc = json::parse(report_json);
    } catch (const json::exception& e) {
        return {std::string("not JSON: ") + e.what()};
    }
    if (!doc.is_object()) return {"top level is not an object"};
    auto need = [&](const json& obj, const std::string& where, const char* key, auto pred, const char* type) {
        if (!obj.contains(key)) {
            problems.push_back(where + key + ": missing");
        } else if (!pred(obj.at(key))) {
            problems.push_back(where + key + ": expected " + type);
        }
    };
    auto is_string = [](const json& v) { return v.is_string(); };
    auto is_count = [](const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<long>() >= 0); };
    auto is_fraction = [](const json& v) { return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0; };
    auto is_object = [](const json& v) { return v.is_object(); };
    auto is_array = [](const json& v) { return v.is_array(); };

    need(doc, "", "format", [](const json& v) { return v == 1; }, "1");
    need(doc, "", "dataset", is_string, "string");
    need(doc, "", "backend", is_string, "string");
    need(doc, "", "shots", is_count, "non-negative integer");
    need(doc, "", "rows", is_count, "non-negative integer");
    need(doc, "", "exact", is_count, "non-negative integer");
    need(doc, "", "accuracy", is_fraction, "number in [0, 1]");
    need(doc, "", "normalization", is_object, "object");
    need(doc, "", "per_slot", is_object, "object");
    need(doc, "", "failures", is_array, "array");
    if (!problems.empty()) return problems;

    auto rows = doc["rows"].get<std::size_t>();
    auto exact = doc["exact"].get<std::size_t>();
    if (exact > rows) problems.push_back("exact exceeds rows");
    if (rows > 0 && std::abs(doc["accuracy"].get<double>() - static_cast<double>(exact) / rows) > 1e-9) {
        problems.push_back("accuracy != exact / rows");
    }
    if (doc["failures"].size() != rows - std::min(rows, exact)) problems.push_back("failures count != rows - exact");
    for (const auto& [slot, c] : doc["per_slot"].items()) {
        if (!c.is_object()) {
            problems.push_back("per_slot." + slot + ": expected object");
            continue;
        }
        for (const char* k : {"true_positive", "false_positive", "false_negative"}) {
            need(c, "per_slot." + slot + ".", k, is_count, "non-negative integer");
        }
    }
    for (std::size_t i = 0; i < doc["failures"].size(); ++i) {
        const auto& f = doc["failures"][i];
        std::string where = "failures[" + std::to_string(i) + "].";
        if (!f.is_object()) {
            problems.push_back(where + ": expected object");
            continue;
        }
        need(f, where, "row", is_count, "non-negative integer");
        for (const char* k : {"ref", "gold", "predicted", "error"}) need(f, where, k, is_string, "string");
    }
    return problems;
}

std::shared_ptr<nl::MockBackend> gold_echo_backend(const std::vector<Example>& rows) {
    auto mock = std::make_shared<nl::MockBackend>();
    for (const auto& r : rows) mock->add_exact(r.ref, serialize(r.gold, SerializeStyle::Concierge));
    return mock;
}

} // namespace nsbot::e2e
