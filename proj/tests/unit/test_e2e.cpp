#include <gtest/gtest.h>

#include <fstream>

#include <json.hpp>

#include "checks.hpp"
#include "nsbot/e2e.hpp"
#include "support.hpp"

using namespace nsbot;
using namespace testing_support;
using json = nlohmann::json;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST(E2e, CanonicalSlots) {
    EXPECT_EQ(e2e::canonical_slot("eatType"), "establishment");
    EXPECT_EQ(e2e::canonical_slot(" priceRange "), "price range");
    EXPECT_EQ(e2e::canonical_slot("food"), "food type");
    EXPECT_EQ(e2e::canonical_slot("customer rating"), "customer rating");
    EXPECT_EQ(e2e::canonical_slot("familyFriendly"), "family friendly");
    EXPECT_EQ(e2e::canonical_slot("Mystery"), "mystery");
}

TEST(E2e, ParsesMeaningRepresentations) {
    auto p = e2e::parse_mr("name[The Eagle], eatType[coffee shop], priceRange[less than £20]");
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(serialize(p[1], SerializeStyle::Concierge), "require('establishment',['coffee shop'])");
    EXPECT_EQ(p[2].args[1].items()[0].text(), "less than £20");
    EXPECT_TRUE(e2e::parse_mr("").empty());
    EXPECT_THROW(e2e::parse_mr("name[The Eagle"), Error);
    EXPECT_THROW(e2e::parse_mr("[x]"), Error);
    EXPECT_THROW(e2e::parse_mr("name[a] trailing"), Error);
}

TEST(E2e, NormalizationIgnoresCaseOrderAndDuplicates) {
    auto a = e2e::normalize(parse_predicates("require('food',['Italian ']), require('eatType',['pub'])"));
    auto b = e2e::normalize(parse_predicates("require('establishment',['PUB']), require('food type',['italian']), "
                                             "require('food type',['italian'])"));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 2u);
}

TEST(E2e, LoadsTheSampleFixtures) {
    auto rows = e2e::load_dataset(data("e2e/sample.csv"));
    EXPECT_EQ(rows.size(), 20u);
    for (const auto& r : rows) {
        EXPECT_FALSE(r.ref.empty());
        EXPECT_FALSE(r.gold.empty());
    }
    EXPECT_EQ(e2e::load_dataset(data("e2e/shots.csv")).size(), 11u);
    EXPECT_EQ(e2e::load_dataset(data("e2e/sample.csv"), 5).size(), 5u);
}

TEST(E2e, DatasetErrors) {
    EXPECT_THROW(e2e::load_dataset("/nonexistent/e2e.csv"), nl::DatasetMissing);
    EXPECT_THROW(e2e::load_dataset(write_temp("nsbot-e2e-nocol.csv", "mr,text\na[b],c\n")), concierge::FormatError);
    EXPECT_THROW(e2e::load_dataset(write_temp("nsbot-e2e-bad.csv", "mr,ref\n\"name[x\",y\n")), concierge::FormatError);
}

TEST(E2e, EchoScoresOneAndEmptyScoresZero) {
    auto r = check_e2e_substitute();
    EXPECT_TRUE(r.ok) << r.detail;
}

TEST(E2e, PerSlotCountsAndFailures) {
    auto onto = Ontology::load(data("ontology/e2e.yaml"));
    std::vector<e2e::Example> rows = {
        {"name[A], food[Thai]", "A serves Thai.", e2e::parse_mr("name[A], food[Thai]")},
        {"name[B], area[riverside]", "B is by the river.", e2e::parse_mr("name[B], area[riverside]")},
    };
    auto mock = std::make_shared<nl::MockBackend>();
    mock->add_exact("A serves Thai.", "require('name',['a']), require('food type',['thai'])");
    mock->add_exact("B is by the river.", "require('name',['B']), require('food type',['Thai'])");
    auto report = e2e::evaluate_parsing(rows, mock, onto, {});
    EXPECT_EQ(report.exact, 1u);
    EXPECT_DOUBLE_EQ(report.accuracy, 0.5);
    EXPECT_EQ(report.per_slot.at("name").true_positive, 2u);
    EXPECT_EQ(report.per_slot.at("food type").false_positive, 1u);
    EXPECT_EQ(report.per_slot.at("area").false_negative, 1u);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0].row, 2u);
    EXPECT_TRUE(e2e::check_report_schema(report.to_json()).empty());
}

TEST(E2e, UnparseableRowsAreRecordedNotFatal) {
    auto onto = Ontology::load(data("ontology/e2e.yaml"));
    std::vector<e2e::Example> rows = {{"name[A]", "A.", e2e::parse_mr("name[A]")}};
    auto mock = std::make_shared<nl::MockBackend>();
    mock->add_exact("A.", "require(");
    auto report = e2e::evaluate_parsing(rows, mock, onto, {});
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_FALSE(report.failures[0].error.empty());
}

TEST(E2e, SchemaCheckerCatchesBrokenReports) {
    auto onto = Ontology::load(data("ontology/e2e.yaml"));
    auto rows = e2e::load_dataset(data("e2e/sample.csv"), 4);
    auto good = json::parse(e2e::evaluate_parsing(rows, std::make_shared<nl::MockBackend>(), onto, {}).to_json());
    EXPECT_TRUE(e2e::check_report_schema(good.dump()).empty());

    auto broken = [&](auto mutate) {
        auto doc = good;
        mutate(doc);
        return e2e::check_report_schema(doc.dump());
    };
    EXPECT_FALSE(broken([](json& d) { d.erase("accuracy"); }).empty());
    EXPECT_FALSE(broken([](json& d) { d["format"] = 2; }).empty());
    EXPECT_FALSE(broken([](json& d) { d["accuracy"] = 1.5; }).empty());
    EXPECT_FALSE(broken([](json& d) { d["exact"] = 3; }).empty());
    EXPECT_FALSE(broken([](json& d) { d["failures"].erase(0); }).empty());
    EXPECT_FALSE(broken([](json& d) { d["failures"][0]["row"] = "one"; }).empty());
    EXPECT_FALSE(broken([](json& d) { d["per_slot"]["name"] = {{"true_positive", -1}}; }).empty());
    EXPECT_FALSE(e2e::check_report_schema("not json").empty());
    EXPECT_FALSE(e2e::check_report_schema("[]").empty());
}
