#include <gtest/gtest.h>

#include "checks.hpp"
#include "nsbot/companion.hpp"
#include "support.hpp"

using namespace nsbot;
using namespace testing_support;

namespace {

struct CompanionTest : ::testing::Test {
    Ontology onto = companion_ontology();
    rcc::ConceptGraph graph = rcc::ConceptGraph::load(data("graph/movies.yaml"));
    companion::Companion bot{onto, graph};
};

} // namespace

TEST_F(CompanionTest, EngineReplaysTheGoldenNextBlocks) {
    auto golden = companion_golden();
    auto out = replay_companion(companion_seed(), &golden);
    ASSERT_EQ(out.size(), golden.size());
    for (std::size_t i = 0; i < golden.size(); ++i) {
        EXPECT_EQ(normalize_whitespace(out[i]), normalize_whitespace(golden[i].next)) << "turn " << i + 1;
    }
}

TEST_F(CompanionTest, ServiceReplaysTheGoldenDialogue) {
    auto r = check_companion_golden();
    EXPECT_TRUE(r.ok) << r.detail;
}

TEST_F(CompanionTest, OpeningIncludesGreetingAndSnippet) {
    rcc::Rng rng(1);
    auto opened = bot.open(DialogState{}, rng);
    EXPECT_EQ(opened.next.move.subject, "Inception");
    auto k = bot.knowledge_for(opened.next, true);
    ASSERT_GE(k.size(), 2u);
    EXPECT_EQ(k.front().functor, "greet");
    EXPECT_EQ(k.back().functor, "snippet");
    EXPECT_TRUE(validate(k, onto, Side::Action).ok());
}

TEST_F(CompanionTest, JumpKnowledgeNamesSourceAndBridge) {
    companion::NextBlock next;
    next.move.kind = rcc::MoveKind::JumpTopic;
    next.move.subject = "Jennifer Lawrence";
    next.move.category = "person";
    next.move.aspect = "filmography";
    next.move.from = "Don't Look Up";
    next.move.relation = "acted_in";
    auto k = bot.knowledge_for(next, false);
    ASSERT_EQ(k.size(), 2u);
    EXPECT_EQ(k[0], make_predicate("recall", {atom("Don't Look Up")}));
    EXPECT_EQ(k[1].functor, "snippet");

    next.move.subject = "The Wolf of Wall Street";
    next.move.category = "movie";
    next.move.aspect = "plot episode";
    next.move.from = "Inception";
    next.move.via = "Leonardo DiCaprio";
    k = bot.knowledge_for(next, false);
    ASSERT_EQ(k.size(), 3u);
    EXPECT_EQ(k[1].functor, "via");
    EXPECT_EQ(k[1].args[0].text(), "Leonardo DiCaprio");
}

TEST_F(CompanionTest, UnknownEntityFallsBackToPreviousConcept) {
    rcc::Rng rng(2);
    auto s = bot.open(DialogState{}, rng);
    auto step = bot.step(s.state, parse_predicates("talk(movie, Nonexistent Film, plot episode). attitude(positive)."), rng);
    ASSERT_TRUE(step.gap);
    EXPECT_EQ(*step.gap, "Nonexistent Film");
    EXPECT_NE(step.next.move.subject, "Nonexistent Film");
    EXPECT_NE(graph.find(step.next.move.subject), nullptr);
}

TEST_F(CompanionTest, QuitEndsTheChat) {
    rcc::Rng rng(2);
    auto s = bot.open(DialogState{}, rng);
    auto step = bot.step(s.state, parse_predicates("quit."), rng);
    EXPECT_TRUE(step.next.quit);
    EXPECT_EQ(serialize(step.next.predicates(), SerializeStyle::Companion), "quit.");
    EXPECT_THROW(bot.step(step.state, {}, rng), StateClosed);
}

TEST_F(CompanionTest, InvalidThemesAreRejected) {
    rcc::Rng rng(2);
    auto s = bot.open(DialogState{}, rng);
    EXPECT_THROW(bot.step(s.state, parse_predicates("attitude(meh)."), rng), ValidationFailed);
}

TEST_F(CompanionTest, EveryNextBlockValidatesAndNamesAGraphEntity) {
    std::mt19937_64 gen(4);
    for (int c = 0; c < 50; ++c) {
        rcc::Rng rng(gen());
        auto s = bot.open(DialogState{}, rng);
        for (int t = 0; t < 20; ++t) {
            const auto& m = s.next.move;
            EXPECT_TRUE(validate(s.next.predicates(), onto, Side::Action).ok());
            ASSERT_NE(graph.find(m.subject), nullptr);
            EXPECT_FALSE(m.aspect.empty());
            PredicateSet themes;
            if (gen() % 2) {
                const auto& aspects = *onto.aspects_for(m.category);
                themes = {make_predicate("talk", {atom(m.category), atom(m.subject), atom(aspects[gen() % aspects.size()])}),
                          make_predicate("attitude", {atom(gen() % 2 ? "positive" : "negative")})};
            }
            s = bot.step(s.state, themes, rng);
        }
    }
}

TEST_F(CompanionTest, GraphCategoryWithoutCatalogIsRejected) {
    auto narrow = Ontology::from_yaml(R"(format: 1
task: companion
slots: []
functors:
  - {name: talk, args: [category, entity, aspect]}
  - {name: attitude, args: [{one_of: [positive, negative]}]}
  - {name: quit, args: []}
aspects:
  movie: [plot episode]
)");
    EXPECT_THROW(companion::Companion(narrow, graph), OntologyError);
}
