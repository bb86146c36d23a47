#include <gtest/gtest.h>

#include <set>

#include "e2s/pipeline.hpp"
#include "e2s/slotfill.hpp"
#include "support.hpp"

using namespace e2s;
using e2s::test::fixture_lexicon;
using e2s::test::words;

namespace {

const EntityPool& pool() {
  static const EntityPool p = EntityPool::load(test::fixture("pool.json"));
  return p;
}

}  // namespace

TEST(Pronoun, Rules) {
  const auto& g = fixture_lexicon().genders();
  StoryMemory m;
  EXPECT_EQ(resolve_pronoun(m, g), "it");
  m.bind("<PERSON>0", "Kira Nerys", "PERSON");
  EXPECT_EQ(resolve_pronoun(m, g), "she");
  EXPECT_EQ(resolve_pronoun(m, g, PronounCase::Objective), "her");
  m.bind("<ORG>0", "Maquis", "ORG");
  EXPECT_EQ(resolve_pronoun(m, g), "they");
  m.bind("<PERSON>1", "Dana Scully", "PERSON");  // dana is split between genders
  EXPECT_EQ(resolve_pronoun(m, g), "they");
  m.bind("<PERSON>2", "Han Solo", "PERSON");
  EXPECT_EQ(resolve_pronoun(m, g), "he");
  m.bind("<LOCATION>0", "Bajor", "LOCATION");
  EXPECT_EQ(resolve_pronoun(m, g), "it");
}

TEST(Hyponym, LeafAndSingleChild) {
  Rng rng(1);
  const auto lex = Lexicon::from_json(nlohmann::json::parse(R"({
    "hypernyms": {"b.n.01": "a.n.01", "c.n.01": "b.n.01"},
    "lemma_index": {"n": {"a": "a.n.01"}}, "verb_classes": {}, "frames": {}, "gender_table": {}})"));
  EXPECT_EQ(choose_hyponym("c.n.01", lex, rng), "c.n.01");
  const auto one = Lexicon::from_json(nlohmann::json::parse(R"({
    "hypernyms": {"b.n.01": "a.n.01"},
    "lemma_index": {"n": {}}, "verb_classes": {}, "frames": {}, "gender_table": {}})"));
  EXPECT_EQ(choose_hyponym("a.n.01", one, rng), "b.n.01");
}

TEST(Hyponym, VesselDescendantsWithinTwoLevels) {
  const auto j = test::read_json(test::frozen("wordnet.json")).at("vessel.n.02");
  std::set<std::string> allowed;
  for (const auto& s : j.at("depth1")) allowed.insert(s.get<std::string>());
  for (const auto& s : j.at("depth2")) allowed.insert(s.get<std::string>());
  Rng rng(5);
  std::set<std::string> seen;
  for (int i = 0; i < 400; ++i) {
    const auto h = choose_hyponym("vessel.n.02", fixture_lexicon(), rng);
    EXPECT_TRUE(allowed.count(h)) << h;
    const auto d = fixture_lexicon().hypernym_distance(h, "vessel.n.02");
    ASSERT_TRUE(d.has_value());
    EXPECT_GE(*d, 1);
    EXPECT_LE(*d, 2);
    seen.insert(h);
  }
  EXPECT_GT(seen.size(), 10u);
}

TEST(Verbs, Conjugation) {
  const auto& lex = fixture_lexicon();
  EXPECT_EQ(realize_verb("assessment-34.1", lex, true), "scan");
  EXPECT_EQ(realize_verb("assessment-34.1", lex, false), "scans");
  EXPECT_EQ(realize_verb("act-114-1-1", lex, false), "acts");
}

TEST(Fill, BargeSentenceWithGivenBindings) {
  StoryMemory m;
  m.bind("<ORG>0", "Jabba the Hutt", "ORG");
  m.bind("vessel.n.02", "bareboat", std::string(kSynsetCategory), "bareboat.n.01");
  m.bind("<VESSEL>0", "Uss Lakota", "VESSEL");
  Rng rng(0);
  const auto r = fill_sentence(words("the <ORG>0 can not assessment-34.1 the vessel.n.02 of the <VESSEL>0 ."),
                               m, pool(), fixture_lexicon(), rng);
  EXPECT_EQ(r.text, "The Jabba the Hutt can not scan the bareboat of the Uss Lakota.");
}

TEST(Fill, TagsStayBoundAcrossAStory) {
  const auto& c = test::fixture_corpus();
  // Twenty sentences read as one story.
  std::vector<GeneralizedSentence> story;
  for (const auto& recs : c.stories)
    for (const auto& r : recs) {
      if (story.size() == 20) break;
      story.push_back(r.sentence);
    }
  ASSERT_EQ(story.size(), 20u);
  StoryMemory m;
  Rng rng(9);
  std::map<std::string, std::string> first;
  for (const auto& s : story) {
    const auto r = fill_sentence(s, m, pool(), fixture_lexicon(), rng);
    ASSERT_EQ(r.tokens.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (is_entity_tag(s[i])) {
        auto it = first.emplace(s[i], r.tokens[i]).first;
        EXPECT_EQ(it->second, r.tokens[i]) << s[i];
      }
      if (const Binding* b = m.find(s[i]); b && is_synset_id(s[i])) EXPECT_EQ(b->surface, r.tokens[i]) << s[i];
    }
  }
  for (const auto& b : m.bindings())
    for (std::size_t i = 1; i < b.mentions.size(); ++i) EXPECT_LT(b.mentions[i - 1], b.mentions[i]);
}

TEST(Fill, DistinctTagsGetDistinctNames) {
  StoryMemory m;
  Rng rng(3);
  const auto r = fill_sentence(words("<PERSON>0 send-11.1 <PERSON>1 to <PERSON>2 ."), m, pool(), fixture_lexicon(), rng);
  const std::set<std::string> names = {r.tokens[0], r.tokens[2], r.tokens[4]};
  EXPECT_EQ(names.size(), 3u);
}

TEST(Fill, PoolExhaustionFallsBackToTag) {
  StoryMemory m;
  Rng rng(3);
  const EntityPool tiny(std::map<std::string, std::vector<std::string>>{{"ORG", {"Maquis"}}});
  const auto r = fill_sentence(words("<ORG>0 meet-36.3 <ORG>1 ."), m, tiny, fixture_lexicon(), rng);
  EXPECT_EQ(r.tokens[0], "Maquis");
  EXPECT_EQ(r.tokens[2], "<ORG>1");
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Fill, PronounsAndAgreement) {
  StoryMemory m;
  Rng rng(4);
  const EntityPool orgs(std::map<std::string, std::vector<std::string>>{{"ORG", {"Maquis"}}});
  const auto a = fill_sentence(words("<ORG>0 escape-51.1 ."), m, orgs, fixture_lexicon(), rng);
  const auto b = fill_sentence(words("<PRP> escape-51.1 ."), m, orgs, fixture_lexicon(), rng);
  EXPECT_EQ(b.tokens[0], "they");
  EXPECT_EQ(b.tokens[1], realize_verb("escape-51.1", fixture_lexicon(), true));
  StoryMemory empty;
  EXPECT_EQ(fill_sentence(words("<PRP> escape-51.1 ."), empty, orgs, fixture_lexicon(), rng).tokens[0], "it");
}

TEST(Fill, SameSeedSameStory) {
  std::vector<StorySentence> input;
  for (const auto& r : test::fixture_corpus().stories.at(0)) input.push_back({r.story_id, r.sentence});
  for (const auto& r : test::fixture_corpus().stories.at(1)) input.push_back({r.story_id, r.sentence});
  const auto a = fill_stories(input, pool(), fixture_lexicon(), 11);
  const auto b = fill_stories(input, pool(), fixture_lexicon(), 11);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].text, b[i].text);
}

TEST(Fill, GoldenFilledStory) {
  std::vector<StorySentence> input;
  for (const auto& r : read_events_jsonl(test::fixture("golden_events.jsonl")))
    input.push_back({r.story_id, r.sentence});
  const auto got = fill_stories(input, pool(), fixture_lexicon(), 5);
  const auto want = test::read_json(test::fixture("golden_filled.json")).get<std::vector<std::string>>();
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].text, want[i]) << i;
}

TEST(Fill, CopulaAgreesWithSubject) {
  StoryMemory m;
  Rng rng(6);
  EXPECT_EQ(fill_sentence(words("<PRP> be upset ."), m, pool(), fixture_lexicon(), rng).text, "It is upset.");
  StoryMemory orgs;
  orgs.bind("<ORG>0", "Maquis", "ORG");
  EXPECT_EQ(fill_sentence(words("<PRP> be upset ."), orgs, pool(), fixture_lexicon(), rng).text, "They are upset.");
  EXPECT_EQ(fill_sentence(words("<PRP> can be upset ."), orgs, pool(), fixture_lexicon(), rng).text,
            "They can be upset.");
}
