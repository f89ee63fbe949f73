#include <doctest.h>

#include <fstream>
#include <sstream>

#include "softlabel/error.hpp"
#include "softlabel/records.hpp"
#include "support.hpp"

using namespace softlabel;
using nlohmann::json;

TEST_SUITE("records") {

TEST_CASE("tweet round trip") {
    Tweet t{"42", "Hello #World", "2020-08", TweetCategory::AntiAsian, "hello world"};
    const auto back = tweet_from_json(to_json(t));
    CHECK(back.id == t.id);
    CHECK(back.raw_text == t.raw_text);
    CHECK(back.month == t.month);
    CHECK(back.category == t.category);
    CHECK(back.text == t.text);

    const auto minimal = tweet_from_json(json{{"id", 7}, {"raw_text", "x"}, {"month", "2020-07"}});
    CHECK(minimal.id == "7");
    CHECK_THROWS_WITH_AS(tweet_from_json(json{{"id", "1"}}), doctest::Contains("raw_text"), DataError);
    CHECK_THROWS_WITH_AS(tweet_from_json(json{{"id", "1"}, {"raw_text", "x"}, {"category", "alien"}}),
                         doctest::Contains("category"), DataError);
}

TEST_CASE("annotation record round trip") {
    AnnotationRecord r;
    r.tweet_id = "t1";
    r.votes = {std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 3}, std::vector<int>{0, 1, 2}};
    const auto j = to_json(r);
    CHECK(j["votes"]["target"][2] == "both");
    const auto back = annotation_record_from_json(j);
    CHECK(back.votes == r.votes);

    const auto ints = annotation_record_from_json(
        json::parse(R"({"tweet_id":"x","votes":{"aggression":[1,1,2],"target":[0,1,1],"type":[1,2,1]}})"));
    CHECK(ints.of(Attribute::Type) == std::vector<int>{1, 2, 1});

    CHECK_THROWS_WITH_AS(annotation_record_from_json(json::parse(
                             R"({"tweet_id":"x","votes":{"aggression":[1,1,2],"type":[1,2,1]}})")),
                         doctest::Contains("votes.target"), DataError);
    CHECK_THROWS_WITH_AS(annotation_record_from_json(json::parse(
                             R"({"tweet_id":"x","votes":{"aggression":[1,1,"mad"],"target":[0,1,1],"type":[1,2,1]}})")),
                         doctest::Contains("votes.aggression"), DataError);
    CHECK_THROWS_WITH_AS(annotation_record_from_json(json::parse(
                             R"({"tweet_id":"x","votes":{"aggression":[1,1],"target":[0,1,1],"type":[1,2,1]}})")),
                         doctest::Contains("votes"), DataError);
}

TEST_CASE("labeled example round trip") {
    LabeledExample ex;
    ex.tweet_id = "e";
    ex.labels[0] = {{1.0 / 3, 0, 2.0 / 3}, 2, AnnotationClass::B};
    ex.labels[1] = {{1.0, 0.0}, 0, AnnotationClass::A};
    ex.labels[2] = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1, AnnotationClass::C};
    const auto back = labeled_example_from_json(to_json(ex));
    for (auto a : kAttributes) {
        CHECK(back.of(a).soft == ex.of(a).soft);
        CHECK(back.of(a).silver == ex.of(a).silver);
        CHECK(back.of(a).annot_class == ex.of(a).annot_class);
    }
    auto j = to_json(ex);
    j["labels"]["type"]["soft"] = {0.5, 0.5};
    CHECK_THROWS_WITH_AS(labeled_example_from_json(j), doctest::Contains("labels.type.soft"), DataError);
}

TEST_CASE("predictions and truth round trip") {
    PredictionRecord p{"id", {Attribute::Aggression, Attribute::Type}, {2, 0}, {{0.1, 0.2, 0.7}, {0.8, 0.1, 0.1}}};
    const auto back = prediction_record_from_json(to_json(p));
    CHECK(back.attributes == p.attributes);
    CHECK(back.predicted == p.predicted);
    CHECK(back.probabilities == p.probabilities);
    CHECK_THROWS_WITH_AS(prediction_record_from_json(json::parse(R"({"tweet_id":"a","predictions":{"mood":"x"}})")),
                         doctest::Contains("predictions.mood"), DataError);

    TrueLabel t{"z", {1, 3, 2}};
    CHECK(true_label_from_json(to_json(t)).labels == t.labels);
}

TEST_CASE("jsonl files") {
    const auto dir = std::filesystem::temp_directory_path() / "softlabel_records_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "tweets.jsonl";
    std::vector<Tweet> tweets = {{"1", "a", "2020-07", TweetCategory::Normal, ""},
                                 {"2", "b b", "2020-08", TweetCategory::AntiBlack, ""}};
    write_file_atomic(path, jsonl_string(to_json_rows(tweets)));
    CHECK_FALSE(std::filesystem::exists(dir / "tweets.jsonl.tmp"));
    const auto back = read_tweets(path);
    REQUIRE(back.size() == 2);
    CHECK(back[1].category == TweetCategory::AntiBlack);

    const Normalizer norm(PhraseLists::defaults(), testing::bundled_lexicon());
    const auto texts = tweet_texts(back, norm);
    CHECK(texts.at("2") == "b");

    {
        std::ofstream out(dir / "bad.jsonl");
        out << R"({"id":"1","raw_text":"ok"})" << "\n\n" << R"({"id":"2"})" << "\n";
    }
    CHECK_THROWS_WITH_AS(read_tweets(dir / "bad.jsonl"), doctest::Contains("bad.jsonl:2"), DataError);
    {
        std::ofstream out(dir / "broken.jsonl");
        out << "{not json\n";
    }
    CHECK_THROWS_WITH_AS(read_jsonl(dir / "broken.jsonl"), doctest::Contains("invalid JSON"), DataError);
    CHECK_THROWS_AS(read_jsonl(dir / "missing.jsonl"), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("checksum") {
    CHECK(checksum("") == "cbf29ce484222325");
    CHECK(checksum("a") == "af63dc4c8601ec8c");
    CHECK(checksum("abc") != checksum("abd"));
}

TEST_CASE("corpus stats serialization") {
    std::vector<AnnotationRecord> records(2);
    records[0].tweet_id = "a";
    records[0].votes = {std::vector<int>{1, 1, 2}, std::vector<int>{1, 1, 0}, std::vector<int>{1, 1, 2}};
    records[1].tweet_id = "b";
    records[1].votes = {std::vector<int>{0, 0, 0}, std::vector<int>{0, 0, 0}, std::vector<int>{0, 0, 0}};
    const auto corpus = label_corpus(records);
    const auto j = to_json(corpus.stats);
    CHECK(j["retained_records"] == 2);
    CHECK(j["attributes"]["aggression"]["counts"]["somewhat"] == 1);
    CHECK(j["attributes"]["target"]["adjusted_counts"].size() == 2);
    CHECK(j["attributes"]["type"]["class_cross_tab"]["normal"]["A"] == 1);
    CHECK(j.contains("target_kappa_full"));
}

}  // TEST_SUITE
