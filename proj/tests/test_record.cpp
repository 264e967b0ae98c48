#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "support.hpp"

using namespace a3rank;

namespace {

ErrorKind kind_of(const std::string& line) {
    try {
        parse_record(line);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error for " << line;
    return ErrorKind::Io;
}

}  // namespace

TEST(PredictionVector, AcceptsValidVector) {
    PredictionVector v({0.25, 0.75});
    EXPECT_EQ(v.size(), 2u);
    EXPECT_DOUBLE_EQ(v[1], 0.75);
}

TEST(PredictionVector, RejectsBadVectors) {
    EXPECT_THROW(PredictionVector({1.0}), Error);
    EXPECT_THROW(PredictionVector({0.5, 0.6}), Error);
    EXPECT_THROW(PredictionVector({-0.1, 1.1}), Error);
    EXPECT_THROW(PredictionVector({std::nan(""), 1.0}), Error);
}

TEST(PredictionVector, SumToleranceIsInclusive) {
    EXPECT_NO_THROW(PredictionVector({0.5, 0.50009}));
    EXPECT_THROW(PredictionVector({0.5, 0.5002}), Error);
}

TEST(ParseRecord, MinimalRecord) {
    auto r = parse_record(R"({"sample_id":"a","probs":[0.1,0.9]})");
    EXPECT_EQ(r.sample_id, "a");
    EXPECT_TRUE(r.variants.empty());
    EXPECT_FALSE(r.label);
    EXPECT_FALSE(r.features);
}

TEST(ParseRecord, FullRecordAndUnknownFields) {
    auto r = parse_record(
        R"({"sample_id":"a","probs":[0.1,0.9],"variants":[{"op_id":"fog:1","probs":[0.6,0.4]}],)"
        R"("label":1,"features":[1.5,-2],"extra":{"x":1}})");
    ASSERT_EQ(r.variants.size(), 1u);
    EXPECT_EQ(r.variants[0].op_id, "fog:1");
    EXPECT_EQ(*r.label, 1u);
    EXPECT_EQ(r.features->size(), 2u);
}

TEST(ParseRecord, NullOptionalFieldsAreAbsent) {
    auto r = parse_record(R"({"sample_id":"a","probs":[0.1,0.9],"variants":null,"label":null,"features":null})");
    EXPECT_TRUE(r.variants.empty());
    EXPECT_FALSE(r.label);
    EXPECT_FALSE(r.features);
}

TEST(ParseRecord, ErrorKinds) {
    EXPECT_EQ(kind_of("{not json"), ErrorKind::MalformedJson);
    EXPECT_EQ(kind_of("[1,2]"), ErrorKind::SchemaViolation);
    EXPECT_EQ(kind_of(R"({"probs":[0.5,0.5]})"), ErrorKind::SchemaViolation);
    EXPECT_EQ(kind_of(R"({"sample_id":"a"})"), ErrorKind::SchemaViolation);
    EXPECT_EQ(kind_of(R"({"sample_id":"a","probs":[0.5,"x"]})"), ErrorKind::SchemaViolation);
    EXPECT_EQ(kind_of(R"({"sample_id":"a","probs":[0.5,0.6]})"), ErrorKind::InvariantViolation);
    EXPECT_EQ(kind_of(R"({"sample_id":"a","probs":[0.5,0.5],"label":2})"), ErrorKind::InvariantViolation);
    EXPECT_EQ(kind_of(R"({"sample_id":"a","probs":[0.5,0.5],"label":-1})"), ErrorKind::InvariantViolation);
    EXPECT_EQ(kind_of(R"({"sample_id":"a","probs":[0.5,0.5],"label":0.5})"), ErrorKind::SchemaViolation);
    EXPECT_EQ(kind_of(R"({"sample_id":"a","probs":[0.5,0.5],"variants":[{"op_id":"x","probs":[0.2,0.3,0.5]}]})"),
              ErrorKind::InvariantViolation);
    EXPECT_EQ(kind_of(R"({"sample_id":"a","probs":[0.5,0.5],"variants":[{"probs":[0.5,0.5]}]})"),
              ErrorKind::SchemaViolation);
}

TEST(ParseRecord, ErrorsCarrySampleId) {
    try {
        parse_record(R"({"sample_id":"bad-one","probs":[0.5,0.6]})");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.sample_id(), "bad-one");
    }
}

TEST(Dataset, RejectsDuplicatesAndClassMismatch) {
    Dataset d;
    d.push_back(parse_record(R"({"sample_id":"a","probs":[0.5,0.5]})"));
    EXPECT_THROW(
        try { d.push_back(parse_record(R"({"sample_id":"a","probs":[0.4,0.6]})")); } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::DuplicateSampleId);
            throw;
        },
        Error);
    EXPECT_THROW(
        try { d.push_back(parse_record(R"({"sample_id":"b","probs":[0.2,0.2,0.6]})")); } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::InconsistentClassCount);
            throw;
        },
        Error);
}

TEST(LoadDataset, ReportsLineNumbersAndSkipsBlankLines) {
    std::istringstream in("{\"sample_id\":\"a\",\"probs\":[0.5,0.5]}\r\n\n  \n{\"sample_id\":\"b\",\"probs\":[0.5]}\n");
    try {
        load_dataset(in);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_EQ(e.kind(), ErrorKind::InvariantViolation);
    }
}

TEST(RoundTrip, FuzzedRecordsSurviveSerialization) {
    std::mt19937_64 gen(11);
    for (int i = 0; i < 1000; ++i) {
        auto r = testing_support::random_record(gen, "id-" + std::to_string(i));
        if (i % 3 == 0) r.label.reset();
        if (i % 4 == 0) r.features = std::vector<double>{1e-300, -3.25, 1.0 / 3.0};
        const auto line = serialize_record(r);
        ASSERT_EQ(line.back(), '\n');
        EXPECT_EQ(parse_record(line), r);
    }
}

TEST(RoundTrip, DatasetWriteLoad) {
    std::mt19937_64 gen(3);
    auto d = testing_support::random_dataset(gen, 50, 5, 3);
    std::stringstream s;
    write_dataset(s, d);
    auto back = load_dataset(s);
    ASSERT_EQ(back.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(back[i], d[i]);
}

TEST(Fixture, WorkedExampleParses) {
    std::ifstream f(std::string(A3RANK_TEST_DATA) + "/worked_example.jsonl");
    auto d = load_dataset(f);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].variants.size(), 4u);
    EXPECT_EQ(d.num_classes(), 10u);
}
