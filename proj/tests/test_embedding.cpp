#include <doctest.h>

#include <cmath>
#include <random>

#include "mirage/embedding.hpp"
#include "mirage/util.hpp"

using namespace mirage;

namespace {

// Independent cosine oracle: explicit dot / (|u||v|) over raw values.
double cosine_oracle(const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace

TEST_CASE("embedding vectors are unit norm") {
    embed::HashingEmbedder embedder(64);
    auto v = embedder.embed("send sms to bob");
    double norm = 0;
    for (double x : v.values()) norm += x * x;
    CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-6);
    CHECK(v.dimension() == 64);
}

TEST_CASE("embed is deterministic; self-cosine is 1") {
    embed::HashingEmbedder embedder(256);
    auto a = embedder.embed("send sms");
    auto b = embedder.embed("send sms");
    CHECK(a.values() == b.values());
    CHECK(embed::cosine(a, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empty text is rejected") {
    embed::HashingEmbedder embedder(16);
    CHECK_THROWS_AS(embedder.embed(""), std::invalid_argument);
    CHECK_THROWS_AS(embedder.embed("   \t\n"), std::invalid_argument);
}

TEST_CASE("unrelated long strings land strictly inside (-1, 1)") {
    embed::HashingEmbedder embedder(256);
    std::string a =
        "the quick brown fox jumps over a lazy dog while fifty random words about sailing "
        "weather maps harbor lighthouse tides currents anchors ropes sails masts decks cabins "
        "portholes compasses charts stars navigation crews captains storms waves foam salt wind";
    std::string b =
        "completely different topic list groceries apples bananas flour sugar butter eggs milk "
        "cheese bread coffee tea honey jam oats rice beans lentils pasta sauce tomatoes onions "
        "garlic peppers carrots celery potatoes spinach kale yogurt almonds walnuts raisins";
    auto va = embedder.embed(a);
    auto vb = embedder.embed(b);
    double sim = embed::cosine(va, vb);
    CHECK(sim > -1.0);
    CHECK(sim < 1.0);
    CHECK(sim == doctest::Approx(cosine_oracle(va.values(), vb.values())).epsilon(1e-12));
}

TEST_CASE("similar texts score higher than unrelated ones") {
    embed::HashingEmbedder embedder(256);
    auto query = embedder.embed("create a new contact for Bob");
    auto close = embedder.embed("create a new contact for Ann");
    auto far = embedder.embed("run the stopwatch in the clock app");
    CHECK(embed::cosine(query, close) > embed::cosine(query, far));
}

TEST_CASE("cosine equals brute-force oracle over a 100-vector fuzz set") {
    embed::HashingEmbedder embedder(128);
    std::mt19937_64 rng(1234);
    std::vector<embed::EmbeddingVector> vectors;
    const char* pool[] = {"open",   "click", "type",  "save",  "note",   "contact", "wifi",
                          "camera", "photo", "music", "timer", "record", "browser", "expense"};
    for (int i = 0; i < 100; ++i) {
        std::string text;
        int words = 3 + static_cast<int>(rng() % 8);
        for (int w = 0; w < words; ++w) {
            if (w) text += ' ';
            text += pool[rng() % (sizeof(pool) / sizeof(pool[0]))];
            text += std::to_string(rng() % 50);
        }
        vectors.push_back(embedder.embed(text));
    }
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = i + 1; j < vectors.size(); ++j) {
            double got = embed::cosine(vectors[i], vectors[j]);
            double want = cosine_oracle(vectors[i].values(), vectors[j].values());
            CHECK(std::abs(got - want) <= 1e-9);
        }
    }
}

TEST_CASE("from_unit rejects non-unit vectors") {
    CHECK_THROWS_AS(embed::EmbeddingVector::from_unit({0.5, 0.5}), std::invalid_argument);
    auto ok = embed::EmbeddingVector::from_unit({1.0, 0.0});
    CHECK(ok.dimension() == 2);
}
