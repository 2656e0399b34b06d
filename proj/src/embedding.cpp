#include "mirage/embedding.hpp"

#include <cmath>
#include <stdexcept>

#include "mirage/util.hpp"

namespace mirage::embed {

EmbeddingVector EmbeddingVector::from_raw(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("embedding: empty vector");
    double sq = 0.0;
    for (double v : values) sq += v * v;
    if (sq <= 0.0) throw std::invalid_argument("embedding: zero vector");
    double inv = 1.0 / std::sqrt(sq);
    for (double& v : values) v *= inv;
    EmbeddingVector e;
    e.values_ = std::move(values);
    return e;
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("embedding: empty vector");
    double sq = 0.0;
    for (double v : values) sq += v * v;
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-6)
        throw std::invalid_argument("embedding: vector is not unit-norm");
    EmbeddingVector e;
    e.values_ = std::move(values);
    return e;
}

double EmbeddingVector::dot(const EmbeddingVector& other) const {
    if (values_.size() != other.values_.size())
        throw std::invalid_argument("embedding: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
    return s;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    return a.dot(b);
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
    if (dimension_ == 0) throw std::invalid_argument("embedder: dimension must be positive");
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) const {
    if (util::trim(text).empty()) throw std::invalid_argument("embed: empty text");
    auto tokens = util::tokenize(text);
    std::vector<double> acc(dimension_, 0.0);
    auto add_feature = [&](const std::string& feature) {
        std::uint64_t h = util::split_seed(seed_, feature);
        std::size_t bucket = static_cast<std::size_t>(h % dimension_);
        double sign = ((h >> 62) & 1) ? 1.0 : -1.0;
        acc[bucket] += sign;
    };
    for (const auto& t : tokens) add_feature("u:" + t);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) add_feature("b:" + tokens[i] + " " + tokens[i + 1]);
    // Tokens can cancel inside one bucket; the constant feature keeps the
    // vector nonzero for any input.
    add_feature("c:bias");
    return EmbeddingVector::from_raw(std::move(acc));
}

std::shared_ptr<Embedder> make_default_embedder(std::size_t dimension, std::uint64_t seed) {
    return std::make_shared<HashingEmbedder>(dimension, seed);
}

}  // namespace mirage::embed
