#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mirage::embed {

// Unit-norm vector; cosine of two EmbeddingVectors is a plain dot product.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    // Normalizes to unit L2 norm. Throws std::invalid_argument on a zero or
    // empty vector.
    static EmbeddingVector from_raw(std::vector<double> values);

    // Values must already be unit-norm (|norm - 1| <= 1e-6), e.g. loaded from
    // a store file. Throws std::invalid_argument otherwise.
    static EmbeddingVector from_unit(std::vector<double> values);

    const std::vector<double>& values() const { return values_; }
    std::size_t dimension() const { return values_.size(); }

    double dot(const EmbeddingVector& other) const;

private:
    std::vector<double> values_;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;

    // Deterministic for a fixed embedder instance. Throws
    // std::invalid_argument when text is empty after trimming.
    virtual EmbeddingVector embed(std::string_view text) const = 0;

    virtual std::size_t dimension() const = 0;
};

// Feature-hashing embedder: token unigrams and bigrams are hashed into
// `dimension` signed buckets, then L2-normalized. Similar texts share tokens
// and therefore buckets, which is all retrieval needs.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dimension = 256, std::uint64_t seed = 0x6d697261676531ull);

    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

std::shared_ptr<Embedder> make_default_embedder(std::size_t dimension = 256,
                                                std::uint64_t seed = 0x6d697261676531ull);

}  // namespace mirage::embed
