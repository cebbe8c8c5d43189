#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace atf {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double cosine_similarity(std::span<const double> a, std::span<const double> b) noexcept;
/// Zero vectors are returned unchanged.
void l2_normalize(Vector& v) noexcept;

/// Text to unit vectors. Implementations must be callable from several threads.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<Vector> embed(std::span<const std::string> texts) = 0;
    virtual std::string name() const = 0;
};

/// Signed feature hashing of lowercase character 3-grams. Deterministic for a
/// given seed and dimension; no model files.
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dimension = 256, std::uint64_t seed = 0);

    Vector embed_one(const std::string& text) const;
    std::vector<Vector> embed(std::span<const std::string> texts) override;
    std::string name() const override { return "hashing"; }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

/// Replays recorded vectors by exact text; throws FixtureMiss otherwise.
class FixtureEmbedder : public Embedder {
public:
    explicit FixtureEmbedder(std::map<std::string, Vector> vectors);

    std::vector<Vector> embed(std::span<const std::string> texts) override;
    std::string name() const override { return "fixture"; }

private:
    std::map<std::string, Vector> vectors_;
};

} // namespace atf
