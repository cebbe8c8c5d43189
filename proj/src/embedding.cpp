#include "atf/embedding.hpp"

#include <cmath>

#include "atf/digest.hpp"
#include "atf/errors.hpp"
#include "atf/text.hpp"

namespace atf {

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) noexcept {
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    const double c = dot(a, b) / (na * nb);
    return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

void l2_normalize(Vector& v) noexcept {
    const double n = std::sqrt(dot(v, v));
    if (n > 0.0) {
        for (double& x : v) {
            x /= n;
        }
    }
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
    if (dimension_ == 0) {
        throw ConfigError("embedding dimension must be positive");
    }
}

Vector HashingEmbedder::embed_one(const std::string& text) const {
    Vector v(dimension_, 0.0);
    const std::string lower = text::to_lower(text);
    const std::uint64_t basis = fnv1a64(std::to_string(seed_));
    auto add = [&](std::string_view gram) {
        const std::uint64_t h = fnv1a64(gram, basis);
        const std::size_t slot = static_cast<std::size_t>(h % dimension_);
        v[slot] += (h >> 63) != 0 ? -1.0 : 1.0;
    };
    if (lower.size() < 3) {
        if (!lower.empty()) {
            add(lower);
        }
    } else {
        for (std::size_t i = 0; i + 3 <= lower.size(); ++i) {
            add(std::string_view(lower).substr(i, 3));
        }
    }
    l2_normalize(v);
    return v;
}

std::vector<Vector> HashingEmbedder::embed(std::span<const std::string> texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(embed_one(t));
    }
    return out;
}

FixtureEmbedder::FixtureEmbedder(std::map<std::string, Vector> vectors) : vectors_(std::move(vectors)) {}

std::vector<Vector> FixtureEmbedder::embed(std::span<const std::string> texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto it = vectors_.find(t);
        if (it == vectors_.end()) {
            throw FixtureMiss("embed:" + sha256_hex(t));
        }
        out.push_back(it->second);
    }
    return out;
}

} // namespace atf
