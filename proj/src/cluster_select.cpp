#include "atf/cluster_select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "atf/errors.hpp"
#include "atf/text.hpp"

namespace atf {

namespace {

const std::vector<std::string> kAggregationWords = {"count",  "total",    "sum",        "average", "mean",
                                                     "number", "combined", "altogether", "overall"};
const std::vector<std::string> kComparativeWords = {
    "more",   "less",  "fewer",  "greater", "higher", "lower",  "larger", "smaller", "bigger",  "better",
    "worse",  "most",  "least",  "highest", "lowest", "before", "after",  "earlier", "later",   "between",
    "exceed", "above", "below",  "over",    "under",  "longer", "shorter", "older",  "younger", "than"};
const std::vector<std::string> kConjunctions = {"and", "or", "but", "both", "either", "neither", "nor"};
const std::vector<std::string> kFilterWords = {"list", "all", "every", "each", "between", "than", "except"};
const std::vector<std::string> kLookupWords = {"what", "who", "whom", "whose", "which", "when", "where", "how"};

bool has_phrase(const std::vector<std::string>& words, std::string_view a, std::string_view b) {
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
        if (words[i] == a && words[i + 1] == b) {
            return true;
        }
    }
    return false;
}

int count_in(const std::vector<std::string>& words, const std::vector<std::string>& vocab) {
    int n = 0;
    for (const auto& w : words) {
        if (text::contains_word(vocab, w)) {
            ++n;
        }
    }
    return n;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) {
        return 0.0;
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_variance(const std::vector<double>& v) {
    if (v.size() < 2) {
        return 0.0;
    }
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mu) * (x - mu);
    }
    return ss / static_cast<double>(v.size());
}

std::vector<double> member_mean_scores(const std::vector<std::size_t>& members,
                                       std::span<const ColumnScorePair> pairs) {
    std::vector<double> out;
    out.reserve(members.size());
    for (std::size_t i : members) {
        out.push_back(pairs[i].mean_score());
    }
    return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::size_t argmax_lowest(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

} // namespace

std::string_view to_string(QuestionType t) noexcept {
    switch (t) {
    case QuestionType::aggregation:
        return "aggregation";
    case QuestionType::filtering:
        return "filtering";
    case QuestionType::lookup:
        return "lookup";
    case QuestionType::exploration:
        return "exploration";
    }
    return "exploration";
}

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
    case Strategy::semantic:
        return "semantic";
    case Strategy::mcdm:
        return "mcdm";
    case Strategy::confidence:
        return "confidence";
    }
    return "semantic";
}

QuestionType classify_question(std::string_view question) {
    const auto words = text::word_tokens(question);
    if (has_phrase(words, "how", "many") || has_phrase(words, "number", "of") ||
        count_in(words, kAggregationWords) > 0) {
        return QuestionType::aggregation;
    }
    if (count_in(words, kFilterWords) > 0 || has_phrase(words, "at", "least") || has_phrase(words, "at", "most")) {
        return QuestionType::filtering;
    }
    if (count_in(words, kLookupWords) > 0) {
        return QuestionType::lookup;
    }
    return QuestionType::exploration;
}

QuestionComplexity question_complexity(std::string_view question) {
    const auto words = text::word_tokens(question);
    QuestionComplexity c;
    c.conjunctions = count_in(words, kConjunctions);
    c.comparatives = count_in(words, kComparativeWords);
    c.aggregations = count_in(words, kAggregationWords) + (has_phrase(words, "how", "many") ? 1 : 0);
    // Numeric literals are whitespace-delimited, so "70-66-73-69=278" is one.
    std::size_t i = 0;
    while (i < question.size()) {
        while (i < question.size() && std::isspace(static_cast<unsigned char>(question[i]))) {
            ++i;
        }
        bool digit = false;
        while (i < question.size() && !std::isspace(static_cast<unsigned char>(question[i]))) {
            digit = digit || std::isdigit(static_cast<unsigned char>(question[i]));
            ++i;
        }
        if (digit) {
            ++c.numerics;
        }
    }
    c.q_c = std::clamp(1 + c.conjunctions + c.comparatives + c.aggregations + c.numerics, 1, 4);
    return c;
}

std::size_t optimal_cluster_size(int q_c) noexcept {
    return static_cast<std::size_t>(std::min(3 * std::max(q_c, 0), 10));
}

std::vector<Point2> score_points(std::span<const ColumnScorePair> pairs) {
    std::vector<Point2> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        out.push_back({p.llm_final, p.emb_norm});
    }
    return out;
}

std::vector<ClusterQuality> cluster_quality(const ClusterModel& model, std::span<const Point2> points) {
    const auto members = model.members();
    std::vector<ClusterQuality> out(model.k);
    for (std::size_t j = 0; j < model.k; ++j) {
        double spread = 0.0;
        for (std::size_t i : members[j]) {
            spread += distance(points[i], model.centroids[j]);
        }
        const double mean_dist = members[j].size() > 1 ? spread / static_cast<double>(members[j].size()) : 0.0;
        out[j].cohesion = 1.0 / (1.0 + mean_dist);

        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t o = 0; o < model.k; ++o) {
            if (o != j) {
                nearest = std::min(nearest, distance(model.centroids[j], model.centroids[o]));
            }
        }
        out[j].separation = std::isfinite(nearest) ? std::clamp(nearest / std::sqrt(2.0), 0.0, 1.0) : 0.0;
        out[j].quality = 0.6 * out[j].cohesion + 0.4 * out[j].separation;
    }
    return out;
}

std::vector<double> score_semantic(const ClusterModel& model, std::span<const ClusterQuality> quality,
                                   std::span<const double> question_vector,
                                   std::span<const std::vector<double>> column_vectors) {
    if (column_vectors.size() != model.assignments.size()) {
        throw LengthMismatch("column vectors do not match the clustered columns");
    }
    const auto members = model.members();
    std::vector<double> out(model.k, 0.0);
    for (std::size_t j = 0; j < model.k; ++j) {
        std::vector<double> centre(question_vector.size(), 0.0);
        for (std::size_t i : members[j]) {
            const auto& v = column_vectors[i];
            for (std::size_t d = 0; d < centre.size() && d < v.size(); ++d) {
                centre[d] += v[d];
            }
        }
        for (double& x : centre) {
            x /= static_cast<double>(members[j].size());
        }
        const double sim = std::clamp(cosine(question_vector, centre), 0.0, 1.0);
        out[j] = sim * quality[j].quality;
    }
    return out;
}

std::vector<McdmScore> score_mcdm(const ClusterModel& model, std::span<const ColumnScorePair> pairs,
                                  const QuestionComplexity& complexity, const McdmOptions& options) {
    const auto members = model.members();
    const double optimal = static_cast<double>(optimal_cluster_size(complexity.q_c));
    std::vector<McdmScore> out(model.k);
    for (std::size_t j = 0; j < model.k; ++j) {
        const auto scores = member_mean_scores(members[j], pairs);
        const double size = static_cast<double>(members[j].size());
        McdmScore& s = out[j];
        s.relevance = mean_of(scores);

        std::set<std::string> prefixes;
        std::set<std::string> suffixes;
        for (std::size_t i : members[j]) {
            const auto parts = text::header_components(pairs[i].column);
            prefixes.insert(parts.front());
            suffixes.insert(parts.back());
        }
        s.diversity = std::min(
            1.0, static_cast<double>(prefixes.size() + suffixes.size()) / (2.0 * size + options.epsilon));

        const auto above = std::count_if(scores.begin(), scores.end(), [&](double x) { return x > options.tau_info; });
        s.info_density = static_cast<double>(above) / size;
        s.size_match = 1.0 / (1.0 + options.alpha_size * std::abs(size - optimal));
        s.score = 0.4 * s.relevance + 0.2 * s.diversity + 0.2 * s.info_density + 0.2 * s.size_match;
    }
    return out;
}

double type_prior(QuestionType type, std::size_t cluster_size) noexcept {
    const double size = static_cast<double>(std::max<std::size_t>(cluster_size, 1));
    switch (type) {
    case QuestionType::aggregation:
        return std::min(size / 5.0, 1.0);
    case QuestionType::lookup:
        return 1.0 / size;
    default:
        return 0.5;
    }
}

ConfidenceResult confidence_candidates(std::span<const double> confidences) {
    const std::vector<double> conf(confidences.begin(), confidences.end());
    ConfidenceResult r;
    r.mean = mean_of(conf);
    r.stddev = std::sqrt(population_variance(conf));
    r.threshold = r.mean - 0.5 * r.stddev;
    for (std::size_t j = 0; j < conf.size(); ++j) {
        if (conf[j] > r.threshold) {
            r.candidates.push_back(j);
        }
    }
    if (r.candidates.empty() && !conf.empty()) {
        r.fallback = true;
        r.candidates.push_back(argmax_lowest(conf));
    }
    return r;
}

ConfidenceResult score_confidence(const ClusterModel& model, std::span<const ColumnScorePair> pairs,
                                  QuestionType type) {
    const auto members = model.members();
    std::vector<ConfidenceScore> clusters(model.k);
    std::vector<double> conf(model.k);
    for (std::size_t j = 0; j < model.k; ++j) {
        const auto scores = member_mean_scores(members[j], pairs);
        ConfidenceScore& c = clusters[j];
        c.consistency = 1.0 / (1.0 + population_variance(scores));
        c.strength = std::clamp(mean_of(scores), 0.0, 1.0);
        c.type_prior = type_prior(type, members[j].size());
        c.confidence = 0.4 * c.consistency + 0.4 * c.strength + 0.2 * c.type_prior;
        conf[j] = c.confidence;
    }
    auto r = confidence_candidates(conf);
    r.clusters = std::move(clusters);
    return r;
}

SelectionVerdict ensemble_vote(std::span<const StrategyPick> picks) {
    if (picks.size() != 3) {
        throw RangeError("ensemble vote needs exactly three picks");
    }
    SelectionVerdict v;
    std::copy(picks.begin(), picks.end(), v.picks.begin());
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = a + 1; b < 3; ++b) {
            if (picks[a].cluster == picks[b].cluster) {
                v.winner = picks[a].cluster;
                return v;
            }
        }
    }
    const StrategyPick* best = &picks[0];
    for (const auto& p : picks) {
        if (p.normalized_score > best->normalized_score ||
            (p.normalized_score == best->normalized_score && p.cluster < best->cluster)) {
            best = &p;
        }
    }
    v.winner = best->cluster;
    v.tie_broken = true;
    return v;
}

std::vector<std::string> assemble_final_columns(std::size_t winner, const ClusterModel& model,
                                                std::span<const ColumnScorePair> pairs,
                                                std::span<const std::string> essential, std::size_t k_other) {
    if (winner >= model.k) {
        throw RangeError("selected cluster id out of range");
    }
    const auto members = model.members();
    std::vector<bool> keep(pairs.size(), false);
    for (std::size_t i : members[winner]) {
        keep[i] = true;
    }
    for (std::size_t j = 0; j < model.k; ++j) {
        if (j == winner) {
            continue;
        }
        auto ranked = members[j];
        std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
            return pairs[a].mean_score() > pairs[b].mean_score();
        });
        for (std::size_t t = 0; t < ranked.size() && t < k_other; ++t) {
            keep[ranked[t]] = true;
        }
    }
    for (const auto& e : essential) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (pairs[i].column == e) {
                keep[i] = true;
            }
        }
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (keep[i]) {
            out.push_back(pairs[i].column);
        }
    }
    return out;
}

double l2_score(const ColumnScorePair& p) noexcept { return std::hypot(p.llm_final, p.emb_norm); }

std::size_t topk_l2_count(std::size_t m) noexcept {
    if (m < 3) {
        return m;
    }
    if (m < 10) {
        return 3;
    }
    return static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(m) - 1e-9));
}

std::vector<std::string> topk_l2_baseline(std::span<const ColumnScorePair> pairs) {
    if (pairs.empty()) {
        throw RangeError("L2 baseline needs at least one column");
    }
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return l2_score(pairs[a]) > l2_score(pairs[b]); });
    order.resize(topk_l2_count(pairs.size()));
    std::sort(order.begin(), order.end());
    std::vector<std::string> out;
    for (std::size_t i : order) {
        out.push_back(pairs[i].column);
    }
    return out;
}

std::vector<KDiagnostic> k_diagnostics(std::span<const Point2> points, std::span<const std::size_t> ks,
                                       std::uint64_t seed, std::size_t restarts) {
    std::vector<KDiagnostic> out;
    for (std::size_t k : ks) {
        if (k < 2 || k + 1 > points.size()) {
            throw RangeError("K=" + std::to_string(k) + " outside [2, " +
                             std::to_string(points.size() > 0 ? points.size() - 1 : 0) + "]");
        }
        KMeansOptions opts;
        opts.k = k;
        opts.seed = seed;
        opts.restarts = restarts;
        const auto model = kmeans_2d(points, opts);
        out.push_back({k, model.inertia, silhouette_score(points, model.assignments, model.k)});
    }
    return out;
}

ColumnSelection select_columns(const SelectionInput& input, const SelectionOptions& options) {
    if (input.pairs.empty()) {
        throw RangeError("column selection needs at least one column");
    }
    ColumnSelection s;
    const auto points = score_points(input.pairs);
    s.model = kmeans_2d(points, options.kmeans);
    s.quality = cluster_quality(s.model, points);
    s.semantic = score_semantic(s.model, s.quality, input.question_vector, input.column_vectors);
    s.complexity = question_complexity(input.question);
    s.mcdm = score_mcdm(s.model, input.pairs, s.complexity, options.mcdm);
    s.question_type = classify_question(input.question);
    s.confidence = score_confidence(s.model, input.pairs, s.question_type);

    const std::size_t k = s.model.k;
    std::vector<double> mcdm(k);
    std::vector<double> conf(k);
    for (std::size_t j = 0; j < k; ++j) {
        mcdm[j] = s.mcdm[j].score;
        conf[j] = s.confidence.clusters[j].confidence;
    }
    const auto n_sem = minmax_normalize(std::span<const double>(s.semantic));
    const auto n_mcdm = minmax_normalize(std::span<const double>(mcdm));
    const auto n_conf = minmax_normalize(std::span<const double>(conf));
    // A pick's own-strategy normalized score is always 1, so picks are
    // compared on the cluster's mean normalized score across all strategies.
    auto pooled = [&](std::size_t j) { return (n_sem[j] + n_mcdm[j] + n_conf[j]) / 3.0; };

    std::vector<double> cand_conf;
    for (std::size_t j : s.confidence.candidates) {
        cand_conf.push_back(conf[j]);
    }
    const std::size_t sem_pick = argmax_lowest(s.semantic);
    const std::size_t mcdm_pick = argmax_lowest(mcdm);
    const std::size_t conf_pick = s.confidence.candidates[argmax_lowest(cand_conf)];
    const std::array<StrategyPick, 3> picks = {
        StrategyPick{Strategy::semantic, sem_pick, s.semantic[sem_pick], pooled(sem_pick)},
        StrategyPick{Strategy::mcdm, mcdm_pick, mcdm[mcdm_pick], pooled(mcdm_pick)},
        StrategyPick{Strategy::confidence, conf_pick, conf[conf_pick], pooled(conf_pick)},
    };
    s.verdict = ensemble_vote(picks);
    s.columns = assemble_final_columns(s.verdict.winner, s.model, input.pairs, input.essential, options.k_other);
    return s;
}

nlohmann::json to_json(const ColumnSelection& s, std::span<const ColumnScorePair> pairs) {
    using nlohmann::json;
    json clusters = json::array();
    const auto members = s.model.members();
    for (std::size_t j = 0; j < s.model.k; ++j) {
        json names = json::array();
        for (std::size_t i : members[j]) {
            names.push_back(pairs[i].column);
        }
        const auto& c = s.confidence.clusters[j];
        const auto& m = s.mcdm[j];
        clusters.push_back({
            {"id", j},
            {"members", names},
            {"centroid", {s.model.centroids[j][0], s.model.centroids[j][1]}},
            {"cohesion", s.quality[j].cohesion},
            {"separation", s.quality[j].separation},
            {"quality", s.quality[j].quality},
            {"semantic", s.semantic[j]},
            {"relevance", m.relevance},
            {"diversity", m.diversity},
            {"info_density", m.info_density},
            {"size_match", m.size_match},
            {"mcdm", m.score},
            {"consistency", c.consistency},
            {"strength", c.strength},
            {"type_prior", c.type_prior},
            {"confidence", c.confidence},
        });
    }
    json assignments = json::object();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        assignments[pairs[i].column] = s.model.assignments[i];
    }
    json picks = json::array();
    for (const auto& p : s.verdict.picks) {
        picks.push_back({{"strategy", to_string(p.strategy)},
                         {"cluster", p.cluster},
                         {"score", p.score},
                         {"normalized_score", p.normalized_score}});
    }
    return {
        {"k", s.model.k},
        {"inertia", s.model.inertia},
        {"assignments", assignments},
        {"clusters", clusters},
        {"question_type", to_string(s.question_type)},
        {"complexity",
         {{"q_c", s.complexity.q_c},
          {"conjunctions", s.complexity.conjunctions},
          {"comparatives", s.complexity.comparatives},
          {"aggregations", s.complexity.aggregations},
          {"numerics", s.complexity.numerics}}},
        {"confidence_threshold", s.confidence.threshold},
        {"confidence_candidates", s.confidence.candidates},
        {"confidence_fallback", s.confidence.fallback},
        {"picks", picks},
        {"winner", s.verdict.winner},
        {"tie_broken", s.verdict.tie_broken},
        {"selected_columns", s.columns},
    };
}

} // namespace atf
