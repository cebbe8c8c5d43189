#include "atf/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>

#include "atf/errors.hpp"
#include "atf/text.hpp"

namespace atf::metrics {

namespace {

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

bool is_ascii_punct(char c) noexcept {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && !std::isalnum(u) && !std::isspace(u);
}

// A maximal [0-9.] run of the form digits '.' zeros collapses to its digits.
std::string strip_integral_floats(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_digit(s[i]) && s[i] != '.') {
            out.push_back(s[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && (is_digit(s[j]) || s[j] == '.')) {
            ++j;
        }
        const std::string_view run(s.data() + i, j - i);
        const auto dot = run.find('.');
        bool integral = dot != std::string_view::npos && dot > 0 && dot + 1 < run.size() &&
                        run.find('.', dot + 1) == std::string_view::npos;
        if (integral) {
            for (std::size_t k = dot + 1; k < run.size(); ++k) {
                if (run[k] != '0') {
                    integral = false;
                    break;
                }
            }
        }
        out.append(integral ? run.substr(0, dot) : run);
        i = j;
    }
    return out;
}

std::set<std::string> token_set(const std::string& normalized) {
    std::set<std::string> out;
    std::istringstream in(normalized);
    std::string tok;
    while (in >> tok) {
        out.insert(tok);
    }
    return out;
}

double f1_normalized(const std::string& pred, const std::string& gold) {
    const auto p = token_set(pred);
    const auto g = token_set(gold);
    if (p.empty() && g.empty()) {
        return 1.0;
    }
    if (p.empty() || g.empty()) {
        return 0.0;
    }
    std::size_t common = 0;
    for (const auto& t : p) {
        common += g.count(t);
    }
    if (common == 0) {
        return 0.0;
    }
    const double precision = static_cast<double>(common) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

} // namespace

std::string normalize_answer(std::string_view input) {
    std::string s = text::to_lower(text::trim(input));

    std::string no_commas;
    no_commas.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i > 0 && i + 1 < s.size() && is_digit(s[i - 1]) && is_digit(s[i + 1])) {
            continue;
        }
        no_commas.push_back(s[i]);
    }

    std::string no_punct;
    no_punct.reserve(no_commas.size());
    for (std::size_t i = 0; i < no_commas.size(); ++i) {
        const char c = no_commas[i];
        if (c == '.' && i > 0 && i + 1 < no_commas.size() && is_digit(no_commas[i - 1]) &&
            is_digit(no_commas[i + 1])) {
            no_punct.push_back(c);
        } else if (!is_ascii_punct(c)) {
            no_punct.push_back(c);
        }
    }

    const std::string numeric = strip_integral_floats(no_punct);

    std::string out;
    out.reserve(numeric.size());
    bool pending_space = false;
    for (char c : numeric) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

int exact_match(std::string_view pred, std::span<const std::string> golds) {
    if (golds.empty()) {
        throw Error("exact_match needs at least one gold answer");
    }
    const auto p = normalize_answer(pred);
    for (const auto& g : golds) {
        if (normalize_answer(g) == p) {
            return 1;
        }
    }
    return 0;
}

double f1_score(std::string_view pred, std::span<const std::string> golds) {
    if (golds.empty()) {
        throw Error("f1_score needs at least one gold answer");
    }
    const auto p = normalize_answer(pred);
    double best = 0.0;
    for (const auto& g : golds) {
        best = std::max(best, f1_normalized(p, normalize_answer(g)));
    }
    return best;
}

double accuracy(std::span<const Prediction> preds, bool macro) {
    if (preds.empty()) {
        throw Error("accuracy of an empty prediction set is undefined");
    }
    for (const auto& p : preds) {
        if (p.task != Task::tfv) {
            throw MixedTask("accuracy requires every item to be a TFV item (got '" + p.id + "')");
        }
    }
    if (!macro) {
        std::size_t correct = 0;
        for (const auto& p : preds) {
            correct += static_cast<std::size_t>(exact_match(p.predicted, p.gold));
        }
        return static_cast<double>(correct) / static_cast<double>(preds.size());
    }
    // Macro: mean over gold classes of the per-class hit rate.
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;
    for (const auto& p : preds) {
        auto& [hits, total] = per_class[normalize_answer(p.gold.front())];
        hits += static_cast<std::size_t>(exact_match(p.predicted, p.gold));
        ++total;
    }
    double sum = 0.0;
    for (const auto& [_, counts] : per_class) {
        sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
    }
    return sum / static_cast<double>(per_class.size());
}

std::vector<EvalReport> evaluate(std::span<const Prediction> preds, bool macro_accuracy) {
    std::vector<EvalReport> reports;
    for (Task task : {Task::qa, Task::tfv}) {
        std::vector<Prediction> subset;
        for (const auto& p : preds) {
            if (p.task == task) {
                subset.push_back(p);
            }
        }
        if (subset.empty()) {
            continue;
        }
        EvalReport r;
        r.task = task;
        r.n = subset.size();
        for (const auto& p : subset) {
            ItemScore item{p.id, exact_match(p.predicted, p.gold), f1_score(p.predicted, p.gold)};
            r.em += item.exact;
            r.f1 += item.f1;
            r.items.push_back(std::move(item));
        }
        r.em /= static_cast<double>(r.n);
        r.f1 /= static_cast<double>(r.n);
        if (task == Task::tfv) {
            r.macro = macro_accuracy;
            r.accuracy = accuracy(subset, macro_accuracy);
        } else {
            r.accuracy = r.em;
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

Prediction prediction_from_json(const nlohmann::json& j) {
    Prediction p;
    try {
        p.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        const auto& pred = j.at("predicted");
        p.predicted = pred.is_string() ? pred.get<std::string>() : pred.dump();
        const auto& gold = j.at("gold");
        if (gold.is_array()) {
            for (const auto& g : gold) {
                p.gold.push_back(g.is_string() ? g.get<std::string>() : g.dump());
            }
        } else {
            p.gold.push_back(gold.is_string() ? gold.get<std::string>() : gold.dump());
        }
        const std::string task = j.value("task", std::string("qa"));
        if (task == "qa") {
            p.task = Task::qa;
        } else if (task == "tfv") {
            p.task = Task::tfv;
        } else {
            throw ParseError("unknown task '" + task + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed prediction record: ") + e.what());
    }
    if (p.gold.empty()) {
        throw ParseError("prediction '" + p.id + "' has no gold answers");
    }
    return p;
}

std::vector<Prediction> read_predictions_jsonl(std::istream& in) {
    std::vector<Prediction> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) {
            continue;
        }
        try {
            out.push_back(prediction_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("predictions line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j;
    j["task"] = r.task == Task::qa ? "qa" : "tfv";
    j["n"] = r.n;
    j["em"] = r.em;
    j["f1"] = r.f1;
    j["accuracy"] = r.accuracy;
    j["macro_accuracy"] = r.macro;
    auto& items = j["items"] = nlohmann::json::array();
    for (const auto& it : r.items) {
        items.push_back({{"id", it.id}, {"em", it.exact}, {"f1", it.f1}});
    }
    return j;
}

// ---------------------------------------------------------------------------

OverflowRatio overflow_ratio(std::span<const std::pair<Table, Table>> pairs, std::optional<std::size_t> budget,
                             std::string_view tokenizer_name) {
    std::vector<ReductionStats> stats;
    stats.reserve(pairs.size());
    for (const auto& [raw, filtered] : pairs) {
        ReductionStats s;
        s.raw_tokens = linearize_table(raw, tokenizer_name).token_count;
        s.kept_tokens = linearize_table(filtered, tokenizer_name).token_count;
        stats.push_back(s);
    }
    return overflow_ratio(stats, budget);
}

OverflowRatio overflow_ratio(std::span<const ReductionStats> stats, std::optional<std::size_t> budget) {
    OverflowRatio r;
    r.total = stats.size();
    if (stats.empty() || !budget) {
        return r;
    }
    std::size_t raw_over = 0;
    std::size_t kept_over = 0;
    for (const auto& s : stats) {
        raw_over += s.raw_tokens > *budget ? 1 : 0;
        kept_over += s.kept_tokens > *budget ? 1 : 0;
    }
    r.raw = static_cast<double>(raw_over) / static_cast<double>(stats.size());
    r.filtered = static_cast<double>(kept_over) / static_cast<double>(stats.size());
    return r;
}

std::size_t ratio_bin(double ratio) noexcept {
    if (!(ratio > 0.0)) {
        return 0;
    }
    // The epsilon keeps values like 0.7 (stored as 0.69999...) in their nominal bin.
    const auto bin = static_cast<std::size_t>(std::floor(ratio * 10.0 + 1e-9));
    return std::min<std::size_t>(bin, 9);
}

ReductionHistograms reduction_distributions(std::span<const ReductionStats> stats) {
    if (stats.empty()) {
        throw RangeError("reduction_distributions needs at least one stats record");
    }
    ReductionHistograms h;
    h.records = stats.size();
    for (const auto& s : stats) {
        ++h.columns_removed[s.columns_removed()];
        ++h.rows_kept[s.kept_rows];
        ++h.cell_reduction.counts[ratio_bin(s.cell_reduction_ratio)];
        ++h.token_reduction.counts[ratio_bin(s.token_reduction_ratio)];
    }
    return h;
}

namespace {

std::string fmt_edge(std::size_t i) {
    if (i == 10) {
        return "1.0";
    }
    return "0." + std::to_string(i);
}

} // namespace

std::string histograms_csv(const ReductionHistograms& h) {
    std::ostringstream out;
    out << "histogram,bin,lower,upper,count\n";
    for (const auto& [k, v] : h.columns_removed) {
        out << "columns_removed," << k << ',' << k << ',' << k << ',' << v << '\n';
    }
    for (const auto& [k, v] : h.rows_kept) {
        out << "rows_kept," << k << ',' << k << ',' << k << ',' << v << '\n';
    }
    for (std::size_t i = 0; i < 10; ++i) {
        out << "cell_reduction_ratio," << i << ',' << fmt_edge(i) << ',' << fmt_edge(i + 1) << ','
            << h.cell_reduction.counts[i] << '\n';
    }
    for (std::size_t i = 0; i < 10; ++i) {
        out << "token_reduction_ratio," << i << ',' << fmt_edge(i) << ',' << fmt_edge(i + 1) << ','
            << h.token_reduction.counts[i] << '\n';
    }
    return out.str();
}

nlohmann::json to_json(const ReductionHistograms& h) {
    nlohmann::json j;
    j["records"] = h.records;
    auto counts = [](const std::map<std::size_t, std::size_t>& m) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& [k, v] : m) {
            a.push_back({{"value", k}, {"count", v}});
        }
        return a;
    };
    j["columns_removed"] = counts(h.columns_removed);
    j["rows_kept"] = counts(h.rows_kept);
    j["cell_reduction_ratio"] = h.cell_reduction.counts;
    j["token_reduction_ratio"] = h.token_reduction.counts;
    j["ratio_bin_edges"] = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    return j;
}

} // namespace atf::metrics
