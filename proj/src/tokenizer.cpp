#include "atf/tokenizer.hpp"

#include <cctype>
#include <map>
#include <mutex>

#include "atf/errors.hpp"

namespace atf {

std::size_t count_whitespace_tokens(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_token = false;
        } else if (c == '|' || c == ':') {
            ++count;
            in_token = false;
        } else if (!in_token) {
            ++count;
            in_token = true;
        }
    }
    return count;
}

namespace {

struct Registry {
    std::mutex mutex;
    std::map<std::string, TokenCounter, std::less<>> counters;

    Registry() {
        counters.emplace("whitespace", TokenCounter(count_whitespace_tokens));
        counters.emplace("chars4", TokenCounter([](std::string_view s) { return (s.size() + 3) / 4; }));
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

} // namespace

const TokenCounter& tokenizer(std::string_view name) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto it = r.counters.find(name);
    if (it == r.counters.end()) {
        throw UnknownTokenizer(std::string(name));
    }
    // std::map never relocates nodes, so the reference outlives the lock.
    return it->second;
}

void register_tokenizer(std::string name, TokenCounter counter) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.counters.insert_or_assign(std::move(name), std::move(counter));
}

std::vector<std::string> tokenizer_names() {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    std::vector<std::string> names;
    for (const auto& [name, _] : r.counters) {
        names.push_back(name);
    }
    return names;
}

} // namespace atf
