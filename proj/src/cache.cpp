#include "atf/cache.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "atf/errors.hpp"
#include "atf/log.hpp"

namespace atf {

ResponseCache::ResponseCache(std::filesystem::path directory) : directory_(std::move(directory)) {
    std::error_code ec;
    std::filesystem::create_directories(*directory_, ec);
    if (ec) {
        throw ConfigError("cannot create cache directory " + directory_->string() + ": " + ec.message());
    }
}

std::filesystem::path ResponseCache::entry_path(const std::string& key) const { return *directory_ / (key + ".json"); }

std::optional<std::string> ResponseCache::get(const std::string& key) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = memory_.find(key); it != memory_.end()) {
            ++hits_;
            return it->second;
        }
    }
    if (directory_) {
        std::ifstream in(entry_path(key), std::ios::binary);
        if (in) {
            std::stringstream buf;
            buf << in.rdbuf();
            auto j = nlohmann::json::parse(buf.str(), nullptr, false);
            if (!j.is_discarded() && j.is_object() && j.value("key", "") == key && j.contains("response") &&
                j["response"].is_string()) {
                std::string response = j["response"].get<std::string>();
                std::lock_guard lock(mutex_);
                memory_.emplace(key, response);
                ++hits_;
                return response;
            }
            log_warning("ignoring unreadable cache entry " + entry_path(key).string());
        }
    }
    std::lock_guard lock(mutex_);
    ++misses_;
    return std::nullopt;
}

void ResponseCache::put(const std::string& key, const std::string& template_id, const std::string& response) {
    {
        std::lock_guard lock(mutex_);
        memory_[key] = response;
    }
    if (!directory_) {
        return;
    }
    static std::atomic<unsigned long long> counter{0};
    const nlohmann::json entry = {
        {"key", key},
        {"template_id", template_id},
        {"response", response},
        {"created_unix", std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count()},
    };
    std::ostringstream tmp_name;
    tmp_name << key << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter++;
    const auto tmp = *directory_ / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            log_warning("cannot write cache entry " + tmp.string());
            return;
        }
        out << entry.dump();
    }
    std::error_code ec;
    std::filesystem::rename(tmp, entry_path(key), ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        log_warning("cannot publish cache entry for " + key);
    }
}

std::size_t ResponseCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t ResponseCache::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

} // namespace atf
