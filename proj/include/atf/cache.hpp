#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace atf {

/// Content-addressed store of raw model responses.
///
/// With a directory every entry is one JSON file named after its key, written
/// to a temporary file and renamed into place. Without one the cache lives in
/// memory only. Safe to share between threads.
class ResponseCache {
public:
    ResponseCache() = default;
    explicit ResponseCache(std::filesystem::path directory);

    std::optional<std::string> get(const std::string& key);
    void put(const std::string& key, const std::string& template_id, const std::string& response);

    std::size_t hits() const;
    std::size_t misses() const;
    const std::optional<std::filesystem::path>& directory() const noexcept { return directory_; }

private:
    std::filesystem::path entry_path(const std::string& key) const;

    std::optional<std::filesystem::path> directory_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> memory_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

} // namespace atf
