#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace atf {

/// Token budget model used for linearized tables. Counting only; no vocabulary.
using TokenCounter = std::function<std::size_t(std::string_view)>;

/// Whitespace split with `|` and `:` emitted as standalone tokens.
std::size_t count_whitespace_tokens(std::string_view text);

/// Registered names: "whitespace" (default) and "chars4" (ceil(bytes / 4)).
/// Throws UnknownTokenizer.
const TokenCounter& tokenizer(std::string_view name);

void register_tokenizer(std::string name, TokenCounter counter);
std::vector<std::string> tokenizer_names();

} // namespace atf
