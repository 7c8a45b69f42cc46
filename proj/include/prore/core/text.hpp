#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace prore::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

// Whitespace tokens with surrounding punctuation stripped. Interior
// punctuation is kept so filenames, phone numbers and clock values stay
// atomic ("shy_king_copy.md", "+13920741751", "00:16:35").
std::vector<std::string> tokenize(std::string_view s);

bool is_stopword(std::string_view token);

// Lowercased, de-stopworded, lightly stemmed (trailing plural 's').
std::vector<std::string> content_tokens(std::string_view s);

// Every maximal digit run in the string, as numbers ("00:16:35" -> 0,16,35).
// English number words one..twenty are folded in too.
std::vector<std::int64_t> extract_numbers(std::string_view s);

// Token-level antonym from a fixed table (enabled/disabled, paused/running,
// present/absent, ...). Empty string when none is known.
std::string antonym_of(std::string_view token);

// Fraction of `wanted` tokens that appear in `have` (exact token match after
// normalization). Empty `wanted` yields 1.0.
double token_recall(const std::vector<std::string>& wanted, const std::vector<std::string>& have);

enum class StatementMatch { unrelated, confirmed, contradicted };

/// Compares an expected key-state statement against an observed claim.
/// A claim whose content covers the key statement's non-numeric tokens at or
/// above `threshold` is related; related claims are contradicted when the key
/// statement's numbers are missing from the claim or an antonym of a key
/// token appears, confirmed otherwise.
StatementMatch match_statement(std::string_view key_statement, std::string_view claim_text,
                               double threshold);

// Entity-ish phrases of an instruction: quoted spans, tokens with interior
// [._+@:] or digits, and runs of capitalized words after the first token.
std::vector<std::string> extract_entities(std::string_view instruction);

bool contains_ci(std::string_view haystack, std::string_view needle);

// FNV-1a 64-bit, used for stable cassette keys and config hashes.
std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

} // namespace prore::text
