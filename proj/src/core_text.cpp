#include "prore/core/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

namespace prore::text {

namespace {

const std::unordered_set<std::string>& stopwords() {
    // Grammar words of the claim/key-state phrasing are stopwords so that
    // matching rides on distinctive tokens only.
    static const std::unordered_set<std::string> words = {
        "the", "a", "an", "is", "are", "was", "were", "be", "been", "being",
        "on", "in", "at", "of", "to", "for", "from", "with", "by", "as",
        "and", "or", "it", "its", "this", "that", "these", "those",
        "do", "does", "did", "has", "have", "had", "will", "would", "can",
        "could", "should", "there", "here", "into", "onto", "their", "his",
        "her", "your", "my", "our", "any", "all", "only", "currently",
        "screen", "screens", "list", "lists", "listed", "item", "items",
        "shows", "show", "shown", "displays", "display", "displayed",
        "agent", "app", "apps", "page", "pages", "new", "newly",
    };
    return words;
}

const std::unordered_map<std::string, std::string>& antonyms() {
    static const std::unordered_map<std::string, std::string> table = [] {
        std::unordered_map<std::string, std::string> t;
        auto pair = [&t](const char* a, const char* b) {
            t[a] = b;
            t[b] = a;
        };
        pair("present", "absent");
        pair("enabled", "disabled");
        pair("paused", "running");
        pair("unique", "duplicated");
        pair("true", "false");
        pair("open", "closed");
        pair("visible", "hidden");
        pair("succeeded", "failed");
        return t;
    }();
    return table;
}

const std::unordered_map<std::string, std::int64_t>& number_words() {
    static const std::unordered_map<std::string, std::int64_t> table = {
        {"zero", 0},    {"one", 1},       {"two", 2},      {"three", 3},
        {"four", 4},    {"five", 5},      {"six", 6},      {"seven", 7},
        {"eight", 8},   {"nine", 9},      {"ten", 10},     {"eleven", 11},
        {"twelve", 12}, {"thirteen", 13}, {"fourteen", 14},{"fifteen", 15},
        {"sixteen", 16},{"seventeen", 17},{"eighteen", 18},{"nineteen", 19},
        {"twenty", 20},
    };
    return table;
}

bool strippable(char c) {
    switch (c) {
        case '"': case '\'': case '`': case ',': case ';': case '!': case '?':
        case '(': case ')': case '[': case ']': case '{': case '}':
        case '<': case '>': case '*': case '.': case ':':
            return true;
        default:
            return false;
    }
}

std::string strip_edges(std::string_view tok) {
    std::size_t b = 0, e = tok.size();
    while (b < e && strippable(tok[b])) ++b;
    while (e > b && strippable(tok[e - 1])) --e;
    return std::string(tok.substr(b, e - b));
}

std::string stem(std::string tok) {
    if (tok.size() > 4 && tok.ends_with("ies")) {
        tok.replace(tok.size() - 3, 3, "y");
        return tok;
    }
    if (tok.size() > 3 && tok.ends_with('s') && !tok.ends_with("ss") &&
        !tok.ends_with("us") && !tok.ends_with("is")) {
        tok.pop_back();
    }
    return tok;
}

bool is_pure_number(std::string_view tok) {
    if (tok.empty()) return false;
    std::size_t i = (tok[0] == '+' || tok[0] == '-') ? 1 : 0;
    if (i >= tok.size()) return false;
    for (; i < tok.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
    }
    return true;
}

} // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(s.substr(start));
            break;
        }
        lines.emplace_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) {
            std::string tok = strip_edges(s.substr(i, j - i));
            if (!tok.empty()) out.push_back(std::move(tok));
        }
        i = j;
    }
    return out;
}

bool is_stopword(std::string_view token) {
    return stopwords().count(std::string(token)) > 0;
}

std::vector<std::string> content_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (const auto& raw : tokenize(s)) {
        std::string low = to_lower(raw);
        if (is_stopword(low)) continue;
        std::string stemmed = stem(std::move(low));
        if (is_stopword(stemmed)) continue;
        out.push_back(std::move(stemmed));
    }
    return out;
}

std::vector<std::int64_t> extract_numbers(std::string_view s) {
    std::vector<std::int64_t> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (std::isdigit(static_cast<unsigned char>(s[i]))) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j - i <= 15) {
                out.push_back(std::stoll(std::string(s.substr(i, j - i))));
            }
            i = j;
        } else {
            ++i;
        }
    }
    for (const auto& tok : tokenize(s)) {
        auto it = number_words().find(to_lower(tok));
        if (it != number_words().end()) out.push_back(it->second);
    }
    return out;
}

std::string antonym_of(std::string_view token) {
    auto it = antonyms().find(to_lower(token));
    return it == antonyms().end() ? std::string() : it->second;
}

double token_recall(const std::vector<std::string>& wanted, const std::vector<std::string>& have) {
    if (wanted.empty()) return 1.0;
    std::unordered_set<std::string> pool(have.begin(), have.end());
    std::size_t hit = 0;
    for (const auto& w : wanted) {
        if (pool.count(w)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(wanted.size());
}

StatementMatch match_statement(std::string_view key_statement, std::string_view claim_text,
                               double threshold) {
    std::vector<std::string> key_tokens = content_tokens(key_statement);
    std::vector<std::string> claim_tokens = content_tokens(claim_text);

    std::vector<std::string> key_nonnum;
    for (auto& t : key_tokens) {
        if (!is_pure_number(t)) key_nonnum.push_back(t);
    }
    if (token_recall(key_nonnum, claim_tokens) < threshold) return StatementMatch::unrelated;

    // Polar tokens (those with a known antonym) gate the verdict: a related
    // claim must carry the same polarity to confirm, the antonym contradicts,
    // and silence on the polarity keeps the pair unrelated.
    std::unordered_set<std::string> claim_pool(claim_tokens.begin(), claim_tokens.end());
    for (const auto& k : key_nonnum) {
        std::string anti = antonym_of(k);
        if (anti.empty()) continue;
        if (claim_pool.count(k)) continue;
        if (claim_pool.count(stem(anti))) return StatementMatch::contradicted;
        return StatementMatch::unrelated;
    }

    // Numbers: a claim that states quantities must cover the key's numbers;
    // a number-free claim does not address the quantity at all.
    std::vector<std::int64_t> key_nums = extract_numbers(key_statement);
    if (!key_nums.empty()) {
        std::vector<std::int64_t> claim_nums = extract_numbers(claim_text);
        if (claim_nums.empty()) return StatementMatch::unrelated;
        std::unordered_set<std::int64_t> pool(claim_nums.begin(), claim_nums.end());
        for (auto n : key_nums) {
            if (!pool.count(n)) return StatementMatch::contradicted;
        }
    }

    // Quoted spans in the key are verbatim evidence. A missing "Label: value"
    // span contradicts only when the claim addresses that label; a missing
    // plain span means the claim talks about something else entirely.
    {
        std::size_t pos = 0;
        while (true) {
            std::size_t open = key_statement.find('"', pos);
            if (open == std::string_view::npos) break;
            std::size_t close = key_statement.find('"', open + 1);
            if (close == std::string_view::npos) break;
            std::string span(key_statement.substr(open + 1, close - open - 1));
            pos = close + 1;
            if (span.empty() || contains_ci(claim_text, span)) continue;
            std::size_t colon = span.find(':');
            if (colon != std::string::npos) {
                std::string label = span.substr(0, colon + 1);
                if (contains_ci(claim_text, label)) return StatementMatch::contradicted;
            }
            return StatementMatch::unrelated;
        }
    }
    return StatementMatch::confirmed;
}

std::vector<std::string> extract_entities(std::string_view instruction) {
    std::vector<std::string> entities;
    auto push = [&entities](std::string e) {
        e = to_lower(trim(e));
        if (e.empty()) return;
        if (std::find(entities.begin(), entities.end(), e) == entities.end()) {
            entities.push_back(std::move(e));
        }
    };

    // Quoted spans.
    for (char quote : {'"', '\''}) {
        std::size_t pos = 0;
        while (true) {
            std::size_t open = instruction.find(quote, pos);
            if (open == std::string_view::npos) break;
            std::size_t close = instruction.find(quote, open + 1);
            if (close == std::string_view::npos) break;
            push(std::string(instruction.substr(open + 1, close - open - 1)));
            pos = close + 1;
        }
    }

    // Tokens that look like identifiers: interior punctuation or digits.
    std::vector<std::string> raw = tokenize(instruction);
    for (const auto& tok : raw) {
        bool has_digit = std::any_of(tok.begin(), tok.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
        bool has_inner = tok.find_first_of("._+@:") != std::string::npos;
        if ((has_digit || has_inner) && tok.size() >= 3 && !is_pure_number(tok)) {
            push(tok);
        } else if (has_digit && is_pure_number(tok) && tok.size() >= 4) {
            push(tok); // long bare numbers (phone fragments, pins)
        }
    }

    // Runs of capitalized words past a sentence start. Raw whitespace tokens
    // keep their trailing punctuation so sentence boundaries stay visible.
    std::vector<std::string> raw_ws;
    std::vector<bool> sentence_initial;
    {
        std::size_t i = 0;
        bool next_initial = true;
        while (i < instruction.size()) {
            while (i < instruction.size() &&
                   std::isspace(static_cast<unsigned char>(instruction[i]))) {
                ++i;
            }
            std::size_t j = i;
            while (j < instruction.size() &&
                   !std::isspace(static_cast<unsigned char>(instruction[j]))) {
                ++j;
            }
            if (j > i) {
                std::string tok(instruction.substr(i, j - i));
                raw_ws.push_back(tok);
                sentence_initial.push_back(next_initial);
                const char last = tok.back();
                next_initial = last == '.' || last == '!' || last == '?';
            }
            i = j;
        }
    }
    std::size_t run_start = std::string::npos;
    auto close_run = [&](std::size_t end) {
        if (run_start == std::string::npos) return;
        std::size_t begin = run_start;
        while (begin < end && sentence_initial[begin]) ++begin; // drop sentence openers
        if (end > begin) {
            std::string phrase;
            for (std::size_t k = begin; k < end; ++k) {
                if (!phrase.empty()) phrase += ' ';
                phrase += strip_edges(raw_ws[k]);
            }
            push(std::move(phrase));
        }
        run_start = std::string::npos;
    };
    for (std::size_t i = 0; i <= raw_ws.size(); ++i) {
        std::string stripped = i < raw_ws.size() ? strip_edges(raw_ws[i]) : std::string();
        const bool cap = !stripped.empty() && std::isupper(static_cast<unsigned char>(stripped[0]));
        if (i < raw_ws.size() && cap) {
            if (run_start == std::string::npos) {
                run_start = i;
            } else if (sentence_initial[i]) {
                close_run(i);
                run_start = i;
            }
            // a sentence boundary inside the token ends the run after it
            const char last = raw_ws[i].back();
            if (last == '.' || last == '!' || last == '?') {
                // keep filenames ("shy_king_copy.md" has no uppercase issue here)
                close_run(i + 1);
            }
        } else {
            close_run(i);
        }
    }
    return entities;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

} // namespace prore::text
