#include "madiff/prompt.hpp"

#include "madiff/errors.hpp"
#include "madiff/rng.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

namespace madiff {

std::string MaskPrompt::joined() const {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        // internal hyphens survive ("t-shirt"); edge hyphens do not
        while (!cur.empty() && cur.front() == '-') cur.erase(cur.begin());
        while (!cur.empty() && cur.back() == '-') cur.pop_back();
        if (!cur.empty()) tokens.push_back(cur);
        cur.clear();
    };
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c))
            cur += char(std::tolower(c));
        else if (c == '-')
            cur += '-';
        else
            flush();
    }
    flush();
    return tokens;
}

bool ShapeVocabulary::contains(const std::string& token) const {
    return std::find(terms.begin(), terms.end(), token) != terms.end();
}

ShapeVocabulary default_shape_vocabulary() {
    return ShapeVocabulary{{
        "t-shirt", "shirt", "dress", "pants", "trousers", "skirt",
        "sleeve", "sleeves", "sleeveless", "short", "long",
        "collar", "neck", "neckline", "round", "v",
    }};
}

ShapeVocabulary load_shape_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary file: " + path);
    ShapeVocabulary vocab;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r\n");
        std::string term = line.substr(first, last - first + 1);
        if (term.empty() || term[0] == '#') continue;
        std::transform(term.begin(), term.end(), term.begin(),
                       [](unsigned char c) { return char(std::tolower(c)); });
        vocab.terms.push_back(term);
    }
    if (vocab.terms.empty()) throw FormatError("vocabulary file has no terms: " + path);
    return vocab;
}

MaskPrompt extract_mask_prompt(const PromptText& prompt, const ShapeVocabulary& vocab) {
    MaskPrompt out;
    for (const std::string& tok : tokenize(prompt.text))
        if (vocab.contains(tok)) out.tokens.push_back(tok);
    return out;
}

std::vector<double> EmbeddingTable::vector_for(const std::string& token) const {
    if (dim < 1) throw ConfigError("EmbeddingTable: dim must be >= 1");
    std::vector<double> v(static_cast<size_t>(dim), 0.0);
    for (int i = 0; i < dim; ++i) {
        uint64_t bits = seed_split(seed, token, uint64_t(i));
        v[size_t(i)] = double(bits >> 11) * 0x1.0p-53 * 2.0 - 1.0; // uniform [-1, 1)
    }
    return v;
}

EmbeddingTable default_embedding_table() { return EmbeddingTable{32, 0x6d616469ffULL}; }

PromptEmbedding embed_prompt(const MaskPrompt& prompt, const EmbeddingTable& table) {
    PromptEmbedding e;
    e.values.assign(size_t(table.dim), 0.0);
    if (prompt.tokens.empty()) return e;
    for (const std::string& tok : prompt.tokens) {
        std::vector<double> v = table.vector_for(tok);
        for (size_t i = 0; i < e.values.size(); ++i) e.values[i] += v[i];
    }
    double inv = 1.0 / double(prompt.tokens.size());
    for (double& x : e.values) x *= inv;
    return e;
}

namespace {

// Splits "http://host:port/path" into base and path. Only plain http is
// supported; anything else fails the request (and the caller falls back).
bool split_endpoint(const std::string& endpoint, std::string* base, std::string* path) {
    const std::string scheme = "http://";
    if (endpoint.rfind(scheme, 0) != 0) return false;
    size_t slash = endpoint.find('/', scheme.size());
    if (slash == std::string::npos) {
        *base = endpoint;
        *path = "/";
    } else {
        *base = endpoint.substr(0, slash);
        *path = endpoint.substr(slash);
    }
    return true;
}

// True when `sub` is a subsequence of `seq` (order preserved).
bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& seq) {
    size_t j = 0;
    for (const std::string& tok : seq) {
        if (j < sub.size() && tok == sub[j]) ++j;
    }
    return j == sub.size();
}

} // namespace

std::optional<std::string> LlmClient::fetch_mask_prompt(const std::string& prompt) const {
    std::string base, path;
    if (!split_endpoint(endpoint, &base, &path)) return std::nullopt;
    try {
        httplib::Client cli(base);
        cli.set_connection_timeout(0, timeout_ms * 1000);
        cli.set_read_timeout(0, timeout_ms * 1000);
        cli.set_write_timeout(0, timeout_ms * 1000);
        nlohmann::json body = {{"prompt", prompt}};
        auto res = cli.Post(path, body.dump(), "application/json");
        if (!res || res->status != 200) return std::nullopt;
        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("mask_prompt") ||
            !reply["mask_prompt"].is_string())
            return std::nullopt;
        return reply["mask_prompt"].get<std::string>();
    } catch (...) {
        return std::nullopt;
    }
}

std::string resolve_llm_endpoint(const std::string& config_value) {
    if (!config_value.empty()) return config_value;
    const char* env = std::getenv("MADIFF_LLM_ENDPOINT");
    return env ? std::string(env) : std::string();
}

MaskPrompt mask_prompt_for(const PromptText& prompt, const ShapeVocabulary& vocab,
                           const LlmClient* llm) {
    if (llm != nullptr && !llm->endpoint.empty()) {
        if (auto reply = llm->fetch_mask_prompt(prompt.text)) {
            std::vector<std::string> reply_tokens = tokenize(*reply);
            // accept only a non-empty, order-preserving subset of the source
            if (!reply_tokens.empty() &&
                is_subsequence(reply_tokens, tokenize(prompt.text)))
                return MaskPrompt{std::move(reply_tokens)};
        }
    }
    return extract_mask_prompt(prompt, vocab);
}

} // namespace madiff
