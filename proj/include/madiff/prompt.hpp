#pragma once

#include <optional>
#include <string>
#include <vector>

namespace madiff {

// Free-text editing prompt, e.g. "a red long sleeve round collar solid t-shirt".
struct PromptText {
    std::string text;
};

// The shape-only residue of a prompt: color/material words removed, order kept.
struct MaskPrompt {
    std::vector<std::string> tokens;

    std::string joined() const;
};

// Fixed-width embedding fed to the mask network and the noise predictors.
struct PromptEmbedding {
    std::vector<double> values;

    int dim() const { return int(values.size()); }
};

// Lowercases and strips punctuation; internal hyphens survive so "t-shirt"
// stays one token. Tokens are maximal runs of [a-z0-9-].
std::vector<std::string> tokenize(const std::string& text);

// Closed set of shape words (garment nouns, sleeve/collar descriptors).
struct ShapeVocabulary {
    std::vector<std::string> terms;

    bool contains(const std::string& token) const;
};

// Built-in vocabulary covering the generator's caption grammar.
ShapeVocabulary default_shape_vocabulary();

// Loads one term per line; blank lines and lines starting with '#' skipped.
ShapeVocabulary load_shape_vocabulary(const std::string& path);

// Keeps exactly the prompt tokens found in the vocabulary, preserving order.
MaskPrompt extract_mask_prompt(const PromptText& prompt, const ShapeVocabulary& vocab);

// Token embedding table. Vectors are derived by hashing (token, seed), so the
// same token always maps to the same vector without any stored state.
struct EmbeddingTable {
    int dim = 32;
    uint64_t seed = 0;

    std::vector<double> vector_for(const std::string& token) const;
};

// Mean of the per-token vectors; empty prompt embeds to the zero vector.
PromptEmbedding embed_prompt(const MaskPrompt& prompt, const EmbeddingTable& table);

// The table shared by dataset generation, mask-network training and the edit
// pipeline. Its seed is a fixed constant, not a run seed: a trained network
// only understands prompts embedded through the same table.
EmbeddingTable default_embedding_table();

// Optional HTTP mask-prompt extractor. POSTs {"prompt": ...} to the endpoint
// and expects {"mask_prompt": ...} back. Any failure (connect, timeout, bad
// JSON, invalid token subset) is reported as nullopt; callers fall back to
// the rule-based filter, so the edit pipeline never dies on a flaky endpoint.
struct LlmClient {
    std::string endpoint; // e.g. http://127.0.0.1:8080/mask
    int timeout_ms = 5000;

    std::optional<std::string> fetch_mask_prompt(const std::string& prompt) const;
};

// Resolves the endpoint from an explicit config value or the
// MADIFF_LLM_ENDPOINT environment variable; empty if neither is set.
std::string resolve_llm_endpoint(const std::string& config_value);

// Full mask-prompt path: asks the LLM endpoint when one is configured and
// its answer validates (tokens must be a subsequence of the source prompt's
// tokens); otherwise applies the vocabulary filter.
MaskPrompt mask_prompt_for(const PromptText& prompt, const ShapeVocabulary& vocab,
                           const LlmClient* llm);

} // namespace madiff
