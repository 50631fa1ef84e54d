#include "madiff/prompt.hpp"
#include "madiff/errors.hpp"

#include "httplib.h"
#include "json.hpp"
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

using namespace madiff;

TEST_CASE("tokenize lowercases and keeps internal hyphens") {
    CHECK(tokenize("A Red, LONG t-shirt!") ==
          std::vector<std::string>{"a", "red", "long", "t-shirt"});
    CHECK(tokenize("-red- x-- --") == std::vector<std::string>{"red", "x"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("  \t\n ") == std::vector<std::string>{});
    CHECK(tokenize("v-neck 2-piece") == std::vector<std::string>{"v-neck", "2-piece"});
}

TEST_CASE("default vocabulary covers the caption grammar") {
    ShapeVocabulary vocab = default_shape_vocabulary();
    for (const char* term : {"t-shirt", "dress", "pants", "sleeve", "collar", "long", "round"})
        CHECK(vocab.contains(term));
    CHECK_FALSE(vocab.contains("red"));
    CHECK_FALSE(vocab.contains("striped"));
    CHECK_FALSE(vocab.contains("a"));
}

TEST_CASE("vocabulary files load trimmed lowercase terms") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "madiff-vocab-test.txt";
    {
        std::ofstream out(path);
        out << "# comment line\n\n  T-Shirt  \nsleeve\r\n   \n# another\nCOLLAR\n";
    }
    ShapeVocabulary vocab = load_shape_vocabulary(path.string());
    CHECK(vocab.terms == std::vector<std::string>{"t-shirt", "sleeve", "collar"});

    CHECK_THROWS_AS(load_shape_vocabulary((path / "nope").string()), IoError);
    {
        std::ofstream out(path);
        out << "# only comments\n\n";
    }
    CHECK_THROWS_AS(load_shape_vocabulary(path.string()), FormatError);
    fs::remove(path);
}

TEST_CASE("mask prompt extraction keeps shape words in order") {
    ShapeVocabulary vocab = default_shape_vocabulary();
    MaskPrompt mp = extract_mask_prompt({"a yellow long sleeve t-shirt"}, vocab);
    CHECK(mp.tokens == std::vector<std::string>{"long", "sleeve", "t-shirt"});
    CHECK(mp.joined() == "long sleeve t-shirt");

    mp = extract_mask_prompt({"a red v neck striped dress"}, vocab);
    CHECK(mp.tokens == std::vector<std::string>{"v", "neck", "dress"});

    mp = extract_mask_prompt({"bright cerulean anorak"}, vocab);
    CHECK(mp.tokens.empty());
    CHECK(mp.joined() == "");
}

TEST_CASE("token embeddings are deterministic hashes") {
    EmbeddingTable table{16, 42};
    auto v1 = table.vector_for("dress");
    auto v2 = table.vector_for("dress");
    CHECK(v1 == v2);
    CHECK(v1.size() == 16);
    for (double x : v1) {
        CHECK(x >= -1.0);
        CHECK(x < 1.0);
    }
    CHECK(table.vector_for("pants") != v1);
    EmbeddingTable other{16, 43};
    CHECK(other.vector_for("dress") != v1);

    EmbeddingTable bad{0, 1};
    CHECK_THROWS_AS(bad.vector_for("x"), ConfigError);
}

TEST_CASE("prompt embedding is the token mean") {
    EmbeddingTable table{8, 7};
    PromptEmbedding ea = embed_prompt({{"dress"}}, table);
    PromptEmbedding eb = embed_prompt({{"collar"}}, table);
    PromptEmbedding eab = embed_prompt({{"dress", "collar"}}, table);
    REQUIRE(eab.dim() == 8);
    for (int i = 0; i < 8; ++i)
        CHECK(eab.values[size_t(i)] ==
              doctest::Approx(0.5 * (ea.values[size_t(i)] + eb.values[size_t(i)])).epsilon(1e-15));

    PromptEmbedding empty = embed_prompt({{}}, table);
    CHECK(empty.values == std::vector<double>(8, 0.0));
}

TEST_CASE("endpoint resolution prefers the explicit value") {
    const char* saved = std::getenv("MADIFF_LLM_ENDPOINT");
    std::string saved_copy = saved ? saved : "";

    unsetenv("MADIFF_LLM_ENDPOINT");
    CHECK(resolve_llm_endpoint("") == "");
    CHECK(resolve_llm_endpoint("http://a/b") == "http://a/b");
    setenv("MADIFF_LLM_ENDPOINT", "http://env/mask", 1);
    CHECK(resolve_llm_endpoint("") == "http://env/mask");
    CHECK(resolve_llm_endpoint("http://cfg/mask") == "http://cfg/mask");

    if (saved)
        setenv("MADIFF_LLM_ENDPOINT", saved_copy.c_str(), 1);
    else
        unsetenv("MADIFF_LLM_ENDPOINT");
}

namespace {

// One-shot local HTTP server whose /mask handler is swapped per test case.
struct MaskServer {
    httplib::Server svr;
    std::thread worker;
    int port = 0;

    explicit MaskServer(httplib::Server::Handler handler) {
        svr.Post("/mask", std::move(handler));
        port = svr.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        worker = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }
    ~MaskServer() {
        svr.stop();
        worker.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port) + "/mask"; }
};

} // namespace

TEST_CASE("llm client uses a valid reply") {
    MaskServer server([](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body);
        CHECK(body.at("prompt") == "a yellow long sleeve t-shirt");
        res.set_content(R"({"mask_prompt": "long sleeve t-shirt"})", "application/json");
    });
    LlmClient llm{server.endpoint(), 2000};
    auto reply = llm.fetch_mask_prompt("a yellow long sleeve t-shirt");
    REQUIRE(reply.has_value());
    CHECK(*reply == "long sleeve t-shirt");

    MaskPrompt mp = mask_prompt_for({"a yellow long sleeve t-shirt"},
                                    default_shape_vocabulary(), &llm);
    CHECK(mp.tokens == std::vector<std::string>{"long", "sleeve", "t-shirt"});
}

TEST_CASE("llm replies that are not a prompt subsequence are discarded") {
    MaskServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"mask_prompt": "blue hat"})", "application/json");
    });
    LlmClient llm{server.endpoint(), 2000};
    // fetch succeeds, but the validation layer rejects the content
    CHECK(llm.fetch_mask_prompt("a yellow long sleeve t-shirt").has_value());
    MaskPrompt mp = mask_prompt_for({"a yellow long sleeve t-shirt"},
                                    default_shape_vocabulary(), &llm);
    CHECK(mp.tokens == std::vector<std::string>{"long", "sleeve", "t-shirt"});
}

TEST_CASE("llm replies must keep prompt token order") {
    MaskServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"mask_prompt": "t-shirt sleeve long"})", "application/json");
    });
    LlmClient llm{server.endpoint(), 2000};
    MaskPrompt mp = mask_prompt_for({"a yellow long sleeve t-shirt"},
                                    default_shape_vocabulary(), &llm);
    // reordered reply is rejected, rule-based filter answers instead
    CHECK(mp.tokens == std::vector<std::string>{"long", "sleeve", "t-shirt"});
}

TEST_CASE("malformed llm replies fall back to the filter") {
    MaskServer garbage([](const httplib::Request&, httplib::Response& res) {
        res.set_content("these are not the droids", "text/plain");
    });
    LlmClient llm{garbage.endpoint(), 2000};
    CHECK_FALSE(llm.fetch_mask_prompt("a red dress").has_value());
    MaskPrompt mp = mask_prompt_for({"a red dress"}, default_shape_vocabulary(), &llm);
    CHECK(mp.tokens == std::vector<std::string>{"dress"});

    MaskServer wrong_key([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"answer": "dress"})", "application/json");
    });
    LlmClient llm2{wrong_key.endpoint(), 2000};
    CHECK_FALSE(llm2.fetch_mask_prompt("a red dress").has_value());

    MaskServer error_status([](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content(R"({"mask_prompt": "dress"})", "application/json");
    });
    LlmClient llm3{error_status.endpoint(), 2000};
    CHECK_FALSE(llm3.fetch_mask_prompt("a red dress").has_value());
}

TEST_CASE("unreachable endpoints fall back to the filter") {
    int dead_port;
    {
        // bind and immediately release a port so nothing listens on it
        httplib::Server probe;
        dead_port = probe.bind_to_any_port("127.0.0.1");
        REQUIRE(dead_port > 0);
        probe.stop();
    }
    LlmClient llm{"http://127.0.0.1:" + std::to_string(dead_port) + "/mask", 500};
    CHECK_FALSE(llm.fetch_mask_prompt("a red dress").has_value());
    MaskPrompt mp = mask_prompt_for({"a red dress"}, default_shape_vocabulary(), &llm);
    CHECK(mp.tokens == std::vector<std::string>{"dress"});

    LlmClient https{"https://example.invalid/mask", 500};
    CHECK_FALSE(https.fetch_mask_prompt("a red dress").has_value());
}

TEST_CASE("mask_prompt_for without a client applies the filter") {
    MaskPrompt mp = mask_prompt_for({"a black short sleeve round collar dotted shirt"},
                                    default_shape_vocabulary(), nullptr);
    CHECK(mp.tokens == std::vector<std::string>{"short", "sleeve", "round", "collar", "shirt"});
    LlmClient empty{"", 100};
    mp = mask_prompt_for({"a green dress"}, default_shape_vocabulary(), &empty);
    CHECK(mp.tokens == std::vector<std::string>{"dress"});
}
