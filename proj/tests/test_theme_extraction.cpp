#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "sde/backends.hpp"
#include "sde/theme_extraction.hpp"
#include "support/agglomerative_oracle.hpp"

using namespace sde;

namespace {

KeywordVector kv(std::string word, std::vector<double> v, std::size_t freq = 1) {
  return {std::move(word), std::move(v), freq};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InjectedFault;
}

}  // namespace

TEST_SUITE("theme_extraction") {
  TEST_CASE("bundled stopword list") {
    const auto& words = stopwords();
    CHECK(words.size() >= 150);
    CHECK(words.size() <= 200);
    CHECK(std::find(words.begin(), words.end(), "the") != words.end());
  }

  TEST_CASE("tokenize lowercases and strips punctuation") {
    CHECK(tokenize("Hello, World! x2-y") == std::vector<std::string>{"hello", "world", "x2", "y"});
    CHECK(tokenize("café au lait") == std::vector<std::string>{"café", "au", "lait"});
  }

  TEST_CASE("extract_keywords errors") {
    CHECK(code_of([] { extract_keywords(""); }) == ErrorCode::EmptyInput);
    CHECK(code_of([] { extract_keywords("the of and"); }) == ErrorCode::EmptyInput);
  }

  TEST_CASE("hand-counted frequencies") {
    auto kws = extract_keywords("prompt engineering improves prompt quality");
    auto it = std::find_if(kws.begin(), kws.end(), [](const auto& k) { return k.keyword == "prompt"; });
    REQUIRE(it != kws.end());
    CHECK(it->frequency == 2);
    // prompt(2) first, then the singletons alphabetically
    std::vector<std::string> order;
    for (const auto& k : kws) order.push_back(k.keyword);
    CHECK(order == std::vector<std::string>{"prompt", "engineering", "improves", "quality"});
    // vocabulary is the four distinct words in lexicographic order
    for (const auto& k : kws) CHECK(k.vector.size() == 4);
  }

  TEST_CASE("co-occurrence within the window") {
    // vocabulary: alpha beta gamma; tokens: alpha beta gamma alpha
    auto kws = extract_keywords("alpha beta gamma alpha");
    auto alpha = *std::find_if(kws.begin(), kws.end(), [](const auto& k) { return k.keyword == "alpha"; });
    // alpha@0 sees beta, gamma, alpha; alpha@3 sees alpha, beta, gamma
    CHECK(alpha.vector == std::vector<double>{2, 2, 2});

    ExtractionConfig narrow;
    narrow.window = 2;  // only immediate neighbours
    auto near = extract_keywords("alpha beta gamma alpha", narrow);
    auto a2 = *std::find_if(near.begin(), near.end(), [](const auto& k) { return k.keyword == "alpha"; });
    CHECK(a2.vector == std::vector<double>{0, 1, 1});
  }

  TEST_CASE("keyword cap and minimum frequency") {
    std::string text;
    for (int i = 0; i < 60; ++i) text += "word" + std::to_string(i) + " ";
    text += "word7 word7";
    auto kws = extract_keywords(text);
    CHECK(kws.size() == 40);
    CHECK(kws.front().keyword == "word7");
    ExtractionConfig cfg;
    cfg.min_freq = 2;
    auto frequent = extract_keywords(text, cfg);
    REQUIRE(frequent.size() == 1);
    CHECK(frequent[0].frequency == 3);
  }

  TEST_CASE("extraction is deterministic") {
    const char* text = "Scene graphs make image prompts reproducible; scene graphs are data.";
    CHECK(extract_keywords(text) == extract_keywords(text));
  }

  TEST_CASE("cosine distance") {
    CHECK(cosine_distance({1, 0}, {1, 0}) == doctest::Approx(0.0));
    CHECK(cosine_distance({1, 0}, {0, 1}) == doctest::Approx(1.0));
    CHECK(cosine_distance({0, 0}, {0, 1}) == 1.0);
  }

  TEST_CASE("cluster edge cases") {
    SUBCASE("single keyword") {
      auto c = cluster({kv("a", {1, 0})}, Linkage::average, 1);
      CHECK(c.dendrogram.merges.empty());
      CHECK(c.clusters == std::vector<std::vector<std::size_t>>{{0}});
    }
    SUBCASE("identical vectors merge at zero") {
      auto c = cluster({kv("a", {1, 2}), kv("b", {1, 2})}, Linkage::single, 1);
      REQUIRE(c.dendrogram.merges.size() == 1);
      CHECK(c.dendrogram.merges[0].distance == doctest::Approx(0.0));
      CHECK(c.dendrogram.merges[0].new_cluster == 2);
    }
    SUBCASE("bad k") {
      CHECK(code_of([] { cluster({kv("a", {1})}, Linkage::single, 0); }) == ErrorCode::BadK);
      CHECK(code_of([] { cluster({kv("a", {1})}, Linkage::single, 2); }) == ErrorCode::BadK);
    }
    SUBCASE("ties go to the smallest id pair") {
      // all three pairwise distances are 1
      auto c = cluster({kv("a", {1, 0, 0}), kv("b", {0, 1, 0}), kv("c", {0, 0, 1})}, Linkage::average, 1);
      CHECK(c.dendrogram.merges[0].cluster_a == 0);
      CHECK(c.dendrogram.merges[0].cluster_b == 1);
      CHECK(c.dendrogram.merges[1].cluster_a == 2);
      CHECK(c.dendrogram.merges[1].cluster_b == 3);
    }
  }

  TEST_CASE("six vectors, k=2, single linkage match the brute-force oracle") {
    std::vector<std::vector<double>> pts = {{1, 0, 0}, {0.9, 0.1, 0}, {0, 1, 0.2},
                                            {0, 0.8, 0.3}, {0.2, 0.1, 1}, {0.5, 0.5, 0.5}};
    std::vector<KeywordVector> kws;
    for (std::size_t i = 0; i < pts.size(); ++i) kws.push_back(kv("k" + std::to_string(i), pts[i]));
    auto got = cluster(kws, Linkage::single, 2);
    auto want = testing::oracle_cluster(pts, true, 2);
    CHECK(got.clusters == want.partition);
    REQUIRE(got.dendrogram.merges.size() == want.merges.size());
    for (std::size_t i = 0; i < want.merges.size(); ++i) {
      CHECK(got.dendrogram.merges[i].cluster_a == want.merges[i].a);
      CHECK(got.dendrogram.merges[i].cluster_b == want.merges[i].b);
      CHECK(got.dendrogram.merges[i].distance == doctest::Approx(want.merges[i].distance).epsilon(1e-12));
    }
  }

  TEST_CASE("merge distances never decrease") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> val(0, 3);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<KeywordVector> kws;
      for (int i = 0; i < 8; ++i) {
        std::vector<double> v(5);
        for (auto& x : v) x = val(rng);
        kws.push_back(kv("k" + std::to_string(i), v));
      }
      for (auto linkage : {Linkage::single, Linkage::average}) {
        auto c = cluster(kws, linkage, 1);
        CHECK(c.dendrogram.merges.size() == 7);
        for (std::size_t i = 1; i < c.dendrogram.merges.size(); ++i) {
          CHECK(c.dendrogram.merges[i].distance >= c.dendrogram.merges[i - 1].distance - 1e-12);
        }
      }
    }
  }

  TEST_CASE("derive_theme") {
    SUBCASE("one cluster") {
      auto t = derive_theme({{kv("prompt", {1}, 2)}}, "prompt prompt");
      REQUIRE(t.concepts.size() == 1);
      CHECK(t.concepts[0].label == "prompt");
      CHECK(t.concepts[0].weight == 1.0);
      CHECK(t.theme == "prompt");
    }
    SUBCASE("frequencies 6 and 2 give 0.75 / 0.25") {
      auto t = derive_theme({{kv("a", {1}, 4), kv("b", {1}, 2)}, {kv("c", {1}, 2)}}, "");
      REQUIRE(t.concepts.size() == 2);
      CHECK(t.concepts[0].label == "a");
      CHECK(t.concepts[0].weight == 0.75);
      CHECK(t.concepts[0].keywords == std::vector<std::string>{"a", "b"});
      CHECK(t.concepts[1].weight == 0.25);
    }
    SUBCASE("thirds still sum to one") {
      auto t = derive_theme({{kv("a", {1})}, {kv("b", {1})}, {kv("c", {1})}}, "");
      double sum = 0;
      for (const auto& c : t.concepts) sum += c.weight;
      CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
    SUBCASE("permutation invariant") {
      std::vector<std::vector<KeywordVector>> groups = {
          {kv("x", {1}, 3)}, {kv("y", {1}, 1), kv("z", {1}, 5)}, {kv("w", {1}, 2)}};
      auto a = derive_theme(groups, "");
      std::reverse(groups.begin(), groups.end());
      auto b = derive_theme(groups, "");
      CHECK(a.concepts == b.concepts);
      CHECK(a.theme == b.theme);
    }
    SUBCASE("fallback phrase") { CHECK(fallback_theme({"a", "b", "c", "d"}) == "a and b and c"); }
    SUBCASE("backend phrasing and empty replies") {
      StubTextClient scripted(StubScript{{"@theme", "  A theme about graphs  "}});
      auto t = derive_theme({{kv("graph", {1})}}, "graph", &scripted);
      CHECK(t.theme == "A theme about graphs");
      StubTextClient blank(StubScript{{"@theme", "   "}});
      CHECK(code_of([&] { derive_theme({{kv("graph", {1})}}, "graph", &blank); }) ==
            ErrorCode::MalformedOutput);
      StubTextClient synthesized;
      CHECK(derive_theme({{kv("graph", {1})}}, "graph", &synthesized).theme == "graph");
    }
    SUBCASE("no clusters") {
      CHECK(code_of([] { derive_theme({}, ""); }) == ErrorCode::BadArgument);
    }
  }
}
