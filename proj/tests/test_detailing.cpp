#include <cmath>

#include "doctest.h"
#include "sde/backends.hpp"
#include "sde/composition.hpp"
#include "sde/detailing.hpp"
#include "sde/prompt_compiler.hpp"
#include "support/fusion_oracle.hpp"
#include "support/generators.hpp"
#include "support/helpers.hpp"

using namespace sde;
using testing::code_of;

namespace {

SceneGraph one_root(BBox box = {0.1, 0.1, 0.9, 0.9}) {
  SceneGraph s;
  s.template_id = "radial";
  s.theme = "t";
  SceneElement e;
  e.id = "root";
  e.path = "root";
  e.bbox = box;
  e.content = "the root";
  s.elements.push_back(e);
  return canonicalize(s);
}

std::vector<std::string> paths_of(const SceneGraph& s) {
  std::vector<std::string> out;
  for (const auto* e : preorder(s)) out.push_back(e->path);
  return out;
}

DetailRecord rec(std::optional<std::string> content, std::optional<BBox> box = {},
                 std::optional<ColorSpec> color = {}) {
  DetailRecord r;
  r.content = std::move(content);
  r.bbox = box;
  r.color = std::move(color);
  return r;
}

}  // namespace

TEST_SUITE("detailing") {
  TEST_CASE("populate_scene places one root per concept inside its region") {
    std::vector<ThemeConcept> concepts = {{"graph", {"graph", "node"}, 0.6}, {"prompt", {"prompt"}, 0.4}};
    const auto& tmpl = find_template(builtin_templates(), "split");
    auto s = populate_scene("graphs and prompts", concepts, tmpl, {"watercolor", {}, 4}, nullptr, 7);
    REQUIRE(s.elements.size() == 2);
    CHECK(validate_scene(s, tmpl).empty());
    const auto* graph = find_element(s, "graph");
    const auto* prompt = find_element(s, "prompt");
    REQUIRE(graph);
    REQUIRE(prompt);
    CHECK(graph->region_id == "left-half");
    CHECK(prompt->region_id == "right-half");
    CHECK(graph->content == "a depiction of graph");
    // left-half [0.03,0.08,0.48,0.86] inset by 10% of each extent
    CHECK(graph->bbox.x0 == doctest::Approx(0.03 + 0.045));
    CHECK(graph->bbox.y0 == doctest::Approx(0.08 + 0.078));
    CHECK(graph->bbox.x1 == doctest::Approx(0.48 - 0.045));
    CHECK(graph->bbox.y1 == doctest::Approx(0.86 - 0.078));
    CHECK(graph->color->primary_hex == palette_color_for(7, "graph"));
    CHECK(s.seed == 7);
    CHECK(s.style.style_name == "watercolor");
  }

  TEST_CASE("populate_scene asks the backend for descriptions") {
    StubTextClient stub(StubScript{{"@describe", "a glowing lattice"}});
    auto s = populate_scene("t", {{"graph", {"graph"}, 1.0}}, find_template(builtin_templates(), "radial"),
                            {"x", {}, 5}, &stub, 1);
    CHECK(s.elements[0].content == "a glowing lattice");
    StubTextClient blank(StubScript{{"@describe", ""}});
    CHECK(code_of([&] {
            populate_scene("t", {{"graph", {"graph"}, 1.0}}, find_template(builtin_templates(), "radial"),
                           {"x", {}, 5}, &blank, 1);
          }) == ErrorCode::MalformedOutput);
  }

  TEST_CASE("expansion counts") {
    StubTextClient stub;
    SUBCASE("two children, depth two") {
      auto s = expand_recursive(one_root(), std::nullopt, {2, 2, 64}, stub);
      CHECK(count_elements(s) == 1 + 2 + 4);
      CHECK(validate_scene(s).empty());
      const auto* p = find_element(s, "root/part-2/part-1");
      REQUIRE(p);
      CHECK(p->content == "part 1 of the part-2");
    }
    SUBCASE("budget truncates in pre-order") {
      auto full = expand_recursive(one_root(), std::nullopt, {2, 2, 64}, stub);
      auto cut = expand_recursive(one_root(), std::nullopt, {2, 2, 5}, stub);
      auto all = paths_of(full);
      CHECK(paths_of(cut) == std::vector<std::string>(all.begin(), all.begin() + 5));
    }
    SUBCASE("depth zero is the identity") {
      auto s = one_root();
      CHECK(expand_recursive(s, std::nullopt, {0, 4, 64}, stub) == s);
    }
    SUBCASE("a second pass changes nothing") {
      auto once = expand_recursive(one_root(), std::nullopt, {2, 3, 64}, stub);
      CHECK(expand_recursive(once, std::nullopt, {2, 3, 64}, stub) == once);
    }
    SUBCASE("children tile a grid inside the parent") {
      auto s = expand_recursive(one_root({0, 0, 1, 1}), std::nullopt, {1, 4, 64}, stub);
      // four parts on a 2x2 grid of 0.5 cells, each inset by 5%
      const auto* p = find_element(s, "root/part-4");
      REQUIRE(p);
      CHECK(p->bbox.x0 == doctest::Approx(0.525));
      CHECK(p->bbox.y0 == doctest::Approx(0.525));
      CHECK(p->bbox.x1 == doctest::Approx(0.975));
      CHECK(p->bbox.y1 == doctest::Approx(0.975));
    }
    SUBCASE("target path") {
      auto s = one_root();
      s.elements.push_back(s.elements[0]);
      s.elements[1].id = "other";
      s = canonicalize(s);
      auto out = expand_recursive(s, std::string("other"), {1, 2, 64}, stub);
      CHECK(find_element(out, "other/part-1"));
      CHECK_FALSE(find_element(out, "root/part-1"));
      CHECK(code_of([&] { expand_recursive(s, std::string("missing"), {1, 2, 64}, stub); }) ==
            ErrorCode::PathNotFound);
    }
    SUBCASE("bad config") {
      CHECK(code_of([&] { expand_recursive(one_root(), std::nullopt, {1, 0, 64}, stub); }) ==
            ErrorCode::BadArgument);
    }
  }

  TEST_CASE("malformed expansion replies") {
    StubTextClient garbage(StubScript{{"@expand", "no json here"}});
    CHECK(code_of([&] { expand_recursive(one_root(), std::nullopt, {1, 2, 64}, garbage); }) ==
          ErrorCode::MalformedOutput);
    StubTextClient fenced(StubScript{{"@expand", "Sure!\n```json\n{\"children\":[{\"name\":\"Leaf Cluster\","
                                       "\"description\":\"green leaves\"}]}\n```"}});
    auto s = expand_recursive(one_root(), std::nullopt, {1, 2, 64}, fenced);
    const auto* leaf = find_element(s, "root/leaf-cluster");
    REQUIRE(leaf);
    CHECK(leaf->content == "green leaves");
  }

  TEST_CASE("fusion, worked examples") {
    BBox b1{0.1, 0.1, 0.5, 0.5}, b2{0.2, 0.2, 0.6, 0.6};
    ColorSpec red{"#FF0000", {}, 0.5};
    SUBCASE("current fields win, missing ones come from history") {
      DetailSet h0, cur;
      h0.entries["a"] = rec("old", b1);
      cur.entries["a"] = rec(std::nullopt, std::nullopt, red);
      auto out = fuse_history({h0}, cur);
      CHECK(out.entries.at("a").content == "old");
      CHECK(out.entries.at("a").bbox == b1);
      CHECK(out.entries.at("a").color == red);
    }
    SUBCASE("newer history beats older history") {
      DetailSet h0, h1, cur;
      h0.entries["a"] = rec("oldest", b1);
      h1.entries["a"] = rec("newer");
      cur.entries["b"] = rec("b");
      auto out = fuse_history({h0, h1}, cur);
      CHECK(out.entries.size() == 2);
      CHECK(out.entries.at("a").content == "newer");
      CHECK(out.entries.at("a").bbox == b1);
    }
    SUBCASE("current beats everything") {
      DetailSet h0, cur;
      h0.entries["a"] = rec("old", b1);
      cur.entries["a"] = rec("new", b2);
      CHECK(fuse_history({h0}, cur) == cur);
    }
    SUBCASE("empty history is the identity") {
      DetailSet cur;
      cur.entries["a"] = rec("x", b1);
      CHECK(fuse_history({}, cur) == cur);
    }
    SUBCASE("a backend merges changed descriptions") {
      StubTextClient merger(StubScript{{"@fuse", "a merged description"}});
      DetailSet h0, cur;
      h0.entries["a"] = rec("old", b1);
      h0.entries["b"] = rec("same", b1);
      cur.entries["a"] = rec("new");
      cur.entries["b"] = rec("same");
      auto out = fuse_history({h0}, cur, &merger);
      CHECK(out.entries.at("a").content == "a merged description");
      CHECK(out.entries.at("b").content == "same");
    }
  }

  TEST_CASE("fusion agrees with the reference on random inputs") {
    testing::Rng rng(5);
    for (int i = 0; i < 200; ++i) {
      std::vector<DetailSet> history;
      for (int h = testing::uniform(rng, 0, 4); h > 0; --h) history.push_back(testing::random_detailset(rng));
      auto current = testing::random_detailset(rng);
      CHECK(fuse_history(history, current) == testing::oracle_fuse(history, current));
    }
  }

  TEST_CASE("lighting raises explicit contrast") {
    auto s = one_root();
    s.elements[0].color = ColorSpec{"#123456", {}, 0.5};
    SceneElement child;
    child.id = "c";
    child.bbox = {0.2, 0.2, 0.3, 0.3};
    child.content = "c";
    child.color = ColorSpec{"#123456", {}, 0.9};
    s.elements[0].children.push_back(child);
    s = canonicalize(s);
    LightingSpec l{LightDirection::backlit, "dramatic", 1.0, true};
    auto lit = apply_lighting(s, l);
    CHECK(lit.lighting == l);
    CHECK(find_element(lit, "root")->color->contrast == doctest::Approx(0.8));
    CHECK(find_element(lit, "root/c")->color->contrast == 1.0);
    LightingSpec none{LightDirection::frontal, "soft", 0.0, false};
    CHECK(apply_lighting(s, none).elements == s.elements);
  }

  TEST_CASE("palette_color_for is stable") {
    CHECK(palette_color_for(1, "graph") == palette_color_for(1, "graph"));
    bool any_differs = false;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      any_differs |= palette_color_for(seed, "graph") != palette_color_for(0, "graph");
    }
    CHECK(any_differs);
  }
}
