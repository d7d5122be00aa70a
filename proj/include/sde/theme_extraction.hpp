#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sde/scene_model.hpp"

namespace sde {

class TextClient;

struct ExtractionConfig {
  std::size_t min_freq = 1;
  std::size_t max_keywords = 40;
  std::size_t window = 8;
};

/// Keyword with its co-occurrence profile over the document vocabulary.
struct KeywordVector {
  std::string keyword;
  std::vector<double> vector;
  std::size_t frequency = 1;

  bool operator==(const KeywordVector&) const = default;
};

enum class Linkage { single, average };

std::string_view to_string(Linkage linkage);

struct Merge {
  std::size_t cluster_a = 0;  // cluster_a < cluster_b
  std::size_t cluster_b = 0;
  double distance = 0.0;
  std::size_t new_cluster = 0;

  bool operator==(const Merge&) const = default;
};

/// Leaves are clusters 0..leaf_count-1; the i-th merge creates cluster leaf_count+i.
struct Dendrogram {
  std::vector<Merge> merges;
  std::size_t leaf_count = 0;
};

struct Clustering {
  Dendrogram dendrogram;
  // Leaf indices per cluster, each sorted; clusters ordered by smallest member.
  std::vector<std::vector<std::size_t>> clusters;
};

/// Bundled English stopword list, one word per line.
const std::vector<std::string>& stopwords();

/// Lowercased alphanumeric runs; bytes >= 0x80 are kept inside tokens.
std::vector<std::string> tokenize(std::string_view text);

std::vector<KeywordVector> extract_keywords(std::string_view text,
                                            const ExtractionConfig& config = {});

// 1 - cos(a, b); 1 when either vector is zero.
double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

Clustering cluster(const std::vector<KeywordVector>& keywords, Linkage linkage, std::size_t k);

/// Cuts a dendrogram after leaf_count - k merges.
std::vector<std::vector<std::size_t>> cut_dendrogram(const Dendrogram& dendrogram, std::size_t k);

struct Theme {
  std::string theme;
  std::vector<ThemeConcept> concepts;  // ordered by descending weight, then label
};

/// One concept per cluster. Weights are proportional to total keyword
/// frequency and are snapped to the 1e-6 grid so they still sum to exactly 1.
/// With a text backend the theme sentence is phrased by the model; without one
/// it is the top three labels joined by " and ".
Theme derive_theme(const std::vector<std::vector<KeywordVector>>& clusters, std::string_view text,
                   TextClient* backend = nullptr, std::uint64_t seed = 0);

std::string fallback_theme(const std::vector<std::string>& labels_by_weight);

std::size_t default_cluster_count(std::size_t keyword_count);

}  // namespace sde
