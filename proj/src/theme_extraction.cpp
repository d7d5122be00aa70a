#include "sde/theme_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

#include "embedded_data.hpp"
#include "sde/backends.hpp"

namespace sde {

namespace {

constexpr double kTieEpsilon = 1e-12;
constexpr std::uint64_t kWeightUnits = 1'000'000;

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
}

const std::unordered_set<std::string>& stopword_set() {
  static const std::unordered_set<std::string> set(stopwords().begin(), stopwords().end());
  return set;
}

std::string trim(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n\"'");
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(" \t\r\n\"'");
  return std::string(text.substr(first, last - first + 1));
}

}  // namespace

std::string_view to_string(Linkage linkage) {
  return linkage == Linkage::single ? "single" : "average";
}

const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> out;
    auto data = detail::embedded_stopwords();
    std::size_t start = 0;
    while (start < data.size()) {
      auto end = data.find('\n', start);
      if (end == std::string_view::npos) end = data.size();
      auto word = trim(data.substr(start, end - start));
      if (!word.empty() && word[0] != '#') out.push_back(std::move(word));
      start = end + 1;
    }
    return out;
  }();
  return words;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (is_token_byte(c)) {
      current += static_cast<char>(c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<KeywordVector> extract_keywords(std::string_view text, const ExtractionConfig& config) {
  const auto& stop = stopword_set();
  std::vector<std::string> tokens;
  for (auto& t : tokenize(text)) {
    if (!stop.count(t)) tokens.push_back(std::move(t));
  }

  std::map<std::string, std::size_t> freq;
  for (const auto& t : tokens) ++freq[t];

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [word, n] : freq) {
    if (n >= std::max<std::size_t>(config.min_freq, 1)) ranked.emplace_back(word, n);
  }
  if (ranked.empty()) throw Error(ErrorCode::EmptyInput, "no keyword survives filtering");
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > config.max_keywords) ranked.resize(config.max_keywords);

  // Vocabulary: every distinct non-stopword token, lexicographic.
  std::map<std::string, std::size_t> vocab;
  for (const auto& [word, n] : freq) vocab.emplace(word, vocab.size());

  std::map<std::string, std::size_t> row_of;
  std::vector<KeywordVector> out;
  for (const auto& [word, n] : ranked) {
    row_of.emplace(word, out.size());
    out.push_back({word, std::vector<double>(vocab.size(), 0.0), n});
  }

  const std::size_t window = std::max<std::size_t>(config.window, 1);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto row = row_of.find(tokens[i]);
    if (row == row_of.end()) continue;
    auto& vec = out[row->second].vector;
    std::size_t lo = i >= window - 1 ? i - (window - 1) : 0;
    std::size_t hi = std::min(tokens.size() - 1, i + window - 1);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) vec[vocab.at(tokens[j])] += 1.0;
    }
  }
  return out;
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(d, 0.0, 2.0);
}

std::size_t default_cluster_count(std::size_t keyword_count) {
  return std::min<std::size_t>(5, keyword_count);
}

Clustering cluster(const std::vector<KeywordVector>& keywords, Linkage linkage, std::size_t k) {
  const std::size_t n = keywords.size();
  if (k < 1 || k > n) {
    throw Error(ErrorCode::BadK, "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  for (const auto& kw : keywords) {
    if (kw.vector.size() != keywords.front().vector.size()) {
      throw Error(ErrorCode::BadArgument, "keyword vectors differ in length");
    }
  }

  // score[a][b]: min distance (single) or sum of leaf-pair distances (average),
  // indexed by cluster id. Ids grow to 2n-1.
  const std::size_t max_ids = 2 * n - 1;
  std::vector<std::vector<double>> score(max_ids, std::vector<double>(max_ids, 0.0));
  std::vector<std::size_t> size(max_ids, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = cosine_distance(keywords[i].vector, keywords[j].vector);
      score[i][j] = score[j][i] = d;
    }
  }
  auto linkage_distance = [&](std::size_t a, std::size_t b) {
    return linkage == Linkage::single ? score[a][b]
                                      : score[a][b] / static_cast<double>(size[a] * size[b]);
  };

  Clustering result;
  result.dendrogram.leaf_count = n;
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);

  while (active.size() > 1) {
    std::size_t best_a = 0, best_b = 0;
    double best = 0.0;
    bool found = false;
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        double d = linkage_distance(active[x], active[y]);
        if (!found || d < best - kTieEpsilon) {
          best = d;
          best_a = active[x];
          best_b = active[y];
          found = true;
        }
      }
    }
    std::size_t merged = n + result.dendrogram.merges.size();
    result.dendrogram.merges.push_back({best_a, best_b, best, merged});
    size[merged] = size[best_a] + size[best_b];
    for (std::size_t other : active) {
      if (other == best_a || other == best_b) continue;
      double v = linkage == Linkage::single ? std::min(score[other][best_a], score[other][best_b])
                                            : score[other][best_a] + score[other][best_b];
      score[other][merged] = score[merged][other] = v;
    }
    active.erase(std::remove_if(active.begin(), active.end(),
                                [&](std::size_t id) { return id == best_a || id == best_b; }),
                 active.end());
    active.push_back(merged);  // largest id so far; `active` stays sorted
  }

  result.clusters = cut_dendrogram(result.dendrogram, k);
  return result;
}

std::vector<std::vector<std::size_t>> cut_dendrogram(const Dendrogram& dendrogram, std::size_t k) {
  const std::size_t n = dendrogram.leaf_count;
  if (k < 1 || k > n) throw Error(ErrorCode::BadK, "k out of range");
  std::vector<std::vector<std::size_t>> members(2 * n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::set<std::size_t> live;
  for (std::size_t i = 0; i < n; ++i) live.insert(i);
  for (std::size_t m = 0; m + k < n; ++m) {
    const auto& merge = dendrogram.merges.at(m);
    auto& dst = members[merge.new_cluster];
    dst = members[merge.cluster_a];
    dst.insert(dst.end(), members[merge.cluster_b].begin(), members[merge.cluster_b].end());
    std::sort(dst.begin(), dst.end());
    live.erase(merge.cluster_a);
    live.erase(merge.cluster_b);
    live.insert(merge.new_cluster);
  }
  std::vector<std::vector<std::size_t>> out;
  for (auto id : live) out.push_back(members[id]);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

std::string fallback_theme(const std::vector<std::string>& labels_by_weight) {
  std::string out;
  for (std::size_t i = 0; i < labels_by_weight.size() && i < 3; ++i) {
    if (i > 0) out += " and ";
    out += labels_by_weight[i];
  }
  return out;
}

Theme derive_theme(const std::vector<std::vector<KeywordVector>>& clusters, std::string_view text,
                   TextClient* backend, std::uint64_t seed) {
  if (clusters.empty()) throw Error(ErrorCode::BadArgument, "derive_theme needs at least one cluster");

  struct Draft {
    ThemeConcept item;
    std::uint64_t total = 0;
  };
  std::vector<Draft> drafts;
  std::uint64_t grand_total = 0;
  for (const auto& members : clusters) {
    if (members.empty()) throw Error(ErrorCode::BadArgument, "empty cluster");
    Draft d;
    const KeywordVector* top = &members.front();
    for (const auto& kw : members) {
      d.total += kw.frequency;
      d.item.keywords.push_back(kw.keyword);
      if (kw.frequency > top->frequency ||
          (kw.frequency == top->frequency && kw.keyword < top->keyword)) {
        top = &kw;
      }
    }
    d.item.label = top->keyword;
    std::sort(d.item.keywords.begin(), d.item.keywords.end());
    grand_total += d.total;
    drafts.push_back(std::move(d));
  }
  std::sort(drafts.begin(), drafts.end(),
            [](const Draft& a, const Draft& b) { return a.item.label < b.item.label; });

  // Largest-remainder apportionment of 1e6 weight units.
  std::vector<std::uint64_t> units(drafts.size());
  std::vector<std::size_t> order(drafts.size());
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    units[i] = drafts[i].total * kWeightUnits / grand_total;
    assigned += units[i];
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return drafts[a].total * kWeightUnits % grand_total > drafts[b].total * kWeightUnits % grand_total;
  });
  for (std::size_t i = 0; assigned < kWeightUnits; ++i, ++assigned) ++units[order[i % order.size()]];

  Theme theme;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    drafts[i].item.weight = static_cast<double>(units[i]) / static_cast<double>(kWeightUnits);
    theme.concepts.push_back(std::move(drafts[i].item));
  }
  std::stable_sort(theme.concepts.begin(), theme.concepts.end(),
                   [](const ThemeConcept& a, const ThemeConcept& b) {
                     return a.weight != b.weight ? a.weight > b.weight : a.label < b.label;
                   });

  std::vector<std::string> labels;
  for (const auto& c : theme.concepts) labels.push_back(c.label);
  theme.theme = fallback_theme(labels);
  if (!backend) return theme;

  TextRequest req;
  req.task = TextTask::theme;
  req.seed = seed;
  req.system = "You name the central theme of an illustration. Reply with one short phrase only.";
  req.user = "Key concepts, most important first: ";
  for (std::size_t i = 0; i < labels.size(); ++i) req.user += (i ? ", " : "") + labels[i];
  req.user += ".\nSource text:\n";
  req.user += text;
  req.context = {{"labels", labels}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto phrase = trim(text_complete(*backend, req).text);
    if (!phrase.empty()) {
      theme.theme = phrase;
      return theme;
    }
    req.user += "\n(Your previous reply was empty. Reply with a short phrase.)";
  }
  throw Error(ErrorCode::MalformedOutput, "theme reply was empty twice");
}

}  // namespace sde
