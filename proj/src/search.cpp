#include "mindmap/search.hpp"

#include <algorithm>
#include <cmath>

#include "mindmap/error.hpp"

namespace mindmap {

using nlohmann::json;

std::vector<std::string> field_tokens(std::string_view text, const StopwordList& stopwords,
                                      const LemmaTable& lemmas) {
  return clean_tokens(text, stopwords, lemmas, CleanOptions{.min_length = 1});
}

namespace {

using TermWeights = std::map<std::string, double, std::less<>>;

void add_unit(TermWeights& into, const TermWeights& field, double boost) {
  double norm = 0.0;
  for (const auto& [_, w] : field) norm += w * w;
  norm = std::sqrt(norm);
  if (norm == 0.0 || boost == 0.0) return;
  for (const auto& [t, w] : field) into[t] += boost * w / norm;
}

}  // namespace

SearchIndex build_index(const TfIdfModel* model, const std::vector<Recording>& recordings,
                        const std::vector<TopicAssignment>& topics,
                        const std::vector<Category>& categories, const StopwordList& stopwords,
                        const LemmaTable& lemmas, FieldBoosts boosts) {
  SearchIndex index;
  index.boosts = boosts;
  for (const auto& r : recordings) index.doc_ids.push_back(r.id);
  std::sort(index.doc_ids.begin(), index.doc_ids.end());
  if (std::adjacent_find(index.doc_ids.begin(), index.doc_ids.end()) != index.doc_ids.end())
    throw Error(ErrorKind::InconsistentStore, "duplicate recording id");
  const auto doc_of = [&](std::string_view id) -> std::optional<std::uint32_t> {
    auto it = std::lower_bound(index.doc_ids.begin(), index.doc_ids.end(), id);
    if (it == index.doc_ids.end() || *it != id) return std::nullopt;
    return static_cast<std::uint32_t>(it - index.doc_ids.begin());
  };

  for (const auto& c : categories) {
    auto& members = index.members[c.name];
    if (!members.empty()) throw Error(ErrorKind::InconsistentStore, "category " + c.name + " listed twice");
    for (const auto& id : c.member_ids) {
      if (!doc_of(id)) throw Error(ErrorKind::InconsistentStore, "category " + c.name + " names unknown " + id);
      if (!index.category_of.emplace(id, c.name).second)
        throw Error(ErrorKind::InconsistentStore, id + " is in more than one category");
      members.push_back(id);
    }
    std::sort(members.begin(), members.end());
  }
  for (const auto& id : index.doc_ids)
    if (!index.category_of.count(id)) throw Error(ErrorKind::InconsistentStore, id + " has no category");

  if (model) {
    if (model->rows.size() != index.doc_ids.size())
      throw Error(ErrorKind::InconsistentStore, "vector rows and recordings differ in count");
    for (const auto& [id, _] : model->rows)
      if (!doc_of(id)) throw Error(ErrorKind::InconsistentStore, "vector row for unknown " + id);
  }
  std::map<std::string, std::string, std::less<>> topic_of;
  for (const auto& t : topics) {
    if (!doc_of(t.recording_id)) throw Error(ErrorKind::InconsistentStore, "topic for unknown " + t.recording_id);
    topic_of[t.recording_id] = t.topic;
  }

  const std::size_t n = index.doc_ids.size();
  std::vector<TermWeights> title_counts(n), topic_counts(n), body(n);
  std::map<std::string, std::size_t, std::less<>> df;
  for (const auto& r : recordings) {
    const auto d = *doc_of(r.id);
    for (const auto& t : field_tokens(r.title, stopwords, lemmas)) title_counts[d][t] += 1.0;
    if (auto it = topic_of.find(r.id); it != topic_of.end())
      for (const auto& t : field_tokens(it->second, stopwords, lemmas)) topic_counts[d][t] += 1.0;
    if (model) {
      if (const auto* row = model->row(r.id))
        for (const auto& [col, w] : row->entries) body[d][model->vocabulary.terms[col]] = w;
    }
    std::set<std::string_view> present;
    for (const auto* field : {&title_counts[d], &topic_counts[d], &body[d]})
      for (const auto& [t, w] : *field)
        if (w > 0.0) present.insert(t);
    for (auto t : present) {
      auto it = df.find(t);
      if (it == df.end()) it = df.emplace(std::string(t), 0).first;
      ++it->second;
    }
  }
  for (const auto& [t, count] : df) index.idf[t] = mindmap::idf(count, n);

  index.doc_norms.assign(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    const auto weigh = [&](const TermWeights& counts) {
      TermWeights w;
      for (const auto& [t, c] : counts) w[t] = c * index.idf.find(t)->second;
      return w;
    };
    TermWeights doc;
    add_unit(doc, body[d], boosts.body);
    add_unit(doc, weigh(title_counts[d]), boosts.title);
    add_unit(doc, weigh(topic_counts[d]), boosts.topic);
    double norm = 0.0;
    for (const auto& [t, w] : doc) {
      if (w <= 0.0) continue;
      norm += w * w;
      index.postings[t].push_back(Posting{static_cast<std::uint32_t>(d), w});
    }
    index.doc_norms[d] = std::sqrt(norm);
  }
  return index;
}

CategoryFilter filter_by_categories(const SearchIndex& index, const std::set<std::string>& categories) {
  CategoryFilter out;
  for (const auto& name : categories) {
    auto it = index.members.find(name);
    if (it == index.members.end()) {
      out.unknown.push_back(name);
      continue;
    }
    out.ids.insert(it->second.begin(), it->second.end());
  }
  return out;
}

std::vector<SearchHit> search(const SearchIndex& index, std::string_view query,
                              const std::set<std::string>& categories, std::size_t top_k,
                              const StopwordList& stopwords, const LemmaTable& lemmas) {
  if (top_k < 1) throw Error(ErrorKind::DomainError, "top_k must be >= 1");
  std::map<std::string, double, std::less<>> q;
  for (const auto& t : field_tokens(query, stopwords, lemmas)) {
    auto it = index.idf.find(t);
    if (it != index.idf.end()) q[t] += it->second;
  }
  if (q.empty()) return {};
  double q_norm = 0.0;
  for (const auto& [_, w] : q) q_norm += w * w;
  q_norm = std::sqrt(q_norm);

  std::vector<bool> allowed;
  if (!categories.empty()) {
    allowed.assign(index.size(), false);
    for (const auto& id : filter_by_categories(index, categories).ids) {
      auto it = std::lower_bound(index.doc_ids.begin(), index.doc_ids.end(), id);
      allowed[static_cast<std::size_t>(it - index.doc_ids.begin())] = true;
    }
  }

  std::map<std::uint32_t, std::pair<double, std::vector<std::string>>> acc;
  for (const auto& [term, qw] : q) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) continue;
    for (const auto& p : it->second) {
      if (!allowed.empty() && !allowed[p.doc]) continue;
      auto& slot = acc[p.doc];
      slot.first += qw * p.weight;
      slot.second.push_back(term);
    }
  }

  std::vector<SearchHit> hits;
  hits.reserve(acc.size());
  for (auto& [doc, slot] : acc) {
    const double denom = q_norm * index.doc_norms[doc];
    if (denom <= 0.0 || slot.first <= 0.0) continue;
    const auto& id = index.doc_ids[doc];
    hits.push_back(SearchHit{id, slot.first / denom, index.category_of.find(id)->second,
                             std::move(slot.second)});
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.recording_id < b.recording_id;
  });
  if (hits.size() > top_k) hits.resize(top_k);
  return hits;
}

json index_to_json(const SearchIndex& index) {
  json postings = json::object();
  for (const auto& [term, list] : index.postings) {
    json arr = json::array();
    for (const auto& p : list) arr.push_back(json::array({p.doc, p.weight}));
    postings[term] = std::move(arr);
  }
  return json{{"version", 1},
              {"doc_ids", index.doc_ids},
              {"doc_norms", index.doc_norms},
              {"idf", index.idf},
              {"postings", postings},
              {"category_of", index.category_of},
              {"members", index.members},
              {"boosts", {{"title", index.boosts.title}, {"topic", index.boosts.topic}, {"body", index.boosts.body}}}};
}

SearchIndex index_from_json(const json& j) {
  if (j.value("version", 0) != 1) throw Error(ErrorKind::InconsistentStore, "unknown index version");
  SearchIndex index;
  index.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  index.doc_norms = j.at("doc_norms").get<std::vector<double>>();
  for (const auto& [t, w] : j.at("idf").items()) index.idf[t] = w.get<double>();
  for (const auto& [t, list] : j.at("postings").items()) {
    auto& out = index.postings[t];
    for (const auto& p : list) {
      const auto doc = p.at(0).get<std::uint32_t>();
      if (doc >= index.doc_ids.size()) throw Error(ErrorKind::InconsistentStore, "posting out of range");
      out.push_back(Posting{doc, p.at(1).get<double>()});
    }
  }
  for (const auto& [id, c] : j.at("category_of").items()) index.category_of[id] = c.get<std::string>();
  for (const auto& [c, ids] : j.at("members").items()) index.members[c] = ids.get<std::vector<std::string>>();
  const auto& b = j.at("boosts");
  index.boosts = FieldBoosts{b.at("title").get<double>(), b.at("topic").get<double>(), b.at("body").get<double>()};
  if (index.doc_norms.size() != index.doc_ids.size())
    throw Error(ErrorKind::InconsistentStore, "index norms and ids differ in length");
  return index;
}

}  // namespace mindmap
