#include "mindmap/curation.hpp"

#include <algorithm>
#include <cmath>

#include "mindmap/error.hpp"
#include "mindmap/util.hpp"

namespace mindmap {

using nlohmann::json;

bool same_category_name(std::string_view a, std::string_view b) {
  return ascii_lower(a) == ascii_lower(b);
}

bool CurationSession::has_category(std::string_view name) const {
  return std::any_of(accepted.begin(), accepted.end(),
                     [&](const Category& c) { return same_category_name(c.name, name); });
}

CurationSession start_session(const std::vector<std::string>& corpus_ids, std::uint64_t seed) {
  if (corpus_ids.empty()) throw Error(ErrorKind::EmptyCorpus, "no recordings to curate");
  CurationSession s;
  s.unassigned.insert(corpus_ids.begin(), corpus_ids.end());
  s.seed = seed;
  return s;
}

std::size_t default_round_k(std::size_t unassigned) {
  const auto guess = static_cast<std::size_t>(std::lround(std::sqrt(unassigned / 2.0)));
  return std::min(std::clamp<std::size_t>(guess, 2, 50), unassigned);
}

RoundProposal run_round(const CurationSession& session, const TfIdfModel& model, std::size_t k,
                        std::uint64_t seed, std::size_t label_terms, const KMeansOptions& base) {
  const std::size_t n = session.unassigned.size();
  if (k < 1 || k > n)
    throw Error(ErrorKind::BadK,
                "k=" + std::to_string(k) + " with " + std::to_string(n) + " unassigned");

  std::vector<std::string> ids(session.unassigned.begin(), session.unassigned.end());
  std::vector<SparseVector> rows;
  rows.reserve(n);
  for (const auto& id : ids) {
    const auto* row = model.row(id);
    if (!row) throw Error(ErrorKind::InconsistentStore, "no vector for " + id);
    rows.push_back(*row);
  }

  KMeansOptions opts = base;
  opts.k = k;
  opts.seed = seed;
  const auto km = kmeans(rows, ids, model.vocabulary.size(), opts);

  RoundProposal proposal;
  proposal.round = session.round;
  proposal.k = k;
  proposal.seed = seed;
  proposal.inertia = km.inertia;
  for (std::size_t c = 0; c < k; ++c) {
    ProposedCluster pc;
    pc.id = c;
    for (auto i : km.members(c)) pc.member_ids.push_back(ids[i]);
    auto labels = suggest_labels(km, c, model.vocabulary, label_terms);
    pc.suggested_terms = std::move(labels.terms);
    pc.low_confidence = labels.low_confidence;
    proposal.clusters.push_back(std::move(pc));
  }
  return proposal;
}

CurationSession accept(const CurationSession& session, const RoundProposal& proposal,
                       const std::vector<Selection>& selections) {
  if (proposal.round != session.round)
    throw Error(ErrorKind::StaleProposal, "proposal is from round " +
                                              std::to_string(proposal.round) + ", session is at " +
                                              std::to_string(session.round));
  std::set<std::size_t> seen_ids;
  for (std::size_t i = 0; i < selections.size(); ++i) {
    const auto& sel = selections[i];
    if (sel.cluster_id >= proposal.clusters.size())
      throw Error(ErrorKind::UnknownCluster, "cluster " + std::to_string(sel.cluster_id));
    if (!seen_ids.insert(sel.cluster_id).second)
      throw Error(ErrorKind::UnknownCluster,
                  "cluster " + std::to_string(sel.cluster_id) + " selected twice");
    if (trim(sel.name).empty()) throw Error(ErrorKind::DuplicateName, "empty category name");
    if (session.has_category(sel.name))
      throw Error(ErrorKind::DuplicateName, sel.name);
    for (std::size_t j = 0; j < i; ++j)
      if (same_category_name(selections[j].name, sel.name))
        throw Error(ErrorKind::DuplicateName, sel.name);
  }

  CurationSession next = session;
  RoundSummary summary{session.round, proposal.k, proposal.seed, session.unassigned.size(), {}};
  for (const auto& sel : selections) {
    const auto& cluster = proposal.clusters[sel.cluster_id];
    Category cat;
    cat.name = trim(sel.name);
    cat.suggested_terms = cluster.suggested_terms;
    cat.origin_round = session.round;
    for (const auto& id : cluster.member_ids) {
      if (next.unassigned.erase(id) == 0)
        throw Error(ErrorKind::StaleProposal, id + " is no longer unassigned");
      cat.member_ids.push_back(id);
    }
    std::sort(cat.member_ids.begin(), cat.member_ids.end());
    summary.accepted.push_back(cat.name);
    next.accepted.push_back(std::move(cat));
  }
  next.history.push_back(std::move(summary));
  ++next.round;
  return next;
}

std::vector<Category> finalize(const CurationSession& session, std::string_view residual_name,
                               const TfIdfModel* model, std::size_t label_terms) {
  std::vector<Category> out = session.accepted;
  if (session.unassigned.empty()) return out;
  if (trim(residual_name).empty() || session.has_category(residual_name))
    throw Error(ErrorKind::DuplicateName, std::string(residual_name));
  Category residual;
  residual.name = trim(residual_name);
  residual.member_ids.assign(session.unassigned.begin(), session.unassigned.end());
  residual.origin_round = session.round;
  if (model) {
    std::vector<const SparseVector*> rows;
    for (const auto& id : residual.member_ids)
      if (const auto* r = model->row(id)) rows.push_back(r);
    const auto mean = mean_vector(rows, model->vocabulary.size());
    residual.suggested_terms = top_terms(mean, model->vocabulary, label_terms).terms;
  }
  out.push_back(std::move(residual));
  return out;
}

namespace {

json category_json(const Category& c) {
  return json{{"name", c.name},
              {"member_ids", c.member_ids},
              {"suggested_terms", c.suggested_terms},
              {"origin_round", c.origin_round}};
}

Category category_from(const json& j) {
  Category c;
  c.name = j.at("name").get<std::string>();
  c.member_ids = j.at("member_ids").get<std::vector<std::string>>();
  c.suggested_terms = j.value("suggested_terms", std::vector<std::string>{});
  c.origin_round = j.value("origin_round", std::size_t{0});
  if (c.name.empty() || c.member_ids.empty())
    throw Error(ErrorKind::InconsistentStore, "category needs a name and members");
  return c;
}

}  // namespace

json session_to_json(const CurationSession& s) {
  json accepted = json::array();
  for (const auto& c : s.accepted) accepted.push_back(category_json(c));
  json history = json::array();
  for (const auto& h : s.history)
    history.push_back(json{{"round", h.round},
                           {"k", h.k},
                           {"seed", h.seed},
                           {"unassigned_before", h.unassigned_before},
                           {"accepted", h.accepted}});
  return json{{"version", 1},
              {"round", s.round},
              {"seed", s.seed},
              {"accepted", accepted},
              {"unassigned", s.unassigned},
              {"history", history}};
}

CurationSession session_from_json(const json& j) {
  CurationSession s;
  s.round = j.at("round").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& c : j.at("accepted")) s.accepted.push_back(category_from(c));
  for (const auto& id : j.at("unassigned")) s.unassigned.insert(id.get<std::string>());
  for (const auto& h : j.value("history", json::array()))
    s.history.push_back(RoundSummary{h.at("round").get<std::size_t>(), h.at("k").get<std::size_t>(),
                                     h.at("seed").get<std::uint64_t>(),
                                     h.at("unassigned_before").get<std::size_t>(),
                                     h.at("accepted").get<std::vector<std::string>>()});
  std::set<std::string> seen;
  for (const auto& c : s.accepted)
    for (const auto& id : c.member_ids)
      if (!seen.insert(id).second || s.unassigned.count(id))
        throw Error(ErrorKind::InconsistentStore, "session assigns " + id + " twice");
  return s;
}

json categories_to_json(const std::vector<Category>& categories) {
  json out = json::array();
  for (const auto& c : categories)
    out.push_back(json{{"name", c.name},
                       {"member_ids", c.member_ids},
                       {"suggested_terms", c.suggested_terms}});
  return out;
}

std::vector<Category> categories_from_json(const json& j) {
  std::vector<Category> out;
  for (const auto& c : j) out.push_back(category_from(c));
  return out;
}

}  // namespace mindmap
