#include "veritas/cross_validation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "veritas/error.hpp"
#include "veritas/random.hpp"

namespace veritas {

using nlohmann::json;

std::map<std::string, int> FoldPlan::assignments() const {
  std::map<std::string, int> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (const auto& id : folds[f].test_identities) out.emplace(id, static_cast<int>(f));
  }
  return out;
}

namespace {

std::vector<std::size_t> indices_for(const DatasetManifest& m, const std::vector<std::string>& ids) {
  std::vector<std::size_t> out;
  for (const auto& id : ids) {
    auto it = m.identities().find(id);
    if (it == m.identities().end()) throw DataError("fold plan: unknown identity '" + id + "'");
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

const Fold& fold_at(const FoldPlan& p, int fold) {
  if (fold < 0 || static_cast<std::size_t>(fold) >= p.folds.size()) throw DataError("fold plan: fold out of range");
  return p.folds[static_cast<std::size_t>(fold)];
}

}  // namespace

std::vector<std::size_t> FoldPlan::train_indices(const DatasetManifest& manifest, int fold) const {
  return indices_for(manifest, fold_at(*this, fold).train_identities);
}

std::vector<std::size_t> FoldPlan::test_indices(const DatasetManifest& manifest, int fold) const {
  return indices_for(manifest, fold_at(*this, fold).test_identities);
}

void FoldPlan::check_against(const DatasetManifest& manifest) const {
  if (k < 2 || folds.size() != static_cast<std::size_t>(k)) throw DataError("fold plan: fold count does not match k");
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (folds[f].test_identities.empty()) {
      throw DataError("fold plan: fold " + std::to_string(f) + " has no test identities");
    }
    indices_for(manifest, folds[f].train_identities);
    indices_for(manifest, folds[f].test_identities);
  }
  std::map<std::string, int> seen;
  for (const auto& f : folds) {
    for (const auto& id : f.test_identities) {
      if (++seen[id] > 1) throw DataError("fold plan: identity '" + id + "' is in more than one test fold");
    }
  }
  const auto assigned = assignments();
  for (const auto& [id, _] : manifest.identities()) {
    if (!assigned.count(id)) throw DataError("fold plan: identity '" + id + "' is in no test fold");
  }
}

FoldPlan grouped_kfold(std::span<const std::string> identities, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("grouped_kfold: k must be >= 2");
  std::vector<std::string> ids(identities.begin(), identities.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < static_cast<std::size_t>(k)) {
    throw ConfigError("grouped_kfold: " + std::to_string(ids.size()) + " identities for " + std::to_string(k) +
                      " folds");
  }
  Rng rng(seed);
  rng.shuffle(ids);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ids.size(); ++i) plan.folds[i % static_cast<std::size_t>(k)].test_identities.push_back(ids[i]);
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    auto& fold = plan.folds[f];
    std::sort(fold.test_identities.begin(), fold.test_identities.end());
    for (std::size_t g = 0; g < plan.folds.size(); ++g) {
      if (g == f) continue;
      for (std::size_t i = g; i < ids.size(); i += static_cast<std::size_t>(k)) fold.train_identities.push_back(ids[i]);
    }
    std::sort(fold.train_identities.begin(), fold.train_identities.end());
  }
  return plan;
}

FoldPlan grouped_kfold(const DatasetManifest& manifest, int k, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& [id, _] : manifest.identities()) ids.push_back(id);
  return grouped_kfold(ids, k, seed);
}

std::string fold_plan_to_json(const FoldPlan& plan) {
  json folds = json::array();
  for (const auto& f : plan.folds) folds.push_back({{"train", f.train_identities}, {"test", f.test_identities}});
  return json{{"format", "veritas-fold-plan"}, {"version", 1}, {"k", plan.k}, {"seed", plan.seed}, {"folds", folds}}
      .dump(2);
}

FoldPlan fold_plan_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format").get<std::string>() != "veritas-fold-plan") throw DataError("fold plan: wrong format tag");
    FoldPlan plan;
    plan.k = j.at("k").get<int>();
    plan.seed = j.value("seed", std::uint64_t{0});
    for (const auto& f : j.at("folds")) {
      Fold fold{f.at("train").get<std::vector<std::string>>(), f.at("test").get<std::vector<std::string>>()};
      std::sort(fold.train_identities.begin(), fold.train_identities.end());
      std::sort(fold.test_identities.begin(), fold.test_identities.end());
      plan.folds.push_back(std::move(fold));
    }
    return plan;
  } catch (const json::exception& e) {
    throw DataError(std::string("fold plan json: ") + e.what());
  }
}

void save_fold_plan(const std::filesystem::path& path, const FoldPlan& plan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write fold plan " + path.string());
  out << fold_plan_to_json(plan) << '\n';
}

FoldPlan load_fold_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open fold plan " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return fold_plan_from_json(ss.str());
}

void LeakageAudit::set_test_videos(int fold, std::set<std::string> video_ids) { tests_[fold] = std::move(video_ids); }

const std::set<std::string>& LeakageAudit::test_videos(int fold) const {
  static const std::set<std::string> kEmpty;
  auto it = tests_.find(fold);
  return it == tests_.end() ? kEmpty : it->second;
}

namespace {
void check_entry(const LeakageAudit::Entry& e, const std::set<std::string>& test) {
  for (const auto& v : e.contributors) {
    if (test.count(v)) {
      throw LeakageError("leakage: " + e.object + " in fold " + std::to_string(e.fold) + " was fit on test video '" +
                         v + "'");
    }
  }
}
}  // namespace

void LeakageAudit::record(int fold, std::string object, std::span<const std::string> video_ids) {
  Entry e{fold, std::move(object), std::set<std::string>(video_ids.begin(), video_ids.end())};
  check_entry(e, test_videos(fold));
  entries_.push_back(std::move(e));
}

void LeakageAudit::merge(const LeakageAudit& other) {
  for (const auto& [f, t] : other.tests_) tests_[f] = t;
  entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

void LeakageAudit::verify() const {
  for (const auto& e : entries_) check_entry(e, test_videos(e.fold));
}

}  // namespace veritas
