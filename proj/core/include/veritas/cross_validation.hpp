#pragma once

// Identity-grouped fold plans and the leakage audit that guards them.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "veritas/dataset.hpp"

namespace veritas {

struct Fold {
  std::vector<std::string> train_identities;  // sorted
  std::vector<std::string> test_identities;   // sorted

  friend bool operator==(const Fold&, const Fold&) = default;
};

// Folds are stored with explicit train and test identity lists so that a
// plan loaded from disk is used exactly as written. Nothing here prevents a
// plan from listing an identity on both sides; the experiment's leakage
// audit is what catches that.
struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;

  // identity -> index of the fold whose test set holds it (first one found).
  std::map<std::string, int> assignments() const;

  std::vector<std::size_t> train_indices(const DatasetManifest& manifest, int fold) const;
  std::vector<std::size_t> test_indices(const DatasetManifest& manifest, int fold) const;

  // Structural checks against a manifest: fold count, known identities, and
  // non-empty test folds. Throws DataError.
  void check_against(const DatasetManifest& manifest) const;

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

// Sorted identities are shuffled with `seed` and dealt round-robin into k
// folds. Throws ConfigError if k < 2 or there are fewer identities than folds.
FoldPlan grouped_kfold(std::span<const std::string> identities, int k, std::uint64_t seed);
FoldPlan grouped_kfold(const DatasetManifest& manifest, int k, std::uint64_t seed);

std::string fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const std::string& text);
void save_fold_plan(const std::filesystem::path& path, const FoldPlan& plan);
FoldPlan load_fold_plan(const std::filesystem::path& path);

// Records, per fold, which video_ids contributed to every learned object and
// checks them against the fold's test videos.
class LeakageAudit {
 public:
  struct Entry {
    int fold = 0;
    std::string object;
    std::set<std::string> contributors;
  };

  void set_test_videos(int fold, std::set<std::string> video_ids);
  // Throws LeakageError immediately when a contributor is a test video.
  void record(int fold, std::string object, std::span<const std::string> video_ids);
  void merge(const LeakageAudit& other);

  const std::vector<Entry>& entries() const { return entries_; }
  const std::set<std::string>& test_videos(int fold) const;
  // Re-checks every entry; throws LeakageError on the first violation.
  void verify() const;

 private:
  std::map<int, std::set<std::string>> tests_;
  std::vector<Entry> entries_;
};

}  // namespace veritas
