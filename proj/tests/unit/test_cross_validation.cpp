#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_support.hpp"
#include "veritas/cross_validation.hpp"
#include "veritas/error.hpp"

namespace veritas {
namespace {

std::vector<std::string> names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("p" + std::to_string(100 + i));
  return out;
}

// Three videos per identity, labels alternating.
DatasetManifest manifest_for(const std::vector<std::string>& ids) {
  std::vector<VideoRecord> records;
  int n = 0;
  for (const auto& id : ids) {
    for (int v = 0; v < 3; ++v, ++n) {
      VideoRecord r;
      r.video_id = id + "-" + std::to_string(v);
      r.identity_id = id;
      r.label = n % 2;
      r.motion_path = r.video_id + ".txt";
      records.push_back(r);
    }
  }
  return DatasetManifest(std::move(records), ".");
}

TEST(GroupedKFold, FiftyEightIdentitiesGiveEightSixesAndTwoFives) {
  const auto plan = grouped_kfold(names(58), 10, 1);
  std::vector<std::size_t> sizes;
  for (const auto& f : plan.folds) sizes.push_back(f.test_identities.size());
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{5, 5, 6, 6, 6, 6, 6, 6, 6, 6}));
}

TEST(GroupedKFold, TestFoldsPartitionIdentitiesAndTrainIsComplement) {
  for (std::uint64_t seed : {0, 1, 2, 99}) {
    for (int k : {2, 3, 10}) {
      const auto ids = names(23);
      const auto plan = grouped_kfold(ids, k, seed);
      ASSERT_EQ(plan.folds.size(), static_cast<std::size_t>(k));
      std::multiset<std::string> seen;
      for (const auto& f : plan.folds) {
        seen.insert(f.test_identities.begin(), f.test_identities.end());
        EXPECT_TRUE(std::is_sorted(f.test_identities.begin(), f.test_identities.end()));
        std::vector<std::string> all;
        std::merge(f.train_identities.begin(), f.train_identities.end(), f.test_identities.begin(),
                   f.test_identities.end(), std::back_inserter(all));
        EXPECT_EQ(all, ids);
      }
      EXPECT_EQ(seen, std::multiset<std::string>(ids.begin(), ids.end()));
      EXPECT_EQ(plan.assignments().size(), ids.size());
    }
  }
}

TEST(GroupedKFold, SeedChangesAssignmentDeterministically) {
  EXPECT_EQ(grouped_kfold(names(30), 5, 7), grouped_kfold(names(30), 5, 7));
  EXPECT_NE(grouped_kfold(names(30), 5, 7), grouped_kfold(names(30), 5, 8));
}

TEST(GroupedKFold, RejectsBadK) {
  EXPECT_THROW(grouped_kfold(names(5), 1, 0), ConfigError);
  EXPECT_THROW(grouped_kfold(names(5), 6, 0), ConfigError);
}

TEST(FoldPlanIndices, VideosOfOneIdentityStayTogether) {
  const auto ids = names(12);
  const auto m = manifest_for(ids);
  const auto plan = grouped_kfold(m, 4, 3);
  std::set<std::size_t> all_test;
  for (int f = 0; f < 4; ++f) {
    const auto tr = plan.train_indices(m, f), te = plan.test_indices(m, f);
    EXPECT_EQ(tr.size() + te.size(), m.size());
    std::set<std::string> train_ids, test_ids;
    for (auto i : tr) train_ids.insert(m[i].identity_id);
    for (auto i : te) {
      test_ids.insert(m[i].identity_id);
      EXPECT_TRUE(all_test.insert(i).second);
    }
    for (const auto& id : test_ids) EXPECT_FALSE(train_ids.count(id)) << id;
  }
  EXPECT_EQ(all_test.size(), m.size());
}

TEST(FoldPlanSerialization, JsonAndFileRoundTrip) {
  const auto plan = grouped_kfold(names(17), 4, 5);
  EXPECT_EQ(fold_plan_from_json(fold_plan_to_json(plan)), plan);
  testing::TempDir dir;
  save_fold_plan(dir / "plan.json", plan);
  EXPECT_EQ(load_fold_plan(dir / "plan.json"), plan);
  EXPECT_THROW(fold_plan_from_json("{\"k\": 2}"), Error);
}

TEST(FoldPlanCheck, StructuralProblemsRejected) {
  const auto m = manifest_for(names(6));
  auto plan = grouped_kfold(m, 3, 0);
  EXPECT_NO_THROW(plan.check_against(m));
  auto unknown = plan;
  unknown.folds[0].test_identities.push_back("stranger");
  EXPECT_THROW(unknown.check_against(m), DataError);
  auto empty = plan;
  empty.folds[1].test_identities.clear();
  EXPECT_THROW(empty.check_against(m), DataError);
}

TEST(FoldPlanCheck, OverlapIsLeftForTheAudit) {
  const auto m = manifest_for(names(6));
  auto plan = grouped_kfold(m, 3, 0);
  plan.folds[0].train_identities.push_back(plan.folds[0].test_identities.front());
  std::sort(plan.folds[0].train_identities.begin(), plan.folds[0].train_identities.end());
  EXPECT_NO_THROW(plan.check_against(m));
}

TEST(LeakageAuditRecord, TestVideoContributorThrows) {
  LeakageAudit audit;
  audit.set_test_videos(0, {"a", "b"});
  const std::vector<std::string> clean{"c", "d"}, dirty{"c", "b"};
  EXPECT_NO_THROW(audit.record(0, "gmm/motion", clean));
  EXPECT_THROW(audit.record(0, "classifier", dirty), LeakageError);
  EXPECT_NO_THROW(audit.verify());
  EXPECT_EQ(audit.entries().size(), 1u);
}

TEST(LeakageAuditRecord, MergeThenVerifyCatchesViolations) {
  LeakageAudit good, other;
  good.set_test_videos(1, {"x"});
  const std::vector<std::string> y{"y"};
  good.record(1, "gmm", y);
  other.set_test_videos(1, {"y"});
  good.merge(other);
  EXPECT_THROW(good.verify(), LeakageError);
}

}  // namespace
}  // namespace veritas
