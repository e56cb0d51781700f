#include "farmsim/lifecycle.hpp"

#include <gtest/gtest.h>

namespace {

using namespace farmsim;
using namespace farmsim::lifecycle;
using topology::RaidLevel;

TEST(NodeStateMachine, LegalTransitions) {
    EXPECT_TRUE(legal_transition(NodeHealth::Healthy, NodeHealth::Failed));
    EXPECT_TRUE(legal_transition(NodeHealth::Healthy, NodeHealth::Degraded));
    EXPECT_TRUE(legal_transition(NodeHealth::Degraded, NodeHealth::Healthy));
    EXPECT_TRUE(legal_transition(NodeHealth::Degraded, NodeHealth::Failed));
    EXPECT_TRUE(legal_transition(NodeHealth::Failed, NodeHealth::Healthy));
    EXPECT_TRUE(legal_transition(NodeHealth::Syncing, NodeHealth::Healthy));
}

TEST(NodeStateMachine, IllegalTransitions) {
    EXPECT_FALSE(legal_transition(NodeHealth::Syncing, NodeHealth::Failed));
    EXPECT_FALSE(legal_transition(NodeHealth::Syncing, NodeHealth::Degraded));
    EXPECT_FALSE(legal_transition(NodeHealth::Failed, NodeHealth::Degraded));
    EXPECT_FALSE(legal_transition(NodeHealth::Failed, NodeHealth::Syncing));
    EXPECT_FALSE(legal_transition(NodeHealth::Healthy, NodeHealth::Syncing));
}

TEST(RaidMask, Raid1FirstFaultIsMasked) {
    EXPECT_EQ(raid_mask(RaidLevel::raid1, NodeHealth::Healthy), RaidOutcome::Masked);
}

TEST(RaidMask, NoRaidIsExposed) {
    EXPECT_EQ(raid_mask(RaidLevel::none, NodeHealth::Healthy), RaidOutcome::Exposed);
}

TEST(RaidMask, SecondFaultWhileDegradedIsExposed) {
    EXPECT_EQ(raid_mask(RaidLevel::raid5, NodeHealth::Degraded), RaidOutcome::Exposed);
    EXPECT_EQ(raid_mask(RaidLevel::raid1, NodeHealth::Degraded), RaidOutcome::Exposed);
}

// B=6, P 2->3 from round-robin init {0,1,0,1,0,1}:
// move bucket 0 (most loaded p0) -> p2, then bucket 1 (p1) -> p2.
TEST(Rebalance, HandDerivedPlanForSixBucketsTwoToThree) {
    std::vector<PartitionId> assignment = {0, 1, 0, 1, 0, 1};
    auto plan = plan_rebalance(assignment, 3);
    ASSERT_EQ(plan.size(), 2u);
    EXPECT_EQ(plan[0], (BucketMove{0, 0, 2}));
    EXPECT_EQ(plan[1], (BucketMove{1, 1, 2}));

    // final counts (2,2,2)
    for (const auto& move : plan) assignment[move.bucket] = move.to;
    std::vector<int> counts(3, 0);
    for (auto p : assignment) counts[p]++;
    EXPECT_EQ(counts, (std::vector<int>{2, 2, 2}));
}

TEST(Rebalance, AlreadyBalancedEmptyPlan) {
    std::vector<PartitionId> assignment = {0, 1, 2, 0, 1, 2};
    EXPECT_TRUE(plan_rebalance(assignment, 3).empty());
}

TEST(Rebalance, BalancesArbitrarySkew) {
    // everything on p0, spread over 4 partitions
    std::vector<PartitionId> assignment(13, 0);
    auto plan = plan_rebalance(assignment, 4);
    for (const auto& move : plan) assignment[move.bucket] = move.to;
    std::vector<int> counts(4, 0);
    for (auto p : assignment) counts[p]++;
    auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
    EXPECT_LE(*mx - *mn, 1);
}

TEST(Rebalance, RandomizedBalanceProperty) {
    std::uint64_t state = 12345;
    auto next = [&state] {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return state >> 33;
    };
    for (int trial = 0; trial < 200; ++trial) {
        std::uint32_t partitions = 1 + next() % 8;
        std::uint32_t buckets = partitions + next() % 64;
        std::vector<PartitionId> assignment(buckets);
        for (auto& a : assignment) a = next() % partitions;
        auto plan = plan_rebalance(assignment, partitions);
        for (const auto& move : plan) {
            EXPECT_EQ(assignment[move.bucket], move.from);
            assignment[move.bucket] = move.to;
        }
        std::vector<int> counts(partitions, 0);
        for (auto p : assignment) counts[p]++;
        auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
        EXPECT_LE(*mx - *mn, 1) << "B=" << buckets << " P=" << partitions;
    }
}

TEST(Takeover, FewestServedWins) {
    auto pick = pick_takeover_member({1, 2, 3}, {2, 0, 1});
    EXPECT_EQ(pick, 2u);
}

TEST(Takeover, TieGoesToLowestId) {
    auto pick = pick_takeover_member({5, 2, 9}, {1, 1, 1});
    EXPECT_EQ(pick, 2u);
}

TEST(Takeover, NoSurvivor) {
    EXPECT_FALSE(pick_takeover_member({}, {}).has_value());
}

TEST(CopyDuration, CeilingSeconds) {
    // 10 GB at 100 MB/s -> 100 s
    EXPECT_EQ(copy_duration_us(10'000'000'000ULL, 100'000'000ULL), 100u * kMicrosPerSecond);
    // one byte over rounds up a whole second
    EXPECT_EQ(copy_duration_us(100'000'001ULL, 100'000'000ULL), 2u * kMicrosPerSecond);
    EXPECT_EQ(copy_duration_us(0, 100), 0u);
}

}  // namespace
