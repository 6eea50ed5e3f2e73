#include <gtest/gtest.h>

#include <random>

#include "fxmm/tiering.hpp"
#include "oracles.hpp"

namespace {

using namespace fxmm;

std::vector<IntensityShape> two_clusters(std::size_t per_cluster, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<IntensityShape> pts;
  for (std::size_t i = 0; i < per_cluster; ++i) {
    pts.push_back({-0.3 + 0.05 * noise(rng), 5.0 + 0.3 * noise(rng)});
    pts.push_back({-1.9 + 0.05 * noise(rng), 15.0 + 0.3 * noise(rng)});
  }
  return pts;
}

TEST(KMeans, RecoversSeparatedClustersOrderedByBeta) {
  const auto pts = two_clusters(15, 4);
  const auto c = kmeans_shapes(pts, 2);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(c.labels[i], i % 2) << i;
  EXPECT_NEAR(c.centroids[0][1], 5.0, 0.3);
  EXPECT_NEAR(c.centroids[1][1], 15.0, 0.3);
}

TEST(KMeans, DeterministicGivenSeed) {
  const auto pts = two_clusters(10, 8);
  const auto a = kmeans_shapes(pts, 3), b = kmeans_shapes(pts, 3);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.inertia, b.inertia);
}

TEST(KMeans, SingleClusterTakesEveryone) {
  const auto pts = two_clusters(5, 2);
  const auto c = kmeans_shapes(pts, 1);
  for (auto l : c.labels) EXPECT_EQ(l, 0u);
}

TEST(KMeans, DegenerateInputs) {
  const std::vector<IntensityShape> dup(6, IntensityShape{-0.3, 5.0});
  EXPECT_THROW(kmeans_shapes(dup, 2), DegenerateInputError);
  const std::vector<IntensityShape> one{{-0.3, 5.0}};
  EXPECT_THROW(kmeans_shapes(one, 2), DegenerateInputError);
}

FlowData two_tier_data(std::size_t clients_per_tier) {
  FlowData data;
  const std::vector<double> sizes{1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
  const std::vector<double> weights{0.4, 0.25, 0.19, 0.1, 0.05, 0.01};
  for (std::size_t c = 0; c < 2 * clients_per_tier; ++c) {
    const bool t1 = c % 2 == 0;
    std::vector<double> lambdas;
    for (double w : weights) lambdas.push_back(40.0 * w);
    const auto flow = oracle::synthetic_flow("client" + std::to_string(c), t1 ? -0.3 : -1.9, t1 ? 5.0 : 15.0, lambdas,
                                             sizes, t1 ? oracle::levels(-1.0, 1.0, 21) : oracle::levels(-0.4, 0.6, 21),
                                             25.0, 1000 + c);
    data.trades.insert(data.trades.end(), flow.trades.begin(), flow.trades.end());
    data.quotes.insert(data.quotes.end(), flow.quotes.begin(), flow.quotes.end());
  }
  return data;
}

TEST(Tiering, ClientFitsClusterIntoGeneratingTiers) {
  const auto data = two_tier_data(6);
  const auto batch = fit_clients(data);
  ASSERT_EQ(batch.fits.size(), 12u);
  EXPECT_TRUE(batch.failures.empty());
  const auto tiers = kmeans_tiers(batch.fits, 2, data);
  for (const auto& [id, tier] : tiers.tier_of_client) {
    const auto n = std::stoul(id.substr(6));
    EXPECT_EQ(tier, n % 2) << id;
  }
  EXPECT_NEAR(tiers.tiers[0].shape.alpha, -0.3, 0.05 * 0.3 + 0.02);
  EXPECT_NEAR(tiers.tiers[0].shape.beta, 5.0, 0.05 * 5.0);
  EXPECT_NEAR(tiers.tiers[1].shape.alpha, -1.9, 0.05 * 1.9);
  EXPECT_NEAR(tiers.tiers[1].shape.beta, 15.0, 0.05 * 15.0);
  EXPECT_EQ(tiers.members[0].size(), 6u);
  EXPECT_EQ(tiers.members[1].size(), 6u);
}

TEST(Tiering, SingleTierIsThePooledFit) {
  const auto data = two_tier_data(2);
  const auto batch = fit_clients(data);
  const auto tiers = kmeans_tiers(batch.fits, 1, data);
  ASSERT_EQ(tiers.tiers.size(), 1u);
  EXPECT_EQ(tiers.members[0].size(), 4u);
  const auto all = fit_shared_shape(data.samples_for({"client0", "client1", "client2", "client3"}, SideSelection::pooled));
  EXPECT_NEAR(tiers.tiers[0].shape.alpha, all.shape.alpha, 1e-9);
  EXPECT_NEAR(tiers.tiers[0].shape.beta, all.shape.beta, 1e-9 * all.shape.beta);
}

TEST(Tiering, FailedClientsAreReportedNotThrown) {
  auto data = two_tier_data(2);
  data.quotes.push_back({"quotes_only", Side::bid, 0, 0.1, 1.0});
  const auto batch = fit_clients(data);
  EXPECT_EQ(batch.fits.size(), 4u);
  ASSERT_EQ(batch.failures.size(), 1u);
  EXPECT_EQ(batch.failures[0].client_id, "quotes_only");
}

}  // namespace
