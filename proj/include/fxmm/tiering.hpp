#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fxmm/errors.hpp"
#include "fxmm/flow_model.hpp"

namespace fxmm {

struct ClientFit {
  std::string client_id;
  TierIntensity intensity;
  double log_likelihood = 0.0;
};

struct ClientFitFailure {
  std::string client_id;
  std::string reason;
};

struct KMeansOptions {
  std::size_t restarts = 20;
  std::size_t max_iterations = 300;
  std::uint64_t seed = 20210701;
};

struct Clustering {
  std::vector<std::size_t> labels;  // per point, 0-based cluster index
  std::vector<std::array<double, 2>> centroids;  // in (alpha, beta) units
  double inertia = 0.0;  // in standardized units
};

/// k-means on (alpha, beta) after z-scoring each coordinate, best of `restarts` k-means++ runs.
///
/// Clusters are relabelled by increasing centroid beta, so cluster 0 is the
/// least price-sensitive group.
inline Clustering kmeans_shapes(std::span<const IntensityShape> shapes, std::size_t n_clusters,
                                const KMeansOptions& options = {}) {
  if (n_clusters == 0) throw ValidationError("tier count must be at least 1");
  if (shapes.size() < n_clusters)
    throw DegenerateInputError(std::to_string(shapes.size()) + " clients for " + std::to_string(n_clusters) + " tiers");
  std::set<std::pair<double, double>> distinct;
  for (const auto& s : shapes) distinct.emplace(s.alpha, s.beta);
  if (distinct.size() < n_clusters)
    throw DegenerateInputError(std::to_string(distinct.size()) + " distinct points for " +
                               std::to_string(n_clusters) + " tiers");

  const std::size_t n = shapes.size();
  std::array<double, 2> mean{}, sd{};
  for (const auto& s : shapes) {
    mean[0] += s.alpha;
    mean[1] += s.beta;
  }
  mean[0] /= double(n);
  mean[1] /= double(n);
  for (const auto& s : shapes) {
    sd[0] += (s.alpha - mean[0]) * (s.alpha - mean[0]);
    sd[1] += (s.beta - mean[1]) * (s.beta - mean[1]);
  }
  for (auto& v : sd) v = v > 0.0 ? std::sqrt(v / double(n)) : 1.0;

  std::vector<std::array<double, 2>> pts(n);
  for (std::size_t i = 0; i < n; ++i)
    pts[i] = {(shapes[i].alpha - mean[0]) / sd[0], (shapes[i].beta - mean[1]) / sd[1]};
  auto dist2 = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
  };

  std::mt19937_64 rng(options.seed);
  Clustering best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t restart = 0; restart < std::max<std::size_t>(1, options.restarts); ++restart) {
    // k-means++ seeding
    std::vector<std::array<double, 2>> centers;
    centers.push_back(pts[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    while (centers.size() < n_clusters) {
      for (std::size_t i = 0; i < n; ++i) {
        d2[i] = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) d2[i] = std::min(d2[i], dist2(pts[i], c));
      }
      std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
      centers.push_back(pts[pick(rng)]);
    }

    std::vector<std::size_t> labels(n, 0);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
      bool changed = it == 0;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t arg = 0;
        for (std::size_t c = 1; c < n_clusters; ++c)
          if (dist2(pts[i], centers[c]) < dist2(pts[i], centers[arg])) arg = c;
        if (labels[i] != arg) {
          labels[i] = arg;
          changed = true;
        }
      }
      std::vector<std::array<double, 2>> sums(n_clusters, {0.0, 0.0});
      std::vector<std::size_t> counts(n_clusters, 0);
      for (std::size_t i = 0; i < n; ++i) {
        sums[labels[i]][0] += pts[i][0];
        sums[labels[i]][1] += pts[i][1];
        ++counts[labels[i]];
      }
      for (std::size_t c = 0; c < n_clusters; ++c) {
        if (counts[c] == 0) {
          // Re-seed an empty cluster at the point farthest from its center.
          std::size_t far = 0;
          for (std::size_t i = 1; i < n; ++i)
            if (dist2(pts[i], centers[labels[i]]) > dist2(pts[far], centers[labels[far]])) far = i;
          centers[c] = pts[far];
          labels[far] = c;
          changed = true;
        } else {
          centers[c] = {sums[c][0] / double(counts[c]), sums[c][1] / double(counts[c])};
        }
      }
      if (!changed) break;
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += dist2(pts[i], centers[labels[i]]);
    if (inertia < best.inertia - 1e-12) {
      best.inertia = inertia;
      best.labels = labels;
      best.centroids = centers;
    }
  }

  for (auto& c : best.centroids) c = {c[0] * sd[0] + mean[0], c[1] * sd[1] + mean[1]};
  std::vector<std::size_t> order(n_clusters);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return best.centroids[a][1] < best.centroids[b][1]; });
  std::vector<std::size_t> rank(n_clusters);
  for (std::size_t r = 0; r < n_clusters; ++r) rank[order[r]] = r;
  Clustering out;
  out.inertia = best.inertia;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = rank[best.labels[i]];
  out.centroids.resize(n_clusters);
  for (std::size_t c = 0; c < n_clusters; ++c) out.centroids[rank[c]] = best.centroids[c];
  return out;
}

/// Observations of all clients plus the ladder they refer to.
struct FlowData {
  SizeLadder ladder = SizeLadder::standard();
  std::vector<TradeObservation> trades;
  std::vector<QuoteObservation> quotes;

  [[nodiscard]] std::vector<std::string> client_ids() const {
    std::set<std::string> ids;
    for (const auto& t : trades) ids.insert(t.client_id);
    for (const auto& q : quotes) ids.insert(q.client_id);
    return {ids.begin(), ids.end()};
  }

  /// Samples per ladder size for the given clients only.
  [[nodiscard]] std::vector<FlowSample> samples_for(const std::set<std::string>& clients, SideSelection sides) const {
    std::vector<TradeObservation> t;
    std::vector<QuoteObservation> q;
    for (const auto& x : trades)
      if (clients.count(x.client_id)) t.push_back(x);
    for (const auto& x : quotes)
      if (clients.count(x.client_id)) q.push_back(x);
    return make_samples(t, q, ladder, sides);
  }
};

struct CalibrationOptions {
  SideSelection sides = SideSelection::pooled;
  FitOptions fit;
  KMeansOptions kmeans;
};

struct ClientFitBatch {
  std::vector<ClientFit> fits;
  std::vector<ClientFitFailure> failures;
};

/// Fits each client separately; a failed client is reported without aborting the batch.
inline ClientFitBatch fit_clients(const FlowData& data, const CalibrationOptions& options = {}) {
  data.ladder.validate();
  ClientFitBatch out;
  for (const auto& id : data.client_ids()) {
    try {
      const auto samples = data.samples_for({id}, options.sides);
      const auto fit = fit_shared_shape(samples, options.fit);
      out.fits.push_back(ClientFit{id, TierIntensity{fit.shape, fit.lambda_by_size}, fit.log_likelihood});
    } catch (const Error& e) {
      out.failures.push_back(ClientFitFailure{id, e.what()});
    }
  }
  return out;
}

struct TierAssignment {
  std::map<std::string, std::size_t> tier_of_client;  // 0-based tier index
  std::vector<TierIntensity> tiers;
  std::vector<std::vector<std::string>> members;
  std::vector<double> log_likelihood;
};

/// Clusters clients on their fitted shapes and refits each tier on the pooled data of its members.
inline TierAssignment kmeans_tiers(std::span<const ClientFit> clients, std::size_t n_tiers, const FlowData& data,
                                   const CalibrationOptions& options = {}) {
  std::vector<IntensityShape> shapes;
  shapes.reserve(clients.size());
  for (const auto& c : clients) shapes.push_back(c.intensity.shape);
  const auto clustering = kmeans_shapes(shapes, n_tiers, options.kmeans);

  TierAssignment out;
  out.members.resize(n_tiers);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    out.tier_of_client[clients[i].client_id] = clustering.labels[i];
    out.members[clustering.labels[i]].push_back(clients[i].client_id);
  }
  for (std::size_t n = 0; n < n_tiers; ++n) {
    const std::set<std::string> ids(out.members[n].begin(), out.members[n].end());
    const auto samples = data.samples_for(ids, options.sides);
    const auto fit = fit_shared_shape(samples, options.fit);
    out.tiers.push_back(TierIntensity{fit.shape, fit.lambda_by_size});
    out.log_likelihood.push_back(fit.log_likelihood);
  }
  return out;
}

}  // namespace fxmm
