#include <algorithm>
#include <numeric>

#include "tcprobe/errors.hpp"
#include "tcprobe/evalsuite.hpp"

namespace tcprobe {

Json PatchResult::to_json() const {
  Json j = Json::object();
  j["layer"] = layer;
  j["n_pairs"] = per_pair_delta.size();
  j["mean"] = mean;
  j["ci"] = ci.to_json();
  j["frac_toward_donor"] = frac_toward_donor;
  j["structural_zero"] = structural_zero;
  j["per_pair_delta"] = per_pair_delta;
  return j;
}

namespace {

std::vector<double> endpoint_features(const FeatureVariant& variant, const std::vector<double>& hi,
                                      const std::vector<double>& hj) {
  std::vector<double> x;
  x.reserve(variant.endpoints.size() * hi.size());
  for (auto endpoint : variant.endpoints) {
    switch (endpoint) {
      case Endpoint::source: x.insert(x.end(), hi.begin(), hi.end()); break;
      case Endpoint::target: x.insert(x.end(), hj.begin(), hj.end()); break;
      case Endpoint::diff:
        for (std::size_t k = 0; k < hi.size(); ++k) x.push_back(hj[k] - hi[k]);
        break;
    }
  }
  return x;
}

double score(const FittedProbe& probe, std::vector<double> x) {
  const auto& s = probe.standardizer;
  if (x.size() != s.width()) throw ValidationError("patch_estimate: probe width does not match the variant");
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = (x[c] - s.means[c]) / s.scales[c];
  return sigmoid(probe.model.decision(x));
}

}  // namespace

PatchResult patch_estimate(std::span<const MinimalPair> pairs, const Corpus& corpus, const FittedProbe& probe,
                           const FeatureVariant& variant, int layer, std::size_t n_resamples, std::uint64_t seed,
                           const Exec& exec) {
  PatchResult res;
  res.layer = layer;
  res.structural_zero = std::find(variant.layer_ids.begin(), variant.layer_ids.end(), layer) == variant.layer_ids.end();
  res.per_pair_delta.assign(pairs.size(), 0.0);

  parallel_for(pairs.size(), exec, [&](std::size_t k) {
    const auto& p = pairs[k];
    const auto& a_traj = corpus.trajectories.at(p.donor_index);
    const auto& b_traj = corpus.trajectories.at(p.target_index);
    const auto& a_store = corpus.stores.at(p.donor_index);
    const auto& b_store = corpus.stores.at(p.target_index);
    const auto [i, j] = p.differing_edge;
    if (!(0 <= i && i < j && static_cast<std::size_t>(j) < p.shared_prefix_len)) {
      throw ValidationError("patch_estimate: differing edge (" + std::to_string(i) + "," + std::to_string(j) +
                            ") lies outside the shared prefix of '" + p.target_id + "'");
    }
    const auto a_pos = a_store.layer_position(layer);
    const auto b_pos = b_store.layer_position(layer);
    if (!a_pos || !b_pos) {
      throw ValidationError("patch_estimate: layer " + std::to_string(layer) + " is not cached for '" +
                            (a_pos ? p.target_id : p.donor_id) + "'");
    }
    const auto bi = static_cast<std::size_t>(b_traj.calls[static_cast<std::size_t>(i)].boundary_index);
    const auto bj = static_cast<std::size_t>(b_traj.calls[static_cast<std::size_t>(j)].boundary_index);
    const auto ai = static_cast<std::size_t>(a_traj.calls[static_cast<std::size_t>(i)].boundary_index);

    const auto hj = pool_residual(b_store, bj, variant.layer_ids);
    const double base = score(probe, endpoint_features(variant, pool_residual(b_store, bi, variant.layer_ids), hj));

    ActivationStore patched = b_store;
    const auto donor_vec = a_store.vector(ai, *a_pos);
    auto target_vec = patched.vector(bi, *b_pos);
    if (donor_vec.size() != target_vec.size()) throw ValidationError("patch_estimate: hidden_dim differs");
    std::copy(donor_vec.begin(), donor_vec.end(), target_vec.begin());
    const auto hj_patched = bi == bj ? pool_residual(patched, bj, variant.layer_ids) : hj;
    const double after =
        score(probe, endpoint_features(variant, pool_residual(patched, bi, variant.layer_ids), hj_patched));
    const double delta = after - base;
    res.per_pair_delta[k] = p.donor_has_edge ? delta : -delta;
  });

  const double n = static_cast<double>(pairs.size());
  if (!pairs.empty()) {
    res.mean = std::accumulate(res.per_pair_delta.begin(), res.per_pair_delta.end(), 0.0) / n;
    res.frac_toward_donor =
        static_cast<double>(std::count_if(res.per_pair_delta.begin(), res.per_pair_delta.end(),
                                          [](double d) { return d > 0.0; })) /
        n;
  }
  res.ci.point = res.mean;
  res.ci.lo = res.ci.hi = res.mean;
  res.ci.degenerate = true;
  res.ci.resample_unit = "minimal_pair";
  if (pairs.size() >= 2 && n_resamples > 0) {
    const GroupStatistic mean_of = [&](std::span<const std::size_t> draw) {
      double s = 0.0;
      for (auto g : draw) s += res.per_pair_delta[g];
      return s / static_cast<double>(draw.size());
    };
    res.ci = bca_ci(pairs.size(), mean_of, n_resamples, seed, exec);
    res.ci.resample_unit = "minimal_pair";
  }
  return res;
}

}  // namespace tcprobe
