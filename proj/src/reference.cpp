#include "logo_kernel.hpp"

// Serial LOGO: one fold after another, train rows gathered by a linear scan.
// Parallel drivers must reproduce its scores bit for bit.

namespace tcprobe {

LogoResult logo_cv_reference(const PairDataset& dataset, std::span<const std::uint8_t> labels,
                             const FeatureFamily& family, const LogoConfig& config) {
  using namespace detail;
  LogoResult res;
  auto setup = prepare(dataset, labels, family, config, res);
  res.n_folds = setup.group_names.size();
  detail::FoldInputs in;
  in.dataset = &dataset;
  in.fixed = &setup.fixed;
  in.reversed = config.score_reversed ? &setup.reversed : nullptr;
  in.labels = labels;
  in.family = &family;
  in.config = &config;
  in.warm = setup.warm ? &*setup.warm : nullptr;
  in.warm_standardizer = &setup.warm_standardizer;
  in.preconditioner = setup.preconditioner ? &*setup.preconditioner : nullptr;
  for (std::size_t g = 0; g < setup.group_names.size(); ++g) {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (std::size_t r = 0; r < res.group_of_row.size(); ++r) {
      (res.group_of_row[r] == g ? test : train).push_back(r);
    }
    merge_fold(res, detail::run_fold(in, train, test, g), setup.group_names[g]);
  }
  finish_auroc(res);
  return res;
}

}  // namespace tcprobe
