#include "mfmclust/sampler.hpp"

namespace mfmclust {

void McmcConfig::validate() const {
  if (iterations < 1) throw InputError("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw InputError("burn-in must be non-negative and below iterations");
  if (thinning < 1) throw InputError("thinning must be at least 1");
  if (gamma_moves_per_iter < 1) throw InputError("gamma moves per iteration must be at least 1");
  if (initial_inclusion && !(*initial_inclusion >= 0 && *initial_inclusion <= 1)) throw InputError("initial inclusion rate must lie in [0, 1]");
  if (launch_scans < 0) throw InputError("launch scans must be non-negative");
}

ChainDraws run_mcmc(const CountMatrix& data, const PhyloTree* tree, const ModelSpec& model, const McmcConfig& cfg) {
  cfg.validate();
  model.prior.validate();
  const PartitionPrior prior(static_cast<int>(data.n_samples()), model.prior);
  if (model.kernel == KernelKind::DirichletMultinomial) {
    const DmKernel kernel(data, model.dm);
    return run_chain(kernel, prior, cfg);
  }
  if (tree == nullptr) throw InputError("the Dirichlet-tree kernel requires a tree");
  const DtmKernel kernel(propagate_tree_counts(data, *tree), model.dtm);
  return run_chain(kernel, prior, cfg);
}

}  // namespace mfmclust
