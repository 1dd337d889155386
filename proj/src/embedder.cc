#include "segflow/embedder.h"

#include <cmath>
#include <utility>

#include "segflow/errors.h"
#include "segflow/rng.h"

namespace segflow {

StubEmbedder::StubEmbedder(std::string seed_namespace, std::size_t dimension)
    : namespace_(std::move(seed_namespace)), dimension_(dimension) {
  if (dimension_ == 0) throw ContractError("stub embedder: dimension must be >= 1");
}

std::vector<double> StubEmbedder::Embed(std::string_view text) const {
  std::string key = namespace_;
  key.push_back('\0');
  key.append(text);
  Rng rng(SplitMix64(Fnv1a64(key)));
  std::vector<double> v(dimension_);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = StandardNormal(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace segflow
