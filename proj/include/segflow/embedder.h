#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace segflow {

// Text -> fixed-width vector. Implementations must be deterministic and
// return unit-L2-norm vectors.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> Embed(std::string_view text) const = 0;
};

// Hash-seeded Gaussian direction: the text and namespace are hashed into a
// SplitMix64 stream, d normal draws are taken and the result is normalized.
class StubEmbedder : public TextEmbedder {
 public:
  StubEmbedder(std::string seed_namespace, std::size_t dimension);

  std::size_t dimension() const override { return dimension_; }
  std::vector<double> Embed(std::string_view text) const override;

 private:
  std::string namespace_;
  std::size_t dimension_;
};

}  // namespace segflow
