#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "veritas/descriptor_bag.hpp"
#include "veritas/gmm.hpp"

namespace veritas {

/// Fixed-length Fisher Vector encoding of a descriptor bag.
///
/// Layout (length 2*D*K): the K mean-gradient blocks first, then the K
/// variance-gradient blocks, each block D entries in descriptor order.
/// Component k's mean block starts at k*D and its variance block at
/// (K + k)*D; see mean_index / sigma_index.
struct FisherVector {
  std::vector<double> values;
  std::string gmm_id;
  std::size_t dim = 0;
  std::size_t components = 0;
  bool normalized = false;

  std::size_t mean_index(std::size_t k, std::size_t d) const { return k * dim + d; }
  std::size_t sigma_index(std::size_t k, std::size_t d) const { return (components + k) * dim + d; }

  friend bool operator==(const FisherVector&, const FisherVector&) = default;
};

/// Encodes `bag` against `gmm`:
///   G_mu_k    = 1/(T sqrt(w_k))  * sum_t gamma_t(k) (x_t - mu_k) / sigma_k
///   G_sigma_k = 1/(T sqrt(2 w_k)) * sum_t gamma_t(k) ((x_t - mu_k)^2 / sigma_k^2 - 1)
/// with gamma_t(k) the component posterior. Rows are reduced in bag order.
FisherVector encode_fisher(const GaussianMixture& gmm, const DescriptorBag& bag);

// Signed power normalization z -> sign(z)|z|^alpha followed by unit L2
// scaling. A zero vector passes through (flagged normalized). Throws on an
// already-normalized input.
FisherVector normalize_fv(const FisherVector& fv, double power_alpha);

// Binary format: 8-byte header ('F','V', u8 version, u8 flags, u16 D, u16 K),
// u16 gmm_id length + id bytes, then 2DK little-endian float64 values.
// Flag bit 0 marks a normalized vector.
void write_fv_binary(std::ostream& out, const FisherVector& fv);
FisherVector read_fv_binary(std::istream& in);
void save_fv(const std::filesystem::path& path, const FisherVector& fv);
FisherVector load_fv(const std::filesystem::path& path);
// One value per line, prefixed by block ("mu"/"sigma"), component and dim.
void write_fv_csv(std::ostream& out, const FisherVector& fv);

}  // namespace veritas
