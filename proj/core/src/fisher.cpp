#include "veritas/fisher.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "binary_io.hpp"
#include "veritas/error.hpp"

namespace veritas {

namespace {
constexpr char kFvMagic[2] = {'F', 'V'};
constexpr std::uint8_t kFvVersion = 1;
}  // namespace

FisherVector encode_fisher(const GaussianMixture& gmm, const DescriptorBag& bag) {
  const std::size_t d = gmm.dim();
  const std::size_t k = gmm.components();
  if (bag.dim() != d) {
    throw DimensionError("encode_fisher: bag dim " + std::to_string(bag.dim()) +
                         " != mixture dim " + std::to_string(d));
  }
  FisherVector fv;
  fv.dim = d;
  fv.components = k;
  fv.gmm_id = gmm.id();
  fv.values.assign(2 * d * k, 0.0);

  std::vector<double> inv_sigma(k * d);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) inv_sigma[c * d + j] = 1.0 / std::sqrt(gmm.variance(c)[j]);
  }

  std::vector<double> gamma(k);
  double* g_mu = fv.values.data();
  double* g_sigma = fv.values.data() + k * d;
  for (std::size_t t = 0; t < bag.size(); ++t) {
    auto x = bag.row(t);
    posteriors_into(gmm, x, gamma);
    for (std::size_t c = 0; c < k; ++c) {
      const double g = gamma[c];
      if (g == 0.0) continue;
      auto mu = gmm.mean(c);
      const double* is = inv_sigma.data() + c * d;
      double* am = g_mu + c * d;
      double* as = g_sigma + c * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double z = (x[j] - mu[j]) * is[j];
        am[j] += g * z;
        as[j] += g * (z * z - 1.0);
      }
    }
  }

  const double inv_t = 1.0 / static_cast<double>(bag.size());
  for (std::size_t c = 0; c < k; ++c) {
    const double sm = inv_t / std::sqrt(gmm.weight(c));
    const double ss = inv_t / std::sqrt(2.0 * gmm.weight(c));
    for (std::size_t j = 0; j < d; ++j) {
      g_mu[c * d + j] *= sm;
      g_sigma[c * d + j] *= ss;
    }
  }
  return fv;
}

FisherVector normalize_fv(const FisherVector& fv, double power_alpha) {
  if (fv.normalized) throw DataError("normalize_fv: vector is already normalized");
  if (!(power_alpha > 0.0 && power_alpha <= 1.0)) {
    throw ConfigError("normalize_fv: power_alpha must lie in (0, 1]");
  }
  FisherVector out = fv;
  out.normalized = true;
  double norm2 = 0.0;
  for (auto& z : out.values) {
    if (power_alpha != 1.0) z = std::copysign(std::pow(std::abs(z), power_alpha), z);
    norm2 += z * z;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& z : out.values) z *= inv;
  }
  return out;
}

void write_fv_binary(std::ostream& out, const FisherVector& fv) {
  if (fv.dim > std::numeric_limits<std::uint16_t>::max() ||
      fv.components > std::numeric_limits<std::uint16_t>::max() ||
      fv.gmm_id.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw DataError("write_fv_binary: D, K or gmm_id too large for the format");
  }
  out.write(kFvMagic, 2);
  detail::put_le<std::uint8_t>(out, kFvVersion);
  detail::put_le<std::uint8_t>(out, fv.normalized ? 1 : 0);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(fv.dim));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(fv.components));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(fv.gmm_id.size()));
  out.write(fv.gmm_id.data(), static_cast<std::streamsize>(fv.gmm_id.size()));
  for (double v : fv.values) detail::put_f64(out, v);
}

FisherVector read_fv_binary(std::istream& in) {
  char magic[2] = {};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != kFvMagic[0] || magic[1] != kFvMagic[1]) {
    throw DataError("fisher vector: bad magic");
  }
  const auto version = detail::get_le<std::uint8_t>(in, "version");
  if (version != kFvVersion) throw DataError("fisher vector: unsupported version");
  FisherVector fv;
  fv.normalized = (detail::get_le<std::uint8_t>(in, "flags") & 1) != 0;
  fv.dim = detail::get_le<std::uint16_t>(in, "D");
  fv.components = detail::get_le<std::uint16_t>(in, "K");
  const auto id_len = detail::get_le<std::uint16_t>(in, "gmm_id length");
  fv.gmm_id.resize(id_len);
  in.read(fv.gmm_id.data(), id_len);
  if (in.gcount() != id_len) throw DataError("truncated binary artifact while reading gmm_id");
  fv.values.resize(2 * fv.dim * fv.components);
  for (auto& v : fv.values) {
    v = detail::get_f64(in, "values");
    if (!std::isfinite(v)) throw DataError("fisher vector: non-finite value");
  }
  return fv;
}

void save_fv(const std::filesystem::path& path, const FisherVector& fv) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_fv_binary(out, fv);
}

FisherVector load_fv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_fv_binary(in);
}

void write_fv_csv(std::ostream& out, const FisherVector& fv) {
  out << "block,component,dim,value\n" << std::setprecision(17);
  for (std::size_t c = 0; c < fv.components; ++c) {
    for (std::size_t j = 0; j < fv.dim; ++j) out << "mu," << c << ',' << j << ',' << fv.values[fv.mean_index(c, j)] << '\n';
  }
  for (std::size_t c = 0; c < fv.components; ++c) {
    for (std::size_t j = 0; j < fv.dim; ++j) out << "sigma," << c << ',' << j << ',' << fv.values[fv.sigma_index(c, j)] << '\n';
  }
}

}  // namespace veritas
