#include "veritas/descriptor_bag.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>

#include "binary_io.hpp"
#include "veritas/error.hpp"

namespace veritas {

namespace {
constexpr char kBagMagic[2] = {'D', 'B'};
constexpr std::uint8_t kBagVersion = 1;
}  // namespace

DescriptorBag::DescriptorBag(std::size_t dim, std::vector<double> values,
                             std::vector<std::int64_t> timestamps)
    : timestamps_(std::move(timestamps)) {
  if (dim == 0) throw DataError("descriptor bag: dimension must be positive");
  if (values.size() % dim != 0) {
    throw DimensionError("descriptor bag: " + std::to_string(values.size()) +
                         " values is not a multiple of dim " + std::to_string(dim));
  }
  const std::size_t rows = values.size() / dim;
  rows_ = Matrix(rows, dim, std::move(values));
  validate();
}

DescriptorBag::DescriptorBag(Matrix rows, std::vector<std::int64_t> timestamps)
    : rows_(std::move(rows)), timestamps_(std::move(timestamps)) {
  if (rows_.cols() == 0) throw DataError("descriptor bag: dimension must be positive");
  validate();
}

void DescriptorBag::validate() const {
  if (rows_.rows() == 0) throw DataError("descriptor bag: no rows");
  if (!timestamps_.empty() && timestamps_.size() != rows_.rows()) {
    throw DimensionError("descriptor bag: " + std::to_string(timestamps_.size()) +
                         " timestamps for " + std::to_string(rows_.rows()) + " rows");
  }
  const auto& v = rows_.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DataError("descriptor bag: non-finite value at row " + std::to_string(i / dim()) +
                      ", column " + std::to_string(i % dim()));
    }
  }
}

DescriptorBag DescriptorBag::subset(std::span<const std::size_t> indices) const {
  std::vector<std::int64_t> ts;
  if (has_timestamps()) {
    ts.reserve(indices.size());
    for (auto i : indices) ts.push_back(timestamps_[i]);
  }
  return DescriptorBag(rows_.select_rows(indices), std::move(ts));
}

DescriptorBag concatenate(std::span<const DescriptorBag* const> bags) {
  if (bags.empty()) throw DataError("concatenate: no bags");
  const std::size_t dim = bags.front()->dim();
  bool all_timed = true;
  std::size_t total = 0;
  for (const auto* b : bags) {
    if (b->dim() != dim) {
      throw DimensionError("concatenate: dimension " + std::to_string(b->dim()) +
                           " != " + std::to_string(dim));
    }
    all_timed = all_timed && b->has_timestamps();
    total += b->size();
  }
  std::vector<double> values;
  values.reserve(total * dim);
  std::vector<std::int64_t> ts;
  for (const auto* b : bags) {
    const auto& d = b->matrix().data();
    values.insert(values.end(), d.begin(), d.end());
    if (all_timed) ts.insert(ts.end(), b->timestamps().begin(), b->timestamps().end());
  }
  return DescriptorBag(dim, std::move(values), std::move(ts));
}

void write_bag_binary(std::ostream& out, const DescriptorBag& bag) {
  out.write(kBagMagic, 2);
  detail::put_le<std::uint8_t>(out, kBagVersion);
  detail::put_le<std::uint8_t>(out, bag.has_timestamps() ? 1 : 0);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(bag.dim()));
  detail::put_le<std::uint64_t>(out, bag.size());
  for (double v : bag.matrix().data()) detail::put_f64(out, v);
  if (bag.has_timestamps()) {
    for (auto t : bag.timestamps()) detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t));
  }
}

DescriptorBag read_bag_binary(std::istream& in) {
  char magic[2] = {};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != kBagMagic[0] || magic[1] != kBagMagic[1]) {
    throw DataError("descriptor bag: bad magic");
  }
  const auto version = detail::get_le<std::uint8_t>(in, "version");
  if (version != kBagVersion) {
    throw DataError("descriptor bag: unsupported version " + std::to_string(version));
  }
  const auto flags = detail::get_le<std::uint8_t>(in, "flags");
  const auto dim = detail::get_le<std::uint32_t>(in, "dim");
  const auto rows = detail::get_le<std::uint64_t>(in, "row count");
  if (dim == 0 || rows > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("descriptor bag: implausible header");
  }
  std::vector<double> values(rows * dim);
  for (auto& v : values) v = detail::get_f64(in, "values");
  std::vector<std::int64_t> ts;
  if (flags & 1) {
    ts.resize(rows);
    for (auto& t : ts) t = static_cast<std::int64_t>(detail::get_le<std::uint64_t>(in, "timestamps"));
  }
  return DescriptorBag(dim, std::move(values), std::move(ts));
}

void save_bag(const std::filesystem::path& path, const DescriptorBag& bag) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_bag_binary(out, bag);
  if (!out) throw DataError("write failed: " + path.string());
}

DescriptorBag load_bag(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_bag_binary(in);
}

void write_bag_csv(std::ostream& out, const DescriptorBag& bag) {
  out << std::setprecision(17);
  for (std::size_t t = 0; t < bag.size(); ++t) {
    bool first = true;
    if (bag.has_timestamps()) {
      out << bag.timestamps()[t];
      first = false;
    }
    for (double v : bag.row(t)) {
      if (!first) out << ',';
      out << v;
      first = false;
    }
    out << '\n';
  }
}

}  // namespace veritas
