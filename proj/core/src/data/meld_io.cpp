#include "melada/data/meld_io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <fmt/format.h>

#include "melada/error.hpp"
#include "melada/util/binary.hpp"

namespace melada::data {

namespace {

constexpr char kMagic[4] = {'M', 'E', 'L', 'D'};

std::string printable_magic(std::span<const std::uint8_t> m) {
  std::string out;
  for (auto b : m) {
    if (std::isprint(b) != 0) {
      out.push_back(static_cast<char>(b));
    } else {
      out += fmt::format("\\x{:02x}", b);
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_meld(std::span<const Domain> domains) {
  validate_dataset(domains);
  util::ByteWriter w;
  w.bytes(std::as_bytes(std::span(kMagic)));
  w.u32(kMeldVersion);
  w.u32(static_cast<std::uint32_t>(domains.size()));
  for (const auto& d : domains) {
    w.u32(d.subject_id);
    w.u32(static_cast<std::uint32_t>(d.size()));
    w.u32(d.seq_len);
    w.u32(d.feat_dim);
    w.u32(d.n_classes);
    for (auto l : d.labels) w.u8(l);
    for (double v : d.frames) w.f64(v);
  }
  return w.take();
}

std::vector<Domain> decode_meld(std::span<const std::uint8_t> bytes) {
  util::ByteReader r(bytes, "MELD file");
  if (bytes.size() < 4) {
    throw FormatError(fmt::format("MELD file: truncated before magic ({} bytes)", bytes.size()));
  }
  auto magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError(fmt::format("MELD file: bad magic \"{}\" (expected \"MELD\")",
                                  printable_magic(magic)));
  }
  const auto version = r.u32("version");
  if (version != kMeldVersion) {
    throw FormatError(fmt::format("MELD file: unsupported version {}", version));
  }
  const auto n_domains = r.u32("domain count");
  std::vector<Domain> domains;
  for (std::uint32_t k = 0; k < n_domains; ++k) {
    Domain d;
    d.provenance = Provenance::Imported;
    d.subject_id = r.u32("subject_id");
    const auto n_samples = r.u32("n_samples");
    d.seq_len = r.u32("seq_len");
    d.feat_dim = r.u32("feat_dim");
    d.n_classes = r.u32("n_classes");
    if (d.seq_len == 0 || d.feat_dim == 0 || d.n_classes == 0) {
      throw FormatError(fmt::format("MELD file: domain {} (subject {}) has a zero dimension", k,
                                    d.subject_id));
    }
    const std::uint64_t n_values = std::uint64_t{n_samples} * d.seq_len * d.feat_dim;
    if (r.remaining() < n_samples || (r.remaining() - n_samples) / 8 < n_values) {
      throw FormatError(fmt::format(
          "MELD file: truncated in subject {}: header declares {} samples of {}x{} "
          "({} bytes) but only {} bytes remain",
          d.subject_id, n_samples, d.seq_len, d.feat_dim, n_samples + 8 * n_values,
          r.remaining()));
    }
    d.labels.resize(n_samples);
    for (auto& l : d.labels) {
      l = r.u8("label");
      if (l >= d.n_classes) {
        throw FormatError(fmt::format("MELD file: subject {} has label {} with {} classes",
                                      d.subject_id, l, d.n_classes));
      }
    }
    d.frames.resize(static_cast<std::size_t>(n_values));
    for (auto& v : d.frames) v = r.f64("frame value");
    if (!domains.empty()) {
      const auto& first = domains.front();
      if (d.seq_len != first.seq_len || d.feat_dim != first.feat_dim ||
          d.n_classes != first.n_classes) {
        throw FormatError(fmt::format(
            "MELD file: dimension mismatch: subject {} is {}x{} ({} classes), subject {} is "
            "{}x{} ({} classes)",
            d.subject_id, d.seq_len, d.feat_dim, d.n_classes, first.subject_id, first.seq_len,
            first.feat_dim, first.n_classes));
      }
    }
    domains.push_back(std::move(d));
  }
  if (r.remaining() != 0) {
    throw FormatError(fmt::format("MELD file: {} trailing bytes after last domain", r.remaining()));
  }
  try {
    validate_dataset(domains);
  } catch (const InvalidArgument& e) {
    throw FormatError(fmt::format("MELD file: {}", e.what()));
  }
  return domains;
}

void write_dataset(std::span<const Domain> domains, const std::filesystem::path& path) {
  util::write_file(path, encode_meld(domains));
}

std::vector<Domain> read_dataset(const std::filesystem::path& path) {
  const auto bytes = util::read_file(path);
  try {
    return decode_meld(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_dataset_csv(std::span<const Domain> domains, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  if (domains.empty()) return;
  out << "subject,sample,label,step";
  for (std::uint32_t f = 0; f < domains.front().feat_dim; ++f) out << ",f" << f;
  out << '\n';
  for (const auto& d : domains) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      auto s = d.sample(i);
      for (std::size_t t = 0; t < d.seq_len; ++t) {
        out << fmt::format("{},{},{},{}", d.subject_id, i, d.labels[i], t);
        for (std::size_t f = 0; f < d.feat_dim; ++f) out << fmt::format(",{}", s[t * d.feat_dim + f]);
        out << '\n';
      }
    }
  }
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

}  // namespace melada::data
