#include "craqreg/zip.hpp"

#include <zlib.h>

#include <limits>

#include "craqreg/error.hpp"

namespace craqreg {

namespace {

constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, v & 0xffff);
  put16(out, v >> 16);
}

std::uint32_t get16(const std::vector<std::uint8_t>& in, std::size_t at) {
  if (at + 2 > in.size()) throw Error(ErrorKind::InvalidInput, "truncated zip archive");
  return in[at] | (in[at + 1] << 8);
}

std::uint32_t get32(const std::vector<std::uint8_t>& in, std::size_t at) {
  return get16(in, at) | (get16(in, at + 2) << 16);
}

}  // namespace

std::vector<std::uint8_t> make_zip(const std::vector<BundleFile>& files) {
  struct Entry {
    std::uint32_t crc, size, offset;
  };
  std::vector<std::uint8_t> out;
  std::vector<Entry> entries;
  for (const auto& f : files) {
    if (f.bytes.size() > std::numeric_limits<std::uint32_t>::max() ||
        out.size() > std::numeric_limits<std::uint32_t>::max())
      throw Error(ErrorKind::Io, "bundle too large for a zip32 archive");
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, f.bytes.data(), static_cast<uInt>(f.bytes.size())));
    const auto size = static_cast<std::uint32_t>(f.bytes.size());
    entries.push_back({crc, size, static_cast<std::uint32_t>(out.size())});
    put32(out, 0x04034b50);
    put16(out, 20);
    put16(out, 0);
    put16(out, 0);
    put16(out, 0);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<std::uint32_t>(f.name.size()));
    put16(out, 0);
    out.insert(out.end(), f.name.begin(), f.name.end());
    out.insert(out.end(), f.bytes.begin(), f.bytes.end());
  }
  const auto dir_offset = static_cast<std::uint32_t>(out.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    put32(out, 0x02014b50);
    put16(out, 20);
    put16(out, 20);
    put16(out, 0);
    put16(out, 0);
    put16(out, 0);
    put16(out, kDosDate);
    put32(out, entries[i].crc);
    put32(out, entries[i].size);
    put32(out, entries[i].size);
    put16(out, static_cast<std::uint32_t>(files[i].name.size()));
    put16(out, 0);
    put16(out, 0);
    put16(out, 0);
    put16(out, 0);
    put32(out, 0);
    put32(out, entries[i].offset);
    out.insert(out.end(), files[i].name.begin(), files[i].name.end());
  }
  const auto dir_size = static_cast<std::uint32_t>(out.size()) - dir_offset;
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint32_t>(files.size()));
  put16(out, static_cast<std::uint32_t>(files.size()));
  put32(out, dir_size);
  put32(out, dir_offset);
  put16(out, 0);
  return out;
}

std::vector<std::string> zip_entry_names(const std::vector<std::uint8_t>& archive) {
  if (archive.size() < 22) throw Error(ErrorKind::InvalidInput, "truncated zip archive");
  const std::size_t eocd = archive.size() - 22;
  if (get32(archive, eocd) != 0x06054b50)
    throw Error(ErrorKind::InvalidInput, "missing end of central directory");
  const std::uint32_t count = get16(archive, eocd + 10);
  std::size_t at = get32(archive, eocd + 16);
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (get32(archive, at) != 0x02014b50)
      throw Error(ErrorKind::InvalidInput, "bad central directory entry");
    const std::uint32_t name_len = get16(archive, at + 28);
    const std::uint32_t extra = get16(archive, at + 30);
    const std::uint32_t comment = get16(archive, at + 32);
    if (at + 46 + name_len > archive.size())
      throw Error(ErrorKind::InvalidInput, "truncated zip archive");
    names.emplace_back(archive.begin() + static_cast<std::ptrdiff_t>(at + 46),
                       archive.begin() + static_cast<std::ptrdiff_t>(at + 46 + name_len));
    at += 46 + name_len + extra + comment;
  }
  return names;
}

}  // namespace craqreg
