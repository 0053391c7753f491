#include "percoldp/environment.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "percoldp/error.hpp"
#include "percoldp/rng.hpp"

namespace percoldp {
namespace {

std::size_t word_count(std::size_t bonds) { return (bonds + 63) / 64; }

void set_bit(std::vector<std::uint64_t>& words, std::size_t b) { words[b >> 6] |= std::uint64_t{1} << (b & 63); }

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <class T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ParameterError("PERC data truncated in header");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  pos += sizeof(T);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

Environment::Environment(LatticeTorus lattice, double p, std::uint64_t seed, std::vector<std::uint64_t> words)
    : lattice_(std::move(lattice)), p_(p), seed_(seed), words_(std::move(words)) {
  if (words_.size() != word_count(lattice_.bond_count()))
    throw ParameterError("bond array length does not match d * L^d");
  const std::size_t tail = lattice_.bond_count() % 64;
  if (tail != 0 && (words_.back() >> tail) != 0) throw ParameterError("bits set beyond the last bond");
}

int Environment::degree(std::size_t site) const noexcept {
  int deg = 0;
  for (int k = 0; k < lattice_.direction_count(); ++k) deg += open(site, k) ? 1 : 0;
  return deg;
}

std::size_t Environment::open_bond_count() const noexcept {
  std::size_t total = 0;
  for (const auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

Environment sample_environment(int dim, std::int64_t side, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("open probability p must lie in [0, 1]");
  LatticeTorus lattice(dim, side);
  std::vector<std::uint64_t> words(word_count(lattice.bond_count()), 0);
  for (std::size_t b = 0; b < lattice.bond_count(); ++b)
    if (to_unit(counter_u64(seed, b)) < p) set_bit(words, b);
  return Environment(std::move(lattice), p, seed, std::move(words));
}

Environment all_open(int dim, std::int64_t side) { return sample_environment(dim, side, 1.0, 0); }

Environment translate(const Environment& env, std::span<const std::int64_t> shift) {
  const LatticeTorus& lat = env.lattice();
  if (shift.size() != static_cast<std::size_t>(lat.dim())) throw ParameterError("shift dimension mismatch");
  std::vector<std::uint64_t> words(word_count(lat.bond_count()), 0);
  const auto d = static_cast<std::size_t>(lat.dim());
  for (std::size_t y = 0; y < lat.site_count(); ++y) {
    Point c = lat.coords(y);
    for (std::size_t i = 0; i < d; ++i) c[i] += shift[i];
    const std::size_t src = lat.site_of(c);
    for (std::size_t i = 0; i < d; ++i)
      if (env.bond_open(src * d + i)) set_bit(words, y * d + i);
  }
  return Environment(lat, env.p(), env.seed(), std::move(words));
}

std::vector<std::uint8_t> serialize(const Environment& env) {
  const LatticeTorus& lat = env.lattice();
  std::vector<std::uint8_t> out{'P', 'E', 'R', 'C', kPercVersion};
  put_le(out, static_cast<std::uint32_t>(lat.dim()));
  put_le(out, static_cast<std::uint32_t>(lat.side()));
  put_le(out, env.p());
  put_le(out, env.seed());
  const std::size_t nbytes = (lat.bond_count() + 7) / 8;
  for (std::size_t i = 0; i < nbytes; ++i)
    out.push_back(static_cast<std::uint8_t>(env.words()[i / 8] >> (8 * (i % 8))));
  return out;
}

Environment deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), "PERC", 4) != 0) throw ParameterError("not a PERC file");
  if (bytes[4] != kPercVersion) throw ParameterError("unsupported PERC version");
  std::size_t pos = 5;
  const auto d = get_le<std::uint32_t>(bytes, pos);
  const auto L = get_le<std::uint32_t>(bytes, pos);
  const auto p = get_le<double>(bytes, pos);
  const auto seed = get_le<std::uint64_t>(bytes, pos);
  LatticeTorus lattice(static_cast<int>(d), static_cast<std::int64_t>(L));
  const std::size_t nbytes = (lattice.bond_count() + 7) / 8;
  if (bytes.size() != pos + nbytes) throw ParameterError("PERC bond payload has the wrong length");
  std::vector<std::uint64_t> words(word_count(lattice.bond_count()), 0);
  for (std::size_t i = 0; i < nbytes; ++i)
    words[i / 8] |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * (i % 8));
  return Environment(std::move(lattice), p, seed, std::move(words));
}

void write_environment(const Environment& env, const std::string& path) {
  const auto bytes = serialize(env);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParameterError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ParameterError("failed writing " + path);
}

Environment read_environment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace percoldp
