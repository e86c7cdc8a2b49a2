#ifndef DBMF_RANDOM_H
#define DBMF_RANDOM_H

#include <cstdint>
#include <random>

namespace dbmf
{

/**
 * Seeded stream built on std::mt19937_64. The uniform draws are derived
 * from raw engine bits rather than std::uniform_real_distribution so
 * results do not depend on the standard library implementation.
 */
class Rng
{
public:
  explicit Rng (std::uint64_t seed) : m_engine (seed) {}

  /// Independent stream for a named purpose, derived from a base seed.
  static Rng Stream (std::uint64_t seed, std::uint64_t stream_id);

  /// [0, 1)
  double Uniform01 () { return static_cast<double> (m_engine () >> 11) * 0x1.0p-53; }

  /// [lo, hi]; returns lo when lo == hi.
  double Uniform (double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * Uniform01 (); }

  /// Uniform integer in [0, n).
  std::uint64_t Below (std::uint64_t n);

private:
  std::mt19937_64 m_engine;
};

} // namespace dbmf

#endif /* DBMF_RANDOM_H */
