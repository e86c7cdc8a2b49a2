#include "dbmf/random.h"

namespace dbmf
{

Rng
Rng::Stream (std::uint64_t seed, std::uint64_t stream_id)
{
  // splitmix64 finalizer over (seed, stream) so neighbouring seeds and
  // stream ids give unrelated engine states
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z = z ^ (z >> 31);
  return Rng (z);
}

std::uint64_t
Rng::Below (std::uint64_t n)
{
  // rejection sampling keeps the draw unbiased
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do
    {
      v = m_engine ();
    }
  while (v >= limit);
  return v % n;
}

} // namespace dbmf
