"""
xorshift64* generator with splitmix64 seeding.

Pure integer arithmetic, so streams are identical on every platform. Each
workload stream is derived from (scenario seed, stream id), which keeps one
thread's draws independent of how many draws any other stream makes.
"""
MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        self.state = state or 0x9E3779B97F4A7C15

    @classmethod
    def derive(cls, seed: int, *stream: int) -> "XorShift64Star":
        """Independent generator for ``stream`` under ``seed``."""
        mixed = seed & MASK64
        for part in stream:
            mixed = splitmix64(mixed ^ (part & MASK64))
        return cls(mixed)

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        if lo >= hi:
            return lo
        return lo + self.next_u64() % (hi - lo + 1)
