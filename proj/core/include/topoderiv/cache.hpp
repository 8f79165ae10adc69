#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "topoderiv/corrector.hpp"

namespace topoderiv {

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;

/// FNV-1a over raw bytes, chainable through `seed`.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = kFnvOffset);

/// On-disk store of corrector solves, keyed by everything that determines
/// them bit for bit: inclusion geometry, both material tensors, the drive
/// (including the keys of gradient-source solutions), truncation and mesh
/// parameters, element order, and the direction fan. Each file carries a
/// trailing checksum; a missing, truncated, corrupted, or size-mismatched
/// file reads as a miss, so damage costs a recompute, never a wrong answer.
/// A hit restores the exact bits that were stored, which keeps warm reruns
/// byte-identical to the run that filled the cache.
class CorrectorCache {
public:
    /// Creates `dir` (and parents) if needed.
    explicit CorrectorCache(std::string dir);

    const std::string& dir() const { return dir_; }
    int hits() const { return hits_; }
    int misses() const { return misses_; }

    /// Cache key of a solve, or 0 when the solve cannot be keyed (a gradient
    /// source that never went through the cache has no key of its own).
    std::uint64_t key(const ExteriorWorkspace& ws, CorrectorKind kind,
                      const CorrectorDrive& drive) const;

    /// Loads the solution stored under `key`, rebinding its fields to the
    /// workspace levels. Returns false (a miss) on any inconsistency.
    bool load(std::uint64_t key, const ExteriorWorkspace& ws, CorrectorSolution& out) const;

    /// Writes the solution under `key` (write to a temporary, then rename).
    void store(std::uint64_t key, const CorrectorSolution& sol) const;

private:
    std::string path_for(std::uint64_t key) const;

    std::string dir_;
    mutable int hits_ = 0;
    mutable int misses_ = 0;
};

}  // namespace topoderiv
