#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace streamflow {

/// Scalar element kind carried by a stream. Only the byte width matters for
/// any analysis; the name is kept for printing and round-tripping.
struct ElementKind {
  std::string name = "f32";
  int byteWidth = 4;

  bool operator==(const ElementKind &) const = default;
};

/// Stream-layout tensor type. A tensor is partitioned into identical
/// elements (tiles) which are pushed through a FIFO in the order given by a
/// nested iteration space plus a map from iteration dims to data dims.
///
/// dimSource[d] is the iteration level that drives data dimension d.
/// Iteration levels absent from dimSource are re-iteration levels: they
/// replay the inner stream without advancing any data offset.
struct ITensorType {
  std::vector<int64_t> dataShape;
  std::vector<int64_t> elementShape;
  std::vector<int64_t> iterTripcounts;  // outermost first
  std::vector<int64_t> iterSteps;
  std::vector<int> dimSource;
  ElementKind elementKind;

  bool operator==(const ITensorType &) const = default;

  int rank() const { return static_cast<int>(dataShape.size()); }
  int iterRank() const { return static_cast<int>(iterTripcounts.size()); }

  int64_t elementVolume() const;
  int64_t dataVolume() const;
  int64_t tokenBytes() const { return elementVolume() * elementKind.byteWidth; }
  int64_t tensorBytes() const { return dataVolume() * elementKind.byteWidth; }

  /// Iteration level that drives data dim d, or -1 when out of range.
  bool drivesData(int level) const;
  /// Data dim driven by iteration level, or -1 for re-iteration levels.
  int drivenDim(int level) const;
};

struct Violation {
  std::string message;
};

/// ok == empty optional; otherwise the first violated invariant.
std::optional<Violation> validate(const ITensorType &t);
void validateOrThrow(const ITensorType &t);

/// Number of tokens pushed for one full traversal: product of tripcounts.
int64_t tokenCount(const ITensorType &t);

/// Exact stream order: one per-data-dim element offset vector per token,
/// outermost iteration level varying slowest.
std::vector<std::vector<int64_t>> accessSequence(const ITensorType &t);

/// Like accessSequence, but each entry also carries the iteration counters
/// (not scaled by steps) that produced the offset. Used by converter
/// verification to slice the stream by shared-loop iterations.
struct AccessStep {
  std::vector<int64_t> iterIndex;  // counter per level, in [0, tripcount)
  std::vector<int64_t> offset;     // per data dim, element offset
};
std::vector<AccessStep> accessSteps(const ITensorType &t);

/// Exact structural equality; matching types stream in identical order.
bool typesMatch(const ITensorType &a, const ITensorType &b);

/// Both types view the same underlying tensor (shape and element kind).
bool compatibleData(const ITensorType &a, const ITensorType &b);

/// Regroups elements along data dims: elementShape[d] *= factors[d], the
/// driving level's tripcount shrinks accordingly. Factors must divide the
/// driving tripcounts. Throws on non-divisible factors.
ITensorType vectorizeType(const ITensorType &t,
                          const std::vector<int64_t> &factors);

/// Textual form, e.g. itensor<4x2xf32, space [4,2]*[2,4], map (d0,d1)->(d1,d0)>
std::string printType(const ITensorType &t);
ITensorType parseType(const std::string &text);

nlohmann::json toJson(const ITensorType &t);
ITensorType typeFromJson(const nlohmann::json &j);

}  // namespace streamflow
