#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamflow/itensor.hpp"

namespace streamflow {

/// Ping-pong buffer plan for a stream layout conversion.
struct ConverterSpec {
  std::vector<int64_t> bufShape;           // elements per data dim
  int sharedLoopDepth = 0;                 // shared outermost iteration levels
  std::vector<int64_t> sharedLoopTripcounts;
  int64_t byteCost = 0;                    // 2 * volume(bufShape) * elemBytes

  bool operator==(const ConverterSpec &) const = default;
};

nlohmann::json toJson(const ConverterSpec &s);
ConverterSpec converterSpecFromJson(const nlohmann::json &j);

struct ConverterOptions {
  /// When true, scans data dims from 0 and stops at the first non-reducible
  /// dim instead of evaluating each dim independently. Kept for comparison;
  /// the per-dim rule is the default.
  bool prefixScanOnly = false;
};

/// True iff iteration level `level` is structurally shared between the two
/// types: equal tripcounts and the same driven data dim (or none on both).
bool sharedLevel(const ITensorType &src, const ITensorType &dst, int level);

/// Infers the minimal ping-pong buffer for converting src-order tokens into
/// dst-order tokens. Requires compatibleData(src, dst) and !typesMatch.
ConverterSpec inferConverter(const ITensorType &src, const ITensorType &dst,
                             const ConverterOptions &opts = {});

struct ConverterCounterexample {
  std::vector<int64_t> sharedIteration;  // shared-prefix counters
  std::vector<int64_t> offset;           // offending consumer read offset
  std::string reason;
};

/// Replays the materialized schedule: per shared-prefix iteration the
/// producer fills one buffer half while the consumer drains the previous
/// one. ok == empty optional.
std::optional<ConverterCounterexample> verifyConverter(const ITensorType &src,
                                                       const ITensorType &dst,
                                                       const ConverterSpec &spec);

/// Exhaustive minimality oracle: smallest-by-volume per-dim buffer shape
/// (multiples of elementShape) that passes verifyConverter under the densest
/// legal shared-loop schedule. Ties broken lexicographically.
std::vector<int64_t> minimalBufferBruteforce(const ITensorType &src,
                                             const ITensorType &dst,
                                             int64_t elementCap = 4096);

}  // namespace streamflow
