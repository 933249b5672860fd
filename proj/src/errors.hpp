#pragma once

#include <stdexcept>
#include <string>

namespace atsclab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedXml : Error { explicit MalformedXml(const std::string& m) : Error("malformed xml: " + m) {} };
struct OffsetOutOfRange : Error { explicit OffsetOutOfRange(const std::string& m) : Error("offset out of range: " + m) {} };
struct InsufficientData : Error { explicit InsufficientData(const std::string& m) : Error("insufficient data: " + m) {} };
struct DegenerateSequence : Error { explicit DegenerateSequence(const std::string& m) : Error("degenerate sequence: " + m) {} };
struct ShapeMismatch : Error { explicit ShapeMismatch(const std::string& m) : Error("shape mismatch: " + m) {} };
struct GraphConsumed : Error { explicit GraphConsumed(const std::string& m) : Error("graph consumed: " + m) {} };
struct NoMaskedPositions : Error { explicit NoMaskedPositions(const std::string& m) : Error("no masked positions: " + m) {} };
struct VocabMismatch : Error { explicit VocabMismatch(const std::string& m) : Error("vocab mismatch: " + m) {} };
struct CorruptShard : Error { explicit CorruptShard(const std::string& m) : Error("corrupt shard: " + m) {} };
struct CorruptCheckpoint : Error { explicit CorruptCheckpoint(const std::string& m) : Error("corrupt checkpoint: " + m) {} };
struct EmptyDataset : Error { explicit EmptyDataset(const std::string& m) : Error("empty dataset: " + m) {} };
struct EmptyInput : Error { explicit EmptyInput(const std::string& m) : Error("empty input: " + m) {} };
struct InsufficientRuns : Error { explicit InsufficientRuns(const std::string& m) : Error("insufficient runs: " + m) {} };
struct MissingArtifact : Error { explicit MissingArtifact(const std::string& m) : Error("missing artifact: " + m) {} };
struct MissingBaseline : Error { explicit MissingBaseline(const std::string& m) : Error("missing baseline: " + m) {} };
struct IndexInTarget : Error { explicit IndexInTarget(const std::string& m) : Error("index in target span: " + m) {} };
struct IndexOutOfRange : Error { explicit IndexOutOfRange(const std::string& m) : Error("index out of range: " + m) {} };

}  // namespace atsclab
