#pragma once

#include <stdexcept>
#include <string>

namespace ims {

// Process exit codes used by the CLI: 0 success, 2 input/format error,
// 3 topology error, 4 numerical error, 5 extraction error.
enum class ErrorCode : int {
  Ok = 0,
  Input = 2,
  Topology = 3,
  Numerical = 4,
  Extraction = 5,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

// Malformed files: bad OBJ records, truncated binary sections, size mismatches.
class FormatError : public Error {
public:
  explicit FormatError(const std::string& what) : Error(ErrorCode::Input, what) {}
};

// Structurally invalid meshes: non-manifold edges/vertices, inconsistent
// orientation, disconnected components, degenerate boundary loops.
class StructuralError : public Error {
public:
  explicit StructuralError(const std::string& what) : Error(ErrorCode::Input, what) {}
};

// Wrong surface topology (genus != 0 after disk filling).
class TopologyError : public Error {
public:
  explicit TopologyError(const std::string& what) : Error(ErrorCode::Topology, what) {}
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(ErrorCode::Numerical, what) {}
};

class ExtractionError : public Error {
public:
  explicit ExtractionError(const std::string& what) : Error(ErrorCode::Extraction, what) {}
};

} // namespace ims
