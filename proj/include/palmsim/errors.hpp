#pragma once

#include <stdexcept>
#include <string>

namespace palmsim {

// Error taxonomy shared across the library. Each condition that callers can
// meaningfully catch gets its own type; everything else is a plain
// std::invalid_argument from the precondition checks.

struct EmptyMeasure : std::runtime_error {
  explicit EmptyMeasure(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroMassBox : std::runtime_error {
  explicit ZeroMassBox(const std::string& what) : std::runtime_error(what) {}
};

struct OriginNotInSupport : std::runtime_error {
  explicit OriginNotInSupport(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateWeight : std::runtime_error {
  explicit DegenerateWeight(const std::string& what) : std::runtime_error(what) {}
};

struct NonpositiveDensity : std::runtime_error {
  explicit NonpositiveDensity(const std::string& what) : std::runtime_error(what) {}
};

struct AtomicInput : std::runtime_error {
  explicit AtomicInput(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientMass : std::runtime_error {
  explicit InsufficientMass(const std::string& what) : std::runtime_error(what) {}
};

struct IncompleteBlocks : std::runtime_error {
  explicit IncompleteBlocks(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateSample : std::runtime_error {
  explicit DegenerateSample(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyEnsemble : std::runtime_error {
  explicit EmptyEnsemble(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace palmsim
