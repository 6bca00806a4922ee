#pragma once

#include <stdexcept>
#include <string>

namespace dwsnn {

// Error classes double as the machine-greppable prefix printed by the CLI
// ("error[<class>]: message").
enum class ErrorClass {
  Config,  // bad experiment config / unknown keys
  Io,      // file system and serialization failures
  Data,    // malformed dataset payloads
  Shape,   // tensor dimension mismatches
  Range,   // argument outside its documented domain
  Fit,     // non-identifiable or failed model fits
  State,   // corrupted or unreset run-time state
  Model,   // invalid device/neuron model definitions
};

inline const char* error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::Config: return "config";
    case ErrorClass::Io: return "io";
    case ErrorClass::Data: return "data";
    case ErrorClass::Shape: return "shape";
    case ErrorClass::Range: return "range";
    case ErrorClass::Fit: return "fit";
    case ErrorClass::State: return "state";
    case ErrorClass::Model: return "model";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorClass klass, const std::string& message)
      : std::runtime_error(message), klass_(klass) {}

  ErrorClass klass() const { return klass_; }

 private:
  ErrorClass klass_;
};

}  // namespace dwsnn
